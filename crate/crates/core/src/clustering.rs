//! Affinity propagation over global texture features and nearest-center
//! assignment of new images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::globalfeat::{FeatureScaling, GlobalFeature};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApParams {
    /// Self-similarity of every point; `None` uses the median pairwise similarity.
    pub preference: Option<f64>,
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations the exemplar set must stay unchanged to declare convergence.
    pub convergence_window: usize,
}

impl Default for ApParams {
    fn default() -> Self {
        Self {
            preference: None,
            damping: 0.9,
            max_iter: 1000,
            convergence_window: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    /// Indices of the exemplar points, ascending; cluster `k` is `exemplars[k]`.
    pub exemplars: Vec<usize>,
    /// Cluster id per input point.
    pub labels: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Standard Frey–Dueck message passing on s(i,k) = -|x_i - x_k|².
pub fn affinity_propagation<P: AsRef<[f64]>>(points: &[P], params: &ApParams) -> Result<ApResult> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidInput("affinity propagation needs at least one point".into()));
    }
    if !(0.5..1.0).contains(&params.damping) {
        return Err(Error::InvalidInput(format!("damping {} outside [0.5, 1)", params.damping)));
    }
    if n == 1 {
        return Ok(ApResult {
            exemplars: vec![0],
            labels: vec![0],
            converged: true,
            iterations: 0,
        });
    }

    let mut s = vec![0.0; n * n];
    let mut off_diag = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for k in 0..n {
            if i != k {
                let v = -sq_dist(points[i].as_ref(), points[k].as_ref());
                s[i * n + k] = v;
                off_diag.push(v);
            }
        }
    }
    if off_diag.iter().all(|&v| v == off_diag[0]) {
        // every point equidistant (typically all duplicates): one cluster
        return Ok(ApResult {
            exemplars: vec![0],
            labels: vec![0; n],
            converged: true,
            iterations: 0,
        });
    }
    let preference = params.preference.unwrap_or_else(|| median(&mut off_diag.clone()));
    for i in 0..n {
        s[i * n + i] = preference;
    }
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    // Tiny fixed-seed jitter breaks exact ties between duplicated points.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for v in s.iter_mut() {
        *v += 1e-12 * scale * rng.random::<f64>();
    }

    let lam = params.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut last: Vec<usize> = Vec::new();
    let mut stable = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut col_pos = vec![0.0; n];

    for it in 0..params.max_iter {
        iterations = it + 1;
        for i in 0..n {
            let row = i * n;
            let (mut best, mut best_k, mut second) = (f64::NEG_INFINITY, 0, f64::NEG_INFINITY);
            for k in 0..n {
                let v = a[row + k] + s[row + k];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == best_k { second } else { best };
                let new = s[row + k] - competitor;
                r[row + k] = lam * r[row + k] + (1.0 - lam) * new;
            }
        }
        for k in 0..n {
            let mut sum = 0.0;
            for i in 0..n {
                let v = if i == k { r[k * n + k] } else { r[i * n + k].max(0.0) };
                col_pos[i] = v;
                sum += v;
            }
            for i in 0..n {
                let new = if i == k {
                    sum - col_pos[k]
                } else {
                    (sum - col_pos[i]).min(0.0)
                };
                a[i * n + k] = lam * a[i * n + k] + (1.0 - lam) * new;
            }
        }

        let exemplars: Vec<usize> = (0..n).filter(|&k| a[k * n + k] + r[k * n + k] > 0.0).collect();
        if !exemplars.is_empty() && exemplars == last {
            stable += 1;
            if stable >= params.convergence_window {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
        last = exemplars;
    }

    let mut exemplars = last;
    if exemplars.is_empty() {
        // nothing crossed zero; keep the strongest candidate
        let best = (0..n)
            .max_by(|&x, &y| (a[x * n + x] + r[x * n + x]).total_cmp(&(a[y * n + y] + r[y * n + y])).then(y.cmp(&x)))
            .unwrap_or(0);
        exemplars = vec![best];
    }

    let assign = |exemplars: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if let Some(k) = exemplars.iter().position(|&e| e == i) {
                    return k;
                }
                let mut best = 0;
                for (k, &e) in exemplars.iter().enumerate() {
                    if s[i * n + e] > s[i * n + exemplars[best]] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    };

    // refine each exemplar to the member with the largest within-cluster similarity
    let labels = assign(&exemplars);
    let mut refined: Vec<usize> = (0..exemplars.len())
        .map(|k| {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
            let mut best = exemplars[k];
            let mut best_score = f64::NEG_INFINITY;
            for &c in &members {
                let score: f64 = members.iter().filter(|&&i| i != c).map(|&i| s[i * n + c]).sum();
                if score > best_score {
                    best_score = score;
                    best = c;
                }
            }
            best
        })
        .collect();
    refined.sort_unstable();
    refined.dedup();
    let labels = assign(&refined);

    Ok(ApResult {
        exemplars: refined,
        labels,
        converged,
        iterations,
    })
}

/// Cluster exemplars in raw feature units plus the scaling used to compare them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centers: Vec<GlobalFeature>,
    pub assignments: Vec<usize>,
    pub scaling: FeatureScaling,
    pub converged: bool,
}

impl ClusterModel {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Fit the min–max scaling on `features`, then cluster in the scaled space.
pub fn cluster_features(features: &[GlobalFeature], params: &ApParams) -> Result<ClusterModel> {
    let scaling = FeatureScaling::fit(features);
    let scaled: Vec<[f64; 4]> = features.iter().map(|f| scaling.apply(f)).collect();
    let ap = affinity_propagation(&scaled, params)?;
    if !ap.converged {
        log::warn!("affinity propagation did not converge after {} iterations", ap.iterations);
    }
    Ok(ClusterModel {
        centers: ap.exemplars.iter().map(|&e| features[e]).collect(),
        assignments: ap.labels,
        scaling,
        converged: ap.converged,
    })
}

/// Nearest center in the scaled space; ties go to the lowest id.
pub fn assign(f: &GlobalFeature, centers: &[GlobalFeature], scaling: &FeatureScaling) -> usize {
    let q = scaling.apply(f);
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(&q, &scaling.apply(c));
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}
