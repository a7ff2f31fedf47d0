//! Error metrics, random-weight baselines and weight-perturbation ablation.

mod ciede2000;

pub use ciede2000::delta_e2000;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imagecore::LabImage;
use crate::matching::{Feature, WeightVector};

/// Just noticeable ΔE00 difference.
pub const JND: f64 = 2.3;
/// Seed chroma error threshold in ab units.
pub const THETA: f64 = 3.0 * PI;
/// Number of random weight vectors in the baseline.
pub const BASELINE_K: usize = 20;
/// Perturbation grid step and point count (0, 0.1, ..., 1).
pub const GRID_STEP: f64 = 0.1;
pub const GRID_POINTS: usize = 11;

fn check_dims(x: &LabImage, y: &LabImage) -> Result<()> {
    if x.width() != y.width() || x.height() != y.height() {
        return Err(Error::DimensionMismatch {
            left_w: x.width(),
            left_h: x.height(),
            right_w: y.width(),
            right_h: y.height(),
        });
    }
    Ok(())
}

/// Per-pixel ΔE00 between two images.
pub fn delta_e_map(colorized: &LabImage, gt: &LabImage) -> Result<Vec<f64>> {
    check_dims(colorized, gt)?;
    let n = colorized.l().len();
    Ok((0..n).map(|i| delta_e2000(colorized.lab_at(i), gt.lab_at(i))).collect())
}

fn rate_above(de: &[f64], t: f64) -> f64 {
    if de.is_empty() {
        return 0.0;
    }
    de.iter().filter(|&&d| d > t).count() as f64 / de.len() as f64
}

/// Fraction of pixels whose ΔE00 exceeds `t`.
pub fn pixel_error_rate(colorized: &LabImage, gt: &LabImage, t: f64) -> Result<f64> {
    Ok(rate_above(&delta_e_map(colorized, gt)?, t))
}

/// Error rate of each image at each threshold, averaged over the set.
pub fn mean_error_curve(pairs: &[(&LabImage, &LabImage)], thresholds: &[f64]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("mean error curve needs at least one image pair".into()));
    }
    let mut curve = vec![0.0; thresholds.len()];
    for (c, g) in pairs {
        let de = delta_e_map(c, g)?;
        for (acc, &t) in curve.iter_mut().zip(thresholds) {
            *acc += rate_above(&de, t);
        }
    }
    curve.iter_mut().for_each(|v| *v /= pairs.len() as f64);
    Ok(curve)
}

/// Thresholds 0..=max in `step` increments.
pub fn threshold_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Seed-level matching quality of one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingMetrics {
    /// Mean chroma distance between seeds and ground truth (M).
    pub mean_error: f64,
    /// Fraction of seeds further than θ from ground truth (A_j).
    pub error_rate: f64,
}

pub fn matching_metrics(seeds: &[[f64; 2]], truth: &[[f64; 2]], theta: f64) -> Result<MatchingMetrics> {
    if seeds.len() != truth.len() {
        return Err(Error::InvalidInput(format!("{} seeds vs {} ground-truth chromas", seeds.len(), truth.len())));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidInput("no seeds to evaluate".into()));
    }
    let dists: Vec<f64> = seeds.iter().zip(truth).map(|(s, t)| chroma_dist(*s, *t)).collect();
    let s = dists.len() as f64;
    Ok(MatchingMetrics {
        mean_error: dists.iter().sum::<f64>() / s,
        error_rate: dists.iter().filter(|&&d| d > theta).count() as f64 / s,
    })
}

pub fn chroma_dist(x: [f64; 2], y: [f64; 2]) -> f64 {
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
}

/// Set averages of per-image matching metrics (avgE, A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetMetrics {
    pub avg_error: f64,
    pub avg_error_rate: f64,
}

impl SetMetrics {
    pub fn from_images(per_image: &[MatchingMetrics]) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::InvalidInput("no images to average".into()));
        }
        let n = per_image.len() as f64;
        Ok(Self {
            avg_error: per_image.iter().map(|m| m.mean_error).sum::<f64>() / n,
            avg_error_rate: per_image.iter().map(|m| m.error_rate).sum::<f64>() / n,
        })
    }

    /// Strictly better on both coordinates.
    pub fn dominates(&self, other: &SetMetrics) -> bool {
        self.avg_error < other.avg_error && self.avg_error_rate < other.avg_error_rate
    }
}

/// `k` weight vectors drawn uniformly from the simplex; reproducible per seed.
pub fn random_weights(k: usize, seed: u64) -> Vec<WeightVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirichlet = Dirichlet::new([1.0f64; 4]).expect("unit concentration is valid");
    (0..k)
        .map(|_| {
            let w = dirichlet.sample(&mut rng);
            WeightVector::normalized(w).expect("Dirichlet draw lies on the simplex")
        })
        .collect()
}

/// Set component `feature` to `value` and rescale the rest to keep the sum at 1.
/// When the component is already 1 the remaining mass is split evenly.
pub fn perturb(w: &WeightVector, feature: Feature, value: f64) -> Result<WeightVector> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidInput(format!("perturbed weight {value} outside [0, 1]")));
    }
    let i = feature.index();
    let src = w.as_array();
    // summed directly: 1 - w_i cancels badly when w_i is close to 1
    let rest: f64 = src.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
    let mut out = [0.0; 4];
    for (j, o) in out.iter_mut().enumerate() {
        *o = if j == i {
            value
        } else if rest > 0.0 {
            src[j] * (1.0 - value) / rest
        } else {
            (1.0 - value) / 3.0
        };
    }
    if value == src[i] {
        return Ok(*w);
    }
    WeightVector::new(out)
}

/// The 11-point grid of perturbations of one feature's weight.
pub fn weight_perturbation(w: &WeightVector, feature: Feature) -> Vec<(f64, WeightVector)> {
    (0..GRID_POINTS)
        .map(|k| {
            let v = k as f64 * GRID_STEP;
            (v, perturb(w, feature, v).expect("grid values lie in [0, 1]"))
        })
        .collect()
}

/// Fraction of images where the learned error rate is strictly below the other.
pub fn win_ratio(learned: &[f64], other: &[f64]) -> Result<f64> {
    if learned.len() != other.len() {
        return Err(Error::InvalidInput(format!("{} vs {} error rates", learned.len(), other.len())));
    }
    if learned.is_empty() {
        return Ok(0.0);
    }
    Ok(learned.iter().zip(other).filter(|(l, o)| l < o).count() as f64 / learned.len() as f64)
}

/// One point of an ablation curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationPoint {
    pub feature: &'static str,
    pub weight: f64,
    pub ratio: f64,
}
