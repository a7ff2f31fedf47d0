//! Spatial-consistency refinement of transferred chroma seeds.
//!
//! Each superpixel gets a redefined neighbourhood N*: superpixels reachable
//! through the adjacency graph whose mean intensity and mean 5×5 std are
//! within (δ1, δ2) of the anchor. Seeds are then refined by iterated
//! conditional modes on
//!
//! ```text
//! P(C | Ĉ) ∝ Π_i exp(-γ |Ĉ_i - C_i|) · Π_{j, i ∈ N*(j)} exp(-η |C_i - mean_{N*(j)} C|)
//! ```
//!
//! with the candidate set {Ĉ_i, mean of N*(i)} per site.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::matching::ChromaSeeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrfParams {
    pub delta1: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub eta: f64,
    pub max_size: usize,
    pub max_reps: usize,
    pub max_sweeps: usize,
}

impl Default for CrfParams {
    fn default() -> Self {
        Self {
            delta1: 0.04,
            delta2: 0.015,
            gamma: 1.0,
            eta: 2.0,
            max_size: 15,
            max_reps: 3,
            max_sweeps: 10,
        }
    }
}

/// N*(t_j) for every superpixel j; each list is in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodSets {
    pub sets: Vec<Vec<usize>>,
}

impl NeighborhoodSets {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// For each i, the anchors j whose N*(j) contains i.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sets.len()];
        for (j, set) in self.sets.iter().enumerate() {
            for &i in set {
                out[i].push(j);
            }
        }
        out
    }
}

/// Grow N*(t_j) breadth-first over `adjacency`, admitting a superpixel when
/// |l_i - l_j| ≤ δ1 and |std_i - std_j| ≤ δ2. Growth stops at `max_size`
/// members or after `max_reps` rings.
pub fn build_neighborhoods(
    adjacency: &[Vec<usize>],
    intensities: &[f64],
    stds: &[f64],
    delta1: f64,
    delta2: f64,
    max_size: usize,
    max_reps: usize,
) -> NeighborhoodSets {
    let n = adjacency.len();
    let sets = (0..n)
        .map(|j| {
            let passes = |i: usize| (intensities[i] - intensities[j]).abs() <= delta1 && (stds[i] - stds[j]).abs() <= delta2;
            let mut members: Vec<usize> = Vec::new();
            let mut seen = BTreeSet::from([j]);
            let mut frontier = vec![j];
            for _ in 0..max_reps {
                if members.len() >= max_size {
                    break;
                }
                let candidates: BTreeSet<usize> = frontier
                    .iter()
                    .flat_map(|&f| adjacency[f].iter().copied())
                    .filter(|c| !seen.contains(c))
                    .collect();
                let mut next = Vec::new();
                for c in candidates {
                    if members.len() >= max_size {
                        break;
                    }
                    if passes(c) {
                        seen.insert(c);
                        members.push(c);
                        next.push(c);
                    }
                }
                if next.is_empty() {
                    break;
                }
                frontier = next;
            }
            members
        })
        .collect();
    NeighborhoodSets { sets }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// ψ(Ĉ | C) = exp(-γ |Ĉ - C|).
pub fn unary(seed: [f64; 2], candidate: [f64; 2], gamma: f64) -> f64 {
    (-gamma * dist(seed, candidate)).exp()
}

/// φ = exp(-η |C_i - mean|) when t_i ∈ N*(t_j), otherwise 1.
pub fn pairwise(c_i: [f64; 2], neighborhood_mean: Option<[f64; 2]>, in_neighborhood: bool, eta: f64) -> f64 {
    match neighborhood_mean {
        Some(mean) if in_neighborhood => (-eta * dist(c_i, mean)).exp(),
        _ => 1.0,
    }
}

fn mean_of(set: &[usize], colors: &[[f64; 2]]) -> Option<[f64; 2]> {
    if set.is_empty() {
        return None;
    }
    let n = set.len() as f64;
    let s = set.iter().fold([0.0, 0.0], |acc, &k| [acc[0] + colors[k][0], acc[1] + colors[k][1]]);
    Some([s[0] / n, s[1] / n])
}

/// Log of every factor that involves site `i` when it takes value `value`.
fn local_log_score(
    i: usize,
    value: [f64; 2],
    observed: &[[f64; 2]],
    colors: &mut [[f64; 2]],
    hoods: &NeighborhoodSets,
    memberships: &[usize],
    params: &CrfParams,
) -> f64 {
    let previous = colors[i];
    colors[i] = value;
    let mut score = -params.gamma * dist(observed[i], value);
    for &j in memberships {
        let set = &hoods.sets[j];
        if let Some(mean) = mean_of(set, colors) {
            for &k in set {
                score -= params.eta * dist(colors[k], mean);
            }
        }
    }
    colors[i] = previous;
    score
}

/// Total log-posterior (up to log Z) of a chroma assignment.
pub fn log_posterior(observed: &[[f64; 2]], colors: &[[f64; 2]], hoods: &NeighborhoodSets, params: &CrfParams) -> f64 {
    let mut score: f64 = observed.iter().zip(colors).map(|(o, c)| -params.gamma * dist(*o, *c)).sum();
    for set in &hoods.sets {
        if let Some(mean) = mean_of(set, colors) {
            for &k in set {
                score -= params.eta * dist(colors[k], mean);
            }
        }
    }
    score
}

/// Iterated conditional modes in ascending superpixel order.
pub fn refine(seeds: &ChromaSeeds, hoods: &NeighborhoodSets, params: &CrfParams) -> ChromaSeeds {
    let observed = seeds.chromas();
    if params.eta == 0.0 {
        return seeds.clone();
    }
    let mut colors = observed.clone();
    let memberships = hoods.memberships();
    for _ in 0..params.max_sweeps {
        let mut changed = false;
        for i in 0..colors.len() {
            let mut candidates = vec![observed[i]];
            if let Some(mean) = mean_of(&hoods.sets[i], &colors) {
                candidates.push(mean);
            }
            let mut best = colors[i];
            let mut best_score = local_log_score(i, colors[i], &observed, &mut colors, hoods, &memberships[i], params);
            for c in candidates {
                if c == best {
                    continue;
                }
                let s = local_log_score(i, c, &observed, &mut colors, hoods, &memberships[i], params);
                if s > best_score {
                    best_score = s;
                    best = c;
                }
            }
            if best != colors[i] {
                colors[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    seeds.with_chromas(&colors)
}
