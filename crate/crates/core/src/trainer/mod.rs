//! Learning per-cluster matching weights from (ground truth, reference) pairs.
//!
//! The transfer error of a weight vector is piecewise constant because
//! matching is an argmin. Training therefore minimizes a softmin relaxation
//! with Levenberg–Marquardt over `W = softmax(θ)`, from several random starts,
//! and keeps the start with the lowest exact error.

pub mod lm;
pub mod model;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;

use crate::clustering::cluster_features;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::globalfeat::global_feature;
use crate::imagecore::{rgb_to_lab, to_gray, GrayImage, LabImage, RgbImage};
use crate::localfeat::extract_all;
use crate::matching::{reference_chromas, DistanceTables, WeightVector};
use crate::superpixel::segment;

pub use lm::{LmParams, LmReport};
pub use model::{load_model, save_model, ClusterEntry, ColorModel, MODEL_VERSION};

/// Smoothing inside the per-superpixel residual (ab units).
const RESIDUAL_EPS: f64 = 1e-3;

/// A ground-truth color image, its grayscale version and a reference.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub gray: GrayImage,
    pub ground_truth: LabImage,
    pub reference: LabImage,
}

impl TrainingPair {
    pub fn new(ground_truth: LabImage, reference: LabImage) -> Self {
        Self {
            gray: ground_truth.luminance(),
            ground_truth,
            reference,
        }
    }

    pub fn from_rgb(ground_truth: &RgbImage, reference: &RgbImage) -> Self {
        let gt = rgb_to_lab(ground_truth);
        let gray = to_gray(ground_truth);
        Self {
            gray,
            ground_truth: gt,
            reference: rgb_to_lab(reference),
        }
    }
}

/// Everything about a pair that does not depend on the weights.
#[derive(Debug, Clone)]
pub struct PairData {
    /// Ground-truth chroma at each target superpixel's central pixel.
    pub truth: Vec<[f64; 2]>,
    /// Chroma at each reference superpixel's central pixel.
    pub ref_chroma: Vec<[f64; 2]>,
    pub tables: DistanceTables,
}

impl PairData {
    pub fn prepare(pair: &TrainingPair, superpixel_size: usize) -> Result<Self> {
        let target_sp = segment(&pair.gray, superpixel_size)?;
        let ref_gray = pair.reference.luminance();
        let ref_sp = segment(&ref_gray, superpixel_size)?;
        let tf = extract_all(&pair.gray, &target_sp)?;
        let rf = extract_all(&ref_gray, &ref_sp)?;
        Ok(Self {
            truth: target_sp.centers().iter().map(|&(x, y)| pair.ground_truth.chroma_at(x, y)).collect(),
            ref_chroma: reference_chromas(&pair.reference, &ref_sp),
            tables: DistanceTables::new(&tf, &rf),
        })
    }

    /// Seed chroma of every target superpixel under exact matching.
    pub fn hard_seeds(&self, w: &WeightVector) -> Vec<[f64; 2]> {
        self.tables.best_matches(w).into_iter().map(|r| self.ref_chroma[r]).collect()
    }

    /// Seed chroma under softmin matching at temperature `tau`.
    pub fn soft_seeds(&self, w: &WeightVector, tau: f64) -> Vec<[f64; 2]> {
        let nr = self.tables.n_ref;
        let mut g = vec![0.0; nr];
        (0..self.tables.n_target)
            .map(|t| {
                for (r, v) in g.iter_mut().enumerate() {
                    *v = self.tables.weighted(w, t, r);
                }
                let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
                let mut total = 0.0;
                let mut acc = [0.0; 2];
                for (r, &v) in g.iter().enumerate() {
                    let p = (-(v - gmin) / tau).exp();
                    total += p;
                    acc[0] += p * self.ref_chroma[r][0];
                    acc[1] += p * self.ref_chroma[r][1];
                }
                [acc[0] / total, acc[1] / total]
            })
            .collect()
    }

    fn total_error(&self, seeds: &[[f64; 2]]) -> f64 {
        seeds
            .iter()
            .zip(&self.truth)
            .map(|(s, t)| ((s[0] - t[0]).powi(2) + (s[1] - t[1]).powi(2)).sqrt())
            .sum()
    }
}

/// Summed chroma distance between transferred seeds and ground truth.
pub fn hard_error(data: &PairData, w: &WeightVector) -> f64 {
    data.total_error(&data.hard_seeds(w))
}

/// `hard_error` with the argmin replaced by a softmin at temperature `tau`.
pub fn soft_error(data: &PairData, w: &WeightVector, tau: f64) -> f64 {
    data.total_error(&data.soft_seeds(w, tau))
}

/// Per-superpixel residuals whose squares sum to a smoothed `soft_error`.
fn residuals(data: &[PairData], w: &WeightVector, tau: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for d in data {
        for (s, t) in d.soft_seeds(w, tau).iter().zip(&d.truth) {
            let e2 = (s[0] - t[0]).powi(2) + (s[1] - t[1]).powi(2);
            out.push((e2 + RESIDUAL_EPS * RESIDUAL_EPS).powf(0.25));
        }
    }
    out
}

pub fn softmax(theta: &[f64; 4]) -> [f64; 4] {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = theta.map(|t| (t - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn weights_of(theta: &[f64; 4]) -> WeightVector {
    WeightVector::normalized(softmax(theta)).unwrap_or_else(|_| WeightVector::uniform())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub tau: f64,
    pub multi_start: usize,
    pub lm: LmParams,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            tau: 0.05,
            multi_start: 8,
            lm: LmParams::default(),
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            tau: cfg.tau,
            multi_start: cfg.multi_start,
            lm: LmParams {
                max_iter: cfg.lm_max_iter,
                ..LmParams::default()
            },
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: WeightVector,
    /// Summed exact error of `weights` over the training pairs.
    pub hard_error: f64,
    /// Index of the winning start.
    pub start: usize,
}

/// Learn one weight vector for a set of pairs. `stream` separates the random
/// starts of different clusters.
pub fn train_weights(data: &[PairData], params: &TrainParams, stream: u64) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::InvalidInput("training needs at least one pair".into()));
    }
    if !(params.tau > 0.0) || params.multi_start == 0 {
        return Err(Error::InvalidInput("training needs tau > 0 and at least one start".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(stream));
    let dirichlet = Dirichlet::new([1.0f64; 4]).expect("unit concentration is valid");
    let starts: Vec<[f64; 4]> = (0..params.multi_start).map(|_| dirichlet.sample(&mut rng)).collect();

    let total_hard = |w: &WeightVector| data.iter().map(|d| hard_error(d, w)).sum::<f64>();
    let mut best: Option<TrainOutcome> = None;
    for (k, w0) in starts.iter().enumerate() {
        let theta0 = w0.map(|v| v.max(1e-12).ln());
        let rep = lm::minimize(|th: &[f64; 4]| residuals(data, &weights_of(th), params.tau), theta0, &params.lm);
        if !rep.cost.is_finite() {
            log::warn!("start {k} diverged");
            continue;
        }
        let w = weights_of(&rep.x);
        let err = total_hard(&w);
        log::debug!("start {k}: soft cost {:.6} hard error {err:.6} after {} iterations", rep.cost, rep.iterations);
        if best.as_ref().is_none_or(|b| err < b.hard_error) {
            best = Some(TrainOutcome {
                weights: w,
                hard_error: err,
                start: k,
            });
        }
    }
    best.ok_or(Error::TrainingFailed {
        best_error: f64::INFINITY,
    })
}

/// Per-cluster training summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub cluster: usize,
    pub pairs: Vec<usize>,
    pub outcome: Option<TrainOutcome>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: ColorModel,
    pub clusters: Vec<ClusterReport>,
    pub data: Vec<PairData>,
    pub assignments: Vec<usize>,
}

/// Cluster the ground-truth grays by texture, then learn weights per cluster.
pub fn train_model(pairs: &[TrainingPair], cfg: &Config) -> Result<TrainedModel> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no training pairs".into()));
    }
    cfg.validate()?;
    let globals = pairs
        .par_iter()
        .map(|p| global_feature(&p.gray, cfg.glcm_levels))
        .collect::<Result<Vec<_>>>()?;
    let clusters = cluster_features(&globals, &cfg.ap_params())?;
    let data = pairs
        .par_iter()
        .map(|p| PairData::prepare(p, cfg.superpixel_size))
        .collect::<Result<Vec<_>>>()?;

    let params = TrainParams::from_config(cfg);
    let reports = (0..clusters.len())
        .into_par_iter()
        .map(|c| {
            let members: Vec<usize> = (0..pairs.len()).filter(|&i| clusters.assignments[i] == c).collect();
            if members.is_empty() {
                log::warn!("cluster {c} has no pairs; using uniform weights");
                return Ok(ClusterReport {
                    cluster: c,
                    pairs: members,
                    outcome: None,
                });
            }
            let subset: Vec<PairData> = members.iter().map(|&i| data[i].clone()).collect();
            let outcome = train_weights(&subset, &params, c as u64)?;
            Ok(ClusterReport {
                cluster: c,
                pairs: members,
                outcome: Some(outcome),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let model = ColorModel {
        glcm_levels: cfg.glcm_levels,
        scaling: clusters.scaling.clone(),
        superpixel_size: cfg.superpixel_size,
        clusters: reports
            .iter()
            .map(|r| ClusterEntry {
                center: clusters.centers[r.cluster],
                weights: r.outcome.as_ref().map_or(WeightVector::uniform(), |o| o.weights),
                sample_count: r.pairs.len(),
            })
            .collect(),
    };
    Ok(TrainedModel {
        model,
        clusters: reports,
        data,
        assignments: clusters.assignments,
    })
}
