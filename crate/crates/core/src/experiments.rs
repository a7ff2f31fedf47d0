//! Experiment drivers over a test set: the random-weight baseline and the
//! per-feature weight ablation.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::Result;
use crate::evaluation::{pixel_error_rate, random_weights, weight_perturbation, win_ratio, AblationPoint, MatchingMetrics, SetMetrics};
use crate::imagecore::{GrayImage, LabImage};
use crate::matching::{Feature, WeightVector};
use crate::pipeline::{assign_cluster, model_config, PreparedPair};
use crate::trainer::ColorModel;

/// One test image, prepared for repeated colorization.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub pair: PreparedPair,
    pub ground_truth: LabImage,
    pub cluster: usize,
    /// The model's weights for this image's cluster.
    pub weights: WeightVector,
}

impl EvalItem {
    pub fn new(gray: GrayImage, ground_truth: LabImage, reference: LabImage, model: &ColorModel, cfg: &Config) -> Result<Self> {
        let cfg = model_config(model, cfg);
        let cluster = assign_cluster(&gray, model)?;
        Ok(Self {
            pair: PreparedPair::new(gray, reference, &cfg)?,
            ground_truth,
            cluster,
            weights: model.clusters[cluster].weights,
        })
    }

    pub fn seed_metrics(&self, w: &WeightVector, theta: f64) -> Result<MatchingMetrics> {
        self.pair.seed_metrics(w, &self.ground_truth, theta)
    }

    /// Pixel error rate at the JND threshold of a full colorization under `w`.
    pub fn error_rate(&self, w: &WeightVector, cfg: &Config) -> Result<f64> {
        let out = self.pair.colorize(w, cfg)?;
        pixel_error_rate(&out.image, &self.ground_truth, cfg.jnd)
    }
}

/// One point of the baseline scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub label: String,
    /// `None` for the learned row when clusters use different weights.
    pub weights: Option<WeightVector>,
    pub metrics: SetMetrics,
}

fn set_metrics(items: &[EvalItem], theta: f64, w: impl Fn(&EvalItem) -> WeightVector + Sync) -> Result<SetMetrics> {
    let per_image = items.par_iter().map(|it| it.seed_metrics(&w(it), theta)).collect::<Result<Vec<_>>>()?;
    SetMetrics::from_images(&per_image)
}

/// Seed-level (avgE, A) for the learned weights followed by `k` random
/// simplex weights drawn from `seed`.
pub fn random_weight_baseline(items: &[EvalItem], k: usize, seed: u64, theta: f64) -> Result<Vec<BaselineRow>> {
    let learned = items.first().map(|it| it.weights).filter(|w| items.iter().all(|it| it.weights == *w));
    let mut rows = vec![BaselineRow {
        label: "learned".into(),
        weights: learned,
        metrics: set_metrics(items, theta, |it| it.weights)?,
    }];
    for (i, w) in random_weights(k, seed).into_iter().enumerate() {
        rows.push(BaselineRow {
            label: format!("random_{i}"),
            weights: Some(w),
            metrics: set_metrics(items, theta, |_| w)?,
        });
    }
    Ok(rows)
}

/// Error rate under every perturbed weight vector of one image, indexed
/// `[feature][grid point]`. Weights that give the same matching share a
/// colorization.
fn perturbed_rates(item: &EvalItem, cfg: &Config) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut rate = |w: &WeightVector| -> Result<f64> {
        let key = item.pair.tables.best_matches(w);
        if let Some(&r) = cache.get(&key) {
            return Ok(r);
        }
        let r = item.error_rate(w, cfg)?;
        cache.insert(key, r);
        Ok(r)
    };
    let learned = rate(&item.weights)?;
    let mut grid = Vec::with_capacity(Feature::ALL.len());
    for f in Feature::ALL {
        grid.push(
            weight_perturbation(&item.weights, f)
                .iter()
                .map(|(_, w)| rate(w))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok((learned, grid))
}

/// For every feature and grid value, the fraction of images whose learned
/// error rate is strictly below the rate under the perturbed weights.
pub fn ablation_ratio(items: &[EvalItem], cfg: &Config) -> Result<Vec<AblationPoint>> {
    let per_item = items.par_iter().map(|it| perturbed_rates(it, cfg)).collect::<Result<Vec<_>>>()?;
    let learned: Vec<f64> = per_item.iter().map(|(l, _)| *l).collect();
    let mut points = Vec::new();
    for f in Feature::ALL {
        for (g, (v, _)) in weight_perturbation(&WeightVector::uniform(), f).into_iter().enumerate() {
            let other: Vec<f64> = per_item.iter().map(|(_, grid)| grid[f.index()][g]).collect();
            points.push(AblationPoint {
                feature: f.name(),
                weight: v,
                ratio: win_ratio(&learned, &other)?,
            });
        }
    }
    Ok(points)
}
