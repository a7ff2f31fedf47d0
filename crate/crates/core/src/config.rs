//! Run configuration, loadable from TOML. Missing keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::ApParams;
use crate::crf::CrfParams;
use crate::error::{Error, Result};
use crate::evaluation::{JND, THETA};
use crate::globalfeat::DEFAULT_LEVELS;
use crate::spreader::SpreadParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Target superpixel size in pixels.
    pub superpixel_size: usize,
    pub glcm_levels: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub eta: f64,
    pub crf_max_size: usize,
    pub crf_max_reps: usize,
    pub crf_max_sweeps: usize,
    /// Softmin temperature of the training surrogate.
    pub tau: f64,
    /// Seed chroma error threshold in ab units.
    pub theta: f64,
    /// ΔE00 threshold for pixel error rates.
    pub jnd: f64,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub multi_start: usize,
    pub lm_max_iter: usize,
    pub ap_damping: f64,
    pub ap_max_iter: usize,
    pub ap_convergence_window: usize,
    pub ap_preference: Option<f64>,
    pub solver_tolerance: f64,
    pub dump_seeds: bool,
    pub dump_superpixels: bool,
}

impl Default for Config {
    fn default() -> Self {
        let crf = CrfParams::default();
        let ap = ApParams::default();
        let sp = SpreadParams::default();
        Self {
            superpixel_size: 100,
            glcm_levels: DEFAULT_LEVELS,
            delta1: crf.delta1,
            delta2: crf.delta2,
            gamma: crf.gamma,
            eta: crf.eta,
            crf_max_size: crf.max_size,
            crf_max_reps: crf.max_reps,
            crf_max_sweeps: crf.max_sweeps,
            tau: 0.05,
            theta: THETA,
            jnd: JND,
            seed: 0,
            threads: 0,
            multi_start: 8,
            lm_max_iter: 200,
            ap_damping: ap.damping,
            ap_max_iter: ap.max_iter,
            ap_convergence_window: ap.convergence_window,
            ap_preference: ap.preference,
            solver_tolerance: sp.tolerance,
            dump_seeds: false,
            dump_superpixels: false,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("theta", self.theta),
            ("jnd", self.jnd),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.superpixel_size == 0 || self.glcm_levels < 2 || self.multi_start == 0 {
            return Err(Error::Config("superpixel_size, multi_start must be >= 1 and glcm_levels >= 2".into()));
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(Error::Config("solver_tolerance must be > 0".into()));
        }
        Ok(())
    }

    pub fn crf_params(&self) -> CrfParams {
        CrfParams {
            delta1: self.delta1,
            delta2: self.delta2,
            gamma: self.gamma,
            eta: self.eta,
            max_size: self.crf_max_size,
            max_reps: self.crf_max_reps,
            max_sweeps: self.crf_max_sweeps,
        }
    }

    pub fn ap_params(&self) -> ApParams {
        ApParams {
            preference: self.ap_preference,
            damping: self.ap_damping,
            max_iter: self.ap_max_iter,
            convergence_window: self.ap_convergence_window,
        }
    }

    pub fn spread_params(&self) -> SpreadParams {
        SpreadParams {
            tolerance: self.solver_tolerance,
            ..SpreadParams::default()
        }
    }
}
