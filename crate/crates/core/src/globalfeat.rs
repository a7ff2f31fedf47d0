//! GLCM texture signature (ASM, contrast, correlation, entropy) averaged
//! over the 0°, 45°, 90° and 135° unit offsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

pub const DEFAULT_LEVELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Deg0, Direction::Deg45, Direction::Deg90, Direction::Deg135];

    /// Pixel offset (dx, dy) with y pointing down the image.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (1, 0),
            Direction::Deg45 => (1, -1),
            Direction::Deg90 => (0, -1),
            Direction::Deg135 => (-1, -1),
        }
    }
}

/// Quantized gray levels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGrid {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub cells: Vec<usize>,
}

/// Co-occurrence counts for one direction, plus the normalized table.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    pub counts: Vec<u64>,
    pub total: u64,
    pub normalized: Vec<f64>,
}

impl Glcm {
    /// No pixel pair exists in this direction.
    pub fn is_degenerate(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.levels + j]
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.normalized[i * self.levels + j]
    }

    /// Build from an explicit probability table (rows i, columns j).
    pub fn from_probabilities(levels: usize, normalized: Vec<f64>) -> Result<Self> {
        if normalized.len() != levels * levels {
            return Err(Error::InvalidInput(format!(
                "{} probabilities for {levels} levels",
                normalized.len()
            )));
        }
        Ok(Self {
            levels,
            counts: vec![0; levels * levels],
            total: 1,
            normalized,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalFeature {
    pub asm: f64,
    pub con: f64,
    pub corrln: f64,
    pub ent: f64,
}

impl GlobalFeature {
    pub fn to_array(self) -> [f64; 4] {
        [self.asm, self.con, self.corrln, self.ent]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            asm: v[0],
            con: v[1],
            corrln: v[2],
            ent: v[3],
        }
    }
}

pub fn quantize(img: &GrayImage, levels: usize) -> Result<LevelGrid> {
    if levels < 2 {
        return Err(Error::InvalidInput(format!("GLCM needs at least 2 levels, got {levels}")));
    }
    let cells = img
        .l()
        .iter()
        .map(|&l| ((l / 100.0 * levels as f64).floor().max(0.0) as usize).min(levels - 1))
        .collect();
    Ok(LevelGrid {
        width: img.width(),
        height: img.height(),
        levels,
        cells,
    })
}

pub fn glcm(grid: &LevelGrid, direction: Direction) -> Glcm {
    let n = grid.levels;
    let (dx, dy) = direction.offset();
    let mut counts = vec![0u64; n * n];
    let (w, h) = (grid.width as isize, grid.height as isize);
    let xs = (0.max(-dx))..(w - dx.max(0));
    let ys = (0.max(-dy))..(h - dy.max(0));
    for y in ys {
        for x in xs.clone() {
            let a = grid.cells[(y * w + x) as usize];
            let b = grid.cells[((y + dy) * w + x + dx) as usize];
            counts[a * n + b] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let normalized = if total == 0 {
        vec![0.0; n * n]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    Glcm {
        levels: n,
        counts,
        total,
        normalized,
    }
}

pub fn glcm_features(g: &Glcm) -> GlobalFeature {
    let n = g.levels;
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let (mut asm, mut con, mut ent, mut sum_ij) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = g.p(i, j);
            px[i] += p;
            py[j] += p;
            asm += p * p;
            con += ((i as f64) - (j as f64)).powi(2) * p;
            sum_ij += (i * j) as f64 * p;
            if p > 0.0 {
                ent -= p * p.ln();
            }
        }
    }
    let moments = |m: &[f64]| {
        let mean: f64 = m.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let var: f64 = m.iter().enumerate().map(|(k, p)| (k as f64 - mean).powi(2) * p).sum();
        (mean, var.max(0.0).sqrt())
    };
    let (mx, sx) = moments(&px);
    let (my, sy) = moments(&py);
    // a constant marginal leaves correlation undefined; report 0
    let corrln = if sx * sy <= f64::EPSILON {
        0.0
    } else {
        (sum_ij - mx * my) / (sx * sy)
    };
    GlobalFeature { asm, con, corrln, ent }
}

/// Mean GLCM features over the four directions, skipping directions with no
/// pixel pairs.
pub fn global_feature(img: &GrayImage, levels: usize) -> Result<GlobalFeature> {
    let grid = quantize(img, levels)?;
    let mut acc = [0.0; 4];
    let mut used = 0;
    for dir in Direction::ALL {
        let g = glcm(&grid, dir);
        if g.is_degenerate() {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(glcm_features(&g).to_array()) {
            *a += v;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateGlcm {
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(GlobalFeature::from_array(acc.map(|a| a / used as f64)))
}

/// Per-component min–max map fitted on a training corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl FeatureScaling {
    pub fn identity() -> Self {
        Self {
            min: [0.0; 4],
            max: [1.0; 4],
        }
    }

    pub fn fit(features: &[GlobalFeature]) -> Self {
        let mut min = [f64::INFINITY; 4];
        let mut max = [f64::NEG_INFINITY; 4];
        for f in features {
            for (k, v) in f.to_array().into_iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        if features.is_empty() {
            return Self::identity();
        }
        Self { min, max }
    }

    /// Components with zero range map to 0.
    pub fn apply(&self, f: &GlobalFeature) -> [f64; 4] {
        let v = f.to_array();
        std::array::from_fn(|k| {
            let range = self.max[k] - self.min[k];
            if range > 0.0 {
                (v[k] - self.min[k]) / range
            } else {
                0.0
            }
        })
    }
}
