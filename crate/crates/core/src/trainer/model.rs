//! Trained model: cluster centers with their weight vectors, stored as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::assign;
use crate::error::{Error, Result};
use crate::globalfeat::{FeatureScaling, GlobalFeature};
use crate::localfeat::{GABOR_DIM, SURF_DIM};
use crate::matching::WeightVector;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEntry {
    pub center: GlobalFeature,
    pub weights: WeightVector,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorModel {
    pub glcm_levels: usize,
    pub scaling: FeatureScaling,
    pub superpixel_size: usize,
    pub clusters: Vec<ClusterEntry>,
}

impl ColorModel {
    /// Cluster whose center is nearest to `f`.
    pub fn assign(&self, f: &GlobalFeature) -> usize {
        let centers: Vec<GlobalFeature> = self.clusters.iter().map(|c| c.center).collect();
        assign(f, &centers, &self.scaling)
    }

    pub fn weights_for(&self, f: &GlobalFeature) -> WeightVector {
        self.clusters[self.assign(f)].weights
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION,
            glcm: GlcmSection {
                levels: self.glcm_levels,
                scaling: self.scaling.clone(),
            },
            superpixel: SuperpixelSection {
                target_size: self.superpixel_size,
            },
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterSection {
                    center: c.center.to_array(),
                    weights: c.weights.as_array(),
                    sample_count: c.sample_count,
                })
                .collect(),
            feature_norm: FeatureNormSection {
                gabor_dim: GABOR_DIM,
                surf_dim: SURF_DIM,
            },
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if probe.version != MODEL_VERSION {
            return Err(Error::ModelVersion {
                found: probe.version,
                expected: MODEL_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.feature_norm.gabor_dim != GABOR_DIM || file.feature_norm.surf_dim != SURF_DIM {
            return Err(Error::Invariant(format!(
                "feature dimensions {}/{} do not match this build ({GABOR_DIM}/{SURF_DIM})",
                file.feature_norm.gabor_dim, file.feature_norm.surf_dim
            )));
        }
        if file.clusters.is_empty() {
            return Err(Error::Invariant("model has no clusters".into()));
        }
        if file.glcm.levels < 2 || file.superpixel.target_size == 0 {
            return Err(Error::Invariant("model metadata out of range".into()));
        }
        let clusters = file
            .clusters
            .into_iter()
            .map(|c| {
                Ok(ClusterEntry {
                    center: GlobalFeature::from_array(c.center),
                    weights: WeightVector::new(c.weights)?,
                    sample_count: c.sample_count,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            glcm_levels: file.glcm.levels,
            scaling: file.glcm.scaling,
            superpixel_size: file.superpixel.target_size,
            clusters,
        })
    }
}

pub fn save_model(m: &ColorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, m.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ColorModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ColorModel::from_json(&text)
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    glcm: GlcmSection,
    superpixel: SuperpixelSection,
    clusters: Vec<ClusterSection>,
    feature_norm: FeatureNormSection,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlcmSection {
    levels: usize,
    scaling: FeatureScaling,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperpixelSection {
    target_size: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterSection {
    center: [f64; 4],
    weights: [f64; 4],
    sample_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureNormSection {
    gabor_dim: usize,
    surf_dim: usize,
}
