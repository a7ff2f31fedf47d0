//! End-to-end colorization of a grayscale target from a color reference.

use crate::config::Config;
use crate::crf::{build_neighborhoods, refine, NeighborhoodSets};
use crate::error::Result;
use crate::evaluation::{matching_metrics, MatchingMetrics};
use crate::globalfeat::global_feature;
use crate::imagecore::{GrayImage, LabImage};
use crate::localfeat::{extract_all, LocalFeatureSet};
use crate::matching::{transfer, ChromaSeeds, DistanceTables, WeightVector};
use crate::spreader::{build_weights, spread_with_weights, NeighborWeights};
use crate::superpixel::{segment, SuperpixelMap};
use crate::trainer::ColorModel;

/// Segmentation and features of one image.
#[derive(Debug, Clone)]
pub struct Analyzed {
    pub gray: GrayImage,
    pub superpixels: SuperpixelMap,
    pub features: LocalFeatureSet,
}

impl Analyzed {
    pub fn new(gray: GrayImage, superpixel_size: usize) -> Result<Self> {
        let superpixels = segment(&gray, superpixel_size)?;
        let features = extract_all(&gray, &superpixels)?;
        Ok(Self {
            gray,
            superpixels,
            features,
        })
    }
}

/// A target/reference pair with everything that does not depend on the weights.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub target: Analyzed,
    pub reference: Analyzed,
    pub reference_lab: LabImage,
    pub tables: DistanceTables,
    pub neighborhoods: NeighborhoodSets,
    pub affinities: NeighborWeights,
}

/// Output of one colorization run.
#[derive(Debug, Clone)]
pub struct Colorization {
    pub image: LabImage,
    /// Seeds straight from matching.
    pub raw_seeds: ChromaSeeds,
    /// Seeds after spatial refinement.
    pub seeds: ChromaSeeds,
    pub weights: WeightVector,
}

impl PreparedPair {
    pub fn new(gray: GrayImage, reference_lab: LabImage, cfg: &Config) -> Result<Self> {
        let target = Analyzed::new(gray, cfg.superpixel_size)?;
        let reference = Analyzed::new(reference_lab.luminance(), cfg.superpixel_size)?;
        Ok(Self::from_parts(target, reference, reference_lab, cfg))
    }

    pub fn from_parts(target: Analyzed, reference: Analyzed, reference_lab: LabImage, cfg: &Config) -> Self {
        let tables = DistanceTables::new(&target.features, &reference.features);
        let neighborhoods = build_neighborhoods(
            &target.superpixels.adjacency(),
            &target.features.intensities(),
            &target.features.stds(),
            cfg.delta1,
            cfg.delta2,
            cfg.crf_max_size,
            cfg.crf_max_reps,
        );
        let affinities = build_weights(&target.gray);
        Self {
            target,
            reference,
            reference_lab,
            tables,
            neighborhoods,
            affinities,
        }
    }

    /// Seeds transferred under `w`, before refinement.
    pub fn transfer_seeds(&self, w: &WeightVector) -> Result<ChromaSeeds> {
        let mapping = self.tables.best_matches(w);
        transfer(&mapping, &self.reference_lab, &self.reference.superpixels, &self.target.superpixels)
    }

    pub fn colorize(&self, w: &WeightVector, cfg: &Config) -> Result<Colorization> {
        let raw_seeds = self.transfer_seeds(w)?;
        let seeds = refine(&raw_seeds, &self.neighborhoods, &cfg.crf_params());
        let image = spread_with_weights(&self.target.gray, &self.affinities, &seeds, &cfg.spread_params())?;
        Ok(Colorization {
            image,
            raw_seeds,
            seeds,
            weights: *w,
        })
    }

    /// Seed-level error of `w` against the ground truth of the target.
    pub fn seed_metrics(&self, w: &WeightVector, ground_truth: &LabImage, theta: f64) -> Result<MatchingMetrics> {
        let seeds = self.transfer_seeds(w)?;
        let truth: Vec<[f64; 2]> = seeds.seeds.iter().map(|s| ground_truth.chroma_at(s.position.0, s.position.1)).collect();
        matching_metrics(&seeds.chromas(), &truth, theta)
    }
}

/// Pick the model's weights for `gray` by its texture, then colorize.
pub fn colorize(gray: &GrayImage, reference_lab: &LabImage, model: &ColorModel, cfg: &Config) -> Result<(usize, Colorization)> {
    let cfg = model_config(model, cfg);
    let cluster = assign_cluster(gray, model)?;
    let w = model.clusters[cluster].weights;
    let pair = PreparedPair::new(gray.clone(), reference_lab.clone(), &cfg)?;
    Ok((cluster, pair.colorize(&w, &cfg)?))
}

/// `cfg` with the segmentation and texture settings the model was trained with.
pub fn model_config(model: &ColorModel, cfg: &Config) -> Config {
    Config {
        superpixel_size: model.superpixel_size,
        glcm_levels: model.glcm_levels,
        ..cfg.clone()
    }
}

/// Texture cluster of `gray` under `model`.
pub fn assign_cluster(gray: &GrayImage, model: &ColorModel) -> Result<usize> {
    Ok(model.assign(&global_feature(gray, model.glcm_levels)?))
}

/// Gray image with every superpixel filled by its seed chroma.
pub fn seed_image(gray: &GrayImage, sp: &SuperpixelMap, seeds: &ChromaSeeds) -> Result<LabImage> {
    let chromas = seeds.chromas();
    let (a, b) = sp.labels().iter().map(|&id| (chromas[id][0], chromas[id][1])).unzip();
    LabImage::from_gray(gray, a, b)
}

/// Gray image with superpixel boundaries drawn in a saturated color.
pub fn boundary_image(gray: &GrayImage, sp: &SuperpixelMap) -> Result<LabImage> {
    let (w, h) = (sp.width(), sp.height());
    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let id = sp.label_at(x, y);
            let edge = (x + 1 < w && sp.label_at(x + 1, y) != id) || (y + 1 < h && sp.label_at(x, y + 1) != id);
            if edge {
                a[y * w + x] = 80.0;
                b[y * w + x] = 70.0;
            }
        }
    }
    LabImage::from_gray(gray, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::globalfeat::FeatureScaling;
    use crate::trainer::ClusterEntry;

    fn one_cluster_model() -> ColorModel {
        ColorModel {
            glcm_levels: 8,
            scaling: FeatureScaling::identity(),
            superpixel_size: 100,
            clusters: vec![ClusterEntry {
                center: crate::globalfeat::GlobalFeature::from_array([0.5; 4]),
                weights: WeightVector::uniform(),
                sample_count: 1,
            }],
        }
    }

    #[test]
    fn constant_chroma_reference_gives_constant_output() {
        let gray = GrayImage::from_fn(40, 30, |x, y| 30.0 + ((x * 3 + y * 5) % 40) as f64).unwrap();
        let rg = GrayImage::from_fn(36, 36, |x, y| 20.0 + ((x * 7 + y) % 60) as f64).unwrap();
        let reference = LabImage::from_gray(&rg, vec![25.0; 36 * 36], vec![-12.0; 36 * 36]).unwrap();
        let (_, out) = colorize(&gray, &reference, &one_cluster_model(), &Config::default()).unwrap();
        for i in 0..gray.len() {
            assert!((out.image.a()[i] - 25.0).abs() < 1e-6 && (out.image.b()[i] + 12.0).abs() < 1e-6, "{i}: {} {}", out.image.a()[i], out.image.b()[i]);
        }
        assert_eq!(out.image.l(), gray.l());
    }

    #[test]
    fn self_reference_seeds_are_exact() {
        let gray = GrayImage::from_fn(40, 40, |x, y| 10.0 + ((x * x + 3 * y) % 80) as f64).unwrap();
        let a: Vec<f64> = (0..1600).map(|i| ((i * 7) % 50) as f64 - 25.0).collect();
        let b: Vec<f64> = (0..1600).map(|i| ((i * 3) % 40) as f64 - 20.0).collect();
        let lab = LabImage::from_gray(&gray, a, b).unwrap();
        let cfg = Config::default();
        let pair = PreparedPair::new(gray, lab.clone(), &cfg).unwrap();
        let seeds = pair.transfer_seeds(&WeightVector::uniform()).unwrap();
        for s in &seeds.seeds {
            assert_eq!(s.chroma, lab.chroma_at(s.position.0, s.position.1));
        }
        let m = pair.seed_metrics(&WeightVector::uniform(), &lab, cfg.theta).unwrap();
        assert_eq!((m.mean_error, m.error_rate), (0.0, 0.0));
    }

    #[test]
    fn debug_images_have_target_size() {
        let gray = GrayImage::from_fn(24, 20, |x, _| (x * 4) as f64).unwrap();
        let sp = segment(&gray, 50).unwrap();
        let seeds = ChromaSeeds {
            seeds: sp
                .centers()
                .iter()
                .enumerate()
                .map(|(k, &position)| crate::matching::Seed {
                    position,
                    chroma: [k as f64, 0.0],
                    matched: k,
                })
                .collect(),
        };
        let si = seed_image(&gray, &sp, &seeds).unwrap();
        assert_eq!(si.a()[0], sp.labels()[0] as f64);
        let bi = boundary_image(&gray, &sp).unwrap();
        assert_eq!((bi.width(), bi.height()), (24, 20));
        assert!(bi.a().iter().any(|&v| v > 0.0));
    }
}
