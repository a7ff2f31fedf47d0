//! Weighted superpixel matching between a target and a reference image, and
//! transfer of reference chroma onto target superpixel centres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::LabImage;
use crate::localfeat::{LocalFeature, LocalFeatureSet};
use crate::superpixel::SuperpixelMap;

/// The four local features, in weight-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Intensity,
    Std,
    Surf,
    Gabor,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Intensity, Feature::Std, Feature::Surf, Feature::Gabor];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Intensity => "intensity",
            Feature::Std => "std",
            Feature::Surf => "surf",
            Feature::Gabor => "gabor",
        }
    }
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Nonnegative feature weights summing to one: (intensity, std, surf, gabor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct WeightVector([f64; 4]);

impl WeightVector {
    pub fn new(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invariant(format!("weights must be finite and nonnegative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Invariant(format!("weights sum to {sum}, not 1: {w:?}")));
        }
        Ok(Self(w))
    }

    /// Project nonnegative raw weights onto the simplex by rescaling.
    pub fn normalized(w: [f64; 4]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || w.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Invariant(format!("cannot normalize weights {w:?}")));
        }
        Self::new(w.map(|v| v / sum))
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn one_hot(f: Feature) -> Self {
        let mut w = [0.0; 4];
        w[f.index()] = 1.0;
        Self(w)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.0[f.index()]
    }
}

impl TryFrom<[f64; 4]> for WeightVector {
    type Error = Error;

    fn try_from(w: [f64; 4]) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for [f64; 4] {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Per-feature distances (intensity, std, surf, gabor). Vector features are
/// divided by √dim so all four share a comparable range.
pub fn feature_distances(t: &LocalFeature, r: &LocalFeature) -> [f64; 4] {
    let surf_norm = (t.surf.len().max(1) as f64).sqrt();
    let gabor_norm = (t.gabor.len().max(1) as f64).sqrt();
    [
        (t.intensity - r.intensity).abs(),
        (t.std - r.std).abs(),
        l2(&t.surf, &r.surf) / surf_norm,
        l2(&t.gabor, &r.gabor) / gabor_norm,
    ]
}

/// Weighted sum of per-feature distances.
pub fn feature_distance(w: &WeightVector, t: &LocalFeature, r: &LocalFeature) -> f64 {
    let d = feature_distances(t, r);
    w.0.iter().zip(d).map(|(wk, dk)| wk * dk).sum()
}

/// Per-feature distance tables between every target and reference superpixel,
/// laid out `[feature][t * n_ref + r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTables {
    pub n_target: usize,
    pub n_ref: usize,
    pub tables: [Vec<f64>; 4],
}

impl DistanceTables {
    pub fn new(target: &LocalFeatureSet, reference: &LocalFeatureSet) -> Self {
        let (nt, nr) = (target.len(), reference.len());
        let mut tables: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(nt * nr));
        for t in &target.features {
            for r in &reference.features {
                let d = feature_distances(t, r);
                for (tab, v) in tables.iter_mut().zip(d) {
                    tab.push(v);
                }
            }
        }
        Self {
            n_target: nt,
            n_ref: nr,
            tables,
        }
    }

    pub fn weighted(&self, w: &WeightVector, t: usize, r: usize) -> f64 {
        let i = t * self.n_ref + r;
        let w = w.as_array();
        w[0] * self.tables[0][i] + w[1] * self.tables[1][i] + w[2] * self.tables[2][i] + w[3] * self.tables[3][i]
    }

    /// Best reference per target; ties go to the lowest reference id.
    pub fn best_matches(&self, w: &WeightVector) -> Vec<usize> {
        (0..self.n_target)
            .map(|t| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for r in 0..self.n_ref {
                    let d = self.weighted(w, t, r);
                    if d < best_d {
                        best_d = d;
                        best = r;
                    }
                }
                best
            })
            .collect()
    }
}

/// Exhaustive nearest reference superpixel per target superpixel.
pub fn match_superpixels(w: &WeightVector, target: &LocalFeatureSet, reference: &LocalFeatureSet) -> Result<Vec<usize>> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("reference has no superpixels".into()));
    }
    Ok(target
        .features
        .iter()
        .map(|t| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, r) in reference.features.iter().enumerate() {
                let d = feature_distance(w, t, r);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    /// Target superpixel centre (x, y).
    pub position: (usize, usize),
    pub chroma: [f64; 2],
    pub matched: usize,
}

/// One transferred chroma value per target superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaSeeds {
    pub seeds: Vec<Seed>,
}

impl ChromaSeeds {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn chromas(&self) -> Vec<[f64; 2]> {
        self.seeds.iter().map(|s| s.chroma).collect()
    }

    pub fn with_chromas(&self, chromas: &[[f64; 2]]) -> ChromaSeeds {
        ChromaSeeds {
            seeds: self
                .seeds
                .iter()
                .zip(chromas)
                .map(|(s, &c)| Seed { chroma: c, ..*s })
                .collect(),
        }
    }
}

/// Chroma at each reference superpixel's central pixel.
pub fn reference_chromas(ref_lab: &LabImage, ref_sp: &SuperpixelMap) -> Vec<[f64; 2]> {
    ref_sp.centers().iter().map(|&(x, y)| ref_lab.chroma_at(x, y)).collect()
}

/// Copy the matched reference centre chroma onto each target centre.
pub fn transfer(mapping: &[usize], ref_lab: &LabImage, ref_sp: &SuperpixelMap, target_sp: &SuperpixelMap) -> Result<ChromaSeeds> {
    if mapping.len() != target_sp.count() {
        return Err(Error::InvalidInput(format!(
            "mapping covers {} of {} target superpixels",
            mapping.len(),
            target_sp.count()
        )));
    }
    let ref_chroma = reference_chromas(ref_lab, ref_sp);
    let seeds = mapping
        .iter()
        .zip(target_sp.centers())
        .map(|(&r, &position)| {
            let chroma = *ref_chroma.get(r).ok_or(Error::SuperpixelOutOfRange {
                id: r,
                count: ref_sp.count(),
            })?;
            Ok(Seed {
                position,
                chroma,
                matched: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChromaSeeds { seeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feat(i: f64, s: f64, surf: Vec<f64>, gabor: Vec<f64>) -> LocalFeature {
        LocalFeature {
            intensity: i,
            std: s,
            gabor,
            surf,
        }
    }

    fn random_feat(rng: &mut ChaCha8Rng) -> LocalFeature {
        feat(
            rng.random(),
            rng.random::<f64>() * 0.5,
            (0..128).map(|_| rng.random()).collect(),
            (0..40).map(|_| rng.random()).collect(),
        )
    }

    #[test]
    fn weight_vector_contract() {
        assert!(WeightVector::new([0.1007, 0.1734, 0.4509, 0.2750]).is_ok());
        assert!(WeightVector::new([0.3, 0.3, 0.3, 0.0]).is_err());
        assert!(WeightVector::new([1.1, -0.1, 0.0, 0.0]).is_err());
        let w = WeightVector::normalized([2.0, 2.0, 0.0, 4.0]).unwrap();
        assert_eq!(w.as_array(), [0.25, 0.25, 0.0, 0.5]);
    }

    #[test]
    fn identical_entries_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_feat(&mut rng);
        assert_eq!(feature_distance(&WeightVector::uniform(), &f, &f), 0.0);
    }

    #[test]
    fn single_term_reduction() {
        let a = feat(0.2, 0.0, vec![0.0; 128], vec![0.0; 40]);
        let b = feat(0.5, 0.3, vec![1.0; 128], vec![1.0; 40]);
        let d = feature_distance(&WeightVector::one_hot(Feature::Intensity), &a, &b);
        assert!((d - 0.3).abs() < 1e-15);
    }

    #[test]
    fn four_term_expression() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (random_feat(&mut rng), random_feat(&mut rng));
        let w = WeightVector::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        let surf: f64 = a.surf.iter().zip(&b.surf).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() / 128f64.sqrt();
        let gabor: f64 = a.gabor.iter().zip(&b.gabor).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() / 40f64.sqrt();
        let want = 0.1 * (a.intensity - b.intensity).abs() + 0.2 * (a.std - b.std).abs() + 0.3 * surf + 0.4 * gabor;
        assert!((feature_distance(&w, &a, &b) - want).abs() < 1e-14);
    }

    #[test]
    fn exact_copy_wins_and_ties_go_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_feat(&mut rng);
        let other = random_feat(&mut rng);
        let target = LocalFeatureSet { features: vec![t.clone()] };
        let reference = LocalFeatureSet {
            features: vec![other.clone(), t.clone(), t.clone()],
        };
        assert_eq!(match_superpixels(&WeightVector::uniform(), &target, &reference).unwrap(), vec![1]);
        let empty = LocalFeatureSet::default();
        assert!(match_superpixels(&WeightVector::uniform(), &target, &empty).is_err());
    }

    #[test]
    fn tables_agree_with_direct_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = LocalFeatureSet {
            features: (0..12).map(|_| random_feat(&mut rng)).collect(),
        };
        let reference = LocalFeatureSet {
            features: (0..9).map(|_| random_feat(&mut rng)).collect(),
        };
        let w = WeightVector::new([0.4, 0.1, 0.2, 0.3]).unwrap();
        let tables = DistanceTables::new(&target, &reference);
        assert_eq!(tables.best_matches(&w), match_superpixels(&w, &target, &reference).unwrap());
    }

    #[test]
    fn transfer_uniform_reference() {
        let lab = LabImage::new(4, 2, vec![50.0; 8], vec![12.0; 8], vec![-7.0; 8]).unwrap();
        let sp = SuperpixelMap::from_labels(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
        let seeds = transfer(&[1, 0], &lab, &sp, &sp).unwrap();
        assert_eq!(seeds.len(), 2);
        assert!(seeds.seeds.iter().all(|s| s.chroma == [12.0, -7.0]));
        assert_eq!(seeds.seeds[0].position, sp.centers()[0]);
        assert!(transfer(&[0], &lab, &sp, &sp).is_err());
    }
}
