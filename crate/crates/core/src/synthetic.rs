//! Procedural images for tests and demos.
//!
//! Two texture families tile an image with 4×4 blocks of four materials.
//! Each material has a fixed chroma. In the `Smooth` family the materials
//! differ in mean luminance while the noise level varies at random per block.
//! In the `Striped` family they differ in the contrast of square-wave stripes
//! while the mean luminance and stripe orientation vary at random per block. So each family
//! has exactly one informative feature and the others mislead.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::imagecore::LabImage;
use crate::trainer::TrainingPair;

pub const BLOCKS: usize = 4;
pub const MATERIALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Smooth,
    Striped,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Smooth => "smooth",
            Family::Striped => "striped",
        }
    }

    /// Chroma of material `m`; pairwise distances are well above 3π.
    pub fn chroma(self, m: usize) -> [f64; 2] {
        const SMOOTH: [[f64; 2]; MATERIALS] = [[30.0, 20.0], [-25.0, 20.0], [10.0, -30.0], [-20.0, -15.0]];
        const STRIPED: [[f64; 2]; MATERIALS] = [[25.0, -10.0], [-10.0, 30.0], [-30.0, -5.0], [5.0, -30.0]];
        match self {
            Family::Smooth => SMOOTH[m],
            Family::Striped => STRIPED[m],
        }
    }
}

const SMOOTH_MEAN: [f64; MATERIALS] = [24.0, 40.0, 56.0, 72.0];
const SMOOTH_NOISE_MAX: f64 = 8.0;
const STRIPE_AMPLITUDE: [f64; MATERIALS] = [3.0, 8.0, 13.0, 18.0];
const STRIPE_BASE: (f64, f64) = (36.0, 64.0);

/// One image of `family`, `side` pixels square, with its material layout.
pub fn family_image(family: Family, side: usize, rng: &mut ChaCha8Rng) -> (LabImage, Vec<usize>) {
    // every material appears in exactly four blocks
    let mut layout: Vec<usize> = (0..BLOCKS * BLOCKS).map(|k| k % MATERIALS).collect();
    layout.shuffle(rng);
    let block = side.div_ceil(BLOCKS);
    // nuisance levels are a shuffled fixed ladder so that image-wide texture
    // statistics stay alike within a family
    let mut ladder: Vec<f64> = (0..BLOCKS * BLOCKS).map(|k| k as f64 / (BLOCKS * BLOCKS - 1) as f64).collect();
    ladder.shuffle(rng);
    let params: Vec<(f64, usize)> = ladder
        .iter()
        .map(|&t| match family {
            Family::Smooth => (t * SMOOTH_NOISE_MAX, 0),
            Family::Striped => (STRIPE_BASE.0 + t * (STRIPE_BASE.1 - STRIPE_BASE.0), rng.random_range(0..4)),
        })
        .collect();

    let n = side * side;
    let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..side {
        for x in 0..side {
            let k = (y / block).min(BLOCKS - 1) * BLOCKS + (x / block).min(BLOCKS - 1);
            let m = layout[k];
            let noise: f64 = StandardNormal.sample(rng);
            let v = match family {
                Family::Smooth => SMOOTH_MEAN[m] + params[k].0 * noise,
                Family::Striped => {
                    let (base, orientation) = params[k];
                    // period-4 square wave: horizontal, vertical or either diagonal
                    let u = match orientation {
                        0 => y,
                        1 => x,
                        2 => x + y,
                        _ => x + side - y,
                    };
                    let sign = if (u / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    base + sign * STRIPE_AMPLITUDE[m] + noise
                }
            };
            let c = family.chroma(m);
            l.push(v.clamp(0.0, 100.0));
            a.push(c[0]);
            b.push(c[1]);
        }
    }
    let img = LabImage::new(side, side, l, a, b).expect("generated luminance is clamped");
    (img, layout)
}

/// A training pair: ground truth and reference are independent draws of the
/// same family.
pub fn family_pair(family: Family, side: usize, seed: u64) -> TrainingPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (gt, _) = family_image(family, side, &mut rng);
    let (reference, _) = family_image(family, side, &mut rng);
    TrainingPair::new(gt, reference)
}

/// `n` pairs alternating between the two families.
pub fn two_family_corpus(n: usize, side: usize, seed: u64) -> Vec<(Family, TrainingPair)> {
    (0..n)
        .map(|i| {
            let family = if i % 2 == 0 { Family::Smooth } else { Family::Striped };
            (family, family_pair(family, side, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)))
        })
        .collect()
}

/// A smooth scene with a few soft-edged colored regions over a luminance
/// gradient. Every region also shifts luminance, so chroma edges are visible in gray. Varies with `seed`.
pub fn scene(width: usize, height: usize, seed: u64) -> LabImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<([f64; 2], f64, [f64; 3])> = (0..rng.random_range(3..7))
        .map(|_| {
            (
                [rng.random_range(0.0..width as f64), rng.random_range(0.0..height as f64)],
                rng.random_range(0.15..0.4) * width.min(height) as f64,
                [
                    // a clear luminance step at every chroma edge
                    rng.random_range(12.0..25.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                    rng.random_range(-40.0..40.0),
                    rng.random_range(-40.0..40.0),
                ],
            )
        })
        .collect();
    let tilt = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)];
    let base = rng.random_range(35.0..65.0);
    let n = width * height;
    let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..height {
        for x in 0..width {
            let mut px = [base + tilt[0] * x as f64 + tilt[1] * y as f64, 0.0, 0.0];
            for (c, r, v) in &blobs {
                let d2 = (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2);
                // logistic edge a few pixels wide
                let t = 1.0 / (1.0 + ((d2.sqrt() - r) / 2.0).exp());
                for k in 0..3 {
                    px[k] += t * v[k];
                }
            }
            l.push(px[0].clamp(0.0, 100.0));
            a.push(px[1]);
            b.push(px[2]);
        }
    }
    LabImage::new(width, height, l, a, b).expect("generated luminance is clamped")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::THETA;

    #[test]
    fn material_chromas_are_separated() {
        for f in [Family::Smooth, Family::Striped] {
            for i in 0..MATERIALS {
                for j in 0..i {
                    let (p, q) = (f.chroma(i), f.chroma(j));
                    assert!(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() > 2.0 * THETA);
                }
            }
        }
    }

    #[test]
    fn layout_uses_every_material_equally() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (img, layout) = family_image(Family::Striped, 40, &mut rng);
        for m in 0..MATERIALS {
            assert_eq!(layout.iter().filter(|&&v| v == m).count(), 4);
        }
        // top-left block carries its material's chroma
        assert_eq!(img.chroma_at(0, 0), Family::Striped.chroma(layout[0]));
        assert_eq!(img.chroma_at(39, 39), Family::Striped.chroma(layout[15]));
    }

    #[test]
    fn generation_is_reproducible() {
        let a = family_pair(Family::Smooth, 32, 11);
        let b = family_pair(Family::Smooth, 32, 11);
        assert_eq!(a.ground_truth, b.ground_truth);
        assert_eq!(a.reference, b.reference);
        assert_ne!(a.ground_truth, a.reference);
        assert_eq!(scene(30, 20, 5), scene(30, 20, 5));
        assert_ne!(scene(30, 20, 5), scene(30, 20, 6));
    }

    #[test]
    fn corpus_alternates_families() {
        let c = two_family_corpus(4, 24, 0);
        let fams: Vec<Family> = c.iter().map(|(f, _)| *f).collect();
        assert_eq!(fams, [Family::Smooth, Family::Striped, Family::Smooth, Family::Striped]);
    }
}
