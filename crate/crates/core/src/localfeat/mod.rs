//! Per-superpixel local descriptors: mean intensity, mean 5×5 standard
//! deviation, a 40-channel Gabor energy and a 128-d dense upright SURF.
//!
//! All descriptors read only the luminance channel, rescaled to [0, 1].

mod gabor;
mod surf;

pub use gabor::{gabor_feature, gabor_responses, GaborBank, GABOR_DIM, GABOR_ORIENTATIONS, GABOR_WAVELENGTHS};
pub use surf::{surf_feature, SurfMaps, SURF_DIM};

use crate::error::Result;
use crate::imagecore::GrayImage;
use crate::superpixel::SuperpixelMap;

/// Descriptor bundle for one superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeature {
    pub intensity: f64,
    pub std: f64,
    pub gabor: Vec<f64>,
    pub surf: Vec<f64>,
}

impl LocalFeature {
    pub fn scalar_count(&self) -> usize {
        2 + self.gabor.len() + self.surf.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalFeatureSet {
    pub features: Vec<LocalFeature>,
}

impl LocalFeatureSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.intensity).collect()
    }

    pub fn stds(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.std).collect()
    }
}

/// Average a per-pixel map over each superpixel's members.
pub(crate) fn average_over(sp: &SuperpixelMap, map: &[f64]) -> Vec<f64> {
    (0..sp.count())
        .map(|id| {
            let m = sp.members(id);
            m.iter().map(|&p| map[p]).sum::<f64>() / m.len() as f64
        })
        .collect()
}

fn check_fit(img: &GrayImage, sp: &SuperpixelMap) -> Result<()> {
    if img.width() != sp.width() || img.height() != sp.height() {
        return Err(crate::error::Error::DimensionMismatch {
            left_w: img.width(),
            left_h: img.height(),
            right_w: sp.width(),
            right_h: sp.height(),
        });
    }
    Ok(())
}

/// Mean luminance of each superpixel, in [0, 1].
pub fn intensity_feature(img: &GrayImage, sp: &SuperpixelMap) -> Result<Vec<f64>> {
    check_fit(img, sp)?;
    Ok(average_over(sp, &img.unit_l()))
}

/// Population standard deviation of the 5×5 (edge-clamped) window around each pixel.
pub fn std_map(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut out = Vec::with_capacity(img.len());
    for y in 0..h {
        for x in 0..w {
            let mut win = [0.0; 25];
            let mut k = 0;
            for dy in -2..=2 {
                for dx in -2..=2 {
                    win[k] = img.get_clamped(x + dx, y + dy) / 100.0;
                    k += 1;
                }
            }
            let mean = win.iter().sum::<f64>() / 25.0;
            let var = win.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 25.0;
            out.push(var.sqrt());
        }
    }
    out
}

/// Mean of the per-pixel 5×5 standard deviation over each superpixel.
pub fn std_feature(img: &GrayImage, sp: &SuperpixelMap) -> Result<Vec<f64>> {
    check_fit(img, sp)?;
    Ok(average_over(sp, &std_map(img)))
}

pub fn extract_all(img: &GrayImage, sp: &SuperpixelMap) -> Result<LocalFeatureSet> {
    let intensity = intensity_feature(img, sp)?;
    let std = std_feature(img, sp)?;
    let gabor = gabor_feature(img, sp)?;
    let surf = surf_feature(img, sp)?;
    let features = intensity
        .into_iter()
        .zip(std)
        .zip(gabor.into_iter().zip(surf))
        .map(|((intensity, std), (gabor, surf))| LocalFeature {
            intensity,
            std,
            gabor,
            surf,
        })
        .collect();
    Ok(LocalFeatureSet { features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpixel::segment;

    #[test]
    fn intensity_of_constant_and_pair() {
        let img = GrayImage::new(4, 4, vec![50.0; 16]).unwrap();
        let sp = segment(&img, 4).unwrap();
        assert!(intensity_feature(&img, &sp).unwrap().iter().all(|&v| (v - 0.5).abs() < 1e-12));

        let img = GrayImage::new(2, 1, vec![0.0, 100.0]).unwrap();
        let sp = SuperpixelMap::from_labels(2, 1, vec![0, 0]).unwrap();
        assert_eq!(intensity_feature(&img, &sp).unwrap(), vec![0.5]);
    }

    #[test]
    fn intensity_matches_direct_sum() {
        let img = GrayImage::from_fn(23, 17, |x, y| ((x * 7 + y * 13) % 101) as f64).unwrap();
        let sp = segment(&img, 30).unwrap();
        let got = intensity_feature(&img, &sp).unwrap();
        for id in 0..sp.count() {
            let mut sum = 0.0;
            let mut n = 0;
            for y in 0..17 {
                for x in 0..23 {
                    if sp.label_at(x, y) == id {
                        sum += img.get(x, y) / 100.0;
                        n += 1;
                    }
                }
            }
            assert!((got[id] - sum / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn std_of_isolated_bright_pixel() {
        let mut l = vec![0.0; 81];
        l[4 * 9 + 4] = 100.0;
        let img = GrayImage::new(9, 9, l).unwrap();
        let map = std_map(&img);
        assert!((map[4 * 9 + 4] - (24.0f64 / 625.0).sqrt()).abs() < 1e-12);
        // outside the 5x5 reach of the bright pixel
        assert_eq!(map[0], 0.0);
    }

    #[test]
    fn std_is_translation_equivariant_in_interior() {
        let base = |x: usize, y: usize| ((x * 31 + y * 17) % 23) as f64 * 4.0;
        let a = GrayImage::from_fn(20, 20, base).unwrap();
        let b = GrayImage::from_fn(20, 20, |x, y| base(x + 3, y + 2)).unwrap();
        let (ma, mb) = (std_map(&a), std_map(&b));
        for y in 2..14 {
            for x in 2..13 {
                assert!((mb[y * 20 + x] - ma[(y + 2) * 20 + x + 3]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_image_bundle() {
        let img = GrayImage::new(30, 30, vec![70.0; 900]).unwrap();
        let sp = segment(&img, 100).unwrap();
        let set = extract_all(&img, &sp).unwrap();
        assert_eq!(set.len(), sp.count());
        for f in &set.features {
            assert!((f.intensity - 0.7).abs() < 1e-12);
            assert!(f.std.abs() < 1e-9);
            assert!(f.gabor.iter().all(|v| v.abs() < 1e-9));
            assert!(f.surf.iter().all(|&v| v == 0.0));
            assert_eq!(f.scalar_count(), 170);
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let img = GrayImage::from_fn(40, 30, |x, y| 50.0 + 40.0 * ((x as f64 * 0.4).sin() * (y as f64 * 0.25).cos())).unwrap();
        let sp = segment(&img, 100).unwrap();
        let a = extract_all(&img, &sp).unwrap();
        let b = extract_all(&img, &sp).unwrap();
        assert_eq!(a, b);
        for f in &a.features {
            assert!((0.0..=1.0).contains(&f.intensity));
            assert!((0.0..=0.5).contains(&f.std));
            assert!(f.gabor.iter().chain(&f.surf).all(|v| v.is_finite()));
        }
    }
}
