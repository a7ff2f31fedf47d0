//! Dense upright extended SURF (128-d) at a single scale.
//!
//! Haar responses of side 2s are computed once per image; each pixel's
//! descriptor is a 4×4 grid of 5s×5s subregions over a 20s window, eight
//! sums per subregion, normalized to unit length.

use super::check_fit;
use crate::error::Result;
use crate::imagecore::GrayImage;
use crate::superpixel::SuperpixelMap;

pub const SURF_DIM: usize = 128;

const SCALE: usize = 2;
const HAAR_HALF: isize = SCALE as isize; // Haar filter side is 2s
const SUB: usize = 5 * SCALE; // subregion side
const WINDOW_HALF: usize = 2 * SUB; // 20s window
const COMPONENTS: usize = 8;

/// Summed-area tables of the eight signed Haar component maps, padded by the
/// window half-width with clamp-to-edge values.
pub struct SurfMaps {
    width: usize,
    height: usize,
    stride: usize,
    tables: Vec<Vec<f64>>,
}

impl SurfMaps {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut dx = vec![0.0; w * h];
        let mut dy = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let (mut sx, mut sy) = (0.0, 0.0);
                for v in -HAAR_HALF..HAAR_HALF {
                    for u in -HAAR_HALF..HAAR_HALF {
                        let val = img.get_clamped(x + u, y + v) / 100.0;
                        sx += if u >= 0 { val } else { -val };
                        sy += if v >= 0 { val } else { -val };
                    }
                }
                let p = y as usize * w + x as usize;
                dx[p] = sx;
                dy[p] = sy;
            }
        }

        let pad = WINDOW_HALF;
        let (pw, ph) = (w + 2 * pad, h + 2 * pad);
        let stride = pw + 1;
        let mut tables = vec![vec![0.0; stride * (ph + 1)]; COMPONENTS];
        let mut comp = [0.0; COMPONENTS];
        for py in 0..ph {
            let sy = (py as isize - pad as isize).clamp(0, h as isize - 1) as usize;
            for px in 0..pw {
                let sx = (px as isize - pad as isize).clamp(0, w as isize - 1) as usize;
                let (gx, gy) = (dx[sy * w + sx], dy[sy * w + sx]);
                comp.fill(0.0);
                let yi = usize::from(gy >= 0.0);
                let xi = usize::from(gx >= 0.0);
                comp[yi] = gx;
                comp[2 + yi] = gx.abs();
                comp[4 + xi] = gy;
                comp[6 + xi] = gy.abs();
                for (t, &c) in tables.iter_mut().zip(&comp) {
                    let i = (py + 1) * stride + px + 1;
                    t[i] = c + t[i - 1] + t[i - stride] - t[i - stride - 1];
                }
            }
        }
        Self {
            width: w,
            height: h,
            stride,
            tables,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    // inclusive box in padded coordinates
    fn box_sum(&self, t: &[f64], x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.stride;
        t[(y1 + 1) * s + x1 + 1] - t[y0 * s + x1 + 1] - t[(y1 + 1) * s + x0] + t[y0 * s + x0]
    }

    /// Unit-length descriptor at pixel (x, y); all zeros when there is no gradient.
    /// Layout: subregion (row-major over the 4×4 grid) × 8 components
    /// `[Σdx|dy<0, Σdx|dy≥0, Σ|dx||dy<0, Σ|dx||dy≥0, Σdy|dx<0, Σdy|dx≥0, Σ|dy||dx<0, Σ|dy||dx≥0]`.
    pub fn descriptor_at(&self, x: usize, y: usize) -> [f64; SURF_DIM] {
        let mut d = [0.0; SURF_DIM];
        // padded coordinate of the window's top-left corner
        let (ox, oy) = (x, y);
        for j in 0..4 {
            for i in 0..4 {
                let x0 = ox + i * SUB;
                let y0 = oy + j * SUB;
                let base = (j * 4 + i) * COMPONENTS;
                for (c, t) in self.tables.iter().enumerate() {
                    d[base + c] = self.box_sum(t, x0, y0, x0 + SUB - 1, y0 + SUB - 1);
                }
            }
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 {
            d.iter_mut().for_each(|v| *v /= norm);
        } else {
            d = [0.0; SURF_DIM];
        }
        d
    }
}

/// Mean unit descriptor over each superpixel's members.
pub fn surf_feature(img: &GrayImage, sp: &SuperpixelMap) -> Result<Vec<Vec<f64>>> {
    check_fit(img, sp)?;
    let maps = SurfMaps::new(img);
    let mut sums = vec![vec![0.0; SURF_DIM]; sp.count()];
    let w = img.width();
    for (p, &label) in sp.labels().iter().enumerate() {
        let d = maps.descriptor_at(p % w, p / w);
        for (s, v) in sums[label].iter_mut().zip(d) {
            *s += v;
        }
    }
    for (id, s) in sums.iter_mut().enumerate() {
        let n = sp.members(id).len() as f64;
        s.iter_mut().for_each(|v| *v /= n);
    }
    Ok(sums)
}
