//! Zero-mean complex Gabor bank: 5 wavelengths × 8 orientations, applied
//! through the FFT on an edge-clamped, padded copy of the image.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{average_over, check_fit};
use crate::error::Result;
use crate::imagecore::GrayImage;
use crate::superpixel::SuperpixelMap;

pub const GABOR_WAVELENGTHS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];
pub const GABOR_ORIENTATIONS: usize = 8;
pub const GABOR_DIM: usize = 40;

const SIGMA_PER_WAVELENGTH: f64 = 0.56;
const ASPECT: f64 = 0.5;
// kernel support in units of the long-axis standard deviation
const SUPPORT: f64 = 2.5;

/// Spatial kernels of the bank, component order scale-major, orientation-minor.
#[derive(Debug, Clone)]
pub struct GaborBank {
    pub kernels: Vec<GaborKernel>,
}

#[derive(Debug, Clone)]
pub struct GaborKernel {
    pub radius: usize,
    /// (2r+1)² taps, row-major, even part in `re`, odd part in `im`.
    pub taps: Vec<Complex<f64>>,
}

impl GaborBank {
    pub fn new() -> Self {
        let mut kernels = Vec::with_capacity(GABOR_DIM);
        for &lambda in &GABOR_WAVELENGTHS {
            for o in 0..GABOR_ORIENTATIONS {
                kernels.push(make_kernel(lambda, o as f64 * PI / GABOR_ORIENTATIONS as f64));
            }
        }
        Self { kernels }
    }

    pub fn max_radius(&self) -> usize {
        self.kernels.iter().map(|k| k.radius).max().unwrap_or(0)
    }
}

impl Default for GaborBank {
    fn default() -> Self {
        Self::new()
    }
}

fn make_kernel(lambda: f64, theta: f64) -> GaborKernel {
    let sigma = SIGMA_PER_WAVELENGTH * lambda;
    let radius = (SUPPORT * sigma / ASPECT).ceil() as usize;
    let r = radius as isize;
    let (c, s) = (theta.cos(), theta.sin());
    let side = 2 * radius + 1;
    let mut env = Vec::with_capacity(side * side);
    let mut taps = Vec::with_capacity(side * side);
    for y in -r..=r {
        for x in -r..=r {
            let (xf, yf) = (x as f64, y as f64);
            let xr = xf * c + yf * s;
            let yr = -xf * s + yf * c;
            let e = (-(xr * xr + ASPECT * ASPECT * yr * yr) / (2.0 * sigma * sigma)).exp();
            let phase = 2.0 * PI * xr / lambda;
            env.push(e);
            taps.push(Complex::new(e * phase.cos(), e * phase.sin()));
        }
    }
    // remove the DC component in proportion to the envelope
    let env_sum: f64 = env.iter().sum();
    let dc: Complex<f64> = taps.iter().sum::<Complex<f64>>() / env_sum;
    for (t, e) in taps.iter_mut().zip(&env) {
        *t -= dc * *e;
    }
    let l1: f64 = taps.iter().map(|t| t.norm()).sum();
    for t in taps.iter_mut() {
        *t /= l1;
    }
    GaborKernel { radius, taps }
}

fn bank() -> &'static GaborBank {
    static BANK: OnceLock<GaborBank> = OnceLock::new();
    BANK.get_or_init(GaborBank::new)
}

/// Smallest n' ≥ n whose only prime factors are 2, 3 and 5.
fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

struct Fft2 {
    w: usize,
    h: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(w: usize, h: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            w,
            h,
            row_fwd: planner.plan_fft_forward(w),
            col_fwd: planner.plan_fft_forward(h),
            row_inv: planner.plan_fft_inverse(w),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    /// Row-major spatial input -> spectrum stored transposed (w rows of h).
    fn forward(&self, mut data: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        self.row_fwd.process(&mut data);
        let mut t = transpose(&data, self.w, self.h);
        self.col_fwd.process(&mut t);
        t
    }

    /// Inverse of `forward`, unnormalized.
    fn inverse(&self, mut spec: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        self.col_inv.process(&mut spec);
        let mut data = transpose(&spec, self.h, self.w);
        self.row_inv.process(&mut data);
        data
    }
}

fn transpose(data: &[Complex<f64>], w: usize, h: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

type SpectrumCache = Mutex<HashMap<(usize, usize), Arc<Vec<Vec<Complex<f64>>>>>>;

fn kernel_spectra(fft: &Fft2) -> Arc<Vec<Vec<Complex<f64>>>> {
    static CACHE: OnceLock<SpectrumCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (fft.w, fft.h);
    if let Some(hit) = cache.lock().expect("gabor cache poisoned").get(&key) {
        return Arc::clone(hit);
    }
    let spectra: Vec<Vec<Complex<f64>>> = bank()
        .kernels
        .iter()
        .map(|k| {
            // centre tap at the origin, negative offsets wrapped
            let mut buf = vec![Complex::new(0.0, 0.0); fft.w * fft.h];
            let r = k.radius as isize;
            let side = 2 * k.radius + 1;
            for ky in -r..=r {
                for kx in -r..=r {
                    let tap = k.taps[((ky + r) as usize) * side + (kx + r) as usize];
                    let px = kx.rem_euclid(fft.w as isize) as usize;
                    let py = ky.rem_euclid(fft.h as isize) as usize;
                    buf[py * fft.w + px] += tap;
                }
            }
            fft.forward(buf)
        })
        .collect();
    let spectra = Arc::new(spectra);
    let mut guard = cache.lock().expect("gabor cache poisoned");
    if guard.len() >= 16 {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&spectra));
    spectra
}

/// Per-pixel response magnitude of every bank channel (40 maps, row-major).
pub fn gabor_responses(img: &GrayImage) -> Vec<Vec<f64>> {
    let (w, h) = (img.width(), img.height());
    let pad = bank().max_radius();
    let fw = fast_len(w + 2 * pad);
    let fh = fast_len(h + 2 * pad);
    let fft = Fft2::new(fw, fh);

    let mut data = Vec::with_capacity(fw * fh);
    for y in 0..fh {
        for x in 0..fw {
            let v = img.get_clamped(x as isize - pad as isize, y as isize - pad as isize) / 100.0;
            data.push(Complex::new(v, 0.0));
        }
    }
    let image_spec = fft.forward(data);
    let norm = 1.0 / (fw * fh) as f64;

    kernel_spectra(&fft)
        .iter()
        .map(|kspec| {
            let prod: Vec<Complex<f64>> = image_spec.iter().zip(kspec).map(|(a, b)| a * b).collect();
            let resp = fft.inverse(prod);
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                let row = (y + pad) * fw + pad;
                out.extend(resp[row..row + w].iter().map(|c| c.norm() * norm));
            }
            out
        })
        .collect()
}

/// 40-d mean Gabor energy per superpixel.
pub fn gabor_feature(img: &GrayImage, sp: &SuperpixelMap) -> Result<Vec<Vec<f64>>> {
    check_fit(img, sp)?;
    let maps = gabor_responses(img);
    let per_channel: Vec<Vec<f64>> = maps.iter().map(|m| average_over(sp, m)).collect();
    Ok((0..sp.count())
        .map(|id| per_channel.iter().map(|c| c[id]).collect())
        .collect())
}
