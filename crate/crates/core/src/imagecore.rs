//! Image carriers, PNG/JPEG I/O and sRGB <-> CIE L*a*b* (D65, 2° observer).
//!
//! Everything downstream works on [`LabImage`] / [`GrayImage`]; the 8-bit
//! [`RgbImage`] only exists at the I/O boundary.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

// sRGB primaries -> XYZ, D65. Row sums equal the white point below.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];
const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];
const WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

/// 8-bit sRGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// Per-pixel L* in [0, 100] plus the two chrominance channels a*, b*.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    l: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, l: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_dims(width, height, l.len())?;
        if a.len() != l.len() || b.len() != l.len() {
            return Err(Error::InvalidInput(format!(
                "channel lengths differ: L={} a={} b={}",
                l.len(),
                a.len(),
                b.len()
            )));
        }
        if let Some(bad) = l.iter().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("luminance {bad} outside [0, 100]")));
        }
        Ok(Self {
            width,
            height,
            l,
            a,
            b,
        })
    }

    /// Combine a luminance image with chrominance planes.
    pub fn from_gray(gray: &GrayImage, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(gray.width, gray.height, gray.l.clone(), a, b)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn lab_at(&self, idx: usize) -> [f64; 3] {
        [self.l[idx], self.a[idx], self.b[idx]]
    }

    pub fn chroma_at(&self, x: usize, y: usize) -> [f64; 2] {
        let idx = y * self.width + x;
        [self.a[idx], self.b[idx]]
    }

    pub fn luminance(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            l: self.l.clone(),
        }
    }
}

/// Luminance-only image; L in [0, 100].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    l: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, l: Vec<f64>) -> Result<Self> {
        check_dims(width, height, l.len())?;
        if let Some(bad) = l.iter().find(|v| !(0.0..=100.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("luminance {bad} outside [0, 100]")));
        }
        Ok(Self { width, height, l })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut l = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                l.push(f(x, y));
            }
        }
        Self::new(width, height, l)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    pub fn l(&self) -> &[f64] {
        &self.l
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.l[y * self.width + x]
    }

    /// Value at (x, y) with coordinates clamped to the image.
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.l[cy * self.width + cx]
    }

    /// Luminance rescaled to [0, 1].
    pub fn unit_l(&self) -> Vec<f64> {
        self.l.iter().map(|v| v / 100.0).collect()
    }

    /// Gray rendering as sRGB (zero chroma).
    pub fn to_rgb(&self) -> RgbImage {
        let pixels = self.l.iter().map(|&l| lab_to_srgb([l, 0.0, 0.0])).collect();
        RgbImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// A copy rotated by 90° clockwise.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let mut l = vec![0.0; w * h];
        // new image is h wide, w tall; new(x', y') = old(y', h - 1 - x')
        for ny in 0..w {
            for nx in 0..h {
                l[ny * h + nx] = self.l[(h - 1 - nx) * w + ny];
            }
        }
        GrayImage { width: h, height: w, l }
    }

    /// A copy rotated by 180°.
    pub fn rotate180(&self) -> GrayImage {
        let mut l = self.l.clone();
        l.reverse();
        GrayImage {
            width: self.width,
            height: self.height,
            l,
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!("degenerate image size {width}x{height}")));
    }
    if width * height != len {
        return Err(Error::InvalidInput(format!(
            "{width}x{height} image needs {} pixels, got {len}",
            width * height
        )));
    }
    Ok(())
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > LAB_EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

/// One 8-bit sRGB triple to (L*, a*, b*).
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| srgb_to_linear(c as f64 / 255.0));
    let mut xyz = [0.0; 3];
    for (row, out) in RGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    [l, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// (L*, a*, b*) to 8-bit sRGB; out-of-gamut colors are clamped per component.
pub fn lab_to_srgb(lab: [f64; 3]) -> [u8; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    let mut out = [0u8; 3];
    for (row, o) in XYZ_TO_RGB.iter().zip(out.iter_mut()) {
        let lin = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
        let c = linear_to_srgb(lin.max(0.0));
        *o = (c * 255.0).round().clamp(0.0, 255.0) as u8;
    }
    out
}

pub fn rgb_to_lab(img: &RgbImage) -> LabImage {
    let n = img.pixels.len();
    let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &p in &img.pixels {
        let lab = srgb_to_lab(p);
        l.push(lab[0]);
        a.push(lab[1]);
        b.push(lab[2]);
    }
    LabImage {
        width: img.width,
        height: img.height,
        l,
        a,
        b,
    }
}

pub fn lab_to_rgb(img: &LabImage) -> RgbImage {
    let pixels = (0..img.l.len()).map(|i| lab_to_srgb(img.lab_at(i))).collect();
    RgbImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

pub fn to_gray(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        l: img.pixels.iter().map(|&p| srgb_to_lab(p)[0]).collect(),
    }
}

/// Decode a PNG or JPEG stream. Deeper bit depths are rescaled to 8 bits.
pub fn decode(bytes: &[u8]) -> Result<RgbImage> {
    let format = image::guess_format(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Jpeg) {
        return Err(Error::Decode(format!("unsupported format {format:?}")));
    }
    let dynamic = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode(e.to_string()))?;
    let rgb = dynamic.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, pixels).map_err(|e| Error::Decode(e.to_string()))
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img.pixels.iter().flat_map(|p| p.iter().copied()).collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, raw)
        .ok_or_else(|| Error::Encode("buffer size mismatch".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Decode(msg) => Error::Decode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
