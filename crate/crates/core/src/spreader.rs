//! Optimization-based chroma propagation from sparse seeds.
//!
//! Every free pixel should match the affinity-weighted mean of its
//! 8-neighbourhood, `C(i) = Σ_j w_ij C(j)`, where
//! `w_ij ∝ exp(-(l_j - l_i)² / 2σ_i²)` and σ_i² is the luminance variance of
//! the neighbourhood including i. Seed pixels are held fixed. With
//! `A = (I - W)` restricted to free rows and columns, the objective
//! `|A x + A_s s|²` is minimized by the solution of the square system
//! `A x = -A_s s`, found with Gauss–Seidel preconditioned BiCGSTAB. CG on the
//! normal equations is kept as a fallback for breakdowns.

use crate::error::{Error, Result};
use crate::imagecore::{GrayImage, LabImage};
use crate::matching::ChromaSeeds;

pub const SIGMA2_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadParams {
    /// Relative residual |b - Ax| / |b| at which the solver stops.
    pub tolerance: f64,
    /// Iteration cap as a multiple of the number of free pixels.
    pub max_iter_factor: usize,
}

impl Default for SpreadParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iter_factor: 10,
        }
    }
}

// neighbour slots in ascending pixel-index order
const STENCIL: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Row-stochastic 8-neighbour affinities. Slot `k` of pixel `i` holds the
/// weight of neighbour `STENCIL[k]`; slots outside the image hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborWeights {
    pub width: usize,
    pub height: usize,
    pub stencil: Vec<[f64; 8]>,
}

impl NeighborWeights {
    fn offsets(&self) -> [isize; 8] {
        let w = self.width as isize;
        STENCIL.map(|(dx, dy)| dy * w + dx)
    }

    /// In-image neighbours of pixel `i` with their weights, ascending by index.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (w, h) = (self.width as isize, self.height as isize);
        let (x, y) = ((i % self.width) as isize, (i / self.width) as isize);
        STENCIL.iter().zip(self.stencil[i]).filter_map(move |(&(dx, dy), wt)| {
            let (nx, ny) = (x + dx, y + dy);
            (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| ((ny * w + nx) as usize, wt))
        })
    }

    pub fn len(&self) -> usize {
        self.stencil.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencil.is_empty()
    }
}

pub fn build_weights(gray: &GrayImage) -> NeighborWeights {
    let (w, h) = (gray.width(), gray.height());
    let l = gray.unit_l();
    let mut stencil = vec![[0.0; 8]; w * h];
    let mut nbrs: Vec<(usize, usize)> = Vec::with_capacity(8);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            nbrs.clear();
            for (k, &(dx, dy)) in STENCIL.iter().enumerate() {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    nbrs.push((k, ny as usize * w + nx as usize));
                }
            }
            let count = (nbrs.len() + 1) as f64;
            let mean = (l[i] + nbrs.iter().map(|&(_, j)| l[j]).sum::<f64>()) / count;
            let var = ((l[i] - mean).powi(2) + nbrs.iter().map(|&(_, j)| (l[j] - mean).powi(2)).sum::<f64>()) / count;
            let sigma2 = var.max(SIGMA2_MIN);
            let slots = &mut stencil[i];
            for &(k, j) in &nbrs {
                slots[k] = (-(l[j] - l[i]).powi(2) / (2.0 * sigma2)).exp();
            }
            let total: f64 = slots.iter().sum();
            if total > 0.0 {
                slots.iter_mut().for_each(|v| *v /= total);
            } else if !nbrs.is_empty() {
                let u = 1.0 / nbrs.len() as f64;
                for &(k, _) in &nbrs {
                    slots[k] = u;
                }
            }
        }
    }
    NeighborWeights { width: w, height: h, stencil }
}

/// Both chroma channels of a seeded image over one affinity matrix.
pub struct SpreadProblem<'a> {
    pub weights: &'a NeighborWeights,
    /// Per pixel: `Some(chroma)` when fixed.
    pub fixed: Vec<Option<[f64; 2]>>,
}

type Dual = Vec<[f64; 2]>;

fn dot2(a: &[[f64; 2]], b: &[[f64; 2]]) -> [f64; 2] {
    let mut s = [0.0; 2];
    for (x, y) in a.iter().zip(b) {
        s[0] += x[0] * y[0];
        s[1] += x[1] * y[1];
    }
    s
}

impl SpreadProblem<'_> {
    fn is_free(&self, i: usize) -> bool {
        self.fixed[i].is_none()
    }

    #[inline]
    fn neighbor(i: usize, off: isize, n: usize) -> usize {
        // out-of-image slots carry zero weight, so any valid index will do
        (i as isize + off).clamp(0, n as isize - 1) as usize
    }

    /// y = (I - W) u over free rows; seed rows are zero.
    fn apply_a(&self, u: &[[f64; 2]], y: &mut [[f64; 2]]) {
        let off = self.weights.offsets();
        let n = u.len();
        for (i, yi) in y.iter_mut().enumerate() {
            if self.fixed[i].is_some() {
                *yi = [0.0; 2];
                continue;
            }
            let st = &self.weights.stencil[i];
            let mut acc = u[i];
            for k in 0..8 {
                let j = Self::neighbor(i, off[k], n);
                acc[0] -= st[k] * u[j][0];
                acc[1] -= st[k] * u[j][1];
            }
            *yi = acc;
        }
    }

    /// z = M⁻¹ r for the symmetric Gauss–Seidel splitting M = (I + L)(I + U)
    /// of the free block; seed entries stay zero.
    fn precondition(&self, r: &[[f64; 2]], z: &mut [[f64; 2]]) {
        let off = self.weights.offsets();
        let n = r.len();
        for i in 0..n {
            if self.fixed[i].is_some() {
                z[i] = [0.0; 2];
                continue;
            }
            let st = &self.weights.stencil[i];
            let mut acc = r[i];
            for k in 0..4 {
                let j = Self::neighbor(i, off[k], n);
                acc[0] += st[k] * z[j][0];
                acc[1] += st[k] * z[j][1];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            if self.fixed[i].is_some() {
                continue;
            }
            let st = &self.weights.stencil[i];
            let mut acc = z[i];
            for k in 4..8 {
                let j = Self::neighbor(i, off[k], n);
                acc[0] += st[k] * z[j][0];
                acc[1] += st[k] * z[j][1];
            }
            z[i] = acc;
        }
    }

    /// Objective over free rows, summed over both channels.
    pub fn objective(&self, c: &[[f64; 2]]) -> f64 {
        let mut y = vec![[0.0; 2]; c.len()];
        self.apply_a(c, &mut y);
        y.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum()
    }

    /// Solve for the free pixels; returns the full two-channel field.
    pub fn solve(&self, params: &SpreadParams) -> Result<Dual> {
        self.solve_counted(params).map(|(x, _)| x)
    }

    /// As `solve`, also returning the number of Krylov iterations.
    pub fn solve_counted(&self, params: &SpreadParams) -> Result<(Dual, usize)> {
        let n = self.fixed.len();
        let free_count = self.fixed.iter().filter(|v| v.is_none()).count();
        let seeds: Vec<[f64; 2]> = self.fixed.iter().flatten().copied().collect();
        if free_count == 0 || seeds.is_empty() {
            return Ok((self.fixed.iter().map(|v| v.unwrap_or([0.0; 2])).collect(), 0));
        }
        // constants are in the null space of (I - W), so solve around the seed mean
        let shift = [0, 1].map(|c| seeds.iter().map(|s| s[c]).sum::<f64>() / seeds.len() as f64);
        let seeded: Dual = self.fixed.iter().map(|v| v.map_or([0.0; 2], |s| [s[0] - shift[0], s[1] - shift[1]])).collect();
        let finish = |x: &[[f64; 2]]| -> Dual {
            x.iter()
                .zip(&self.fixed)
                .map(|(&v, f)| f.unwrap_or([v[0] + shift[0], v[1] + shift[1]]))
                .collect()
        };

        // right-hand side of the square free-row system A_FF x = -A_FS s
        let mut rhs = vec![[0.0; 2]; n];
        self.apply_a(&seeded, &mut rhs);
        rhs.iter_mut().for_each(|v| *v = [-v[0], -v[1]]);

        let max_iter = params.max_iter_factor * free_count;
        let (mut x, outcome) = self.bicgstab(&rhs, params.tolerance, max_iter);
        let mut iterations = 0;
        for c in 0..2 {
            match outcome[c] {
                Some(it) => iterations = iterations.max(it),
                None => {
                    log::debug!("BiCGSTAB broke down on channel {c}; falling back to CG on the normal equations");
                    let rc: Vec<f64> = rhs.iter().map(|v| v[c]).collect();
                    let (xc, it) = self.cg_normal(&rc, params.tolerance, max_iter)?;
                    for (xi, v) in x.iter_mut().zip(xc) {
                        xi[c] = v;
                    }
                    iterations = iterations.max(it);
                }
            }
        }
        Ok((finish(&x), iterations))
    }

    /// Right-preconditioned BiCGSTAB on both channels in lockstep. Per
    /// channel: `Some(iterations)` when converged (confirmed on the true
    /// residual), `None` on breakdown or when the cap is hit.
    fn bicgstab(&self, rhs: &[[f64; 2]], tol: f64, max_iter: usize) -> (Dual, [Option<usize>; 2]) {
        let n = rhs.len();
        let nb = dot2(rhs, rhs);
        let bound = nb.map(|v| tol * v.sqrt());
        let mut x = vec![[0.0; 2]; n];
        let mut r = rhs.to_vec();
        let r_hat = r.clone();
        let mut rho = [1.0; 2];
        let mut alpha = [1.0; 2];
        let mut omega = [1.0; 2];
        let mut v = vec![[0.0; 2]; n];
        let mut p = vec![[0.0; 2]; n];
        let mut y = vec![[0.0; 2]; n];
        let mut s = vec![[0.0; 2]; n];
        let mut z = vec![[0.0; 2]; n];
        let mut t = vec![[0.0; 2]; n];
        // None = running, Some(Some(it)) = converged, Some(None) = failed
        let mut state: [Option<Option<usize>>; 2] = [0, 1].map(|c| (nb[c] == 0.0).then_some(Some(0)));
        let running = |st: &[Option<Option<usize>>; 2], c: usize| st[c].is_none();

        for it in 1..=max_iter {
            if !running(&state, 0) && !running(&state, 1) {
                break;
            }
            let rho_new = dot2(&r_hat, &r);
            let mut beta = [0.0; 2];
            for c in 0..2 {
                if running(&state, c) {
                    if rho_new[c] == 0.0 || !rho_new[c].is_finite() {
                        state[c] = Some(None);
                        continue;
                    }
                    beta[c] = (rho_new[c] / rho[c]) * (alpha[c] / omega[c]);
                    rho[c] = rho_new[c];
                }
            }
            for k in 0..n {
                for c in 0..2 {
                    p[k][c] = r[k][c] + beta[c] * (p[k][c] - omega[c] * v[k][c]);
                }
            }
            self.precondition(&p, &mut y);
            self.apply_a(&y, &mut v);
            let rv = dot2(&r_hat, &v);
            for c in 0..2 {
                if running(&state, c) {
                    if rv[c] == 0.0 {
                        state[c] = Some(None);
                        continue;
                    }
                    alpha[c] = rho[c] / rv[c];
                }
            }
            for k in 0..n {
                for c in 0..2 {
                    s[k][c] = r[k][c] - alpha[c] * v[k][c];
                }
            }
            let ss = dot2(&s, &s);
            for c in 0..2 {
                if running(&state, c) && ss[c].sqrt() <= bound[c] {
                    for k in 0..n {
                        x[k][c] += alpha[c] * y[k][c];
                    }
                    state[c] = Some(Some(it));
                }
            }
            if !running(&state, 0) && !running(&state, 1) {
                break;
            }
            self.precondition(&s, &mut z);
            self.apply_a(&z, &mut t);
            let ts = dot2(&t, &s);
            let tt = dot2(&t, &t);
            for c in 0..2 {
                if !running(&state, c) {
                    continue;
                }
                if tt[c] == 0.0 {
                    state[c] = Some(None);
                    continue;
                }
                omega[c] = ts[c] / tt[c];
                for k in 0..n {
                    x[k][c] += alpha[c] * y[k][c] + omega[c] * z[k][c];
                    r[k][c] = s[k][c] - omega[c] * t[k][c];
                }
            }
            let rr = dot2(&r, &r);
            for c in 0..2 {
                if running(&state, c) {
                    if rr[c].sqrt() <= bound[c] {
                        state[c] = Some(Some(it));
                    } else if omega[c] == 0.0 {
                        state[c] = Some(None);
                    }
                }
            }
        }

        // the recursive residual can drift; accept only if the true one agrees
        let mut ax = vec![[0.0; 2]; n];
        self.apply_a(&x, &mut ax);
        let mut true_res = [0.0; 2];
        for (a, b) in ax.iter().zip(rhs) {
            for c in 0..2 {
                true_res[c] += (b[c] - a[c]).powi(2);
            }
        }
        let outcome = [0, 1].map(|c| match state[c] {
            Some(Some(it)) if true_res[c].sqrt() <= 10.0 * bound[c] => Some(it),
            _ => None,
        });
        (x, outcome)
    }

    fn apply_a1(&self, u: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            if !self.is_free(i) {
                *yi = 0.0;
                continue;
            }
            *yi = u[i] - self.weights.row(i).map(|(j, w)| w * u[j]).sum::<f64>();
        }
    }

    fn apply_at1(&self, z: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..z.len() {
            if !self.is_free(i) {
                continue;
            }
            y[i] += z[i];
            for (j, wij) in self.weights.row(i) {
                y[j] -= wij * z[i];
            }
        }
        for (i, yi) in y.iter_mut().enumerate() {
            if !self.is_free(i) {
                *yi = 0.0;
            }
        }
    }

    /// Jacobi-preconditioned CG on `A_FFᵀ A_FF x = A_FFᵀ rhs` for one channel.
    fn cg_normal(&self, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
        let n = rhs.len();
        let mut tmp = vec![0.0; n];
        let mut b = vec![0.0; n];
        self.apply_at1(rhs, &mut b);

        // diag(AᵀA) over free columns
        let mut diag = vec![0.0; n];
        for i in 0..n {
            if !self.is_free(i) {
                continue;
            }
            diag[i] += 1.0;
            for (j, wij) in self.weights.row(i) {
                diag[j] += wij * wij;
            }
        }
        let inv_diag: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();

        let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        if norm_b == 0.0 {
            return Ok((x, 0));
        }
        let mut r = b;
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let mut rel = 1.0;
        for it in 1..=max_iter {
            self.apply_a1(&p, &mut tmp);
            self.apply_at1(&tmp, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_b;
            if rel <= tol {
                return Ok((x, it));
            }
            for k in 0..n {
                z[k] = r[k] * inv_diag[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(Error::SolverDiverged {
            iterations: max_iter,
            residual: rel,
        })
    }
}

/// Per-pixel fixed chroma from the seeds; later seeds win on shared pixels.
pub fn seed_mask(width: usize, height: usize, seeds: &ChromaSeeds) -> Result<Vec<Option<[f64; 2]>>> {
    let mut mask = vec![None; width * height];
    for s in &seeds.seeds {
        let (x, y) = s.position;
        if x >= width || y >= height {
            return Err(Error::InvalidInput(format!("seed at ({x}, {y}) outside {width}x{height}")));
        }
        mask[y * width + x] = Some(s.chroma);
    }
    Ok(mask)
}

/// Colorize `gray` from `seeds`.
pub fn spread(gray: &GrayImage, seeds: &ChromaSeeds, params: &SpreadParams) -> Result<LabImage> {
    let weights = build_weights(gray);
    spread_with_weights(gray, &weights, seeds, params)
}

pub fn spread_with_weights(gray: &GrayImage, weights: &NeighborWeights, seeds: &ChromaSeeds, params: &SpreadParams) -> Result<LabImage> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("color spreading needs at least one seed".into()));
    }
    if weights.width != gray.width() || weights.height != gray.height() {
        return Err(Error::DimensionMismatch {
            left_w: weights.width,
            left_h: weights.height,
            right_w: gray.width(),
            right_h: gray.height(),
        });
    }
    let problem = SpreadProblem {
        weights,
        fixed: seed_mask(gray.width(), gray.height(), seeds)?,
    };
    let ab = problem.solve(params)?;
    let (a, b) = ab.into_iter().map(|v| (v[0], v[1])).unzip();
    LabImage::from_gray(gray, a, b)
}

/// Every pixel takes the chroma of its nearest seed (Euclidean; ties to the
/// lower seed index). Baseline for comparison against `spread`.
pub fn splat_nearest(gray: &GrayImage, seeds: &ChromaSeeds) -> Result<LabImage> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("splatting needs at least one seed".into()));
    }
    let (w, h) = (gray.width(), gray.height());
    let mut a = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut best = 0;
            let mut best_d = usize::MAX;
            for (k, s) in seeds.seeds.iter().enumerate() {
                let dx = x.abs_diff(s.position.0);
                let dy = y.abs_diff(s.position.1);
                let d = dx * dx + dy * dy;
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            a.push(seeds.seeds[best].chroma[0]);
            b.push(seeds.seeds[best].chroma[1]);
        }
    }
    LabImage::from_gray(gray, a, b)
}
