//! Small dense Levenberg–Marquardt with a central-difference Jacobian.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmParams {
    pub max_iter: usize,
    /// Stop when an accepted step changes the cost by less than this fraction.
    pub rel_tolerance: f64,
    /// Finite-difference step.
    pub step: f64,
    pub initial_lambda: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            rel_tolerance: 1e-8,
            step: 1e-4,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport<const N: usize> {
    pub x: [f64; N],
    /// Sum of squared residuals at `x`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Minimize `|f(x)|²` from `x0`.
pub fn minimize<const N: usize, F>(f: F, x0: [f64; N], params: &LmParams) -> LmReport<N>
where
    F: Fn(&[f64; N]) -> Vec<f64>,
{
    let mut x = x0;
    let mut r = f(&x);
    let mut c = cost(&r);
    let mut lambda = params.initial_lambda;
    let mut iterations = 0;
    let mut converged = false;

    if !c.is_finite() {
        return LmReport {
            x,
            cost: c,
            iterations,
            converged,
        };
    }

    'outer: while iterations < params.max_iter {
        iterations += 1;
        // Jacobian columns by central differences
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(N);
        for k in 0..N {
            let mut xp = x;
            let mut xm = x;
            xp[k] += params.step;
            xm[k] -= params.step;
            let (rp, rm) = (f(&xp), f(&xm));
            jac.push(rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * params.step)).collect());
        }
        let mut jtj = [[0.0; N]; N];
        let mut jtr = [0.0; N];
        for i in 0..N {
            jtr[i] = jac[i].iter().zip(&r).map(|(j, v)| j * v).sum();
            for k in i..N {
                let v: f64 = jac[i].iter().zip(&jac[k]).map(|(a, b)| a * b).sum();
                jtj[i][k] = v;
                jtj[k][i] = v;
            }
        }
        if jtr.iter().all(|g| g.abs() < 1e-300) {
            converged = true;
            break;
        }

        // raise damping until a step lowers the cost
        loop {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            let step = solve_dense(a, jtr.map(|g| -g));
            if let Some(delta) = step {
                let mut xn = x;
                for i in 0..N {
                    xn[i] += delta[i];
                }
                let rn = f(&xn);
                let cn = cost(&rn);
                if cn.is_finite() && cn < c {
                    let rel = (c - cn) / c.max(f64::MIN_POSITIVE);
                    x = xn;
                    r = rn;
                    c = cn;
                    lambda = (lambda / 10.0).max(1e-12);
                    if rel < params.rel_tolerance {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // no descent direction left at this resolution
                converged = true;
                break 'outer;
            }
        }
    }

    LmReport {
        x,
        cost: c,
        iterations,
        converged,
    }
}
