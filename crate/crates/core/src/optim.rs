//! Small dense optimizers: Nelder-Mead simplex descent and
//! Levenberg-Marquardt least squares.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub xtol: f64,
    /// ...and the value spread is below this.
    pub ftol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            xtol: 1e-14,
            ftol: 1e-18,
        }
    }
}

/// Derivative-free simplex descent. Non-finite objective values count as
/// worse than any finite value.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    opts: NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    vals.push(eval(x0));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        vals.push(eval(&p));
        pts.push(p);
    }
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread_x = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread_f = vals[n] - vals[0];
        if spread_x <= opts.xtol && (spread_f <= opts.ftol || !spread_f.is_finite()) {
            break;
        }
        if spread_x <= opts.xtol * 1e-3 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let p: Vec<f64> = pts[0]
                .iter()
                .zip(&pts[i])
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            vals[i] = eval(&p);
            pts[i] = p;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Minimum {
        x: pts[best].clone(),
        value: vals[best],
        iterations,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LmOptions {
    pub max_iter: usize,
    pub gtol: f64,
    pub xtol: f64,
    /// Stop when the residual norm drops below this.
    pub rtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            gtol: 1e-18,
            xtol: 1e-16,
            rtol: 1e-15,
        }
    }
}

/// Levenberg-Marquardt on `min ½‖r(x)‖²`. `residuals` and `jacobian`
/// return `false` when `x` lies outside the domain; such steps are rejected.
/// The Jacobian is written row-major, `m` rows by `x.len()` columns. The
/// returned `value` is the residual norm `‖r‖`.
pub fn levenberg_marquardt(
    m: usize,
    x0: &[f64],
    mut residuals: impl FnMut(&[f64], &mut [f64]) -> bool,
    mut jacobian: impl FnMut(&[f64], &mut [f64]) -> bool,
    opts: LmOptions,
) -> Option<Minimum> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    if !residuals(&x, &mut r) {
        return None;
    }
    let mut cost = norm2(&r);
    let mut jac = vec![0.0; m * n];
    let mut a = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    let mut r_new = vec![0.0; m];
    let mut lambda = -1.0f64;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut need_jac = true;
    while iterations < opts.max_iter && cost.sqrt() > opts.rtol {
        iterations += 1;
        if need_jac {
            if !jacobian(&x, &mut jac) {
                break;
            }
            for i in 0..n {
                g[i] = (0..m).map(|k| jac[k * n + i] * r[k]).sum();
                for j in 0..n {
                    a[i * n + j] = (0..m).map(|k| jac[k * n + i] * jac[k * n + j]).sum();
                }
            }
            need_jac = false;
        }
        if g.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) <= opts.gtol {
            break;
        }
        if lambda < 0.0 {
            let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
            lambda = 1e-3 * max_diag.max(1e-300);
        }
        let mut sys = a.clone();
        for i in 0..n {
            sys[i * n + i] += lambda * (1.0 + a[i * n + i]);
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let Some(step) = solve_dense(&mut sys, rhs, n) else {
            lambda *= nu;
            nu *= 2.0;
            continue;
        };
        let step_norm = norm2(&step).sqrt();
        let x_norm = norm2(&x).sqrt();
        let x_new: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let ok = residuals(&x_new, &mut r_new);
        let new_cost = if ok { norm2(&r_new) } else { f64::INFINITY };
        if new_cost < cost {
            // gain ratio against the linear model
            let predicted: f64 = step
                .iter()
                .zip(&g)
                .zip(0..n)
                .map(|((s, gi), i)| s * (lambda * (1.0 + a[i * n + i]) * s - gi))
                .sum::<f64>();
            let rho = if predicted > 0.0 { (cost - new_cost) / predicted } else { 1.0 };
            x = x_new;
            core::mem::swap(&mut r, &mut r_new);
            cost = new_cost;
            lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
            need_jac = true;
            if step_norm <= opts.xtol * (x_norm + opts.xtol) {
                break;
            }
        } else {
            lambda *= nu;
            nu *= 2.0;
            if step_norm <= opts.xtol * (x_norm + opts.xtol) || lambda > 1e300 {
                break;
            }
        }
    }
    Some(Minimum {
        x,
        value: cost.sqrt(),
        iterations,
    })
}

/// Central-difference Jacobian of `residuals` at `x`.
pub fn finite_difference_jacobian(
    m: usize,
    x: &[f64],
    h: f64,
    residuals: &mut impl FnMut(&[f64], &mut [f64]) -> bool,
    jac: &mut [f64],
) -> bool {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    for i in 0..n {
        let hi = h * x[i].abs().max(1.0);
        xp[i] = x[i] + hi;
        let okp = residuals(&xp, &mut rp);
        xp[i] = x[i] - hi;
        let okm = residuals(&xp, &mut rm);
        xp[i] = x[i];
        if !(okp && okm) {
            return false;
        }
        for k in 0..m {
            jac[k * n + i] = (rp[k] - rm[k]) / (2.0 * hi);
        }
    }
    true
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Gaussian elimination with partial pivoting on a row-major `n x n`
/// system. Returns `None` for a (numerically) singular matrix.
pub fn solve_dense(a: &mut [f64], mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let s: f64 = (col + 1..n).map(|k| a[col * n + k] * b[k]).sum();
        b[col] = (b[col] - s) / a[col * n + col];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}
