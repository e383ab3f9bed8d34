//! Dense phase-one simplex deciding `A x = b, x ≥ 0`.
//!
//! Rows are sign-flipped so that `b ≥ 0`, an artificial variable is added per
//! row and their sum is minimized. A zero optimum gives a feasible point; a
//! positive one gives the Farkas vector `y` with `yᵀA ≤ 0 < yᵀb`, read off
//! the reduced costs of the artificial columns.

use alloc::vec;
use alloc::vec::Vec;

use super::certificate::{verify_certificate, Certificate};
use super::lp::InflationLP;
use crate::error::{Error, Result};
use num_traits::Zero;

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Smallest admissible pivot element.
    pub pivot_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub opt_tol: f64,
    /// Phase-one optimum below this counts as feasible.
    pub feas_tol: f64,
    /// Degenerate pivots tolerated under Dantzig's rule before switching to
    /// Bland's rule.
    pub stall_limit: usize,
    /// Tableau size limit (entries).
    pub max_entries: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: 200_000,
            pivot_tol: 1e-10,
            opt_tol: 1e-11,
            feas_tol: 1e-9,
            stall_limit: 50,
            max_entries: 60_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Feasible { x: Vec<f64>, residual: f64 },
    Infeasible(Certificate),
}

struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    t: Vec<f64>,
    /// Phase-one reduced costs, one per column (structural then artificial).
    d: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn objective(&self) -> f64 {
        (0..self.m).filter(|&i| self.basis[i] >= self.n).map(|i| self.rhs(i)).sum()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.t[row * w + col];
        let (before, rest) = self.t.split_at_mut(row * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[col] = 1.0;
        let eliminate = |r: &mut [f64]| {
            let f = r[col];
            if f != 0.0 {
                for (x, &y) in r.iter_mut().zip(prow.iter()) {
                    if y != 0.0 {
                        *x -= f * y;
                    }
                }
                r[col] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        let f = self.d[col];
        if f != 0.0 {
            for (x, &y) in self.d.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            self.d[col] = 0.0;
        }
        self.basis[row] = col;
    }
}

// Smallest ratio, ties to the lowest basic index: Bland's rule.
fn ratio_test_bland(tab: &Tableau, col: usize, tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..tab.m {
        let a = tab.t[i * tab.width + col];
        if a <= tol {
            continue;
        }
        let r = tab.rhs(i).max(0.0) / a;
        best = match best {
            Some((k, b)) if r > b + 1e-12 * b.max(1e-300) || (r >= b - 1e-12 * b && tab.basis[k] < tab.basis[i]) => {
                Some((k, b))
            }
            _ => Some((i, r)),
        };
    }
    best.map(|(i, _)| i)
}

// Harris two-pass test: bound the step with slightly relaxed ratios, then
// take the largest pivot among rows within that bound.
fn ratio_test_harris(tab: &Tableau, col: usize, tol: f64) -> Option<usize> {
    const RELAX: f64 = 1e-9;
    let mut bound = f64::INFINITY;
    for i in 0..tab.m {
        let a = tab.t[i * tab.width + col];
        if a > tol {
            bound = bound.min((tab.rhs(i).max(0.0) + RELAX) / a);
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..tab.m {
        let a = tab.t[i * tab.width + col];
        if a > tol && tab.rhs(i).max(0.0) / a <= bound && best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

enum PhaseOne {
    Feasible(Vec<f64>),
    /// Farkas vector and the positive phase-one optimum.
    Infeasible(Vec<f64>, f64),
}

fn phase_one(rows: &[Vec<(usize, f64)>], b: &[f64], n: usize, opts: &SimplexOptions) -> Result<PhaseOne> {
    let m = rows.len();
    let width = n + m + 1;
    if m.saturating_mul(width) > opts.max_entries {
        return Err(Error::ScaleGuard(alloc::format!(
            "dense tableau {m}x{width} exceeds {} entries",
            opts.max_entries
        )));
    }
    let mut sign = vec![1.0; m];
    let mut t = vec![0.0; m * width];
    for (i, row) in rows.iter().enumerate() {
        if b[i] < 0.0 {
            sign[i] = -1.0;
        }
        let r = &mut t[i * width..(i + 1) * width];
        for &(j, a) in row {
            r[j] += sign[i] * a;
        }
        r[n + i] = 1.0;
        r[width - 1] = sign[i] * b[i];
    }
    let mut d = vec![0.0; width];
    for i in 0..m {
        let r = &t[i * width..(i + 1) * width];
        for j in 0..n {
            d[j] -= r[j];
        }
        d[width - 1] -= r[width - 1];
    }
    let mut tab = Tableau {
        m,
        n,
        width,
        t,
        d,
        basis: (n..n + m).collect(),
    };

    let mut bland = false;
    let mut stall = 0;
    let mut last = tab.objective();
    let mut pivots = 0;
    loop {
        if last <= opts.feas_tol * 1e-3 {
            break;
        }
        let entering = if bland {
            (0..n).find(|&j| tab.d[j] < -opts.opt_tol)
        } else {
            (0..n)
                .filter(|&j| tab.d[j] < -opts.opt_tol)
                .min_by(|&a, &b| tab.d[a].total_cmp(&tab.d[b]))
        };
        let Some(col) = entering else { break };
        let leave = if bland {
            ratio_test_bland(&tab, col, opts.pivot_tol)
        } else {
            ratio_test_harris(&tab, col, opts.pivot_tol)
        };
        let Some(row) = leave else {
            return Err(Error::Numerical("phase-one objective unbounded".into()));
        };
        tab.pivot(row, col);
        pivots += 1;
        if pivots > opts.max_pivots {
            return Err(Error::NoConvergence(alloc::format!("simplex exceeded {} pivots", opts.max_pivots)));
        }
        let obj = tab.objective();
        if obj < last - 1e-12 * last.max(1.0) {
            stall = 0;
            bland = false;
        } else {
            stall += 1;
            if stall >= opts.stall_limit {
                bland = true;
            }
        }
        last = obj;
    }

    let obj = tab.objective();
    if obj <= opts.feas_tol {
        let mut x = vec![0.0; n];
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.rhs(i).max(0.0);
            }
        }
        return Ok(PhaseOne::Feasible(x));
    }
    // reduced cost of artificial i is 1 − π_i
    let y = (0..m).map(|i| sign[i] * (1.0 - tab.d[n + i])).collect();
    Ok(PhaseOne::Infeasible(y, obj))
}

/// Rows with zero right-hand side whose coefficients share one sign; they
/// force every variable they touch to zero. Returns the rows and that sign.
pub(crate) fn forcing_rows(lp: &InflationLP) -> Vec<(usize, i64)> {
    lp.rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rhs.is_zero() && !r.coeffs.is_empty())
        .filter_map(|(i, r)| {
            let s = r.coeffs[0].1.signum();
            (s != 0 && r.coeffs.iter().all(|&(_, a)| a.signum() == s)).then_some((i, s))
        })
        .collect()
}

/// Decide feasibility of `lp`. Infeasibility is only reported with a
/// certificate that passes the floating-point check; anything else is a
/// numerical failure.
pub fn solve(lp: &InflationLP, opts: &SimplexOptions) -> Result<Verdict> {
    // presolve: drop forcing rows and the variables they pin to zero
    let forcing = forcing_rows(lp);
    let mut dropped_row = vec![false; lp.rows.len()];
    let mut fixed = vec![false; lp.n_vars];
    for &(i, _) in &forcing {
        dropped_row[i] = true;
        for &(j, _) in &lp.rows[i].coeffs {
            fixed[j] = true;
        }
    }
    let mut new_col = vec![usize::MAX; lp.n_vars];
    let mut kept_cols = Vec::new();
    for j in 0..lp.n_vars {
        if !fixed[j] {
            new_col[j] = kept_cols.len();
            kept_cols.push(j);
        }
    }
    let kept_rows: Vec<usize> = (0..lp.rows.len()).filter(|&i| !dropped_row[i]).collect();
    let b_all = lp.rhs_f64();
    let rows: Vec<Vec<(usize, f64)>> = kept_rows
        .iter()
        .map(|&i| {
            lp.rows[i]
                .coeffs
                .iter()
                .filter(|&&(j, _)| !fixed[j])
                .map(|&(j, a)| (new_col[j], a as f64))
                .collect()
        })
        .collect();
    let b: Vec<f64> = kept_rows.iter().map(|&i| b_all[i]).collect();

    match phase_one(&rows, &b, kept_cols.len(), opts)? {
        PhaseOne::Feasible(xs) => {
            let mut x = vec![0.0; lp.n_vars];
            for (k, &j) in kept_cols.iter().enumerate() {
                x[j] = xs[k];
            }
            let residual = lp.residual(&x);
            if residual <= 1e-8 {
                Ok(Verdict::Feasible { x, residual })
            } else {
                Err(Error::Numerical(alloc::format!("feasible basis with residual {residual:.3e}")))
            }
        }
        PhaseOne::Infeasible(ys, obj) => {
            let mut y = vec![0.0; lp.rows.len()];
            for (k, &i) in kept_rows.iter().enumerate() {
                y[i] = ys[k];
            }
            lower_with_forcing_rows(lp, &forcing, &mut y);
            let mut cert = Certificate::new(y);
            cert.verified = verify_certificate(lp, &cert, false);
            if cert.verified {
                Ok(Verdict::Infeasible(cert))
            } else {
                Err(Error::Numerical(alloc::format!(
                    "phase-one optimum {obj:.3e} without a valid certificate"
                )))
            }
        }
    }
}

// Give each forcing row the multiplier that makes every column it touches
// nonpositive in yᵀA. Those rows have b = 0, so yᵀb is unchanged.
fn lower_with_forcing_rows(lp: &InflationLP, forcing: &[(usize, i64)], y: &mut [f64]) {
    let mut col = vec![0.0; lp.n_vars];
    for (row, &yi) in lp.rows.iter().zip(y.iter()) {
        for &(j, a) in &row.coeffs {
            col[j] += yi * a as f64;
        }
    }
    for &(i, s) in forcing {
        let need = lp.rows[i]
            .coeffs
            .iter()
            .map(|&(j, a)| col[j].max(0.0) / a.abs() as f64)
            .fold(0.0, f64::max);
        if need > 0.0 {
            let delta = -(s as f64) * need * (1.0 + 1e-9);
            y[i] += delta;
            for &(j, a) in &lp.rows[i].coeffs {
                col[j] += delta * a as f64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inflation::certificate::verify_exact;
    use crate::inflation::lp::{Row, RowKind};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn lp(n_vars: usize, rows: &[(&[(usize, i64)], i64)]) -> InflationLP {
        let mut all = vec![Row {
            coeffs: (0..n_vars).map(|j| (j, 1)).collect(),
            rhs: BigRational::from_integer(1.into()),
            kind: RowKind::Normalization,
        }];
        for (k, (c, b)) in rows.iter().enumerate() {
            all.push(Row {
                coeffs: c.to_vec(),
                rhs: BigRational::from_integer((*b).into()),
                kind: RowKind::Marginal { set: 0, outcome: k },
            });
        }
        InflationLP {
            level: 1,
            n_vars,
            rows: all,
            sets: Vec::new(),
            orbits: None,
        }
    }

    #[test]
    fn small_feasible_system() {
        let p = lp(2, &[(&[(0, 1), (1, -1)], 0)]);
        match solve(&p, &SimplexOptions::default()).unwrap() {
            Verdict::Feasible { x, residual } => {
                assert!(residual < 1e-12);
                assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn contradictory_rows_give_exact_certificate() {
        let p = lp(2, &[(&[(0, 1), (1, 1)], 2)]);
        let Verdict::Infeasible(mut cert) = solve(&p, &SimplexOptions::default()).unwrap() else {
            panic!("expected infeasible");
        };
        assert!(cert.verified);
        assert!(cert.make_exact(&p));
        assert!(verify_exact(&p, cert.y_exact.as_ref().unwrap()));
        assert!(verify_certificate(&p, &cert, true));
    }

    #[test]
    fn forcing_rows_are_presolved() {
        // x1 + x2 = 0 pins both; the remaining mass must sit on x0 but
        // another row asks for x0 = 0
        let p = lp(3, &[(&[(1, 1), (2, 1)], 0), (&[(0, 2)], 0)]);
        let Verdict::Infeasible(mut cert) = solve(&p, &SimplexOptions::default()).unwrap() else {
            panic!("expected infeasible");
        };
        assert!(cert.make_exact(&p));
        let q = lp(3, &[(&[(1, 1), (2, 1)], 0)]);
        assert!(matches!(solve(&q, &SimplexOptions::default()).unwrap(), Verdict::Feasible { .. }));
    }

    #[test]
    fn certificate_does_not_transfer_to_a_feasible_lp() {
        let bad = lp(2, &[(&[(0, 1), (1, 1)], 2)]);
        let good = lp(2, &[(&[(0, 1), (1, 1)], 1)]);
        let Verdict::Infeasible(cert) = solve(&bad, &SimplexOptions::default()).unwrap() else {
            panic!("expected infeasible");
        };
        assert!(!verify_certificate(&good, &cert, false));
        assert!(!verify_certificate(&good, &cert, true));
        assert!(!verify_certificate(&good, &Certificate::new(vec![0.0; 2]), false));
    }

    #[test]
    fn scale_guard() {
        let p = lp(3, &[]);
        let opts = SimplexOptions {
            max_entries: 2,
            ..Default::default()
        };
        assert!(matches!(solve(&p, &opts), Err(Error::ScaleGuard(_))));
    }

    // Random systems built around a known nonnegative point, so they are
    // feasible; the solver must agree and return a point satisfying them.
    /// Variable count, sparse rows and the planted point.
    type Planted = (usize, Vec<Vec<(usize, i64)>>, Vec<i64>);

    fn planted() -> impl Strategy<Value = Planted> {
        (2usize..7, 1usize..6).prop_flat_map(|(n, m)| {
            (
                Just(n),
                proptest::collection::vec(proptest::collection::vec(-2i64..3, n), m),
                proptest::collection::vec(0i64..4, n),
            )
                .prop_map(|(n, dense, weights)| {
                    let rows: Vec<Vec<(usize, i64)>> = dense
                        .into_iter()
                        .map(|r| r.into_iter().enumerate().filter(|(_, a)| *a != 0).collect())
                        .collect();
                    (n, rows, weights)
                })
        })
    }

    proptest! {
        #[test]
        fn planted_systems_are_feasible((n, rows, mut w) in planted()) {
            // x* = w / Σw satisfies the normalization row
            w[0] += 1;
            let total: i64 = w.iter().sum();
            let mut p = lp(n, &[]);
            for (k, r) in rows.iter().enumerate() {
                let b: i64 = r.iter().map(|&(j, a)| a * w[j]).sum();
                p.rows.push(Row {
                    coeffs: r.clone(),
                    rhs: BigRational::new(b.into(), total.into()),
                    kind: RowKind::Marginal { set: 1, outcome: k },
                });
            }
            match solve(&p, &SimplexOptions::default()).unwrap() {
                Verdict::Feasible { x, residual } => {
                    prop_assert!(residual <= 1e-8);
                    prop_assert!(x.iter().all(|&v| v >= -1e-10));
                }
                Verdict::Infeasible(_) => prop_assert!(false, "planted system reported infeasible"),
            }
        }

        #[test]
        fn infeasible_verdicts_carry_exact_certificates((n, rows, b) in planted()) {
            // arbitrary right-hand sides: any infeasible verdict must verify
            let mut p = lp(n, &[]);
            for (k, r) in rows.iter().enumerate() {
                p.rows.push(Row {
                    coeffs: r.clone(),
                    rhs: BigRational::from_integer((b[k % b.len()] - 1).into()),
                    kind: RowKind::Marginal { set: 1, outcome: k },
                });
            }
            if let Verdict::Infeasible(mut cert) = solve(&p, &SimplexOptions::default()).unwrap() {
                prop_assert!(cert.make_exact(&p));
            }
        }
    }
}
