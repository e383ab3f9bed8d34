//! Independent feasibility check of an inflation LP with an interior-point
//! conic solver, used to cross-check the built-in simplex.

use anyhow::{bail, Result};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT,
};
use serde::Serialize;
use trinet_core::inflation::InflationLP;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConicVerdict {
    Feasible,
    Infeasible,
    /// The optimal violation sits between the two thresholds.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConicReport {
    pub verdict: ConicVerdict,
    /// Optimal `t` in `min t` subject to `|A x − b| ≤ t`, `x ≥ 0`.
    pub min_violation: f64,
}

/// Violations at or below this count as feasible.
pub const FEASIBLE_TOL: f64 = 1e-9;
/// Violations above this count as infeasible.
pub const INFEASIBLE_TOL: f64 = 1e-7;

/// Minimize the largest constraint violation `t` over `x ≥ 0`:
/// `A x − t ≤ b`, `−A x − t ≤ −b`. Unlike the bare feasibility problem this
/// program always has an optimum, and it is zero exactly when `A x = b,
/// x ≥ 0` is feasible.
pub fn conic_verdict(lp: &InflationLP) -> Result<ConicReport> {
    let (m, n) = (lp.rows.len(), lp.n_vars);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            cols[j].push((i, a as f64));
        }
    }
    let (mut colptr, mut rowval, mut nzval) = (vec![0], Vec::new(), Vec::new());
    for (j, col) in cols.iter_mut().enumerate() {
        col.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
        for &(i, a) in col.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => merged.push((i, a)),
            }
        }
        for &(i, a) in &merged {
            rowval.push(i);
            nzval.push(a);
        }
        for &(i, a) in &merged {
            rowval.push(m + i);
            nzval.push(-a);
        }
        rowval.push(2 * m + j);
        nzval.push(-1.0);
        colptr.push(rowval.len());
    }
    // the column of t
    for i in 0..2 * m {
        rowval.push(i);
        nzval.push(-1.0);
    }
    colptr.push(rowval.len());
    let a = CscMatrix::new(2 * m + n, n + 1, colptr, rowval, nzval);
    let p = CscMatrix::<f64>::zeros((n + 1, n + 1));
    let mut q = vec![0.0; n + 1];
    q[n] = 1.0;
    let rhs = lp.rhs_f64();
    let mut b: Vec<f64> = rhs.iter().copied().chain(rhs.iter().map(|x| -x)).collect();
    b.resize(2 * m + n, 0.0);
    let cones: [SupportedConeT<f64>; 1] = [NonnegativeConeT(2 * m + n)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(400)
        .tol_gap_abs(1e-12)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-10)
        .build()
        .map_err(|e| anyhow::anyhow!("solver settings: {e:?}"))?;
    let mut solver =
        DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| anyhow::anyhow!("solver setup: {e:?}"))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        other => bail!("conic solver ended with status {other:?}"),
    }
    let t = solver.solution.x[n].max(0.0);
    let verdict = if t <= FEASIBLE_TOL {
        ConicVerdict::Feasible
    } else if t > INFEASIBLE_TOL {
        ConicVerdict::Infeasible
    } else {
        ConicVerdict::Inconclusive
    };
    Ok(ConicReport {
        verdict,
        min_violation: t,
    })
}
