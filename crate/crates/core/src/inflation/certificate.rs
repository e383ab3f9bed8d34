//! Farkas certificates for `A x = b, x ≥ 0`: a vector `y` with `yᵀA ≤ 0`
//! entrywise and `yᵀb > 0`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::lp::{InflationLP, RowKind};
use super::simplex::forcing_rows;
use crate::rational::approximate;

/// Denominator bound for rounding a floating certificate.
pub const RATIONAL_MAX_DEN: i64 = 1_000_000;
const FLOAT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// One multiplier per constraint row.
    pub y: Vec<f64>,
    pub verified: bool,
    /// Verified in exact rational arithmetic.
    pub exact: bool,
    pub y_exact: Option<Vec<BigRational>>,
}

impl Certificate {
    pub fn new(y: Vec<f64>) -> Self {
        Self {
            y,
            verified: false,
            exact: false,
            y_exact: None,
        }
    }
}

fn column_sums_f64(lp: &InflationLP, y: &[f64]) -> Vec<f64> {
    let mut col = vec![0.0; lp.n_vars];
    for (row, &yi) in lp.rows.iter().zip(y) {
        if yi != 0.0 {
            for &(j, a) in &row.coeffs {
                col[j] += yi * a as f64;
            }
        }
    }
    col
}

fn column_sums_exact(lp: &InflationLP, y: &[BigRational]) -> Vec<BigRational> {
    let mut col = vec![BigRational::zero(); lp.n_vars];
    for (row, yi) in lp.rows.iter().zip(y) {
        if !yi.is_zero() {
            for &(j, a) in &row.coeffs {
                col[j] += yi * BigRational::from_integer(BigInt::from(a));
            }
        }
    }
    col
}

fn float_check(lp: &InflationLP, y: &[f64]) -> bool {
    if y.len() != lp.rows.len() {
        return false;
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return false;
    }
    let y: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let yb: f64 = y.iter().zip(lp.rhs_f64()).map(|(a, b)| a * b).sum();
    let worst = column_sums_f64(lp, &y).into_iter().fold(f64::NEG_INFINITY, f64::max);
    yb > 10.0 * FLOAT_TOL && worst <= FLOAT_TOL
}

/// Exact check of `yᵀA ≤ 0` and `yᵀb > 0`.
pub fn verify_exact(lp: &InflationLP, y: &[BigRational]) -> bool {
    if y.len() != lp.rows.len() {
        return false;
    }
    let yb: BigRational = lp.rows.iter().zip(y).map(|(r, yi)| &r.rhs * yi).sum();
    yb.is_positive() && column_sums_exact(lp, y).iter().all(|c| !c.is_positive())
}

/// Continued-fraction rounding of `y / max|y|` with denominators at most
/// [`RATIONAL_MAX_DEN`].
pub fn rationalize(y: &[f64]) -> Option<Vec<BigRational>> {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    y.iter()
        .map(|v| approximate(v / scale, RATIONAL_MAX_DEN).map(|(n, d)| BigRational::new(n.into(), d.into())))
        .collect()
}

/// Round a floating certificate to rationals with bounded denominators and
/// absorb the rounding error: first through zero-rhs rows of one sign, then
/// by shifting the normalization multiplier, which lowers every column sum
/// (all normalization coefficients are positive) at a cost in `yᵀb`.
/// Returns `None` when the result does not verify exactly.
pub fn exact_certificate(lp: &InflationLP, y: &[f64]) -> Option<Vec<BigRational>> {
    if y.len() != lp.rows.len() {
        return None;
    }
    let mut yq = rationalize(y)?;
    let norm = lp.rows.iter().position(|r| r.kind == RowKind::Normalization)?;
    let weights = {
        let mut w = vec![0i64; lp.n_vars];
        for &(j, a) in &lp.rows[norm].coeffs {
            w[j] += a;
        }
        w
    };
    if weights.iter().any(|&w| w <= 0) {
        return None;
    }
    let mut col = column_sums_exact(lp, &yq);
    // zero-rhs rows of one sign lower their columns for free
    for (i, sgn) in forcing_rows(lp) {
        let mut need = BigRational::zero();
        for &(j, a) in &lp.rows[i].coeffs {
            if col[j].is_positive() {
                let q = &col[j] / BigRational::from_integer(a.abs().into());
                if q > need {
                    need = q;
                }
            }
        }
        if need.is_positive() {
            let delta = -need * BigRational::from_integer(sgn.into());
            for &(j, a) in &lp.rows[i].coeffs {
                col[j] += &delta * BigRational::from_integer(a.into());
            }
            yq[i] += delta;
        }
    }
    let mut shift = BigRational::zero();
    for (c, &w) in col.iter().zip(&weights) {
        if c.is_positive() {
            let need = c / BigRational::from_integer(w.into());
            if need > shift {
                shift = need;
            }
        }
    }
    yq[norm] -= shift;
    verify_exact(lp, &yq).then_some(yq)
}

/// Floating check (`yᵀb > 10·tol`, `max yᵀA ≤ tol` after scaling `y` to unit
/// max-norm); with `exact`, additionally rationalize and re-verify exactly.
/// If rationalization fails the floating verdict stands.
pub fn verify_certificate(lp: &InflationLP, cert: &Certificate, exact: bool) -> bool {
    let ok = float_check(lp, &cert.y);
    if !ok || !exact {
        return ok;
    }
    match &cert.y_exact {
        Some(yq) => verify_exact(lp, yq),
        None if rationalize(&cert.y).is_none() => ok,
        None => exact_certificate(lp, &cert.y).is_some(),
    }
}

impl Certificate {
    /// Attach an exact rational version if one verifies.
    pub fn make_exact(&mut self, lp: &InflationLP) -> bool {
        match exact_certificate(lp, &self.y) {
            Some(yq) => {
                self.y_exact = Some(yq);
                self.exact = true;
            }
            None => self.exact = false,
        }
        self.exact
    }
}
