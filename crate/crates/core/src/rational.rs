//! Continued-fraction rounding.

#[allow(unused_imports)]
use num_traits::Float;

/// Best rational approximation `n/d` of `x` with `0 < d <= max_den`.
pub fn approximate(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() || max_den < 1 {
        return None;
    }
    let neg = x < 0.0;
    let mut y = x.abs();
    if y > 1e15 {
        return None;
    }
    // convergents h/k
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    for _ in 0..64 {
        let a = y.floor();
        if a > i64::MAX as f64 / 2.0 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            // best semiconvergent within the bound
            let t = (max_den - k0) / k1;
            let (hs, ks) = (t * h1 + h0, t * k1 + k0);
            let xs = x.abs();
            let (n, d) = if ks > 0 && (hs as f64 / ks as f64 - xs).abs() < (h1 as f64 / k1 as f64 - xs).abs() {
                (hs, ks)
            } else {
                (h1, k1)
            };
            return Some((if neg { -n } else { n }, d));
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = y - a as f64;
        if frac.abs() < 1e-15 * (a as f64).max(1.0) {
            break;
        }
        y = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some((if neg { -h1 } else { h1 }, k1))
}
