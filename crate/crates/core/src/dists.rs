//! Distributions over three binary outcomes `(a, b, c)`, stored at index
//! `4a + 2b + c`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

/// Exact rational visibility in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Visibility(Ratio<i64>);

impl Visibility {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let r = Ratio::new(numer, denom);
        if r < Ratio::from_integer(0) || r > Ratio::from_integer(1) {
            return Err(Error::VisibilityOutOfRange(numer as f64 / denom as f64));
        }
        Ok(Self(r))
    }

    /// Nearest rational with denominator at most `10^9`; decimal inputs such
    /// as `0.6245` come back exact.
    pub fn from_f64(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::VisibilityOutOfRange(v));
        }
        let (n, d) = crate::rational::approximate(v, 1_000_000_000)
            .ok_or_else(|| Error::InvalidArgument("cannot rationalize visibility".into()))?;
        Self::new(n, d)
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn value(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

/// Accepts `"num/den"`, an integer, or a decimal literal.
impl FromStr for Visibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(alloc::format!("cannot parse visibility {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() <= 12 && frac.chars().all(|c| c.is_ascii_digit()) {
                let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
                let den = 10i64.pow(frac.len() as u32);
                let num: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
                return Self::new(int * den + num, den);
            }
        }
        if let Ok(n) = s.parse::<i64>() {
            return Self::new(n, 1);
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        Self::from_f64(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    /// Bit of the outcome index `4a + 2b + c` that belongs to this party.
    pub fn shift(self) -> usize {
        match self {
            Party::A => 2,
            Party::B => 1,
            Party::C => 0,
        }
    }
}

/// Entry below this is treated as negative rather than rounding noise.
pub const NEGATIVE_TOL: f64 = 1e-12;
pub const SUM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripartiteDistribution {
    p: [f64; 8],
}

impl TripartiteDistribution {
    /// Validate and clamp tiny negative entries to zero.
    pub fn new(mut p: [f64; 8]) -> Result<Self> {
        for x in p.iter_mut() {
            if !x.is_finite() || *x < -NEGATIVE_TOL {
                return Err(Error::InvalidDistribution(alloc::format!("entry {x} is negative")));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(alloc::format!("entries sum to {s}")));
        }
        Ok(Self { p })
    }

    /// Wrap values produced by a construction that is normalized by design.
    pub(crate) fn from_model(p: [f64; 8]) -> Self {
        Self { p }
    }

    pub fn uniform() -> Self {
        Self { p: [0.125; 8] }
    }

    pub fn probs(&self) -> &[f64; 8] {
        &self.p
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.p[4 * a + 2 * b + c]
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Relabel parties: the outcome of party `k` in the result is the outcome
    /// of party `perm[k]` in `self`.
    pub fn permute_parties(&self, perm: [Party; 3]) -> Self {
        let mut q = [0.0; 8];
        for (i, slot) in q.iter_mut().enumerate() {
            let mut src = 0;
            for (k, target) in Party::ALL.iter().enumerate() {
                let bit = (i >> target.shift()) & 1;
                src |= bit << perm[k].shift();
            }
            *slot = self.p[src];
        }
        Self { p: q }
    }

    /// Outcomes `(a, b)` swapped.
    pub fn swap_ab(&self) -> Self {
        self.permute_parties([Party::B, Party::A, Party::C])
    }

    /// Marginal over `parties` (order-insensitive). The result is indexed by
    /// the outcome bits of the kept parties in A, B, C order, most
    /// significant first.
    pub fn marginal(&self, parties: &[Party]) -> Result<Vec<f64>> {
        let mut kept: Vec<Party> = parties.to_vec();
        kept.sort();
        kept.dedup();
        if kept.is_empty() {
            return Err(Error::InvalidArgument("marginal over an empty party set".into()));
        }
        let mut out = vec![0.0; 1 << kept.len()];
        for (i, &pi) in self.p.iter().enumerate() {
            let idx = kept
                .iter()
                .fold(0, |acc, party| (acc << 1) | ((i >> party.shift()) & 1));
            out[idx] += pi;
        }
        Ok(out)
    }

    pub fn correlators(&self) -> Correlators {
        let sign = |i: usize, parties: &[Party]| {
            let parity: usize = parties.iter().map(|p| (i >> p.shift()) & 1).sum();
            if parity.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        };
        let expect = |parties: &[Party]| -> f64 {
            self.p.iter().enumerate().map(|(i, &pi)| pi * sign(i, parties)).sum()
        };
        let single = [expect(&[Party::A]), expect(&[Party::B]), expect(&[Party::C])];
        let pair = [
            expect(&[Party::A, Party::B]),
            expect(&[Party::A, Party::C]),
            expect(&[Party::B, Party::C]),
        ];
        let triple = expect(&Party::ALL);
        let symmetric = self.is_party_symmetric(1e-9);
        Correlators {
            single,
            pair,
            triple,
            symmetric,
        }
    }

    /// Invariance under all six party permutations, to `tol` per entry.
    pub fn is_party_symmetric(&self, tol: f64) -> bool {
        use Party::*;
        [[B, A, C], [A, C, B], [C, B, A], [B, C, A], [C, A, B]]
            .iter()
            .all(|perm| l_inf(&self.permute_parties(*perm), self) <= tol)
    }
}

fn l_inf(p: &TripartiteDistribution, q: &TripartiteDistribution) -> f64 {
    p.p.iter().zip(&q.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Outcome `0 ↦ +1`, `1 ↦ −1` expectation values. For symmetric inputs
/// `e1`, `e2`, `e3` are the common single, two and three body values; for
/// asymmetric inputs the per-party values remain available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlators {
    /// `<A>`, `<B>`, `<C>`.
    pub single: [f64; 3],
    /// `<AB>`, `<AC>`, `<BC>`.
    pub pair: [f64; 3],
    pub triple: f64,
    pub symmetric: bool,
}

impl Correlators {
    pub fn e1(&self) -> f64 {
        self.single.iter().sum::<f64>() / 3.0
    }

    pub fn e2(&self) -> f64 {
        self.pair.iter().sum::<f64>() / 3.0
    }

    pub fn e3(&self) -> f64 {
        self.triple
    }
}

/// Indices of the one-hot outcomes 001, 010, 100.
const ONE_HOT: [usize; 3] = [1, 2, 4];

/// `W_v = v/3 ([001] + [010] + [100]) + (1 − v)/8`.
pub fn w_dist(v: &Visibility) -> TripartiteDistribution {
    let v = v.value();
    let mut p = [(1.0 - v) / 8.0; 8];
    for i in ONE_HOT {
        p[i] += v / 3.0;
    }
    TripartiteDistribution { p }
}

/// `W_v` evaluated in exact rational arithmetic.
pub fn w_dist_exact(v: &Visibility) -> [Ratio<i64>; 8] {
    let r = v.ratio();
    let one = Ratio::from_integer(1);
    let base = (one - r) / 8;
    let mut p = [base; 8];
    for i in ONE_HOT {
        p[i] = base + r / 3;
    }
    p
}

/// `(Σ |p − q|²)^{1/2}`.
pub fn l2_distance(p: &TripartiteDistribution, q: &TripartiteDistribution) -> f64 {
    p.p.iter()
        .zip(&q.p)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between raw probability vectors.
pub fn l2_raw(p: &[f64; 8], q: &[f64; 8]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
