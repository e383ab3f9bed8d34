use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{injectable_sets, maximal_sets, orbit_representatives, InflationScenario, InjectableSet};
use crate::dists::{w_dist_exact, Party, TripartiteDistribution, Visibility};
use crate::error::{Error, Result};

/// Target probabilities as exact rationals, indexed `4a + 2b + c`.
pub type ExactTarget = [BigRational; 8];

pub fn exact_w_target(v: &Visibility) -> ExactTarget {
    w_dist_exact(v).map(|r| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
}

/// Exact binary value of each floating-point entry.
pub fn exact_target(p: &TripartiteDistribution) -> ExactTarget {
    p.probs().map(|x| BigRational::from_float(x).expect("distributions are finite"))
}

fn marginal(target: &ExactTarget, kinds: &[Party], outcome: usize) -> BigRational {
    let mut sum = BigRational::zero();
    for (i, p) in target.iter().enumerate() {
        let key = kinds.iter().fold(0, |acc, k| (acc << 1) | ((i >> k.shift()) & 1));
        if key == outcome {
            sum += p;
        }
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RowKind {
    Normalization,
    /// `x[g·e] − x[e] = 0` for generator `g`.
    Symmetry { generator: usize, event: u64 },
    /// Outcome `outcome` of injectable set `set` (parties in increasing
    /// order, first party most significant).
    Marginal { set: usize, outcome: usize },
}

/// Sparse equality row `Σ coeff·x[var] = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, i64)>,
    pub rhs: BigRational,
    pub kind: RowKind,
}

/// `A x = b, x ≥ 0`. In the reduced form every variable stands for one orbit
/// of events and holds the common probability of each of its events.
#[derive(Clone, Debug)]
pub struct InflationLP {
    pub level: usize,
    pub n_vars: usize,
    pub rows: Vec<Row>,
    pub sets: Vec<InjectableSet>,
    /// Orbit label of every event for a reduced LP.
    pub orbits: Option<Vec<usize>>,
}

impl InflationLP {
    pub fn is_reduced(&self) -> bool {
        self.orbits.is_some()
    }

    pub fn rhs_f64(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Largest `|A x − b|` over all rows.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(self.rhs_f64())
            .map(|(r, b)| (r.coeffs.iter().map(|&(j, a)| a as f64 * x[j]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    /// Event probabilities from a solution of this LP.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        match &self.orbits {
            Some(labels) => labels.iter().map(|&o| x[o]).collect(),
            None => x.to_vec(),
        }
    }

    /// Copy without the `x[g·e] = x[e]` rows. Averaging a solution over the
    /// group shows the verdict is unchanged.
    pub fn without_symmetry_rows(&self) -> InflationLP {
        InflationLP {
            rows: self
                .rows
                .iter()
                .filter(|r| !matches!(r.kind, RowKind::Symmetry { .. }))
                .cloned()
                .collect(),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if r.coeffs.iter().any(|&(j, _)| j >= self.n_vars) {
                return Err(Error::Numerical("constraint row references a missing variable".into()));
            }
        }
        Ok(())
    }
}

fn event_key(parties: &[usize], party_count: usize, event: u64) -> usize {
    parties
        .iter()
        .fold(0, |acc, &p| (acc << 1) | ((event >> (party_count - 1 - p)) & 1) as usize)
}

fn set_rhs(s: &InflationScenario, set: &InjectableSet, target: &ExactTarget, outcome: usize) -> BigRational {
    let k = set.parties.len();
    let mut prod = BigRational::one();
    for (ci, comp) in set.components.iter().enumerate() {
        let kinds = set.component_kinds(s, ci);
        // Components list parties in increasing index, which is A, B, C order.
        let sub = comp.iter().fold(0, |acc, p| {
            let pos = set.parties.iter().position(|q| q == p).expect("component member");
            (acc << 1) | ((outcome >> (k - 1 - pos)) & 1)
        });
        prod *= marginal(target, &kinds, sub);
    }
    prod
}

fn marginal_rows(
    s: &InflationScenario,
    sets: &[InjectableSet],
    target: &ExactTarget,
    var_of: impl Fn(u64) -> usize,
    n_vars: usize,
) -> Vec<Row> {
    let p = s.party_count();
    let events = s.event_count().expect("enumerable");
    let mut rows = Vec::new();
    for (si, set) in sets.iter().enumerate() {
        let k = set.parties.len();
        let mut dense = vec![vec![0i64; n_vars]; 1 << k];
        for e in 0..events {
            dense[event_key(&set.parties, p, e)][var_of(e)] += 1;
        }
        for (outcome, coeffs) in dense.into_iter().enumerate() {
            rows.push(Row {
                coeffs: coeffs.into_iter().enumerate().filter(|(_, c)| *c != 0).collect(),
                rhs: set_rhs(s, set, target, outcome),
                kind: RowKind::Marginal { set: si, outcome },
            });
        }
    }
    rows
}

fn constraint_sets(s: &InflationScenario, max_injectable: usize) -> Result<Vec<InjectableSet>> {
    let cap = max_injectable.min(s.party_count());
    Ok(maximal_sets(&injectable_sets(s, cap)?))
}

/// Symmetry-reduced LP: one variable per event orbit, marginal rows for
/// one representative of every orbit of maximal injectable sets.
pub fn assemble_reduced_lp(s: &InflationScenario, target: &ExactTarget, max_injectable: usize) -> Result<InflationLP> {
    let labels = s.event_orbits()?;
    let n_vars = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0i64; n_vars];
    for &l in &labels {
        sizes[l] += 1;
    }
    let sets = orbit_representatives(s, &constraint_sets(s, max_injectable)?);
    let mut rows = vec![Row {
        coeffs: sizes.into_iter().enumerate().collect(),
        rhs: BigRational::one(),
        kind: RowKind::Normalization,
    }];
    rows.extend(marginal_rows(s, &sets, target, |e| labels[e as usize], n_vars));
    let lp = InflationLP {
        level: s.level(),
        n_vars,
        rows,
        sets,
        orbits: Some(labels),
    };
    lp.validate()?;
    Ok(lp)
}

/// Unreduced LP over every event: normalization, `x[g·e] = x[e]` for each
/// generator, marginal rows for every maximal injectable set.
pub fn assemble_lp(s: &InflationScenario, target: &ExactTarget, max_injectable: usize) -> Result<InflationLP> {
    s.event_orbits()?; // scale guard
    let events = s.event_count().expect("enumerable");
    let n_vars = events as usize;
    let mut rows = vec![Row {
        coeffs: (0..n_vars).map(|j| (j, 1)).collect(),
        rhs: BigRational::one(),
        kind: RowKind::Normalization,
    }];
    for (gi, g) in s.generators().iter().enumerate() {
        for e in 0..events {
            let img = s.act(g, e);
            // generators are involutions; one row per unordered pair
            if img > e {
                rows.push(Row {
                    coeffs: vec![(e as usize, -1), (img as usize, 1)],
                    rhs: BigRational::zero(),
                    kind: RowKind::Symmetry { generator: gi, event: e },
                });
            }
        }
    }
    let sets = constraint_sets(s, max_injectable)?;
    rows.extend(marginal_rows(s, &sets, target, |e| e as usize, n_vars));
    let lp = InflationLP {
        level: s.level(),
        n_vars,
        rows,
        sets,
        orbits: None,
    };
    lp.validate()?;
    Ok(lp)
}
