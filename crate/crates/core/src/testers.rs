//! Quantum testers: a state and a measurement merged into one set of
//! operators, one per outcome.
//!
//! A tester has an `out` wire (the half of its source sent to the next party)
//! and an `in` wire (the half of the previous source that its measurement
//! absorbs). Element matrices are ordered `out ⊗ in`. Validity means
//! `T_o ⪰ 0`, `Σ_o T_o = σ ⊗ 1_in` and `Tr Σ_o T_o = d_in`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::dists::TripartiteDistribution;
use crate::error::{Error, Result};
use crate::rng::{random_projective_measurement, random_pure_state};
use crate::tensor::{
    herm_eig, kron, link_product, partial_trace, permute_subsystems, ComplexMatrix, LabeledOperator,
    SubsystemShape,
};

/// Cutoff below which eigenvalues of the reduced state count as zero.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Tester {
    d_in: usize,
    d_out: usize,
    elements: Vec<ComplexMatrix>,
}

/// Residuals of the validity conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validity {
    pub min_eigenvalue: f64,
    pub trace_residual: f64,
    pub normalization_residual: f64,
    pub hermiticity_residual: f64,
    pub valid: bool,
}

/// A state on `(out, mid)` and a measurement on `(mid, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub rho: ComplexMatrix,
    pub d_mid: usize,
    pub measurement: Vec<ComplexMatrix>,
}

impl Tester {
    pub fn new(d_in: usize, d_out: usize, elements: Vec<ComplexMatrix>) -> Result<Self> {
        if d_in == 0 || d_out == 0 || elements.is_empty() {
            return Err(Error::InvalidTester("empty wire or element list".into()));
        }
        let n = d_in * d_out;
        if let Some(bad) = elements.iter().find(|e| e.rows() != n || e.cols() != n) {
            return Err(Error::DimensionMismatch(format!(
                "tester element is {}x{}, expected {n}x{n}",
                bad.rows(),
                bad.cols()
            )));
        }
        Ok(Self {
            d_in,
            d_out,
            elements,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<ComplexMatrix> {
        self.elements
    }

    /// Element `o` with its wires labelled.
    pub fn labeled(&self, o: usize, out_label: &str, in_label: &str) -> Result<LabeledOperator> {
        LabeledOperator::with_wires(
            self.elements[o].clone(),
            &[(out_label, self.d_out), (in_label, self.d_in)],
        )
    }

    fn shape(&self) -> SubsystemShape {
        SubsystemShape::new(alloc::vec![self.d_out, self.d_in]).unwrap()
    }

    pub fn total(&self) -> ComplexMatrix {
        let n = self.d_in * self.d_out;
        let mut w = ComplexMatrix::zeros(n, n);
        for e in &self.elements {
            w.add_scaled(e, 1.0);
        }
        w
    }

    /// Normalized reduced state `σ = Tr_in(Σ T_o) / d_in` on the out wire.
    pub fn reduced_state(&self) -> ComplexMatrix {
        partial_trace(&self.total(), &self.shape(), &[0])
            .unwrap()
            .scale(1.0 / self.d_in as f64)
    }

    pub fn validity(&self, tol: f64) -> Validity {
        let mut min_eig = f64::INFINITY;
        let mut herm = 0.0f64;
        for e in &self.elements {
            herm = herm.max(e.hermitian_deviation());
            min_eig = min_eig.min(match herm_eig(&e.hermitian_part()) {
                Ok(eig) => eig.min_value(),
                Err(_) => f64::NEG_INFINITY,
            });
        }
        let total = self.total();
        let trace_residual = (total.trace().re - self.d_in as f64).abs();
        let sigma = self.reduced_state();
        let expected = kron(&sigma, &ComplexMatrix::identity(self.d_in));
        let normalization_residual = (&total - &expected).frobenius_norm();
        Validity {
            min_eigenvalue: min_eig,
            trace_residual,
            normalization_residual,
            hermiticity_residual: herm,
            valid: min_eig >= -tol && trace_residual <= tol && normalization_residual <= tol && herm <= tol,
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.validity(tol).valid
    }

    /// Tester whose elements are all `1/(K·d_out)`: the maximally mixed
    /// state with a uniformly split identity measurement.
    pub fn maximally_mixed(d_in: usize, d_out: usize, outcomes: usize) -> Self {
        let n = d_in * d_out;
        let e = ComplexMatrix::identity(n).scale(1.0 / (outcomes * d_out) as f64);
        Self {
            d_in,
            d_out,
            elements: alloc::vec![e; outcomes],
        }
    }

    /// Realizing state and measurement. The reduced state `σ` is purified
    /// as `(√σ ⊗ 1) Σ_i |ii>` with a mid wire of dimension `d_out`, and the
    /// measurement is `[(σ^{-1/2} ⊗ 1) T_o (σ^{-1/2} ⊗ 1)]^T`, padded by
    /// `(1 − Π_σ) ⊗ 1 / K` outside the support of `σ`.
    pub fn realize(&self) -> Result<Realization> {
        let check = self.validity(1e-8);
        if !check.valid {
            return Err(Error::InvalidTester(format!(
                "cannot realize: min eig {:.3e}, trace residual {:.3e}, normalization residual {:.3e}",
                check.min_eigenvalue, check.trace_residual, check.normalization_residual
            )));
        }
        let (d_out, d_in, k) = (self.d_out, self.d_in, self.elements.len());
        let sigma = self.reduced_state().hermitian_part();
        let eig = herm_eig(&sigma)?;
        let sqrt_sigma = eig.reconstruct_with(|x| x.max(0.0).sqrt());
        let inv_sqrt = eig.reconstruct_with(|x| if x > PINV_CUTOFF { 1.0 / x.sqrt() } else { 0.0 });
        let support = eig.reconstruct_with(|x| if x > PINV_CUTOFF { 1.0 } else { 0.0 });

        let mut psi = alloc::vec![Complex64::new(0.0, 0.0); d_out * d_out];
        for x in 0..d_out {
            for t in 0..d_out {
                psi[x * d_out + t] = sqrt_sigma[(x, t)];
            }
        }
        let rho = ComplexMatrix::outer(&psi);

        let id_in = ComplexMatrix::identity(d_in);
        let conj = kron(&inv_sqrt, &id_in);
        let pad = kron(&(&ComplexMatrix::identity(d_out) - &support), &id_in).scale(1.0 / k as f64);
        let mut measurement = Vec::with_capacity(k);
        for e in &self.elements {
            let mut n = conj.matmul(e)?.matmul(&conj)?;
            n.add_scaled(&pad, 1.0);
            measurement.push(n.transpose().hermitian_part());
        }
        Ok(Realization {
            rho,
            d_mid: d_out,
            measurement,
        })
    }
}

/// `T_o = ρ * M_o^T`: contraction of a state on `(out, mid)` with a
/// measurement on `(mid, in)` over the mid wire.
pub fn from_state_measurement(
    rho: &ComplexMatrix,
    d_out: usize,
    d_mid: usize,
    measurement: &[ComplexMatrix],
    d_in: usize,
) -> Result<Tester> {
    if rho.rows() != d_out * d_mid || !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, expected dimension {}",
            rho.rows(),
            rho.cols(),
            d_out * d_mid
        )));
    }
    if measurement.is_empty() {
        return Err(Error::InvalidMeasurement("no effects".into()));
    }
    let n = d_mid * d_in;
    let mut sum = ComplexMatrix::zeros(n, n);
    for m in measurement {
        if m.rows() != n || !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "effect is {}x{}, expected dimension {n}",
                m.rows(),
                m.cols()
            )));
        }
        sum.add_scaled(m, 1.0);
    }
    if (&sum - &ComplexMatrix::identity(n)).max_abs() > 1e-9 {
        return Err(Error::InvalidMeasurement("effects do not sum to the identity".into()));
    }
    for m in measurement {
        if !m.is_hermitian(1e-9) || herm_eig(&m.hermitian_part())?.min_value() < -1e-9 {
            return Err(Error::InvalidMeasurement("effect is not positive semidefinite".into()));
        }
    }
    let state = LabeledOperator::with_wires(rho.clone(), &[("out", d_out), ("mid", d_mid)])?;
    let elements = measurement
        .iter()
        .map(|m| {
            let mt = LabeledOperator::with_wires(m.transpose(), &[("mid", d_mid), ("in", d_in)])?;
            Ok(link_product(&state, &mt)?.reorder(&["out", "in"])?.matrix)
        })
        .collect::<Result<Vec<_>>>()?;
    Tester::new(d_in, d_out, elements)
}

// Wire labels around the triangle. R holds source γ and party A, S holds α
// and B, T holds β and C.
const GAMMA_B: &str = "gamma_b";
const ALPHA_C: &str = "alpha_c";
const BETA_A: &str = "beta_a";

/// Triangle distribution `p(a,b,c) = R_a * S_b * T_c`, with R on
/// (out γ→B, in β→A), S on (out α→C, in γ→B) and T on (out β→A, in α→C).
pub fn contract_triangle(r: &Tester, s: &Tester, t: &Tester) -> Result<TripartiteDistribution> {
    check_cycle(r, s, t)?;
    if r.outcomes() != 2 || s.outcomes() != 2 || t.outcomes() != 2 {
        return Err(Error::InvalidTester("triangle testers need two outcomes".into()));
    }
    let mut p = [0.0; 8];
    for a in 0..2 {
        let ra = r.labeled(a, GAMMA_B, BETA_A)?;
        for b in 0..2 {
            let rs = link_product(&ra, &s.labeled(b, ALPHA_C, GAMMA_B)?)?;
            for c in 0..2 {
                let z = link_product(&rs, &t.labeled(c, BETA_A, ALPHA_C)?)?
                    .as_scalar()
                    .ok_or_else(|| Error::Numerical("contraction left open wires".into()))?;
                p[4 * a + 2 * b + c] = z.re;
            }
        }
    }
    TripartiteDistribution::new(p)
}

pub(crate) fn check_cycle(r: &Tester, s: &Tester, t: &Tester) -> Result<()> {
    if r.d_out != s.d_in || s.d_out != t.d_in || t.d_out != r.d_in {
        return Err(Error::DimensionMismatch(format!(
            "wires do not close: R {}→{}, S {}→{}, T {}→{}",
            r.d_in, r.d_out, s.d_in, s.d_out, t.d_in, t.d_out
        )));
    }
    Ok(())
}

/// Random valid tester: a Haar-random pure state on `out ⊗ mid` (mid of
/// dimension `d_out`) and a random projective measurement on `mid ⊗ in`.
pub fn random_tester<R: Rng + ?Sized>(d_in: usize, d_out: usize, outcomes: usize, rng: &mut R) -> Tester {
    let psi = random_pure_state(d_out * d_out, rng);
    let rho = ComplexMatrix::outer(&psi);
    let m = random_projective_measurement(d_out * d_in, outcomes, rng);
    from_state_measurement(&rho, d_out, d_out, &m, d_in).expect("generated inputs are valid")
}

/// Testers `(R, S, T)` of the five-parameter quantum model.
pub fn model_testers(params: &crate::quantum::ModelParams) -> Result<(Tester, Tester, Tester)> {
    let ops = crate::quantum::model_operators(params);
    let q2 = SubsystemShape::qubits(2);
    let q3 = SubsystemShape::qubits(3);
    let q4 = SubsystemShape::qubits(4);
    // (A coin, B coin, A qubit, B qubit) → (B coin, B qubit | A coin, A qubit)
    let (rho_gamma, _) = permute_subsystems(&ops.rho_gamma, &q4, &[1, 3, 0, 2])?;
    // A on (β, coin, qubit) → (coin, qubit | β)
    let a = ops
        .a
        .iter()
        .map(|m| Ok(permute_subsystems(m, &q3, &[1, 2, 0])?.0))
        .collect::<Result<Vec<_>>>()?;
    let r = from_state_measurement(&rho_gamma, 4, 4, &a, 2)?;
    // (α→B, α→C) → (α→C | α→B); B is already (α | coin, qubit)
    let (rho_alpha, _) = permute_subsystems(&ops.rho_alpha, &q2, &[1, 0])?;
    let s = from_state_measurement(&rho_alpha, 2, 2, &ops.b, 4)?;
    // (β→A, β→C) is already (out | mid); C on (α, β) → (β | α)
    let c = ops
        .c
        .iter()
        .map(|m| Ok(permute_subsystems(m, &q2, &[1, 0])?.0))
        .collect::<Result<Vec<_>>>()?;
    let t = from_state_measurement(&ops.rho_beta, 2, 2, &c, 2)?;
    Ok((r, s, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{evaluate, ModelParams};
    use crate::rng::rng_for;
    use approx::assert_abs_diff_eq;

    fn projector(n: usize, k: usize) -> ComplexMatrix {
        ComplexMatrix::basis_projector(n, k)
    }

    #[test]
    fn pure_product_example() {
        let rho = projector(4, 0);
        let m = [projector(2, 0), projector(2, 1)];
        let t = from_state_measurement(&rho, 2, 2, &m, 1).unwrap();
        assert!((&t.elements()[0] - &projector(2, 0)).max_abs() < 1e-15);
        assert!(t.elements()[1].max_abs() < 1e-15);
        assert!(t.is_valid(1e-9));
    }

    #[test]
    fn factorized_state_gives_weighted_copies() {
        let sigma = ComplexMatrix::from_real(2, 2, &[0.7, 0.2, 0.2, 0.3]).unwrap();
        let tau = ComplexMatrix::diag_real(&[0.25, 0.75]);
        let m = [projector(2, 0), projector(2, 1)];
        let t = from_state_measurement(&kron(&sigma, &tau), 2, 2, &m, 1).unwrap();
        assert!((&t.elements()[0] - &sigma.scale(0.25)).max_abs() < 1e-15);
        assert!((&t.elements()[1] - &sigma.scale(0.75)).max_abs() < 1e-15);
    }

    #[test]
    fn validity_residuals() {
        let mixed = Tester::new(2, 2, alloc::vec![ComplexMatrix::identity(4).scale(0.25); 2]).unwrap();
        assert!(mixed.is_valid(1e-12));
        assert_eq!(mixed, Tester::maximally_mixed(2, 2, 2));
        // halves of the identity carry total trace 4 rather than d_in = 2
        let doubled = Tester::new(2, 2, alloc::vec![ComplexMatrix::identity(4).scale(0.5); 2]).unwrap();
        let v = doubled.validity(1e-9);
        assert!(!v.valid);
        assert_abs_diff_eq!(v.trace_residual, 2.0, epsilon = 1e-12);
        let mut bumped = mixed.into_elements();
        bumped[0][(0, 1)] += Complex64::new(0.1, 0.0);
        bumped[0][(1, 0)] += Complex64::new(0.1, 0.0);
        let v = Tester::new(2, 2, bumped).unwrap().validity(1e-9);
        assert!(!v.valid);
        assert!(v.normalization_residual >= 0.05, "{v:?}");
    }

    #[test]
    fn realize_maximally_mixed() {
        let t = Tester::maximally_mixed(2, 3, 2);
        let re = t.realize().unwrap();
        assert_eq!(re.d_mid, 3);
        let reduced = partial_trace(&re.rho, &SubsystemShape::new(alloc::vec![3, 3]).unwrap(), &[0]).unwrap();
        assert!((&reduced - &ComplexMatrix::identity(3).scale(1.0 / 3.0)).max_abs() < 1e-12);
        for m in &re.measurement {
            assert!((m - &ComplexMatrix::identity(6).scale(0.5)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn random_testers_roundtrip() {
        let mut rng = rng_for(11, 0);
        for (d_in, d_out) in [(2, 2), (3, 2), (2, 4), (4, 3)] {
            let t = random_tester(d_in, d_out, 2, &mut rng);
            assert!(t.is_valid(1e-9));
            let re = t.realize().unwrap();
            let back = from_state_measurement(&re.rho, d_out, re.d_mid, &re.measurement, d_in).unwrap();
            for (x, y) in t.elements().iter().zip(back.elements()) {
                assert!((x - y).frobenius_norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn rank_deficient_roundtrip() {
        // the state σ = |0><0| on a 2-dimensional out wire
        let rho = kron(&projector(2, 0), &projector(2, 1));
        let mut rng = rng_for(3, 1);
        let m = random_projective_measurement(4, 2, &mut rng);
        let t = from_state_measurement(&rho, 2, 2, &m, 2).unwrap();
        let re = t.realize().unwrap();
        let sum = &re.measurement[0] + &re.measurement[1];
        assert!((&sum - &ComplexMatrix::identity(4)).max_abs() < 1e-10);
        let back = from_state_measurement(&re.rho, 2, 2, &re.measurement, 2).unwrap();
        for (x, y) in t.elements().iter().zip(back.elements()) {
            assert!((x - y).frobenius_norm() <= 1e-9);
        }
    }

    #[test]
    fn classical_copy_testers_are_deterministic() {
        // each tester sends a fixed bit and outputs the bit it receives
        let copy = |sent: usize| {
            let rho = kron(&projector(2, sent), &projector(2, sent));
            let m = [kron(&ComplexMatrix::identity(2), &projector(2, 0)), kron(&ComplexMatrix::identity(2), &projector(2, 1))];
            from_state_measurement(&rho, 2, 2, &m, 2).unwrap()
        };
        // R sends 1 to S, S sends 0 to T, T sends 1 to R: a = 1, b = 1, c = 0
        let d = contract_triangle(&copy(1), &copy(0), &copy(1)).unwrap();
        assert_abs_diff_eq!(d.get(1, 1, 0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_testers_give_uniform() {
        let t = Tester::maximally_mixed(3, 3, 2);
        let d = contract_triangle(&t, &t, &t).unwrap();
        for &x in d.probs() {
            assert_abs_diff_eq!(x, 0.125, epsilon = 1e-14);
        }
    }

    #[test]
    fn model_testers_reproduce_the_model() {
        for p in [
            ModelParams::new(0.63, 0.4, 0.3, 1.1, -0.7).unwrap(),
            ModelParams::new(0.62922, 0.132337, 0.499724, 0.576193, 2.007606).unwrap(),
        ] {
            let (r, s, t) = model_testers(&p).unwrap();
            assert_eq!((r.d_in(), r.d_out()), (2, 4));
            for x in [&r, &s, &t] {
                assert!(x.is_valid(1e-9));
            }
            let d = contract_triangle(&r, &s, &t).unwrap();
            let e = evaluate(&p).unwrap();
            for (x, y) in d.probs().iter().zip(e.probs()) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mismatched_cycle_is_rejected() {
        let a = Tester::maximally_mixed(2, 2, 2);
        let b = Tester::maximally_mixed(3, 2, 2);
        assert!(matches!(contract_triangle(&a, &b, &a), Err(Error::DimensionMismatch(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn random_testers_are_valid_and_normalized(seed in any::<u64>(), d_in in 2usize..=4, d_out in 2usize..=4) {
                let mut rng = rng_for(seed, 0);
                let t = random_tester(d_in, d_out, 2, &mut rng);
                prop_assert!(t.is_valid(1e-9));
                let re = t.realize().unwrap();
                let back = from_state_measurement(&re.rho, d_out, re.d_mid, &re.measurement, d_in).unwrap();
                for (x, y) in t.elements().iter().zip(back.elements()) {
                    prop_assert!((x - y).frobenius_norm() <= 1e-8);
                }
            }

            #[test]
            fn triangle_is_normalized_and_linear(seed in any::<u64>(), d in 2usize..=3, lam in 0.0..=1.0f64) {
                let mut rng = rng_for(seed, 1);
                let r1 = random_tester(d, d, 2, &mut rng);
                let r2 = random_tester(d, d, 2, &mut rng);
                let s = random_tester(d, d, 2, &mut rng);
                let t = random_tester(d, d, 2, &mut rng);
                let d1 = contract_triangle(&r1, &s, &t).unwrap();
                prop_assert!((d1.sum() - 1.0).abs() <= 1e-9);
                let mix: Vec<ComplexMatrix> = r1.elements().iter().zip(r2.elements()).map(|(x, y)| {
                    let mut m = x.scale(lam);
                    m.add_scaled(y, 1.0 - lam);
                    m
                }).collect();
                let rm = Tester::new(d, d, mix).unwrap();
                let d2 = contract_triangle(&r2, &s, &t).unwrap();
                let dm = contract_triangle(&rm, &s, &t).unwrap();
                for k in 0..8 {
                    prop_assert!((dm.probs()[k] - lam * d1.probs()[k] - (1.0 - lam) * d2.probs()[k]).abs() <= 1e-12);
                }
            }
        }
    }
}
