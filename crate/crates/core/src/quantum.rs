//! The five-parameter quantum model for the binary triangle.
//!
//! Sources α and β are classical bits with `P(0) = p0`, shared by C with B
//! and A respectively. Source γ sends A and B a shared classical coin
//! (`P(coin = 0) = p_empty`) together with the two-qubit state
//! `|ω> = cos ω |00> − sin ω |11>`. Party C outputs `c = (α⊕1)(β⊕1)`. When
//! the coin is 0, A announces β and B announces α; otherwise A measures
//! `M_β = cos θ_β σz + sin θ_β σx` on its qubit (B measures `M_α`).
//! Observable eigenvalue +1 is outcome 0.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use num_rational::Ratio;

use crate::dists::{l2_raw, w_dist, TripartiteDistribution, Visibility};
use crate::error::{Error, Result};
use crate::optim::{self, LmOptions, NelderMeadOptions};
use crate::tensor::{kron, kron_all, permute_subsystems, ComplexMatrix, SubsystemShape};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Probability that α (and β) is 0.
    pub p0: f64,
    /// Probability that the γ coin is 0.
    pub p_empty: f64,
    pub omega: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl ModelParams {
    pub fn new(p0: f64, p_empty: f64, omega: f64, theta0: f64, theta1: f64) -> Result<Self> {
        let p = Self {
            p0,
            p_empty,
            omega,
            theta0,
            theta1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if !prob(self.p0) || !prob(self.p_empty) {
            return Err(Error::InvalidArgument("p0 and p_empty must lie in [0, 1]".into()));
        }
        if ![self.omega, self.theta0, self.theta1].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(())
    }

    pub fn with_p_empty(mut self, p_empty: f64) -> Self {
        self.p_empty = p_empty;
        self
    }

    fn theta(&self, bit: usize) -> f64 {
        if bit == 0 {
            self.theta0
        } else {
            self.theta1
        }
    }
}

/// Parameters fixed by matching the C marginal, the single-body and the
/// two-body correlators of `W_v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivedParams {
    Feasible { p0: f64, p_empty: f64, omega: f64 },
    Infeasible,
}

const SINGULAR: f64 = 1e-12;

/// `(p0, p_empty, cos 2ω)` or `None` when a denominator vanishes or the
/// values leave their ranges.
fn derived_raw(v: f64, theta0: f64, theta1: f64) -> Option<(f64, f64, f64)> {
    let (c0, c1) = (theta0.cos(), theta1.cos());
    let root = (6.0 * (3.0 - v)).sqrt();
    let p0 = (0.5 - v / 6.0).sqrt();
    let den_empty = (3.0 - v) * (c0 + c1);
    let den_omega = (v * (3.0 + root) - 9.0) * c0 - 9.0 * (1.0 - v) * c1;
    if den_empty.abs() < SINGULAR || den_omega.abs() < SINGULAR {
        return None;
    }
    let p_empty = v / 3.0 * (root * c0 + 6.0 * c1) / den_empty;
    // The single-body matching condition for the model as constructed gives
    // `<M_j> = −v(6 − √(6(3−v))) cos θ_j / den`, so `cos 2ω` carries the
    // opposite sign of the bare ratio.
    let cos2w = -v * (6.0 - root) / den_omega;
    if !(0.0..=1.0).contains(&p_empty) || cos2w.abs() > 1.0 {
        return None;
    }
    Some((p0, p_empty, cos2w))
}

/// Analytic relations for `p0`, `p_empty` and `ω` given `v` and the two
/// measurement angles. `ω = ½ arccos(·) ∈ [0, π/2]`; a vanishing numerator
/// gives `ω = π/4`.
pub fn derived_params(v: &Visibility, theta0: f64, theta1: f64) -> DerivedParams {
    match derived_raw(v.value(), theta0, theta1) {
        Some((p0, p_empty, cos2w)) => DerivedParams::Feasible {
            p0,
            p_empty,
            omega: if cos2w == 0.0 { FRAC_PI_4 } else { 0.5 * cos2w.acos() },
        },
        None => DerivedParams::Infeasible,
    }
}

/// Full parameter set on a given `ω` sign branch.
fn params_on_branch(v: f64, theta0: f64, theta1: f64, omega_sign: f64) -> Option<ModelParams> {
    let (p0, p_empty, cos2w) = derived_raw(v, theta0, theta1)?;
    Some(ModelParams {
        p0,
        p_empty,
        omega: omega_sign * 0.5 * cos2w.acos(),
        theta0,
        theta1,
    })
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag_real(&[1.0, -1.0])
}

fn pauli_plane(theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    ComplexMatrix::from_real(2, 2, &[c, s, s, -c]).unwrap()
}

/// Raw operators of the model.
#[derive(Clone, Debug)]
pub struct ModelOperators {
    /// On (α→B bit, α→C bit).
    pub rho_alpha: ComplexMatrix,
    /// On (β→A bit, β→C bit).
    pub rho_beta: ComplexMatrix,
    /// On (A coin, B coin, A qubit, B qubit).
    pub rho_gamma: ComplexMatrix,
    /// A's effects on (β bit, coin, qubit), outcome 0 then 1.
    pub a: [ComplexMatrix; 2],
    /// B's effects on (α bit, coin, qubit).
    pub b: [ComplexMatrix; 2],
    /// C's effects on (α bit, β bit).
    pub c: [ComplexMatrix; 2],
}

pub fn model_operators(params: &ModelParams) -> ModelOperators {
    let classical_pair = |p: f64| ComplexMatrix::diag_real(&[p, 0.0, 0.0, 1.0 - p]);
    let (sw, cw) = params.omega.sin_cos();
    let ket = [real(cw), real(0.0), real(0.0), real(-sw)];
    let rho_gamma = kron(&classical_pair(params.p_empty), &ComplexMatrix::outer(&ket));

    let p0 = ComplexMatrix::basis_projector(2, 0);
    let p1 = ComplexMatrix::basis_projector(2, 1);
    let id2 = ComplexMatrix::identity(2);
    // σz ⊗ |0><0| ⊗ 1 + Σ_j |j><j| ⊗ |1><1| ⊗ M_j
    let mut observable = kron_all(&[&sigma_z(), &p0, &id2]);
    observable.add_scaled(&kron_all(&[&p0, &p1, &pauli_plane(params.theta0)]), 1.0);
    observable.add_scaled(&kron_all(&[&p1, &p1, &pauli_plane(params.theta1)]), 1.0);
    let id8 = ComplexMatrix::identity(8);
    let effects = [
        (&id8 + &observable).scale(0.5),
        (&id8 - &observable).scale(0.5),
    ];
    let c1 = ComplexMatrix::basis_projector(4, 0);
    let c0 = &ComplexMatrix::identity(4) - &c1;
    ModelOperators {
        rho_alpha: classical_pair(params.p0),
        rho_beta: classical_pair(params.p0),
        rho_gamma,
        a: effects.clone(),
        b: effects,
        c: [c0, c1],
    }
}

/// Factor order of the joint state: (α→B, α→C, β→A, β→C, A coin, B coin,
/// A qubit, B qubit).
const STATE_LAYOUT_FROM_PARTIES: [usize; 8] = [3, 6, 0, 7, 1, 4, 2, 5];

/// `p(a,b,c) = Tr[(ρ_α⊗ρ_β⊗ρ_γ)(A_a⊗B_b⊗C_c)]` on the full 2^8 space, with
/// the measurement operators reordered onto the source layout.
pub fn evaluate(params: &ModelParams) -> Result<TripartiteDistribution> {
    params.validate()?;
    let ops = model_operators(params);
    let rho = kron_all(&[&ops.rho_alpha, &ops.rho_beta, &ops.rho_gamma]);
    let n = rho.rows();
    let nonzero: Vec<(usize, usize, Complex64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let z = rho[(i, j)];
            (z.norm() > 0.0).then_some((i, j, z))
        })
        .collect();
    let shape = SubsystemShape::qubits(8);
    let mut p = [0.0; 8];
    for a in 0..2 {
        for b in 0..2 {
            let ab = kron(&ops.a[a], &ops.b[b]);
            for c in 0..2 {
                let joint = kron(&ab, &ops.c[c]);
                let (aligned, _) = permute_subsystems(&joint, &shape, &STATE_LAYOUT_FROM_PARTIES)?;
                let val: Complex64 = nonzero.iter().map(|&(i, j, z)| z * aligned[(j, i)]).sum();
                p[4 * a + 2 * b + c] = val.re;
            }
        }
    }
    Ok(TripartiteDistribution::from_model(p))
}

/// `P(a, b)` when A measures `M(theta_a)` and B measures `M(theta_b)` on
/// `|ω>`.
fn qubit_pair_probs(omega: f64, theta_a: f64, theta_b: f64) -> [[f64; 2]; 2] {
    let (s2w, c2w) = (2.0 * omega).sin_cos();
    let (sa, ca) = theta_a.sin_cos();
    let (sb, cb) = theta_b.sin_cos();
    let ma = c2w * ca;
    let mb = c2w * cb;
    let mab = ca * cb - s2w * sa * sb;
    let mut out = [[0.0; 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            let sa = if a == 0 { 1.0 } else { -1.0 };
            let sb = if b == 0 { 1.0 } else { -1.0 };
            *slot = 0.25 * (1.0 + sa * ma + sb * mb + sa * sb * mab);
        }
    }
    out
}

/// `p(a, b | β, α)`: the conditional of A and B given the classical bits,
/// indexed `[β][α][a][b]`.
fn conditional_ab(params: &ModelParams) -> [[[[f64; 2]; 2]; 2]; 2] {
    let mut t = [[[[0.0; 2]; 2]; 2]; 2];
    for (beta, row) in t.iter_mut().enumerate() {
        for (alpha, cell) in row.iter_mut().enumerate() {
            let q = qubit_pair_probs(params.omega, params.theta(beta), params.theta(alpha));
            for a in 0..2 {
                for b in 0..2 {
                    let classical = if a == beta && b == alpha { 1.0 } else { 0.0 };
                    cell[a][b] = params.p_empty * classical + (1.0 - params.p_empty) * q[a][b];
                }
            }
        }
    }
    t
}

/// Closed form of [`evaluate`] obtained by conditioning on the classical
/// sources; used on the optimization hot paths.
pub fn evaluate_reduced(params: &ModelParams) -> [f64; 8] {
    let q = [params.p0, 1.0 - params.p0];
    let cond = conditional_ab(params);
    let mut p = [0.0; 8];
    for alpha in 0..2 {
        for beta in 0..2 {
            let w = q[alpha] * q[beta];
            let c = usize::from(alpha == 0 && beta == 0);
            for a in 0..2 {
                for b in 0..2 {
                    p[4 * a + 2 * b + c] += w * cond[beta][alpha][a][b];
                }
            }
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub l2: f64,
    pub v: Visibility,
    pub iterations: usize,
}

/// Grid resolution and refinement budget used by the command line and the
/// scans.
pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_REFINE_ITERS: usize = 4000;

/// Number of grid seeds refined per `ω` branch.
const SEEDS_PER_BRANCH: usize = 6;

struct Objective {
    v: f64,
    target: [f64; 8],
}

impl Objective {
    fn new(v: &Visibility) -> Self {
        Self {
            v: v.value(),
            target: *w_dist(v).probs(),
        }
    }

    fn params(&self, x: &[f64], sign: f64) -> Option<ModelParams> {
        params_on_branch(self.v, x[0], x[1], sign)
    }

    fn l2(&self, x: &[f64], sign: f64) -> f64 {
        match self.params(x, sign) {
            Some(p) => l2_raw(&evaluate_reduced(&p), &self.target),
            None => f64::INFINITY,
        }
    }

    fn residuals(&self, x: &[f64], sign: f64, r: &mut [f64]) -> bool {
        match self.params(x, sign) {
            Some(p) => {
                let q = evaluate_reduced(&p);
                for k in 0..8 {
                    r[k] = q[k] - self.target[k];
                }
                true
            }
            None => false,
        }
    }

    /// Least-squares polish from `x`; `None` if the start is infeasible.
    fn polish(&self, x: &[f64], sign: f64) -> Option<(Vec<f64>, f64, usize)> {
        let start = self.l2(x, sign);
        if !start.is_finite() {
            return None;
        }
        let mut res = |x: &[f64], r: &mut [f64]| self.residuals(x, sign, r);
        let mut res_fd = |x: &[f64], r: &mut [f64]| self.residuals(x, sign, r);
        let lm = optim::levenberg_marquardt(
            8,
            x,
            &mut res,
            |x: &[f64], j: &mut [f64]| optim::finite_difference_jacobian(8, x, 1e-7, &mut res_fd, j),
            LmOptions {
                max_iter: 100,
                rtol: 1e-17,
                ..Default::default()
            },
        );
        match lm {
            Some(lm) => {
                // recompute rather than trusting the solver's bookkeeping
                let l2 = self.l2(&lm.x, sign);
                if l2 < start {
                    Some((lm.x, l2, lm.iterations))
                } else {
                    Some((x.to_vec(), start, lm.iterations))
                }
            }
            None => Some((x.to_vec(), start, 0)),
        }
    }

    /// Simplex descent on ℓ2 followed by a least-squares polish.
    fn refine(&self, start: [f64; 2], sign: f64, step: f64, iters: usize) -> Option<(ModelParams, f64, usize)> {
        let nm = optim::nelder_mead(
            |x| self.l2(x, sign),
            &start,
            step,
            NelderMeadOptions {
                max_iter: iters,
                ..Default::default()
            },
        );
        let (x, l2, lm_iters) = match self.polish(&nm.x, sign) {
            Some(found) => found,
            None => (nm.x.clone(), nm.value, 0),
        };
        let params = self.params(&x, sign)?;
        Some((canonical(params), l2, nm.iterations + lm_iters))
    }

    /// Polish first and fall back to [`Objective::refine`] when that does
    /// not reach an exact match.
    fn refine_near(&self, start: [f64; 2], sign: f64, iters: usize) -> Option<(ModelParams, f64, usize)> {
        if let Some((x, l2, it)) = self.polish(&start, sign) {
            if l2 <= WARM_ACCEPT {
                return Some((canonical(self.params(&x, sign)?), l2, it));
            }
        }
        self.refine(start, sign, 1e-3, iters)
    }
}

/// Representative of the symmetry class of a parameter point. Both
/// `(θ0, θ1) → (−θ0, −θ1)` and `(θ0, θ1, ω) → (π − θ0, π − θ1, ±π/2 − ω)`
/// leave the distribution unchanged; the representative has
/// `θ0 ∈ [0, π/2]` and `ω ∈ (−π/2, π/2]`.
pub fn canonical(mut p: ModelParams) -> ModelParams {
    p.omega = wrap_half_turn(p.omega);
    p.theta0 = wrap_angle(p.theta0);
    p.theta1 = wrap_angle(p.theta1);
    if p.theta0.cos() < 0.0 {
        p.theta0 = wrap_angle(PI - p.theta0);
        p.theta1 = wrap_angle(PI - p.theta1);
        p.omega = wrap_half_turn(if p.omega < 0.0 { -FRAC_PI_2 } else { FRAC_PI_2 } - p.omega);
    }
    if p.theta0 < 0.0 {
        p.theta0 = wrap_angle(-p.theta0);
        p.theta1 = wrap_angle(-p.theta1);
    }
    p
}

/// `ω` modulo π (a global sign of the state), in `(−π/2, π/2]`.
fn wrap_half_turn(x: f64) -> f64 {
    let mut y = x % PI;
    if y <= -FRAC_PI_2 {
        y += PI;
    } else if y > FRAC_PI_2 {
        y -= PI;
    }
    y
}

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x % two_pi;
    if y <= -PI {
        y += two_pi;
    } else if y > PI {
        y -= two_pi;
    }
    y
}

fn omega_sign(p: &ModelParams) -> f64 {
    if p.omega < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Minimize `ℓ2(model, W_v)` over `(θ0, θ1)` with the remaining parameters
/// given by [`derived_params`].
///
/// The exact solution set has several branches, and two of them merge just
/// above `v = 0.6245`. The reported branch is the one continued from the
/// uniform point at `v = 0` (`θ0 = θ1 = ω = π/4`) in steps of at most
/// [`CONTINUATION_STEP`]; a global grid search ([`fit_global`]) replaces it
/// only when the continuation is clearly worse.
pub fn fit(v: &Visibility, grid: usize, refine_iters: usize) -> Result<FitResult> {
    let global = fit_global(v, grid, refine_iters)?;
    Ok(match continuation(v, refine_iters) {
        Some(path) if path.l2 <= WARM_ACCEPT.max(10.0 * global.l2) => path,
        _ => global,
    })
}

/// Largest visibility increment between warm starts.
pub const CONTINUATION_STEP: f64 = 1.0 / 1600.0;

/// Start of the continuation: reproduces the uniform distribution at `v = 0`.
pub fn continuation_anchor() -> ModelParams {
    ModelParams {
        p0: FRAC_1_SQRT_2,
        p_empty: 0.0,
        omega: FRAC_PI_4,
        theta0: FRAC_PI_4,
        theta1: FRAC_PI_4,
    }
}

fn continuation(v: &Visibility, refine_iters: usize) -> Option<FitResult> {
    let steps = (v.value() / CONTINUATION_STEP).ceil().max(1.0) as i64;
    let mut current = continuation_anchor();
    let mut last = None;
    for k in 1..=steps {
        let vk = Visibility::new(v.numer().checked_mul(k)?, v.denom().checked_mul(steps)?).ok()?;
        let r = fit_warm(&vk, &current, refine_iters)?;
        current = r.params;
        last = Some(r);
    }
    last.map(|r| FitResult { v: *v, ..r })
}

/// Global search: a uniform `grid × grid` scan of `(θ0, θ1)` on both signs of
/// `ω` (the distribution depends on `sin 2ω`, which the relations leave
/// open), followed by refinement of the best seeds.
pub fn fit_global(v: &Visibility, grid: usize, refine_iters: usize) -> Result<FitResult> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let obj = Objective::new(v);
    let step = 2.0 * PI / grid as f64;
    let mut best: Option<(ModelParams, f64, usize)> = None;
    let mut any_feasible = false;
    for sign in [1.0, -1.0] {
        let mut seeds: Vec<(f64, [f64; 2])> = Vec::new();
        for i in 0..grid {
            for j in 0..grid {
                let x = [-PI + step * (i + 1) as f64, -PI + step * (j + 1) as f64];
                let l2 = obj.l2(&x, sign);
                if l2.is_finite() {
                    seeds.push((l2, x));
                }
            }
        }
        any_feasible |= !seeds.is_empty();
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, x) in seeds.iter().take(SEEDS_PER_BRANCH) {
            if let Some(found) = obj.refine(*x, sign, 0.5 * step, refine_iters) {
                if best.as_ref().is_none_or(|b| found.1 < b.1) {
                    best = Some(found);
                }
            }
        }
    }
    if !any_feasible {
        return Err(Error::Infeasible(alloc::format!(
            "every grid point is infeasible at v = {v}"
        )));
    }
    let (params, l2, iterations) =
        best.ok_or_else(|| Error::Infeasible(alloc::format!("refinement failed at v = {v}")))?;
    Ok(FitResult {
        params,
        l2,
        v: *v,
        iterations,
    })
}

/// Refine from a previous optimum on the same `ω` branch.
pub fn fit_warm(v: &Visibility, start: &ModelParams, refine_iters: usize) -> Option<FitResult> {
    let obj = Objective::new(v);
    let (params, l2, iterations) =
        obj.refine_near([start.theta0, start.theta1], omega_sign(start), refine_iters)?;
    Some(FitResult {
        params,
        l2,
        v: *v,
        iterations,
    })
}

/// Visibilities `from, from + step, …` up to and including `to`.
pub fn visibility_grid(from: Ratio<i64>, to: Ratio<i64>, step: Ratio<i64>) -> Result<Vec<Visibility>> {
    if step <= Ratio::from_integer(0) {
        return Err(Error::InvalidArgument("scan step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut k = 0i64;
    loop {
        let v = from + step * k;
        if v > to {
            break;
        }
        out.push(Visibility::new(*v.numer(), *v.denom())?);
        k += 1;
    }
    Ok(out)
}

/// A fit at every grid visibility. The first point uses [`fit`]; later
/// points warm-start from the previous optimum, and a global search replaces
/// the warm result only when it is clearly better, keeping the parameter
/// curves on one branch.
pub fn scan(from: Ratio<i64>, to: Ratio<i64>, step: Ratio<i64>) -> Result<Vec<FitResult>> {
    scan_points(&visibility_grid(from, to, step)?)
}

/// [`scan`] over explicit points. Contiguous chunks of a grid can be scanned
/// independently; each chunk starts with a full [`fit`].
pub fn scan_points(grid: &[Visibility]) -> Result<Vec<FitResult>> {
    let mut out: Vec<FitResult> = Vec::with_capacity(grid.len());
    for &v in grid {
        let chosen = match out.last() {
            None => fit(&v, DEFAULT_GRID, DEFAULT_REFINE_ITERS)?,
            Some(prev) => {
                let cold = fit_global(&v, DEFAULT_GRID, DEFAULT_REFINE_ITERS)?;
                match fit_warm(&v, &prev.params, DEFAULT_REFINE_ITERS) {
                    Some(warm) if warm.l2 <= WARM_ACCEPT.max(10.0 * cold.l2) => warm,
                    _ => cold,
                }
            }
        };
        out.push(chosen);
    }
    Ok(out)
}

/// Warm-started fits at or below this distance are kept for continuity.
const WARM_ACCEPT: f64 = 1e-13;

/// Effective bipartite Bell test with the classical bits as inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshReport {
    /// `p(a, b | β, α)` indexed `[β][α][a][b]`.
    pub table: [[[[f64; 2]; 2]; 2]; 2],
    /// Correlators `E(β, α)`.
    pub correlators: [[f64; 2]; 2],
    /// Largest CHSH combination over the eight sign conventions.
    pub value: f64,
}

pub fn bipartite_chsh(params: &ModelParams) -> Result<ChshReport> {
    params.validate()?;
    let table = conditional_ab(params);
    let mut e = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let t = &table[x][y];
            e[x][y] = t[0][0] + t[1][1] - t[0][1] - t[1][0];
        }
    }
    let total = e[0][0] + e[0][1] + e[1][0] + e[1][1];
    let mut value = f64::NEG_INFINITY;
    for s in e.iter().flatten().map(|exy| total - 2.0 * exy) {
        value = value.max(s).max(-s);
    }
    Ok(ChshReport {
        table,
        correlators: e,
        value,
    })
}

/// CHSH value of the fitted model at `v`.
pub fn fitted_chsh(v: &Visibility) -> Result<f64> {
    let fit = fit(v, DEFAULT_GRID, DEFAULT_REFINE_ITERS)?;
    Ok(bipartite_chsh(&fit.params)?.value)
}

/// Bracket of the visibility where the fitted model starts violating CHSH,
/// halved `depth` times from `[lo, hi]`. Needs no violation at `lo` and a
/// violation at `hi`.
pub fn chsh_onset(lo: &Visibility, hi: &Visibility, depth: usize) -> Result<(Visibility, Visibility)> {
    if lo.ratio() >= hi.ratio() {
        return Err(Error::InvalidArgument("need lo < hi".into()));
    }
    if fitted_chsh(lo)? > 2.0 {
        return Err(Error::InvalidArgument(alloc::format!("CHSH is already violated at v = {lo}")));
    }
    if fitted_chsh(hi)? <= 2.0 {
        return Err(Error::InvalidArgument(alloc::format!("CHSH is not violated at v = {hi}")));
    }
    let (mut a, mut b) = (lo.ratio(), hi.ratio());
    for _ in 0..depth {
        let mid = (a + b) / 2;
        if fitted_chsh(&Visibility::new(*mid.numer(), *mid.denom())?)? > 2.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok((Visibility::new(*a.numer(), *a.denom())?, Visibility::new(*b.numer(), *b.denom())?))
}

/// Distribution of a parameter point as a validated value.
pub fn distribution(params: &ModelParams) -> Result<TripartiteDistribution> {
    params.validate()?;
    TripartiteDistribution::new(evaluate_reduced(params))
}
