//! Seesaw over the three triangle testers.
//!
//! With two testers fixed the distribution is affine in the third, so each
//! block is a convex quadratic over the tester set. The block problem is
//! solved by ADMM: the quadratic step is taken exactly on the affine
//! normalization subspace (an 8×8 linear system), the other step clips each
//! element onto the PSD cone. The iterate is then made exactly valid by
//! mixing in the maximally mixed tester.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dists::{l2_raw, TripartiteDistribution};
use crate::error::{Error, Result};
use crate::optim::solve_dense;
use crate::rng::rng_for;
use crate::tensor::{herm_eig, kron, link_product, partial_trace, ComplexMatrix, SubsystemShape};
use crate::testers::{check_cycle, contract_triangle, random_tester, Tester};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    /// Source γ with party A.
    R,
    /// Source α with party B.
    S,
    /// Source β with party C.
    T,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::R, Block::S, Block::T];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeesawConfig {
    pub wire_dim: usize,
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Accuracy of each block solve (ADMM residuals, relative).
    pub block_tol: f64,
    /// A restart stops once a sweep improves ℓ2 by less than this.
    pub conv_tol: f64,
    /// ADMM iteration cap per block inside a sweep.
    pub block_iters: usize,
    /// Line search along the last sweep's direction after every sweep.
    pub extrapolate: bool,
    /// Joint damped steps (see [`polish`]) after the sweeps end.
    pub polish_steps: usize,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            wire_dim: 4,
            restarts: 32,
            max_sweeps: 500,
            block_tol: 1e-10,
            conv_tol: 1e-12,
            block_iters: 50,
            extrapolate: true,
            polish_steps: 0,
            seed: 7,
        }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wire_dim == 0 || self.restarts == 0 || self.block_iters == 0 {
            return Err(Error::InvalidArgument(
                "wire_dim, restarts and block_iters must be positive".into(),
            ));
        }
        if !(self.block_tol > 0.0 && self.conv_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeesawResult {
    /// `(R, S, T)`.
    pub testers: [Tester; 3],
    pub l2: f64,
    pub sweeps_used: usize,
    pub restart_index: usize,
    /// ℓ2 after initialization, after each sweep and after each polish step.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSolution {
    pub tester: Tester,
    pub l2: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Operators `F_k` on the block's `(out, in)` wires with
/// `p(outcome o, rest k) = Tr(X_o F_k)`, and the map from `(o, k)` to the
/// outcome index `4a + 2b + c`.
struct Environment {
    f: Vec<ComplexMatrix>,
    index: [[usize; 4]; 2],
}

const GAMMA_B: &str = "gamma_b";
const ALPHA_C: &str = "alpha_c";
const BETA_A: &str = "beta_a";

fn environment(which: Block, r: &Tester, s: &Tester, t: &Tester) -> Result<Environment> {
    // (first fixed tester, labels), (second fixed tester, labels), block labels
    let (x, xl, y, yl, own) = match which {
        Block::R => (s, (ALPHA_C, GAMMA_B), t, (BETA_A, ALPHA_C), (GAMMA_B, BETA_A)),
        Block::S => (t, (BETA_A, ALPHA_C), r, (GAMMA_B, BETA_A), (ALPHA_C, GAMMA_B)),
        Block::T => (r, (GAMMA_B, BETA_A), s, (ALPHA_C, GAMMA_B), (BETA_A, ALPHA_C)),
    };
    let mut f = Vec::with_capacity(4);
    for i in 0..2 {
        let xi = x.labeled(i, xl.0, xl.1)?;
        for j in 0..2 {
            let e = link_product(&xi, &y.labeled(j, yl.0, yl.1)?)?.reorder(&[own.0, own.1])?;
            f.push(e.matrix.transpose().hermitian_part());
        }
    }
    let mut index = [[0; 4]; 2];
    for (o, row) in index.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            let (i, j) = (k / 2, k % 2);
            // k enumerates (b, c) for R, (c, a) for S and (a, b) for T
            let (a, b, c) = match which {
                Block::R => (o, i, j),
                Block::S => (j, o, i),
                Block::T => (i, j, o),
            };
            *slot = 4 * a + 2 * b + c;
        }
    }
    Ok(Environment { f, index })
}

/// Tester-shaped list of `K` Hermitian matrices on `out ⊗ in`.
type Elements = Vec<ComplexMatrix>;

struct Geometry {
    d_in: usize,
    d_out: usize,
    k: usize,
}

impl Geometry {
    fn n(&self) -> usize {
        self.d_in * self.d_out
    }

    fn shape(&self) -> SubsystemShape {
        SubsystemShape::new(vec![self.d_out, self.d_in]).unwrap()
    }

    /// `(Tr_in W / d_in) ⊗ 1` plus `shift · 1`.
    fn lift(&self, w: &ComplexMatrix, shift: f64) -> ComplexMatrix {
        let sigma = partial_trace(w, &self.shape(), &[0]).unwrap().scale(1.0 / self.d_in as f64);
        let mut out = kron(&sigma, &ComplexMatrix::identity(self.d_in));
        if shift != 0.0 {
            out.add_scaled(&ComplexMatrix::identity(self.n()), shift);
        }
        out
    }

    fn total(&self, x: &Elements) -> ComplexMatrix {
        let mut w = ComplexMatrix::zeros(self.n(), self.n());
        for e in x {
            w.add_scaled(e, 1.0);
        }
        w
    }

    /// Orthogonal projection onto `{Σ X_o = σ ⊗ 1, Tr σ = 1}`.
    fn project_affine(&self, x: &Elements) -> Elements {
        let w = self.total(x);
        let trace = w.trace().re;
        let target_shift = (self.d_in as f64 - trace) / self.n() as f64;
        let mut corr = self.lift(&w, target_shift);
        corr.add_scaled(&w, -1.0);
        let inv_k = 1.0 / self.k as f64;
        x.iter()
            .map(|e| {
                let mut m = e.clone();
                m.add_scaled(&corr, inv_k);
                m
            })
            .collect()
    }

    /// `W − Π(W)` where `Π` projects onto `{σ ⊗ 1 : Tr σ = 0}`.
    fn off_subspace(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let shift = -w.trace().re / self.n() as f64;
        let mut d = w.clone();
        d.add_scaled(&self.lift(w, shift), -1.0);
        d
    }

    fn mixed_element(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.n()).scale(1.0 / (self.k * self.d_out) as f64)
    }

    /// Mix an affine-feasible point with the maximally mixed tester just
    /// enough to make every element PSD.
    fn repair(&self, x: &Elements) -> Result<Elements> {
        let mut mu = f64::INFINITY;
        let herm: Elements = x.iter().map(|e| e.hermitian_part()).collect();
        for e in &herm {
            mu = mu.min(herm_eig(e)?.min_value());
        }
        if mu >= 0.0 {
            return Ok(herm);
        }
        let floor = 1.0 / (self.k * self.d_out) as f64;
        // slightly more than the exact amount, so roundoff cannot leave a
        // negative eigenvalue behind
        let lam = ((-mu) / (-mu + floor) * (1.0 + 1e-9)).min(1.0);
        let mix = self.mixed_element();
        Ok(herm
            .iter()
            .map(|e| {
                let mut m = e.scale(1.0 - lam);
                m.add_scaled(&mix, lam);
                m
            })
            .collect())
    }
}

fn predict(env: &Environment, x: &Elements) -> [f64; 8] {
    let mut p = [0.0; 8];
    for (o, e) in x.iter().enumerate() {
        for (k, f) in env.f.iter().enumerate() {
            p[env.index[o][k]] = e.inner(f);
        }
    }
    p
}

fn psd_clip(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(&m.hermitian_part())?;
    if eig.min_value() >= 0.0 {
        return Ok(m.hermitian_part());
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0)))
}

fn distance(a: &Elements, b: &Elements) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// ADMM on `min ||L X − t||²` over the tester set, started from `start`.
fn admm(
    env: &Environment,
    geo: &Geometry,
    target: &[f64; 8],
    start: &Elements,
    tol: f64,
    max_iter: usize,
) -> Result<(Elements, usize, bool)> {
    let m = env.f.len();
    let dim = geo.k * m;
    // Gram of the projected functionals: δ_oo' <F_k, F_k'> − <F_k, D_k'>/K
    let d: Vec<ComplexMatrix> = env.f.iter().map(|f| geo.off_subspace(f)).collect();
    let mut gram = vec![0.0; dim * dim];
    let inv_k = 1.0 / geo.k as f64;
    for o in 0..geo.k {
        for k in 0..m {
            for o2 in 0..geo.k {
                for k2 in 0..m {
                    let mut g = -env.f[k].inner(&d[k2]) * inv_k;
                    if o == o2 {
                        g += env.f[k].inner(&env.f[k2]);
                    }
                    gram[(o * m + k) * dim + o2 * m + k2] = g;
                }
            }
        }
    }
    let scale = (0..dim).map(|i| gram[i * dim + i]).sum::<f64>() / dim as f64;
    let mut rho = scale.max(1e-12);

    let lhs = |rho: f64| {
        let mut a = gram.clone();
        for i in 0..dim {
            a[i * dim + i] += 0.5 * rho;
        }
        a
    };

    let mut z: Elements = start.clone();
    let mut u: Elements = vec![ComplexMatrix::zeros(geo.n(), geo.n()); geo.k];
    let mut x = z.clone();
    let norm_ref = start.iter().map(|e| e.frobenius_norm().powi(2)).sum::<f64>().sqrt().max(1.0);
    for it in 0..max_iter {
        // X-step
        let v: Elements = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        let base = geo.project_affine(&v);
        let pred = predict(env, &base);
        let mut r = vec![0.0; dim];
        for o in 0..geo.k {
            for k in 0..m {
                r[o * m + k] = target[env.index[o][k]] - pred[env.index[o][k]];
            }
        }
        let mut a = lhs(rho);
        let mu = solve_dense(&mut a, r, dim)
            .ok_or_else(|| Error::Numerical("singular block system".into()))?;
        x = base;
        for k in 0..m {
            let mut dsum = ComplexMatrix::zeros(geo.n(), geo.n());
            for o in 0..geo.k {
                let c = mu[o * m + k];
                x[o].add_scaled(&env.f[k], c);
                dsum.add_scaled(&d[k], c);
            }
            for xo in x.iter_mut() {
                xo.add_scaled(&dsum, -inv_k);
            }
        }
        // Z-step
        let z_prev = z;
        z = x
            .iter()
            .zip(&u)
            .map(|(a, b)| psd_clip(&(a + b)))
            .collect::<Result<Vec<_>>>()?;
        for ((uo, xo), zo) in u.iter_mut().zip(&x).zip(&z) {
            uo.add_scaled(xo, 1.0);
            uo.add_scaled(zo, -1.0);
        }
        let primal = distance(&x, &z);
        let dual = rho * distance(&z, &z_prev);
        if primal <= tol * norm_ref && dual <= tol * norm_ref {
            return Ok((x, it + 1, true));
        }
        // residual balancing
        if primal > 10.0 * dual {
            rho *= 2.0;
            u.iter_mut().for_each(|e| *e = e.scale(0.5));
        } else if dual > 10.0 * primal {
            rho *= 0.5;
            u.iter_mut().for_each(|e| *e = e.scale(2.0));
        }
    }
    Ok((x, max_iter, false))
}

/// Best valid tester for block `which` given the other two, starting from
/// the current tester of that block. The result never has larger ℓ2 than
/// `current`.
pub fn block_solve(
    target: &TripartiteDistribution,
    testers: (&Tester, &Tester, &Tester),
    which: Block,
    tol: f64,
    max_iter: usize,
) -> Result<BlockSolution> {
    let (r, s, t) = testers;
    check_cycle(r, s, t)?;
    let current = match which {
        Block::R => r,
        Block::S => s,
        Block::T => t,
    };
    let env = environment(which, r, s, t)?;
    let geo = Geometry {
        d_in: current.d_in(),
        d_out: current.d_out(),
        k: current.outcomes(),
    };
    let target = target.probs();
    let start: Elements = current.elements().to_vec();
    let start_l2 = l2_raw(&predict(&env, &start), target);
    let (x, iterations, converged) = admm(&env, &geo, target, &start, tol, max_iter)?;
    let repaired = geo.repair(&geo.project_affine(&x))?;
    let l2 = l2_raw(&predict(&env, &repaired), target);
    if l2 < start_l2 {
        Ok(BlockSolution {
            tester: Tester::new(geo.d_in, geo.d_out, repaired)?,
            l2,
            iterations,
            converged,
        })
    } else {
        Ok(BlockSolution {
            tester: current.clone(),
            l2: start_l2,
            iterations,
            converged,
        })
    }
}

/// Gram matrix `L Π Lᵀ` of a block in outcome coordinates, where `L` maps
/// the block's elements to the 8 probabilities and `Π` projects onto the
/// linear part of the normalization subspace.
fn outcome_gram(env: &Environment, geo: &Geometry, d: &[ComplexMatrix]) -> [[f64; 8]; 8] {
    let m = env.f.len();
    let inv_k = 1.0 / geo.k as f64;
    let mut g = [[0.0; 8]; 8];
    for o in 0..geo.k {
        for k in 0..m {
            for o2 in 0..geo.k {
                for k2 in 0..m {
                    let mut v = -env.f[k].inner(&d[k2]) * inv_k;
                    if o == o2 {
                        v += env.f[k].inner(&env.f[k2]);
                    }
                    g[env.index[o][k]][env.index[o2][k2]] = v;
                }
            }
        }
    }
    g
}

/// `Π Lᵀ μ` for one block: element `o` gets `Σ_k μ(o, k) F_k`, and the
/// component off the normalization subspace is removed.
fn adjoint(env: &Environment, geo: &Geometry, d: &[ComplexMatrix], mu: &[f64]) -> Elements {
    let inv_k = 1.0 / geo.k as f64;
    let mut x = vec![ComplexMatrix::zeros(geo.n(), geo.n()); geo.k];
    let mut dsum = ComplexMatrix::zeros(geo.n(), geo.n());
    for (k, (f, dk)) in env.f.iter().zip(d).enumerate() {
        for (o, xo) in x.iter_mut().enumerate() {
            let c = mu[env.index[o][k]];
            xo.add_scaled(f, c);
            dsum.add_scaled(dk, c);
        }
    }
    for xo in x.iter_mut() {
        xo.add_scaled(&dsum, -inv_k);
    }
    x
}

/// ADMM on the joint proximal problem
/// `min ||Σ_b L_b X_b − c||² + (λ/2) Σ_b ||X_b − X0_b||²` over the product
/// of the three tester sets.
fn joint_admm(
    envs: &[Environment],
    geos: &[Geometry],
    c: &[f64; 8],
    x0: &[Elements],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<Elements>> {
    let ds: Vec<Vec<ComplexMatrix>> = envs
        .iter()
        .zip(geos)
        .map(|(env, geo)| env.f.iter().map(|f| geo.off_subspace(f)).collect())
        .collect();
    let mut gram = [[0.0; 8]; 8];
    for ((env, geo), d) in envs.iter().zip(geos).zip(&ds) {
        let g = outcome_gram(env, geo, d);
        for i in 0..8 {
            for j in 0..8 {
                gram[i][j] += g[i][j];
            }
        }
    }
    let scale = (0..8).map(|i| gram[i][i]).sum::<f64>() / 8.0;
    let mut rho = scale.max(1e-12);
    let norm_ref = x0
        .iter()
        .flatten()
        .map(|e| e.frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    let mut z: Vec<Elements> = x0.to_vec();
    let mut u: Vec<Elements> = geos
        .iter()
        .map(|g| vec![ComplexMatrix::zeros(g.n(), g.n()); g.k])
        .collect();
    let mut x = z.clone();
    for _ in 0..max_iter {
        let sigma = lambda + rho;
        let mut base = Vec::with_capacity(3);
        let mut r = *c;
        for b in 0..envs.len() {
            let w: Elements = x0[b]
                .iter()
                .zip(&z[b])
                .zip(&u[b])
                .map(|((p, zz), uu)| {
                    let mut m = p.scale(lambda / sigma);
                    m.add_scaled(&(zz - uu), rho / sigma);
                    m
                })
                .collect();
            let pw = geos[b].project_affine(&w);
            let pred = predict(&envs[b], &pw);
            for i in 0..8 {
                r[i] -= pred[i];
            }
            base.push(pw);
        }
        let mut a = vec![0.0; 64];
        for i in 0..8 {
            for j in 0..8 {
                a[i * 8 + j] = gram[i][j];
            }
            a[i * 8 + i] += 0.5 * sigma;
        }
        let mu = solve_dense(&mut a, r.to_vec(), 8)
            .ok_or_else(|| Error::Numerical("singular joint system".into()))?;
        x = base;
        for b in 0..envs.len() {
            let corr = adjoint(&envs[b], &geos[b], &ds[b], &mu);
            for (xo, co) in x[b].iter_mut().zip(&corr) {
                xo.add_scaled(co, 1.0);
            }
        }
        let z_prev = z;
        z = x
            .iter()
            .zip(&u)
            .map(|(xb, ub)| xb.iter().zip(ub).map(|(a, b)| psd_clip(&(a + b))).collect())
            .collect::<Result<Vec<_>>>()?;
        let (mut primal, mut dual) = (0.0f64, 0.0f64);
        for b in 0..envs.len() {
            for ((uo, xo), zo) in u[b].iter_mut().zip(&x[b]).zip(&z[b]) {
                uo.add_scaled(xo, 1.0);
                uo.add_scaled(zo, -1.0);
            }
            primal += distance(&x[b], &z[b]).powi(2);
            dual += distance(&z[b], &z_prev[b]).powi(2);
        }
        let (primal, dual) = (primal.sqrt(), rho * dual.sqrt());
        if primal <= tol * norm_ref && dual <= tol * norm_ref {
            break;
        }
        if primal > 10.0 * dual {
            rho *= 2.0;
            u.iter_mut().flatten().for_each(|e| *e = e.scale(0.5));
        } else if dual > 10.0 * primal {
            rho *= 0.5;
            u.iter_mut().flatten().for_each(|e| *e = e.scale(2.0));
        }
    }
    Ok(x)
}

/// ADMM accuracy and iteration cap of a polish step.
const POLISH_TOL: f64 = 1e-13;
const POLISH_ITERS: usize = 1000;
/// Polishing stops after this many rejected steps in a row.
const POLISH_MAX_REJECTS: usize = 8;

/// Damped joint steps on all three testers: the distribution is linearized
/// around the current testers and the proximal subproblem is solved over the
/// tester sets. A step is kept only if it lowers ℓ2; the damping `λ` shrinks
/// after a kept step and grows otherwise. Returns the final testers and the
/// ℓ2 after every step taken.
pub fn polish(
    target: &TripartiteDistribution,
    mut testers: [Tester; 3],
    steps: usize,
    tol: f64,
    max_iter: usize,
) -> Result<([Tester; 3], Vec<f64>)> {
    let t = target.probs();
    let mut l2 = l2_raw(contract_triangle(&testers[0], &testers[1], &testers[2])?.probs(), t);
    let mut trace = Vec::with_capacity(steps);
    let mut lambda = f64::NAN;
    let mut rejects = 0;
    for _ in 0..steps {
        let (r, s, tt) = (&testers[0], &testers[1], &testers[2]);
        let envs = [
            environment(Block::R, r, s, tt)?,
            environment(Block::S, r, s, tt)?,
            environment(Block::T, r, s, tt)?,
        ];
        let geos: Vec<Geometry> = testers
            .iter()
            .map(|x| Geometry {
                d_in: x.d_in(),
                d_out: x.d_out(),
                k: x.outcomes(),
            })
            .collect();
        let x0: Vec<Elements> = testers.iter().map(|x| x.elements().to_vec()).collect();
        let p0 = predict(&envs[0], &x0[0]);
        if lambda.is_nan() {
            // start at the curvature scale of the problem
            let f2 = envs.iter().flat_map(|e| &e.f).map(|f| f.frobenius_norm().powi(2)).sum::<f64>();
            lambda = f2 / 12.0;
        }
        let mut c = [0.0; 8];
        for i in 0..8 {
            c[i] = t[i] + 2.0 * p0[i];
        }
        let x = joint_admm(&envs, &geos, &c, &x0, lambda, tol, max_iter)?;
        let trial: Vec<Tester> = x
            .iter()
            .zip(&geos)
            .map(|(xb, geo)| Tester::new(geo.d_in, geo.d_out, geo.repair(&geo.project_affine(xb))?))
            .collect::<Result<_>>()?;
        let e = l2_raw(contract_triangle(&trial[0], &trial[1], &trial[2])?.probs(), t);
        if e < l2 {
            let mut it = trial.into_iter();
            testers = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
            l2 = e;
            lambda /= 3.0;
            rejects = 0;
        } else {
            lambda *= 4.0;
            rejects += 1;
        }
        trace.push(l2);
        if rejects >= POLISH_MAX_REJECTS {
            break;
        }
    }
    Ok((testers, trace))
}

/// Largest step factor tried by [`extrapolate`].
const MAX_EXTRAPOLATION: f64 = 64.0;

/// `X + β (X − X_prev)` for every tester, made PSD by mixing with the
/// maximally mixed tester. The affine constraints survive the step.
fn extrapolated(previous: &Tester, current: &Tester, beta: f64) -> Result<Tester> {
    let geo = Geometry {
        d_in: current.d_in(),
        d_out: current.d_out(),
        k: current.outcomes(),
    };
    let x: Elements = current
        .elements()
        .iter()
        .zip(previous.elements())
        .map(|(c, p)| {
            let mut m = c.scale(1.0 + beta);
            m.add_scaled(p, -beta);
            m
        })
        .collect();
    Tester::new(geo.d_in, geo.d_out, geo.repair(&x)?)
}

/// Line search along the direction of the last sweep with doubling steps
/// `β = 1, 2, 4, …`, keeping the best point. `None` when no step lowers ℓ2.
fn extrapolate(
    target: &TripartiteDistribution,
    previous: &[Tester; 3],
    current: &[Tester; 3],
    l2: f64,
) -> Result<Option<([Tester; 3], f64)>> {
    let mut best: Option<([Tester; 3], f64)> = None;
    let mut beta = 1.0;
    while beta <= MAX_EXTRAPOLATION {
        let trial = [
            extrapolated(&previous[0], &current[0], beta)?,
            extrapolated(&previous[1], &current[1], beta)?,
            extrapolated(&previous[2], &current[2], beta)?,
        ];
        let e = l2_raw(contract_triangle(&trial[0], &trial[1], &trial[2])?.probs(), target.probs());
        if e < best.as_ref().map_or(l2, |b| b.1) {
            best = Some((trial, e));
            beta *= 2.0;
        } else {
            break;
        }
    }
    Ok(best)
}

/// One seeded restart.
pub fn run_restart(target: &TripartiteDistribution, cfg: &SeesawConfig, index: usize) -> Result<SeesawResult> {
    cfg.validate()?;
    let d = cfg.wire_dim;
    let mut rng = rng_for(cfg.seed, index as u64);
    let testers = [
        random_tester(d, d, 2, &mut rng),
        random_tester(d, d, 2, &mut rng),
        random_tester(d, d, 2, &mut rng),
    ];
    continue_from(target, testers, cfg, index)
}

/// Sweeps from given testers `(R, S, T)`; `cfg.wire_dim` and `cfg.seed` are
/// not used.
pub fn continue_from(
    target: &TripartiteDistribution,
    mut testers: [Tester; 3],
    cfg: &SeesawConfig,
    index: usize,
) -> Result<SeesawResult> {
    cfg.validate()?;
    let mut l2 = l2_raw(contract_triangle(&testers[0], &testers[1], &testers[2])?.probs(), target.probs());
    let mut trace = vec![l2];
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        let before = l2;
        let previous = testers.clone();
        for (slot, which) in Block::ALL.iter().enumerate() {
            let sol = block_solve(
                target,
                (&testers[0], &testers[1], &testers[2]),
                *which,
                cfg.block_tol,
                cfg.block_iters,
            )?;
            testers[slot] = sol.tester;
            l2 = sol.l2;
        }
        if cfg.extrapolate {
            if let Some((t, e)) = extrapolate(target, &previous, &testers, l2)? {
                testers = t;
                l2 = e;
            }
        }
        sweeps += 1;
        trace.push(l2);
        if before - l2 < cfg.conv_tol {
            break;
        }
    }
    if cfg.polish_steps > 0 {
        let (t, steps) = polish(target, testers, cfg.polish_steps, POLISH_TOL, POLISH_ITERS)?;
        testers = t;
        if let Some(&last) = steps.last() {
            l2 = last;
        }
        trace.extend(steps);
    }
    Ok(SeesawResult {
        testers,
        l2,
        sweeps_used: sweeps,
        restart_index: index,
        trace,
    })
}

/// Best restart: smallest ℓ2, ties to the lowest restart index.
pub fn reduce(results: impl IntoIterator<Item = SeesawResult>) -> Option<SeesawResult> {
    results.into_iter().fold(None, |best: Option<SeesawResult>, r| match best {
        Some(b) if (b.l2, b.restart_index) <= (r.l2, r.restart_index) => Some(b),
        _ => Some(r),
    })
}

/// All restarts in order, reduced to the best one.
pub fn run(target: &TripartiteDistribution, cfg: &SeesawConfig) -> Result<SeesawResult> {
    cfg.validate()?;
    let mut results = Vec::with_capacity(cfg.restarts);
    for i in 0..cfg.restarts {
        results.push(run_restart(target, cfg, i)?);
    }
    reduce(results).ok_or_else(|| Error::InvalidArgument(format!("no restarts in {cfg:?}")))
}

/// Whether a trace never increases by more than `tol` between sweeps.
pub fn is_monotone(trace: &[f64], tol: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + tol)
}
