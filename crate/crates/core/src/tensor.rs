//! Dense complex linear algebra over small multipartite Hilbert spaces.
//!
//! Composite indices are row-major with the first tensor factor most
//! significant: for factor dimensions `[d0, d1, d2]` the basis vector
//! `|i0 i1 i2>` sits at `(i0 * d1 + i1) * d2 + i2`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Symmetric deviation allowed before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(v, 0.0);
        }
        m
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    /// Projector onto a computational basis vector.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[k * n + k] = C64::new(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &ComplexMatrix, s: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real part of `Tr(A^dagger B)`, the Hilbert-Schmidt inner product.
    pub fn inner(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// `max |M - M^dagger|` over entries; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(alloc::format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    fn same_shape(&self, other: &ComplexMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.same_shape(rhs), "shape mismatch in matrix addition");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.same_shape(rhs), "shape mismatch in matrix subtraction");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in matrix product")
    }
}

/// Local dimensions of the tensor factors of a square matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "subsystem dimensions must be positive".into(),
            ));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Per-factor digits of a composite index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.total() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "shape {:?} (total {}) does not describe a {}x{} matrix",
                self.dims,
                self.total(),
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.dims.len() {
            return Err(Error::SubsystemOutOfRange {
                index: k,
                count: self.dims.len(),
            });
        }
        Ok(())
    }
}

/// `(A ⊗ B)[(i*rB + k), (j*cB + l)] = A[i,j] B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x.is_zero() {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for l in 0..b.cols {
                    out.data[base + l] = x * b.data[k * b.cols + l];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

/// Trace out every factor not listed in `keep`. Kept factors stay in their
/// original order regardless of the order of `keep`.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    shape.check_matrix(m)?;
    let mut kept = vec![false; shape.len()];
    for &k in keep {
        shape.check_index(k)?;
        kept[k] = true;
    }
    let n = shape.total();
    let kept_dim: usize = shape
        .dims
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d)
        .product();
    // Split each composite index into (kept part, traced part).
    let mut kept_idx = vec![0usize; n];
    let mut traced_idx = vec![0usize; n];
    for i in 0..n {
        let digits = shape.digits(i);
        let (mut ki, mut ti) = (0usize, 0usize);
        for (f, &d) in shape.dims.iter().enumerate() {
            if kept[f] {
                ki = ki * d + digits[f];
            } else {
                ti = ti * d + digits[f];
            }
        }
        kept_idx[i] = ki;
        traced_idx[i] = ti;
    }
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..n {
        for j in 0..n {
            if traced_idx[i] == traced_idx[j] {
                out[(kept_idx[i], kept_idx[j])] += m.data[i * n + j];
            }
        }
    }
    Ok(out)
}

/// Transpose the listed factors only.
pub fn partial_transpose(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    subsystems: &[usize],
) -> Result<ComplexMatrix> {
    shape.check_matrix(m)?;
    let mut flip = vec![false; shape.len()];
    for &k in subsystems {
        shape.check_index(k)?;
        flip[k] = true;
    }
    let n = shape.total();
    let digits: Vec<Vec<usize>> = (0..n).map(|i| shape.digits(i)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut di = vec![0; shape.len()];
    let mut dj = vec![0; shape.len()];
    for i in 0..n {
        for j in 0..n {
            for f in 0..shape.len() {
                if flip[f] {
                    di[f] = digits[j][f];
                    dj[f] = digits[i][f];
                } else {
                    di[f] = digits[i][f];
                    dj[f] = digits[j][f];
                }
            }
            out.data[i * n + j] = m.data[shape.compose(&di) * n + shape.compose(&dj)];
        }
    }
    Ok(out)
}

/// Reorder tensor factors: factor `k` of the result is factor `perm[k]` of
/// the input. Returns the permuted matrix and its shape.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    perm: &[usize],
) -> Result<(ComplexMatrix, SubsystemShape)> {
    shape.check_matrix(m)?;
    let map = permutation_map(shape, perm)?;
    let n = shape.total();
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &src_i) in map.iter().enumerate() {
        for (j, &src_j) in map.iter().enumerate() {
            out.data[i * n + j] = m.data[src_i * n + src_j];
        }
    }
    let new_shape = SubsystemShape {
        dims: perm.iter().map(|&p| shape.dims[p]).collect(),
    };
    Ok((out, new_shape))
}

/// For every composite index of the permuted space, the corresponding index
/// of the original space.
fn permutation_map(shape: &SubsystemShape, perm: &[usize]) -> Result<Vec<usize>> {
    let k = shape.len();
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(Error::InvalidPermutation(k));
    }
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidPermutation(k));
        }
        seen[p] = true;
    }
    let new_shape = SubsystemShape {
        dims: perm.iter().map(|&p| shape.dims[p]).collect(),
    };
    let mut old_digits = vec![0; k];
    Ok((0..shape.total())
        .map(|i| {
            let nd = new_shape.digits(i);
            for (slot, &p) in perm.iter().enumerate() {
                old_digits[p] = nd[slot];
            }
            shape.compose(&old_digits)
        })
        .collect())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and the
/// matching eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V^dagger`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in fv.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v.data[i * n + k] * lam;
                if vik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += vik * v.data[j * n + k].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix (Householder tridiagonalization
/// and implicit QL, via nalgebra). The input is symmetrized as
/// `(M + M^dagger)/2` after the Hermiticity check.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition needs a square matrix".into()));
    }
    let scale = m.max_abs().max(1.0);
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let h = m.hermitian_part();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| h.data[i * n + j]);
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// Closest positive semidefinite matrix in Frobenius norm (eigenvalue
/// clipping), together with the smallest eigenvalue of the input.
pub fn psd_projection(m: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let eig = herm_eig(m)?;
    Ok((eig.reconstruct_with(|x| x.max(0.0)), eig.min_value()))
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.min_value())
}

/// Operator whose tensor factors carry string labels. The link product
/// contracts factors with equal labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    pub matrix: ComplexMatrix,
    wires: Vec<(String, usize)>,
}

impl LabeledOperator {
    pub fn new(matrix: ComplexMatrix, wires: Vec<(String, usize)>) -> Result<Self> {
        for (i, (l, _)) in wires.iter().enumerate() {
            if wires[..i].iter().any(|(m, _)| m == l) {
                return Err(Error::InvalidArgument(alloc::format!("duplicate wire label {l}")));
            }
        }
        let dim: usize = wires.iter().map(|(_, d)| d).product();
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(Error::DimensionMismatch(alloc::format!(
                "wires of total dimension {dim} on a {}x{} matrix",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { matrix, wires })
    }

    /// Build from `&str` labels.
    pub fn with_wires(matrix: ComplexMatrix, wires: &[(&str, usize)]) -> Result<Self> {
        Self::new(
            matrix,
            wires.iter().map(|&(l, d)| (String::from(l), d)).collect(),
        )
    }

    /// A 1x1 operator with no wires.
    pub fn scalar(z: C64) -> Self {
        Self {
            matrix: ComplexMatrix::from_vec(1, 1, vec![z]).unwrap(),
            wires: Vec::new(),
        }
    }

    pub fn wires(&self) -> &[(String, usize)] {
        &self.wires
    }

    pub fn shape(&self) -> SubsystemShape {
        SubsystemShape {
            dims: if self.wires.is_empty() {
                vec![1]
            } else {
                self.wires.iter().map(|(_, d)| *d).collect()
            },
        }
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.wires.iter().position(|(l, _)| l == label)
    }

    /// Value of a wireless (1x1) operator.
    pub fn as_scalar(&self) -> Option<C64> {
        (self.matrix.rows() == 1 && self.wires.is_empty()).then(|| self.matrix[(0, 0)])
    }

    /// Reorder the wires to match `labels`.
    pub fn reorder(&self, labels: &[&str]) -> Result<Self> {
        if labels.len() != self.wires.len() {
            return Err(Error::InvalidArgument("label list does not match wires".into()));
        }
        let perm = labels
            .iter()
            .map(|l| {
                self.position(l)
                    .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown wire {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if self.wires.is_empty() {
            return Ok(self.clone());
        }
        let (matrix, _) = permute_subsystems(&self.matrix, &self.shape(), &perm)?;
        Ok(Self {
            matrix,
            wires: perm.iter().map(|&p| self.wires[p].clone()).collect(),
        })
    }
}

/// Row-major strides of a wire list.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Table `idx[outer * inner_dim + inner]` giving the composite index of an
/// operator when its wires are split into two groups of positions.
fn split_index_table(
    dims: &[usize],
    outer: &[usize],
    inner: &[usize],
) -> (Vec<usize>, usize, usize) {
    let st = strides(dims);
    let outer_dims: Vec<usize> = outer.iter().map(|&p| dims[p]).collect();
    let inner_dims: Vec<usize> = inner.iter().map(|&p| dims[p]).collect();
    let od: usize = outer_dims.iter().product();
    let id: usize = inner_dims.iter().product();
    let mut table = vec![0usize; od * id];
    let mut offsets_outer = vec![0usize; od];
    for (x, slot) in offsets_outer.iter_mut().enumerate() {
        let mut rem = x;
        let mut off = 0;
        for k in (0..outer.len()).rev() {
            off += (rem % outer_dims[k]) * st[outer[k]];
            rem /= outer_dims[k];
        }
        *slot = off;
    }
    let mut offsets_inner = vec![0usize; id];
    for (s, slot) in offsets_inner.iter_mut().enumerate() {
        let mut rem = s;
        let mut off = 0;
        for k in (0..inner.len()).rev() {
            off += (rem % inner_dims[k]) * st[inner[k]];
            rem /= inner_dims[k];
        }
        *slot = off;
    }
    for x in 0..od {
        for s in 0..id {
            table[x * id + s] = offsets_outer[x] + offsets_inner[s];
        }
    }
    (table, od, id)
}

/// Link product `A * B = Tr_S[(A^{T_S} ⊗ 1)(1 ⊗ B)]` over the shared
/// labels `S`. The result carries the wires of `A` that are not shared,
/// followed by the unshared wires of `B`. No implicit transposes are applied
/// to either argument.
pub fn link_product(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    let mut shared_a = Vec::new();
    let mut shared_b = Vec::new();
    let mut a_only = Vec::new();
    for (i, (label, d)) in a.wires.iter().enumerate() {
        match b.position(label) {
            Some(j) => {
                if b.wires[j].1 != *d {
                    return Err(Error::DimensionMismatch(alloc::format!(
                        "wire {label} has dimension {d} and {}",
                        b.wires[j].1
                    )));
                }
                shared_a.push(i);
                shared_b.push(j);
            }
            None => a_only.push(i),
        }
    }
    let b_only: Vec<usize> = (0..b.wires.len()).filter(|j| !shared_b.contains(j)).collect();

    let a_dims: Vec<usize> = a.wires.iter().map(|w| w.1).collect();
    let b_dims: Vec<usize> = b.wires.iter().map(|w| w.1).collect();
    // ia[x * ds + s] and ib[s * dy + y]
    let (ia, dx, ds) = split_index_table(&a_dims, &a_only, &shared_a);
    let (ib, ds_b, dy) = split_index_table(&b_dims, &shared_b, &b_only);
    debug_assert_eq!(ds, ds_b);

    let na = a.matrix.cols();
    let nb = b.matrix.cols();
    let n = dx * dy;
    let mut out = ComplexMatrix::zeros(n, n);
    // out[(x,y),(x',y')] = Σ_{s,t} A[(x,t),(x',s)] B[(t,y),(s,y')]
    for x in 0..dx {
        for x2 in 0..dx {
            for t in 0..ds {
                let ra = ia[x * ds + t] * na;
                for s in 0..ds {
                    let av = a.matrix.data[ra + ia[x2 * ds + s]];
                    if av.is_zero() {
                        continue;
                    }
                    for y in 0..dy {
                        let rb = ib[t * dy + y] * nb;
                        let row = (x * dy + y) * n + x2 * dy;
                        for y2 in 0..dy {
                            out.data[row + y2] += av * b.matrix.data[rb + ib[s * dy + y2]];
                        }
                    }
                }
            }
        }
    }
    let wires = a_only
        .iter()
        .map(|&i| a.wires[i].clone())
        .chain(b_only.iter().map(|&j| b.wires[j].clone()))
        .collect();
    Ok(LabeledOperator { matrix: out, wires })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag_real(&[1.0, -1.0])
    }

    fn bell() -> ComplexMatrix {
        let s = 0.5f64.sqrt();
        ComplexMatrix::outer(&[c(s), c(0.0), c(0.0), c(s)])
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn kron_basics() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
        let p0 = ComplexMatrix::basis_projector(2, 0);
        let p1 = ComplexMatrix::basis_projector(2, 1);
        assert_eq!(kron(&p0, &p1), ComplexMatrix::diag_real(&[0.0, 1.0, 0.0, 0.0]));
        assert_eq!(kron(&pauli_z(), &pauli_z()), ComplexMatrix::diag_real(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_index_law() {
        let a = ComplexMatrix::from_fn(2, 3, |i, j| C64::new(i as f64 + 1.0, j as f64));
        let b = ComplexMatrix::from_fn(3, 2, |i, j| C64::new(j as f64 - 1.0, i as f64 * 0.5));
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..3 {
                for r in 0..3 {
                    for s in 0..2 {
                        assert_eq!(k[(i * 3 + r, j * 2 + s)], a[(i, j)] * b[(r, s)]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let shape = SubsystemShape::new(vec![2, 2]).unwrap();
        let p00 = ComplexMatrix::basis_projector(4, 0);
        let r = partial_trace(&p00, &shape, &[0]).unwrap();
        assert_eq!(r, ComplexMatrix::basis_projector(2, 0));
        let r = partial_trace(&bell(), &shape, &[1]).unwrap();
        assert!(close(&r, &ComplexMatrix::identity(2).scale(0.5), 1e-15));
        assert!(matches!(
            partial_trace(&p00, &shape, &[2]),
            Err(Error::SubsystemOutOfRange { .. })
        ));
    }

    #[test]
    fn partial_transpose_of_bell_state_has_negative_eigenvalue() {
        let shape = SubsystemShape::new(vec![2, 2]).unwrap();
        let pt = partial_transpose(&bell(), &shape, &[1]).unwrap();
        let eig = herm_eig(&pt).unwrap();
        assert_abs_diff_eq!(eig.values[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[3], 0.5, epsilon = 1e-14);
        let back = partial_transpose(&pt, &shape, &[1]).unwrap();
        assert!(close(&back, &bell(), 0.0));
    }

    #[test]
    fn single_factor_partial_transpose_is_transpose() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64 * 2.0));
        let shape = SubsystemShape::new(vec![3]).unwrap();
        assert_eq!(partial_transpose(&m, &shape, &[0]).unwrap(), m.transpose());
    }

    #[test]
    fn permute_swaps_kron_factors() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| C64::new(i as f64 + 2.0 * j as f64, 1.0));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(j as f64 - i as f64, 0.5));
        let shape = SubsystemShape::new(vec![2, 3]).unwrap();
        let (swapped, new_shape) = permute_subsystems(&kron(&a, &b), &shape, &[1, 0]).unwrap();
        assert_eq!(new_shape.dims(), &[3, 2]);
        assert_eq!(swapped, kron(&b, &a));
        let (id, _) = permute_subsystems(&kron(&a, &b), &shape, &[0, 1]).unwrap();
        assert_eq!(id, kron(&a, &b));
        let (twice, _) = permute_subsystems(&swapped, &new_shape, &[1, 0]).unwrap();
        assert_eq!(twice, kron(&a, &b));
        assert!(matches!(
            permute_subsystems(&kron(&a, &b), &shape, &[0, 0]),
            Err(Error::InvalidPermutation(2))
        ));
    }

    #[test]
    fn eig_examples() {
        let e = herm_eig(&pauli_x()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-15);
        let e = herm_eig(&ComplexMatrix::diag_real(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        assert_abs_diff_eq!(e.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-15);
        let w = core::f64::consts::PI / 8.0;
        let omega = ComplexMatrix::outer(&[c(w.cos()), c(0.0), c(0.0), c(-w.sin())]);
        let e = herm_eig(&omega).unwrap();
        for (got, want) in e.values.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let bad = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(herm_eig(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn link_product_born_rule_and_tensor_case() {
        let rho = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(0.7),
            (1, 1) => c(0.3),
            (0, 1) => C64::new(0.1, 0.2),
            _ => C64::new(0.1, -0.2),
        });
        let m = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(0.6),
            (1, 1) => c(0.4),
            (0, 1) => C64::new(0.0, 0.3),
            _ => C64::new(0.0, -0.3),
        });
        let a = LabeledOperator::with_wires(rho.clone(), &[("w", 2)]).unwrap();
        let b = LabeledOperator::with_wires(m.transpose(), &[("w", 2)]).unwrap();
        let p = link_product(&a, &b).unwrap().as_scalar().unwrap();
        let born = (&rho * &m).trace();
        assert_abs_diff_eq!(p.re, born.re, epsilon = 1e-15);
        assert_abs_diff_eq!(p.im, born.im, epsilon = 1e-15);

        let x = LabeledOperator::with_wires(rho.clone(), &[("x", 2)]).unwrap();
        let y = LabeledOperator::with_wires(m.clone(), &[("y", 2)]).unwrap();
        let t = link_product(&x, &y).unwrap();
        assert_eq!(t.matrix, kron(&rho, &m));
        assert_eq!(t.wires().len(), 2);

        let z = LabeledOperator::with_wires(ComplexMatrix::identity(3), &[("x", 3)]).unwrap();
        assert!(matches!(link_product(&x, &z), Err(Error::DimensionMismatch(_))));
    }
}
