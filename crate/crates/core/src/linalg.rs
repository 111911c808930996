//! Dense complex linear algebra on multipartite operators.
//!
//! Operators carry a subsystem dimension vector so that partial traces,
//! partial transposes and local actions can be expressed by subsystem index.
//! Subsystems are ordered left to right in the Kronecker product.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{mismatch, validation, Result};
use crate::tolerance::tol;

pub type ComplexMatrix = DMatrix<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
}

/// Computational basis vector `|i⟩` in dimension `d`.
pub fn ket(d: usize, i: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d);
    v[i] = c64(1.0, 0.0);
    v
}

pub fn outer(a: &DVector<C64>, b: &DVector<C64>) -> ComplexMatrix {
    a * b.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(ms: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1, 1);
    for m in ms {
        out = out.kronecker(*m);
    }
    out
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest elementwise deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_dims(dim: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || prod != dim || dims.contains(&0) {
        return Err(validation(format!(
            "subsystem dims {dims:?} do not multiply to {dim}"
        )));
    }
    Ok(())
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

fn eigen_unchecked(m: &ComplexMatrix) -> Eigen {
    let se = SymmetricEigen::new(hermitian_part(m));
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigen { values, vectors }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn herm_eig(m: &ComplexMatrix) -> Result<Eigen> {
    if !m.is_square() {
        return Err(validation("eigendecomposition needs a square matrix"));
    }
    if !is_finite(m) {
        return Err(validation("matrix has non-finite entries"));
    }
    let defect = hermiticity_defect(m);
    if defect > tol().hermitian {
        return Err(validation(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    Ok(eigen_unchecked(m))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(validation("trace norm needs a square matrix"));
    }
    if hermiticity_defect(m) <= tol().hermitian {
        return Ok(eigen_unchecked(m).values.iter().map(|x| x.abs()).sum());
    }
    Ok(m.clone().svd(false, false).singular_values.iter().sum())
}

/// A Hermitian operator on a (possibly multipartite) Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl HermitianOperator {
    /// Validating constructor: square, finite, Hermitian within tolerance.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(validation("operator must be square"));
        }
        if !is_finite(&matrix) {
            return Err(validation("operator has non-finite entries"));
        }
        check_dims(matrix.nrows(), &dims)?;
        let defect = hermiticity_defect(&matrix);
        if defect > tol().hermitian {
            return Err(validation(format!("operator is not Hermitian (defect {defect:.3e})")));
        }
        Ok(Self { matrix: hermitian_part(&matrix), dims })
    }

    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    /// Takes the Hermitian part of a computed matrix. Used for results of
    /// arithmetic whose Hermiticity holds only up to rounding.
    pub(crate) fn hermitize(matrix: &ComplexMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.nrows());
        Self { matrix: hermitian_part(matrix), dims }
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = dims.iter().product();
        Self { matrix: identity(d), dims }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(self.dim(), &dims)?;
        self.dims = dims;
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigen(&self) -> Eigen {
        eigen_unchecked(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { matrix: self.matrix.scale(c), dims: self.dims.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(mismatch(format!("cannot add dim {} and {}", self.dim(), other.dim())));
        }
        Ok(Self { matrix: &self.matrix + &other.matrix, dims: self.dims.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Spectral function `f(H)`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::hermitize(&self.eigen().reconstruct_with(f), self.dims.clone())
    }

    /// Square root with negative eigenvalues clamped to zero.
    pub fn sqrt_psd(&self) -> Self {
        self.map_spectrum(|x| x.max(0.0).sqrt())
    }

    /// Power restricted to the support (eigenvalues above the support cutoff).
    pub fn pow_on_support(&self, alpha: f64) -> Self {
        self.map_spectrum(|x| if x > tol().support { x.powf(alpha) } else { 0.0 })
    }

    /// Projector onto eigenvectors with eigenvalue above the support cutoff.
    pub fn support_projector(&self) -> Self {
        self.map_spectrum(|x| if x > tol().support { 1.0 } else { 0.0 })
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues().iter().filter(|&&x| x > tol().support).count()
    }

    /// `tr(self · other)` for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        self.matrix.component_mul(&other.matrix.conjugate()).sum().re
    }

    /// `A H A†`, with the output dims supplied.
    pub fn conjugate_by(&self, a: &ComplexMatrix, dims: Vec<usize>) -> Self {
        Self::hermitize(&(a * &self.matrix * a.adjoint()), dims)
    }
}

/// A positive semidefinite operator with unit trace (or trace at most one
/// for the subnormalized variant).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > tol().trace {
            return Err(validation(format!("state trace is {tr}, expected 1")));
        }
        Self::new_subnormalized(op)
    }

    /// Accepts any PSD operator with trace at most one.
    pub fn new_subnormalized(op: HermitianOperator) -> Result<Self> {
        let lmin = op.min_eigenvalue();
        if lmin < -tol().psd {
            return Err(validation(format!("operator is not PSD (min eigenvalue {lmin:.3e})")));
        }
        if op.trace() > 1.0 + tol().trace {
            return Err(validation(format!("trace {} exceeds 1", op.trace())));
        }
        Ok(Self { op })
    }

    pub fn from_matrix(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::new(HermitianOperator::new(matrix, dims)?)
    }

    /// Skips validation; for operators that are states by construction.
    pub(crate) fn trusted(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn pure(psi: &DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(validation("state vector must be nonzero"));
        }
        let v = psi.unscale(n);
        Self::from_matrix(outer(&v, &v), dims)
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self::trusted(HermitianOperator::hermitize(&outer(&ket(d, i), &ket(d, i)), vec![d]))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::trusted(HermitianOperator::hermitize(&identity(d).unscale(d as f64), vec![d]))
    }

    /// `Φ = |Φ⟩⟨Φ|` with `|Φ⟩ = Σ_i |ii⟩ / √d`, dims `[d, d]`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut v = DVector::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = c64(1.0 / (d as f64).sqrt(), 0.0);
        }
        Self::trusted(HermitianOperator::hermitize(&outer(&v, &v), vec![d, d]))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= tol().trace
    }

    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Ok(Self { op: self.op.with_dims(dims)? })
    }
}

/// Fidelity `F(ρ,σ) = ‖√ρ√σ‖₁²`. For subnormalized arguments the
/// generalized fidelity `(‖√ρ√σ‖₁ + √((1-tr ρ)(1-tr σ)))²` is returned.
pub fn fidelity(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(mismatch(format!("fidelity of dims {} and {}", rho.dim(), sigma.dim())));
    }
    let prod = rho.sqrt_psd().matrix() * sigma.sqrt_psd().matrix();
    let root = prod.svd(false, false).singular_values.iter().sum::<f64>();
    let defect = ((1.0 - rho.trace()).max(0.0) * (1.0 - sigma.trace()).max(0.0)).sqrt();
    Ok((root + defect).powi(2).clamp(0.0, 1.0))
}

/// `P(ρ,σ) = √(1 - F(ρ,σ))`.
pub fn purified_distance(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0).sqrt())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn split_index(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

fn check_subsystems(h: &HermitianOperator, idx: &[usize]) -> Result<()> {
    for &k in idx {
        if k >= h.dims.len() {
            return Err(validation(format!(
                "subsystem index {k} out of range for dims {:?}",
                h.dims
            )));
        }
    }
    Ok(())
}

/// Partial trace keeping the listed subsystems (in their original order).
pub fn partial_trace(h: &HermitianOperator, keep: &[usize]) -> Result<HermitianOperator> {
    check_subsystems(h, keep)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let dims = &h.dims;
    let n = dims.len();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let kept_strides = strides(&kept_dims);
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let traced_strides = strides(&traced_dims);
    let d = h.dim();
    let dk: usize = kept_dims.iter().product();

    // For each full index: (kept index, traced index).
    let mut multi = vec![0usize; n];
    let decomposed: Vec<(usize, usize)> = (0..d)
        .map(|i| {
            split_index(i, dims, &mut multi);
            let k = keep.iter().zip(&kept_strides).map(|(&s, &st)| multi[s] * st).sum();
            let t = traced.iter().zip(&traced_strides).map(|(&s, &st)| multi[s] * st).sum();
            (k, t)
        })
        .collect();

    let mut out = zeros(dk, dk);
    for (i, &(ki, ti)) in decomposed.iter().enumerate() {
        for (j, &(kj, tj)) in decomposed.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += h.matrix[(i, j)];
            }
        }
    }
    let kept_dims = if kept_dims.is_empty() { vec![1] } else { kept_dims };
    Ok(HermitianOperator::hermitize(&out, kept_dims))
}

/// Reorders subsystems: output subsystem `k` is input subsystem `perm[k]`.
pub fn permute_subsystems(h: &HermitianOperator, perm: &[usize]) -> Result<HermitianOperator> {
    let n = h.dims.len();
    let mut seen = perm.to_vec();
    seen.sort_unstable();
    if perm.len() != n || seen != (0..n).collect::<Vec<_>>() {
        return Err(validation(format!("{perm:?} is not a permutation of {n} subsystems")));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&k| h.dims[k]).collect();
    let new_strides = strides(&new_dims);
    let d = h.dim();
    let mut multi = vec![0usize; n];
    let map: Vec<usize> = (0..d)
        .map(|i| {
            split_index(i, &h.dims, &mut multi);
            perm.iter().zip(&new_strides).map(|(&src, &st)| multi[src] * st).sum()
        })
        .collect();
    let mut out = zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(map[i], map[j])] = h.matrix[(i, j)];
        }
    }
    Ok(HermitianOperator { matrix: out, dims: new_dims })
}

/// Swaps the two subsystems of a bipartite operator.
pub fn swap_bipartite(h: &HermitianOperator) -> Result<HermitianOperator> {
    if h.dims.len() != 2 {
        return Err(validation("swap needs exactly two subsystems"));
    }
    permute_subsystems(h, &[1, 0])
}

pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    HermitianOperator { matrix: a.matrix.kronecker(&b.matrix), dims }
}

pub fn tensor_states(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    DensityOperator::trusted(tensor(a, b))
}

/// Transpose on one subsystem.
pub fn partial_transpose(h: &HermitianOperator, subsystem: usize) -> Result<HermitianOperator> {
    check_subsystems(h, &[subsystem])?;
    let d = h.dim();
    let n = h.dims.len();
    let st = strides(&h.dims);
    let mut mi = vec![0usize; n];
    let mut mj = vec![0usize; n];
    let mut out = zeros(d, d);
    for i in 0..d {
        split_index(i, &h.dims, &mut mi);
        for j in 0..d {
            split_index(j, &h.dims, &mut mj);
            let (a, b) = (mi[subsystem], mj[subsystem]);
            let i2 = i - a * st[subsystem] + b * st[subsystem];
            let j2 = j - b * st[subsystem] + a * st[subsystem];
            out[(i2, j2)] = h.matrix[(i, j)];
        }
    }
    Ok(HermitianOperator { matrix: out, dims: h.dims.clone() })
}

/// `𝟙_left ⊗ m ⊗ 𝟙_right` for a (possibly non-square) local operator acting
/// on subsystem `k` of a system with the given dims.
pub fn embed_local(m: &ComplexMatrix, dims: &[usize], k: usize) -> ComplexMatrix {
    let left: usize = dims[..k].iter().product();
    let right: usize = dims[k + 1..].iter().product();
    kron_all(&[&identity(left), m, &identity(right)])
}

/// Trace distance `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    Ok(0.5 * trace_norm(a.sub(b)?.matrix())?)
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    u.is_square() && is_isometry(u, tol)
}

pub fn is_isometry(v: &ComplexMatrix, tol: f64) -> bool {
    let g = v.adjoint() * v;
    (g - identity(v.ncols())).iter().all(|z| z.norm() <= tol)
}

pub fn log2(x: f64) -> f64 {
    x.log2()
}
