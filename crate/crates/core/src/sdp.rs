//! Dense semidefinite programming over Hermitian block variables.
//!
//! Problems are stated over complex Hermitian blocks `X_b ⪰ 0` with scalar
//! equality constraints `Σ_b tr(A_ib X_b) = b_i`. Operator-valued equality
//! constraints are expanded in an orthonormal Hermitian basis. The problem
//! is mapped to a real symmetric one (see [`embed_hermitian`]) and solved
//! with a primal-dual interior-point method using Nesterov–Todd scaling and
//! a Mehrotra predictor-corrector.
//!
//! For a minimization the dual is `max bᵀy` subject to `C − Σ y_i A_i ⪰ 0`;
//! for a maximization it is `min bᵀy` subject to `Σ y_i A_i − C ⪰ 0`.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{mismatch, validation, Error, Result};
use crate::linalg::{c64, hermiticity_defect, identity, zeros, ComplexMatrix, HermitianOperator};
use crate::tolerance::{tol, Tolerances};

pub type RealMatrix = DMatrix<f64>;

/// Largest real block handled by the solver.
pub const MAX_REAL_BLOCK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A linear map `X ↦ Σ_t c_t K_t X K_t†` between square matrix spaces.
#[derive(Debug, Clone)]
pub struct LinearMap {
    terms: Vec<(f64, ComplexMatrix)>,
    in_dim: usize,
    out_dim: usize,
}

impl LinearMap {
    pub fn from_terms(terms: Vec<(f64, ComplexMatrix)>, in_dim: usize, out_dim: usize) -> Self {
        debug_assert!(terms.iter().all(|(_, k)| k.nrows() == out_dim && k.ncols() == in_dim));
        Self { terms, in_dim, out_dim }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled(n, 1.0)
    }

    pub fn scaled(n: usize, c: f64) -> Self {
        Self::from_terms(vec![(c, identity(n))], n, n)
    }

    /// `X ↦ K X K†`.
    pub fn conjugation(k: ComplexMatrix) -> Self {
        let (o, i) = k.shape();
        Self::from_terms(vec![(1.0, k)], i, o)
    }

    /// `X ↦ c·𝟙_d ⊗ X` for `X` of dimension `n`.
    pub fn kron_left(d: usize, n: usize, c: f64) -> Self {
        let terms = (0..d).map(|i| (c, basis_column(d, i).kronecker(&identity(n)))).collect();
        Self::from_terms(terms, n, d * n)
    }

    /// `X ↦ c·X ⊗ 𝟙_d` for `X` of dimension `n`.
    pub fn kron_right(n: usize, d: usize, c: f64) -> Self {
        let terms = (0..d).map(|i| (c, identity(n).kronecker(&basis_column(d, i)))).collect();
        Self::from_terms(terms, n, n * d)
    }

    /// Partial trace over the first factor of `d ⊗ n`.
    pub fn trace_first(d: usize, n: usize) -> Self {
        let terms = (0..d)
            .map(|i| (1.0, basis_column(d, i).adjoint().kronecker(&identity(n))))
            .collect();
        Self::from_terms(terms, d * n, n)
    }

    /// Partial trace over the second factor of `n ⊗ d`.
    pub fn trace_second(n: usize, d: usize) -> Self {
        let terms = (0..d)
            .map(|i| (1.0, identity(n).kronecker(&basis_column(d, i).adjoint())))
            .collect();
        Self::from_terms(terms, n * d, n)
    }

    /// `x ↦ x·M` from a 1×1 block into Hermitian `M`.
    pub fn scalar(m: &ComplexMatrix) -> Self {
        let eig = crate::linalg::herm_eig(&crate::linalg::hermitian_part(m))
            .expect("Hermitian part is Hermitian");
        let n = m.nrows();
        let terms = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (v, eig.vectors.columns(j, 1).into_owned()))
            .collect();
        Self::from_terms(terms, 1, n)
    }

    /// `X ↦ X[offset..offset+size, offset..offset+size]` for `X` of dimension `total`.
    pub fn corner(total: usize, offset: usize, size: usize) -> Self {
        let mut k = zeros(size, total);
        for i in 0..size {
            k[(i, offset + i)] = c64(1.0, 0.0);
        }
        Self::from_terms(vec![(1.0, k)], total, size)
    }

    /// `X ↦ tr X` into a 1×1 block.
    pub fn trace(n: usize) -> Self {
        let terms = (0..n).map(|i| (1.0, basis_column(n, i).adjoint())).collect();
        Self::from_terms(terms, n, 1)
    }

    /// `X ↦ K Φ(X) K†` for this map `Φ`.
    pub fn then_conjugate(&self, k: &ComplexMatrix) -> Self {
        let terms = self.terms.iter().map(|(c, t)| (*c, k * t)).collect();
        Self::from_terms(terms, self.in_dim, k.nrows())
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.out_dim, self.out_dim);
        for (c, k) in &self.terms {
            out += (k * x * k.adjoint()).scale(*c);
        }
        out
    }

    pub fn adjoint_apply(&self, e: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.in_dim, self.in_dim);
        for (c, k) in &self.terms {
            out += (k.adjoint() * e * k).scale(*c);
        }
        out
    }
}

fn basis_column(d: usize, i: usize) -> ComplexMatrix {
    let mut v = zeros(d, 1);
    v[(i, 0)] = c64(1.0, 0.0);
    v
}

/// Orthonormal basis of `n×n` Hermitian matrices under `⟨A,B⟩ = tr(AB)`:
/// `E_ii`, `(E_ij + E_ji)/√2` and `i(E_ij − E_ji)/√2` for `i < j`.
pub fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = zeros(n, n);
        e[(i, i)] = c64(1.0, 0.0);
        out.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = zeros(n, n);
            e[(i, j)] = c64(s, 0.0);
            e[(j, i)] = c64(s, 0.0);
            out.push(e);
            let mut e = zeros(n, n);
            e[(i, j)] = c64(0.0, s);
            e[(j, i)] = c64(0.0, -s);
            out.push(e);
        }
    }
    out
}

/// `tr(A B)` for Hermitian arguments.
fn herm_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// `(block, A)` pairs; blocks not listed have a zero coefficient.
    pub terms: Vec<(usize, ComplexMatrix)>,
    pub rhs: f64,
}

/// The scalar rows produced by one operator-valued constraint.
#[derive(Debug, Clone)]
pub struct OperatorGroup {
    pub rows: Range<usize>,
    pub dim: usize,
}

/// A Hermitian SDP over block-diagonal variables.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub sense: Sense,
    pub block_dims: Vec<usize>,
    pub objective: Vec<ComplexMatrix>,
    pub constraints: Vec<Constraint>,
    pub groups: Vec<OperatorGroup>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        Self { sense, block_dims: Vec::new(), objective: Vec::new(), constraints: Vec::new(), groups: Vec::new() }
    }

    /// Single-block problem `opt tr(C X)` subject to `tr(A_i X) = b_i`.
    pub fn single(sense: Sense, c: ComplexMatrix, constraints: Vec<(ComplexMatrix, f64)>) -> Self {
        let mut p = Self::new(sense);
        let x = p.add_block(c.nrows());
        p.set_objective(x, c);
        for (a, b) in constraints {
            p.add_constraint(vec![(x, a)], b);
        }
        p
    }

    /// Adds a PSD block of the given dimension and returns its index.
    pub fn add_block(&mut self, dim: usize) -> usize {
        self.block_dims.push(dim);
        self.objective.push(zeros(dim, dim));
        self.block_dims.len() - 1
    }

    pub fn set_objective(&mut self, block: usize, c: ComplexMatrix) {
        self.objective[block] = c;
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, ComplexMatrix)>, rhs: f64) -> usize {
        self.constraints.push(Constraint { terms, rhs });
        self.constraints.len() - 1
    }

    /// Adds `Σ_b L_b(X_b) = rhs` and returns the group index used to read the
    /// operator-valued dual from a solution.
    pub fn add_operator_constraint(&mut self, terms: Vec<(usize, LinearMap)>, rhs: &ComplexMatrix) -> usize {
        let dim = rhs.nrows();
        let start = self.constraints.len();
        for e in hermitian_basis(dim) {
            let row: Vec<(usize, ComplexMatrix)> =
                terms.iter().map(|(b, map)| (*b, map.adjoint_apply(&e))).collect();
            self.add_constraint(row, herm_inner(&e, rhs));
        }
        self.groups.push(OperatorGroup { rows: start..self.constraints.len(), dim });
        self.groups.len() - 1
    }

    fn validate(&self) -> Result<()> {
        for (b, c) in self.objective.iter().enumerate() {
            let d = self.block_dims[b];
            if c.shape() != (d, d) {
                return Err(mismatch(format!("objective block {b} has shape {:?}, expected {d}", c.shape())));
            }
            if 2 * d > MAX_REAL_BLOCK {
                return Err(validation(format!("block {b} of dimension {d} is too large")));
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(validation(format!("constraint {i} has a non-finite right-hand side")));
            }
            for (b, a) in &con.terms {
                let d = *self.block_dims.get(*b).ok_or_else(|| validation(format!("constraint {i} names missing block {b}")))?;
                if a.shape() != (d, d) {
                    return Err(mismatch(format!("constraint {i} block {b} has shape {:?}", a.shape())));
                }
            }
        }
        let herm_tol = 1e-10;
        let all = self.objective.iter().chain(self.constraints.iter().flat_map(|c| c.terms.iter().map(|(_, a)| a)));
        for m in all {
            let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if !crate::linalg::is_finite(m) || hermiticity_defect(m) > herm_tol * scale {
                return Err(validation("SDP data must be finite and Hermitian"));
            }
        }
        Ok(())
    }
}

/// Sparse real symmetric block entries `(row, col, value)`, both triangles.
type Entries = Vec<(usize, usize, f64)>;

/// Real symmetric block SDP in standard primal form.
#[derive(Debug, Clone)]
pub struct RealSdp {
    pub block_dims: Vec<usize>,
    pub c: Vec<RealMatrix>,
    /// Per row, the nonzero blocks and their entries.
    pub a: Vec<Vec<(usize, Entries)>>,
    pub b: Vec<f64>,
}

/// A real problem together with the bookkeeping needed to map its solution
/// back to the Hermitian problem.
#[derive(Debug, Clone)]
pub struct RealEmbedding {
    pub problem: RealSdp,
    /// Whether blocks are doubled into `[[Re, −Im], [Im, Re]]` form.
    pub complex: bool,
    /// Real row for each original constraint, `None` when the row was dropped.
    row_of: Vec<Option<usize>>,
    /// Factor applied to each real row when it was normalized.
    row_scale: Vec<f64>,
    /// Set when a dropped row had a nonzero right-hand side.
    trivially_infeasible: bool,
}

/// `[[Re M, −Im M], [Im M, Re M]]`.
pub fn embed_matrix(m: &ComplexMatrix) -> RealMatrix {
    let n = m.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`embed_matrix`] for a real symmetric matrix that may not
/// have the exact block structure: the structured part is extracted.
pub fn unembed_matrix(x: &RealMatrix) -> ComplexMatrix {
    let n = x.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        c64(
            0.5 * (x[(i, j)] + x[(i + n, j + n)]),
            0.5 * (x[(i + n, j)] - x[(i, j + n)]),
        )
    })
}

fn is_real(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn is_imaginary(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re == 0.0)
}

fn to_entries(m: &RealMatrix) -> Entries {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Maps a Hermitian problem to a real symmetric one with the same optimal
/// value. When every datum is real (up to rows that are purely imaginary
/// with zero right-hand side, which vanish on real variables) the blocks are
/// kept at their original size; otherwise each `n×n` block becomes `2n×2n`
/// and the data are scaled by ½ so that `tr(½Ã X̃) = tr(AX)`. A
/// maximization is converted to a minimization by negating the objective.
pub fn embed_hermitian(p: &SdpProblem) -> RealEmbedding {
    let rhs_zero = |b: f64| b.abs() <= 1e-14;
    let real_mode = p.objective.iter().all(is_real)
        && p.constraints.iter().all(|c| {
            c.terms.iter().all(|(_, a)| is_real(a))
                || (c.terms.iter().all(|(_, a)| is_imaginary(a)) && rhs_zero(c.rhs))
        });
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let realify = |m: &ComplexMatrix| -> RealMatrix {
        if real_mode {
            m.map(|z| z.re)
        } else {
            embed_matrix(m).scale(0.5)
        }
    };
    let block_dims: Vec<usize> = p.block_dims.iter().map(|&d| if real_mode { d } else { 2 * d }).collect();
    let c = p.objective.iter().map(|m| realify(m).scale(sign)).collect();

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row_of = Vec::with_capacity(p.constraints.len());
    let mut row_scale = Vec::new();
    let mut trivially_infeasible = false;
    for con in &p.constraints {
        let mut blocks: Vec<(usize, RealMatrix)> = Vec::new();
        for (blk, m) in &con.terms {
            let r = realify(m);
            if let Some(slot) = blocks.iter_mut().find(|(bb, _)| bb == blk) {
                slot.1 += r;
            } else {
                blocks.push((*blk, r));
            }
        }
        let norm = blocks.iter().map(|(_, m)| m.norm_squared()).sum::<f64>().sqrt();
        if norm == 0.0 {
            if !rhs_zero(con.rhs) {
                trivially_infeasible = true;
            }
            row_of.push(None);
            continue;
        }
        let s = 1.0 / norm;
        let row: Vec<(usize, Entries)> = blocks
            .into_iter()
            .map(|(blk, m)| (blk, to_entries(&m.scale(s))))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        row_of.push(Some(a.len()));
        row_scale.push(s);
        a.push(row);
        b.push(con.rhs * s);
    }
    RealEmbedding {
        problem: RealSdp { block_dims, c, a, b },
        complex: !real_mode,
        row_of,
        row_scale,
        trivially_infeasible,
    }
}

/// Result of [`solve`]. Values are reported in the problem's own sense.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Relative duality gap `|p − d| / (1 + |p| + |d|)`.
    pub duality_gap: f64,
    /// `‖b − A(X)‖ / (1 + ‖b‖)` on the normalized rows.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Primal blocks.
    pub primal: Vec<HermitianOperator>,
    /// Dual multiplier for each constraint row.
    pub dual: Vec<f64>,
    /// Dual slack blocks, PSD at a dual-feasible point.
    pub slack: Vec<HermitianOperator>,
    groups: Vec<OperatorGroup>,
}

impl SdpSolution {
    /// First primal block.
    pub fn primal_matrix(&self) -> &HermitianOperator {
        &self.primal[0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Operator-valued dual `Σ_k y_k E_k` of an operator constraint.
    pub fn dual_operator(&self, group: usize) -> ComplexMatrix {
        let g = &self.groups[group];
        let mut out = zeros(g.dim, g.dim);
        for (e, row) in hermitian_basis(g.dim).iter().zip(g.rows.clone()) {
            out += e.scale(self.dual[row]);
        }
        out
    }

    /// Errors unless the status is optimal.
    pub fn require_optimal(self, context: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver { status: self.status, context: context.to_string() })
        }
    }
}

pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, tol())
}

pub fn solve_with(p: &SdpProblem, tol: &Tolerances) -> Result<SdpSolution> {
    p.validate()?;
    let emb = embed_hermitian(p);
    let raw = if emb.trivially_infeasible {
        RawSolution::infeasible(&emb.problem)
    } else {
        solve_real(&emb.problem, tol)
    };
    Ok(recover(p, &emb, raw))
}

fn recover(p: &SdpProblem, emb: &RealEmbedding, raw: RawSolution) -> SdpSolution {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let primal: Vec<HermitianOperator> = raw
        .x
        .iter()
        .map(|x| {
            let m = if emb.complex { unembed_matrix(x) } else { x.map(|v| c64(v, 0.0)) };
            let d = m.nrows();
            HermitianOperator::hermitize(&m, vec![d.max(1)])
        })
        .collect();
    // Multipliers in the problem's own sense and scaling.
    let dual: Vec<f64> = emb
        .row_of
        .iter()
        .map(|r| match r {
            Some(k) => sign * raw.y[*k] * emb.row_scale[*k],
            None => 0.0,
        })
        .collect();
    let mut slack = Vec::with_capacity(p.block_dims.len());
    for (b, &d) in p.block_dims.iter().enumerate() {
        let mut z = p.objective[b].clone();
        for (con, &y) in p.constraints.iter().zip(&dual) {
            for (blk, a) in &con.terms {
                if *blk == b {
                    z -= a.scale(y);
                }
            }
        }
        // C − Σ yA for a minimization, Σ yA − C for a maximization.
        slack.push(HermitianOperator::hermitize(&z.scale(sign), vec![d]));
    }
    let primal_value = sign * raw.pobj;
    let dual_value = sign * raw.dobj;
    SdpSolution {
        status: raw.status,
        primal_value,
        dual_value,
        duality_gap: relative_gap(primal_value, dual_value),
        primal_residual: raw.pinf,
        dual_residual: raw.dinf,
        iterations: raw.iterations,
        primal,
        dual,
        slack,
        groups: p.groups.clone(),
    }
}

struct RawSolution {
    status: SdpStatus,
    x: Vec<RealMatrix>,
    y: Vec<f64>,
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    iterations: usize,
}

impl RawSolution {
    fn infeasible(p: &RealSdp) -> Self {
        Self {
            status: SdpStatus::Infeasible,
            x: p.block_dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect(),
            y: vec![0.0; p.b.len()],
            pobj: f64::INFINITY,
            dobj: f64::INFINITY,
            pinf: f64::INFINITY,
            dinf: f64::INFINITY,
            iterations: 0,
        }
    }
}

fn dot(a: &RealMatrix, b: &RealMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn symmetrize(m: &mut RealMatrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Per-block Nesterov–Todd scaling data.
struct Scaling {
    /// `W = G Gᵀ` with `W Z W = X`.
    w: RealMatrix,
    g: RealMatrix,
    g_inv: RealMatrix,
    /// Scaled iterate `G⁻¹ X G⁻ᵀ = Gᵀ Z G = diag(v)`.
    v: Vec<f64>,
    lx: RealMatrix,
    lz: RealMatrix,
}

fn nt_scaling(x: &RealMatrix, z: &RealMatrix) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.l();
    let lz = Cholesky::new(z.clone())?.l();
    let svd = (lz.transpose() * &lx).svd(true, true);
    let q = svd.v_t?.transpose();
    let sigma = svd.singular_values;
    if sigma.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return None;
    }
    let n = x.nrows();
    let mut g = &lx * &q;
    let mut g_inv = q.transpose() * lx.clone().try_inverse()?;
    for j in 0..n {
        let s = sigma[j].sqrt();
        g.column_mut(j).scale_mut(1.0 / s);
        g_inv.row_mut(j).scale_mut(s);
    }
    let w = &g * g.transpose();
    Some(Scaling { w, g, g_inv, v: sigma.iter().copied().collect(), lx, lz })
}

/// Largest `α` with `L Lᵀ + α D ⪰ 0`, or infinity.
fn max_step(l: &RealMatrix, d: &RealMatrix) -> f64 {
    let Some(t) = l.solve_lower_triangular(d) else { return 0.0 };
    let Some(mut s) = l.solve_lower_triangular(&t.transpose()) else { return 0.0 };
    symmetrize(&mut s);
    let lmin = s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Workspace<'a> {
    p: &'a RealSdp,
    /// For each block, the rows touching it.
    rows_in_block: Vec<Vec<(usize, &'a Entries)>>,
    n_total: usize,
}

impl<'a> Workspace<'a> {
    fn new(p: &'a RealSdp) -> Self {
        let mut rows_in_block = vec![Vec::new(); p.block_dims.len()];
        for (i, row) in p.a.iter().enumerate() {
            for (b, e) in row {
                rows_in_block[*b].push((i, e));
            }
        }
        Self { p, rows_in_block, n_total: p.block_dims.iter().sum() }
    }

    fn a_apply(&self, x: &[RealMatrix]) -> DVector<f64> {
        let mut out = DVector::zeros(self.p.b.len());
        for (i, row) in self.p.a.iter().enumerate() {
            out[i] = row.iter().map(|(b, e)| e.iter().map(|&(k, l, v)| v * x[*b][(k, l)]).sum::<f64>()).sum();
        }
        out
    }

    fn a_adjoint(&self, y: &DVector<f64>) -> Vec<RealMatrix> {
        let mut out: Vec<RealMatrix> = self.p.block_dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect();
        for (i, row) in self.p.a.iter().enumerate() {
            for (b, e) in row {
                for &(k, l, v) in e {
                    out[*b][(k, l)] += v * y[i];
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = Σ_b ⟨A_ib, W_b A_jb W_b⟩`.
    fn schur(&self, scal: &[Scaling]) -> RealMatrix {
        let m = self.p.b.len();
        let mut out = RealMatrix::zeros(m, m);
        for (b, rows) in self.rows_in_block.iter().enumerate() {
            let w = &scal[b].w;
            let n = w.nrows();
            for &(j, ej) in rows {
                let bj = if ej.len() <= n {
                    let mut acc = RealMatrix::zeros(n, n);
                    for &(p, q, v) in ej.iter() {
                        for l in 0..n {
                            let wql = v * w[(q, l)];
                            if wql != 0.0 {
                                for k in 0..n {
                                    acc[(k, l)] += w[(k, p)] * wql;
                                }
                            }
                        }
                    }
                    acc
                } else {
                    let mut dense = RealMatrix::zeros(n, n);
                    for &(p, q, v) in ej.iter() {
                        dense[(p, q)] += v;
                    }
                    w * dense * w
                };
                for &(i, ei) in rows {
                    if i > j {
                        continue;
                    }
                    let s: f64 = ei.iter().map(|&(k, l, u)| u * bj[(k, l)]).sum();
                    out[(i, j)] += s;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }
}

enum SchurFactor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(mut m: RealMatrix) -> Option<Self> {
        if m.nrows() == 0 {
            return Cholesky::new(m).map(SchurFactor::Chol);
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(SchurFactor::Chol(c));
        }
        let reg = 1e-13 * m.diagonal().amax().max(1e-300);
        for i in 0..m.nrows() {
            m[(i, i)] += reg;
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(SchurFactor::Chol(c));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(SchurFactor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let out = match self {
            SchurFactor::Chol(c) => c.solve(rhs),
            SchurFactor::Lu(lu) => lu.solve(rhs)?,
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Iterate meeting the optimality contract, kept in case later iterations
/// lose accuracy.
struct Snapshot {
    x: Vec<RealMatrix>,
    y: DVector<f64>,
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    rel_gap: f64,
}

/// Contract for an optimal status: relative gap ≤ 1e-7, residuals ≤ 1e-8.
fn acceptable(rel_gap: f64, pinf: f64, dinf: f64) -> bool {
    rel_gap <= 1e-7 && pinf <= 1e-8 && dinf <= 1e-8
}

fn relative_gap(p: f64, d: f64) -> f64 {
    (p - d).abs() / (1.0 + p.abs() + d.abs())
}

struct Direction {
    dx: Vec<RealMatrix>,
    dy: DVector<f64>,
    dz: Vec<RealMatrix>,
}

fn solve_real(p: &RealSdp, tol: &Tolerances) -> RawSolution {
    let ws = Workspace::new(p);
    let nb = p.block_dims.len();
    let m = p.b.len();
    let b = DVector::from_column_slice(&p.b);
    let b_norm = b.norm();
    let c_norm = p.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

    // Initial point scaled to the data.
    let mut x = Vec::with_capacity(nb);
    let mut z = Vec::with_capacity(nb);
    for (blk, &n) in p.block_dims.iter().enumerate() {
        let nf = n as f64;
        let mut xi = 10f64.max(nf.sqrt());
        let mut eta = 10f64.max(nf.sqrt()).max(p.c[blk].norm());
        for &(i, e) in &ws.rows_in_block[blk] {
            let a_norm = e.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt();
            xi = xi.max(nf * (1.0 + p.b[i].abs()) / (1.0 + a_norm));
            eta = eta.max(a_norm);
        }
        x.push(RealMatrix::identity(n, n).scale(xi));
        z.push(RealMatrix::identity(n, n).scale(eta));
    }
    let mut y = DVector::<f64>::zeros(m);

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut best: Option<Snapshot> = None;
    let (mut pobj, mut dobj, mut pinf, mut dinf);
    loop {
        let ax = ws.a_apply(&x);
        let rp = &b - &ax;
        let aty = ws.a_adjoint(&y);
        let rd: Vec<RealMatrix> = (0..nb).map(|k| &p.c[k] - &aty[k] - &z[k]).collect();
        pobj = (0..nb).map(|k| dot(&p.c[k], &x[k])).sum::<f64>();
        dobj = b.dot(&y);
        pinf = rp.norm() / (1.0 + b_norm);
        dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let comp: f64 = (0..nb).map(|k| dot(&x[k], &z[k])).sum();
        let mu = comp / ws.n_total.max(1) as f64;
        let rel_gap = relative_gap(pobj, dobj);

        if rel_gap < tol.sdp_gap && pinf < tol.sdp_feasibility && dinf < tol.sdp_feasibility {
            status = SdpStatus::Optimal;
            break;
        }
        if acceptable(rel_gap, pinf, dinf) && best.as_ref().is_none_or(|b: &Snapshot| rel_gap < b.rel_gap) {
            best = Some(Snapshot { x: x.clone(), y: y.clone(), pobj, dobj, pinf, dinf, rel_gap });
        }
        if dobj.abs() > tol.sdp_divergence || pobj.abs() > tol.sdp_divergence {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= tol.sdp_max_iterations {
            break;
        }
        iterations += 1;

        let Some(scal) = (0..nb).map(|k| nt_scaling(&x[k], &z[k])).collect::<Option<Vec<_>>>() else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let Some(schur) = SchurFactor::new(ws.schur(&scal)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        // W Rd W is shared by predictor and corrector.
        let wrdw: Vec<RealMatrix> = (0..nb).map(|k| &scal[k].w * &rd[k] * &scal[k].w).collect();
        let a_wrdw = ws.a_apply(&wrdw);

        let newton = |rx: Vec<RealMatrix>| -> Option<Direction> {
            let base = &rp - ws.a_apply(&rx) + &a_wrdw;
            let mut dy = schur.solve(&base)?;
            let build = |dy: &DVector<f64>| {
                let atdy = ws.a_adjoint(dy);
                let mut dz = Vec::with_capacity(nb);
                let mut dx = Vec::with_capacity(nb);
                for k in 0..nb {
                    let mut dzk = &rd[k] - &atdy[k];
                    symmetrize(&mut dzk);
                    let mut dxk = &rx[k] - &scal[k].w * &dzk * &scal[k].w;
                    symmetrize(&mut dxk);
                    dz.push(dzk);
                    dx.push(dxk);
                }
                (dx, dz)
            };
            let (mut dx, mut dz) = build(&dy);
            // One step of iterative refinement on the primal equations.
            let res = &rp - ws.a_apply(&dx);
            if res.norm() > 1e-14 * (1.0 + rp.norm()) {
                dy += schur.solve(&res)?;
                (dx, dz) = build(&dy);
            }
            Some(Direction { dx, dy, dz })
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = (0..nb).map(|k| max_step(&scal[k].lx, &d.dx[k])).fold(f64::INFINITY, f64::min);
            let ad = (0..nb).map(|k| max_step(&scal[k].lz, &d.dz[k])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let rx_aff: Vec<RealMatrix> = x.iter().map(|xk| -xk).collect();
        let Some(aff) = newton(rx_aff) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 = (0..nb)
            .map(|k| dot(&(&x[k] + aff.dx[k].scale(ap)), &(&z[k] + aff.dz[k].scale(ad))))
            .sum::<f64>()
            / ws.n_total.max(1) as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // Corrector.
        let rx: Vec<RealMatrix> = (0..nb)
            .map(|k| {
                let s = &scal[k];
                let n = s.v.len();
                let dxa = &s.g_inv * &aff.dx[k] * s.g_inv.transpose();
                let dza = s.g.transpose() * &aff.dz[k] * &s.g;
                let prod = &dxa * &dza;
                let mut t = RealMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut r = -0.5 * (prod[(i, j)] + prod[(j, i)]);
                        if i == j {
                            r += sigma * mu - s.v[i] * s.v[i];
                        }
                        t[(i, j)] = 2.0 * r / (s.v[i] + s.v[j]);
                    }
                }
                &s.g * t * s.g.transpose()
            })
            .collect();
        let Some(dir) = newton(rx) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = steps(&dir);
        let ap = (tol.sdp_step * ap).min(1.0);
        let ad = (tol.sdp_step * ad).min(1.0);
        for k in 0..nb {
            x[k] += dir.dx[k].scale(ap);
            z[k] += dir.dz[k].scale(ad);
            symmetrize(&mut x[k]);
            symmetrize(&mut z[k]);
        }
        y += dir.dy.scale(ad);
        if !(x.iter().all(|m| m.iter().all(|v| v.is_finite())) && y.iter().all(|v| v.is_finite())) {
            status = SdpStatus::NumericalFailure;
            break;
        }
    }
    if matches!(status, SdpStatus::NumericalFailure | SdpStatus::MaxIterations) {
        if let Some(b) = best {
            return RawSolution {
                status: SdpStatus::Optimal,
                x: b.x,
                y: b.y.iter().copied().collect(),
                pobj: b.pobj,
                dobj: b.dobj,
                pinf: b.pinf,
                dinf: b.dinf,
                iterations,
            };
        }
    }
    RawSolution { status, x, y: y.iter().copied().collect(), pobj, dobj, pinf, dinf, iterations }
}

/// Eigenvalues of a complex block after embedding, for inspection.
pub fn embedded_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = embed_matrix(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, pauli_y, DensityOperator};
    use approx::assert_abs_diff_eq;

    fn min_trace_over_one_sided(rho: &ComplexMatrix, da: usize, db: usize) -> SdpSolution {
        // minimize tr σ  s.t.  𝟙_A ⊗ σ − S = ρ,  σ, S ⪰ 0
        let mut p = SdpProblem::new(Sense::Minimize);
        let s_b = p.add_block(db);
        let slack = p.add_block(da * db);
        p.set_objective(s_b, identity(db));
        p.add_operator_constraint(
            vec![(s_b, LinearMap::kron_left(da, db, 1.0)), (slack, LinearMap::scaled(da * db, -1.0))],
            rho,
        );
        solve(&p).unwrap()
    }

    #[test]
    fn embedding_of_pauli_y() {
        let e = embedded_eigenvalues(&pauli_y());
        for (got, want) in e.iter().zip([1.0, 1.0, -1.0, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let r = embed_matrix(&identity(3));
        assert_eq!(r, RealMatrix::identity(6, 6));
        let sz = crate::linalg::pauli_z();
        let e = embed_matrix(&sz);
        assert_eq!(e.view((0, 0), (2, 2)), e.view((2, 2), (2, 2)));
        assert_eq!(e.view((0, 2), (2, 2)), RealMatrix::zeros(2, 2));
        assert!((unembed_matrix(&embed_matrix(&pauli_y())) - pauli_y()).norm() < 1e-15);
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let basis = hermitian_basis(3);
        assert_eq!(basis.len(), 9);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(herm_inner(a, b), want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn linear_map_adjoints() {
        let mut rng = crate::random::stream_rng(1, 0);
        let x = crate::random::random_density(6, &mut rng).matrix().clone();
        let e = crate::random::random_density(6, &mut rng).matrix().clone();
        let s = crate::random::random_density(3, &mut rng).matrix().clone();
        for map in [LinearMap::trace_first(2, 3), LinearMap::trace_second(3, 2)] {
            let lhs = herm_inner(&map.apply(&x), &s);
            let rhs = herm_inner(&x, &map.adjoint_apply(&s));
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
        let l = LinearMap::kron_left(2, 3, 1.0).apply(&s);
        assert!((l - kron(&identity(2), &s)).norm() < 1e-14);
        let r = LinearMap::kron_right(3, 2, 0.5).apply(&s);
        assert!((r - kron(&s, &identity(2)).scale(0.5)).norm() < 1e-14);
        let c = LinearMap::corner(6, 3, 3).apply(&e);
        assert!((c - e.view((3, 3), (3, 3))).norm() < 1e-15);
        let one = ComplexMatrix::from_element(1, 1, c64(2.0, 0.0));
        assert!((LinearMap::scalar(&s).apply(&one) - s.scale(2.0)).norm() < 1e-12);
        assert_abs_diff_eq!(LinearMap::trace(6).apply(&x)[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_min_trace_is_one() {
        let z = DensityOperator::basis(2, 0);
        let rho = kron(z.matrix(), z.matrix());
        let sol = min_trace_over_one_sided(&rho, 2, 2);
        assert!(sol.is_optimal(), "{:?}", sol.status);
        assert_abs_diff_eq!(sol.primal_value, 1.0, epsilon = 1e-7);
        assert!(sol.duality_gap <= 1e-7);
    }

    #[test]
    fn maximally_entangled_min_trace_is_two() {
        // Brute force over diagonal σ = diag(a, b): 𝟙⊗σ ⪰ Φ needs
        // 1/(2a) + 1/(2b) ≤ 1, so a + b is minimized at a = b = 1.
        let mut best = f64::INFINITY;
        for i in 1..400 {
            let a = 0.5 + i as f64 * 0.005;
            let b = a / (2.0 * a - 1.0);
            best = best.min(a + b);
        }
        assert_abs_diff_eq!(best, 2.0, epsilon = 1e-4);
        let phi = DensityOperator::maximally_entangled(2);
        let sol = min_trace_over_one_sided(phi.matrix(), 2, 2);
        assert!(sol.is_optimal());
        assert_abs_diff_eq!(sol.primal_value, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn max_relative_entropy_instance() {
        // minimize λ s.t. λσ − S = ρ
        let mut rng = crate::random::stream_rng(3, 0);
        for _ in 0..5 {
            let rho = crate::random::random_density(3, &mut rng);
            let sigma = crate::random::random_density(3, &mut rng);
            let mut p = SdpProblem::new(Sense::Minimize);
            let lam = p.add_block(1);
            let s = p.add_block(3);
            p.set_objective(lam, identity(1));
            p.add_operator_constraint(
                vec![(lam, LinearMap::scalar(sigma.matrix())), (s, LinearMap::scaled(3, -1.0))],
                rho.matrix(),
            );
            let sol = solve(&p).unwrap();
            assert!(sol.is_optimal(), "{:?} it={} gap={} pinf={} dinf={} p={} d={}", sol.status, sol.iterations, sol.duality_gap, sol.primal_residual, sol.dual_residual, sol.primal_value, sol.dual_value);
            let isq = sigma.map_spectrum(|v| 1.0 / v.sqrt());
            let m = HermitianOperator::hermitize(&(isq.matrix() * rho.matrix() * isq.matrix()), vec![3]);
            assert_abs_diff_eq!(sol.primal_value, m.max_eigenvalue(), epsilon = 1e-6);
        }
    }

    #[test]
    fn maximize_matches_eigenvalue_and_dual() {
        // max tr(H X) s.t. tr X = 1 gives λ_max(H).
        let mut rng = crate::random::stream_rng(4, 0);
        let g = crate::random::ginibre(4, 4, &mut rng);
        let h = crate::linalg::hermitian_part(&g);
        let p = SdpProblem::single(Sense::Maximize, h.clone(), vec![(identity(4), 1.0)]);
        let sol = solve(&p).unwrap();
        assert!(sol.is_optimal());
        let lmax = crate::linalg::herm_eig(&h).unwrap().values[0];
        assert_abs_diff_eq!(sol.primal_value, lmax, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.dual[0], lmax, epsilon = 1e-6);
        assert!(sol.dual_value >= sol.primal_value - 1e-7);
        assert!(sol.slack[0].min_eigenvalue() > -1e-6);
    }

    #[test]
    fn objective_scaling_scales_value() {
        let mut rng = crate::random::stream_rng(5, 0);
        let rho = crate::random::random_density(4, &mut rng);
        let base = min_trace_over_one_sided(rho.matrix(), 2, 2).primal_value;
        let mut p = SdpProblem::new(Sense::Minimize);
        let s_b = p.add_block(2);
        let slack = p.add_block(4);
        p.set_objective(s_b, identity(2).scale(3.0));
        p.add_operator_constraint(
            vec![(s_b, LinearMap::kron_left(2, 2, 1.0)), (slack, LinearMap::scaled(4, -1.0))],
            rho.matrix(),
        );
        let scaled = solve(&p).unwrap().primal_value;
        assert_abs_diff_eq!(scaled, 3.0 * base, epsilon = 1e-6);
    }

    #[test]
    fn infeasible_problem_is_flagged() {
        // X ⪰ 0 with tr X = −1.
        let p = SdpProblem::single(Sense::Minimize, identity(2), vec![(identity(2), -1.0)]);
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        // Zero row with nonzero right-hand side.
        let p = SdpProblem::single(Sense::Minimize, identity(2), vec![(zeros(2, 2), 1.0)]);
        assert_eq!(solve(&p).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn rejects_non_hermitian_data() {
        let mut c = identity(2);
        c[(0, 1)] = c64(1.0, 0.0);
        let p = SdpProblem::single(Sense::Minimize, c, vec![(identity(2), 1.0)]);
        assert!(solve(&p).is_err());
    }

    #[test]
    fn complex_data_solved_through_embedding() {
        // max tr(σ_y X) over states: value 1, attained at the +1 eigenvector.
        let p = SdpProblem::single(Sense::Maximize, pauli_y(), vec![(identity(2), 1.0)]);
        let emb = embed_hermitian(&p);
        assert!(emb.complex);
        let sol = solve(&p).unwrap();
        assert!(sol.is_optimal());
        assert_abs_diff_eq!(sol.primal_value, 1.0, epsilon = 1e-7);
        let x = sol.primal_matrix();
        assert_abs_diff_eq!(x.trace(), 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(x.inner(&HermitianOperator::single(pauli_y()).unwrap()), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn deterministic() {
        let mut rng = crate::random::stream_rng(6, 0);
        let rho = crate::random::random_density(4, &mut rng);
        let a = min_trace_over_one_sided(rho.matrix(), 2, 2);
        let b = min_trace_over_one_sided(rho.matrix(), 2, 2);
        assert_eq!(a.primal_value, b.primal_value);
        assert_eq!(a.iterations, b.iterations);
    }
}
