//! Quantum channels in Kraus form, their Choi states and Stinespring
//! isometries, and the named qubit families.
//!
//! The Choi state of `N: A' → A` is `(id_R ⊗ N)(Φ_{RA'})` with the reference
//! on the left, so its subsystem dims are `[in_dim, out_dim]`.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, validation, Result};
use crate::linalg::{
    c64, embed_local, identity, is_isometry, kron, outer, partial_trace, partial_transpose, pauli_x, pauli_y,
    pauli_z, zeros, ComplexMatrix, DensityOperator, HermitianOperator,
};
use crate::sdp::{self, LinearMap, Sense, SdpProblem, SdpSolution};
use crate::tolerance::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<ComplexMatrix>,
    in_dim: usize,
    out_dim: usize,
    trace_preserving: bool,
}

fn kraus_shape(kraus: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let first = kraus.first().ok_or_else(|| validation("a channel needs at least one Kraus operator"))?;
    let (out_dim, in_dim) = first.shape();
    if in_dim == 0 || out_dim == 0 {
        return Err(validation("Kraus operators must be nonempty"));
    }
    for k in kraus {
        if k.shape() != (out_dim, in_dim) {
            return Err(mismatch("Kraus operators have inconsistent shapes"));
        }
        if !crate::linalg::is_finite(k) {
            return Err(validation("Kraus operator has non-finite entries"));
        }
    }
    Ok((in_dim, out_dim))
}

fn kraus_gram(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let n = kraus[0].ncols();
    kraus.iter().fold(zeros(n, n), |acc, k| acc + k.adjoint() * k)
}

impl QuantumChannel {
    /// Trace-preserving channel; `Σ K_i† K_i = 𝟙` within tolerance.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (in_dim, out_dim) = kraus_shape(&kraus)?;
        let defect = (kraus_gram(&kraus) - identity(in_dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > tol().completeness {
            return Err(validation(format!("Kraus completeness violated by {defect:.3e}")));
        }
        Ok(Self { kraus, in_dim, out_dim, trace_preserving: true })
    }

    /// Completely positive, trace-non-increasing map: `Σ K_i† K_i ⪯ 𝟙`.
    pub fn new_trace_nonincreasing(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (in_dim, out_dim) = kraus_shape(&kraus)?;
        let gram = HermitianOperator::hermitize(&kraus_gram(&kraus), vec![in_dim]);
        if gram.max_eigenvalue() > 1.0 + tol().completeness {
            return Err(validation("Kraus operators increase the trace"));
        }
        let tp = (gram.matrix() - identity(in_dim)).iter().all(|z| z.norm() <= tol().completeness);
        Ok(Self { kraus, in_dim, out_dim, trace_preserving: tp })
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn identity(d: usize) -> Self {
        Self { kraus: vec![identity(d)], in_dim: d, out_dim: d, trace_preserving: true }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if !crate::linalg::is_unitary(&u, 1e-10) {
            return Err(validation("matrix is not unitary"));
        }
        Self::new(vec![u])
    }

    /// `ρ ↦ V ρ V†` for an isometry `V`.
    pub fn isometry(v: ComplexMatrix) -> Result<Self> {
        if !is_isometry(&v, 1e-10) {
            return Err(validation("matrix is not an isometry"));
        }
        Self::new(vec![v])
    }

    /// `ρ ↦ tr(ρ) ω` from an input of dimension `in_dim`.
    pub fn replacer(omega: &DensityOperator, in_dim: usize) -> Self {
        let eig = omega.eigen();
        let d = omega.dim();
        let mut kraus = Vec::new();
        for (k, &w) in eig.values.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let v = eig.vectors.column(k).into_owned();
            for j in 0..in_dim {
                let mut bra = zeros(1, in_dim);
                bra[(0, j)] = c64(1.0, 0.0);
                kraus.push((&v * bra).scale(w.sqrt()));
            }
        }
        if kraus.is_empty() {
            kraus.push(zeros(d, in_dim));
        }
        Self { kraus, in_dim, out_dim: d, trace_preserving: true }
    }

    /// `tr_{A₂}` on `A₁ ⊗ A₂`.
    pub fn partial_trace(d_keep: usize, d_traced: usize) -> Self {
        let kraus = (0..d_traced)
            .map(|j| {
                let mut bra = zeros(1, d_traced);
                bra[(0, j)] = c64(1.0, 0.0);
                kron(&identity(d_keep), &bra)
            })
            .collect();
        Self { kraus, in_dim: d_keep * d_traced, out_dim: d_keep, trace_preserving: true }
    }

    /// The completely depolarizing channel `R^π` on dimension `d`.
    pub fn completely_depolarizing(d: usize) -> Self {
        Self::replacer(&DensityOperator::maximally_mixed(d), d)
    }

    /// Replacer built from its dilation: swap the input with an environment
    /// prepared in `ω` and discard the environment.
    pub fn replacer_via_swap(omega: &DensityOperator) -> Self {
        let d = omega.dim();
        let mut swap = zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                swap[(j * d + i, i * d + j)] = c64(1.0, 0.0);
            }
        }
        let eig = omega.eigen();
        let mut kraus = Vec::new();
        for (k, &w) in eig.values.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let env_in = kron(&identity(d), &eig.vectors.columns(k, 1).into_owned());
            for l in 0..d {
                let mut bra = zeros(1, d);
                bra[(0, l)] = c64(1.0, 0.0);
                let env_out = kron(&identity(d), &bra);
                kraus.push((env_out * &swap * &env_in).scale(w.sqrt()));
            }
        }
        Self { kraus, in_dim: d, out_dim: d, trace_preserving: true }
    }

    /// Measurement channel `ρ ↦ Σ_k tr(E_k ρ) |k⟩⟨k|` for a POVM `{E_k}`.
    pub fn measurement(povm: &[ComplexMatrix]) -> Result<Self> {
        if povm.is_empty() {
            return Err(validation("POVM needs at least one element"));
        }
        let d = povm[0].nrows();
        let n = povm.len();
        let mut sum = zeros(d, d);
        let mut kraus = Vec::new();
        for (k, e) in povm.iter().enumerate() {
            if e.shape() != (d, d) {
                return Err(mismatch("POVM elements have inconsistent shapes"));
            }
            let h = HermitianOperator::single(e.clone())?;
            let eig = h.eigen();
            if *eig.values.last().unwrap() < -tol().psd {
                return Err(validation(format!("POVM element {k} is not PSD")));
            }
            sum += e;
            for (j, &lam) in eig.values.iter().enumerate() {
                if lam <= tol().psd {
                    continue;
                }
                let mut ket = zeros(n, 1);
                ket[(k, 0)] = c64(1.0, 0.0);
                kraus.push((ket * eig.vectors.columns(j, 1).adjoint()).scale(lam.sqrt()));
            }
        }
        if (sum - identity(d)).iter().any(|z| z.norm() > tol().completeness) {
            return Err(validation("POVM elements do not sum to the identity"));
        }
        Self::new(kraus)
    }

    /// Depolarizing qubit channel with Kraus operators
    /// `√(1−p) 𝟙, √(p/3) σ_x, √(p/3) σ_y, √(p/3) σ_z`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability(p)?;
        let a = (p / 3.0).sqrt();
        Self::new(vec![
            identity(2).scale((1.0 - p).sqrt()),
            pauli_x().scale(a),
            pauli_y().scale(a),
            pauli_z().scale(a),
        ])
    }

    /// Dephasing of the first kind: with probability `p` the state is
    /// measured in the computational basis.
    pub fn dephasing1(p: f64) -> Result<Self> {
        check_probability(p)?;
        let z0 = outer(&crate::linalg::ket(2, 0), &crate::linalg::ket(2, 0));
        let z1 = outer(&crate::linalg::ket(2, 1), &crate::linalg::ket(2, 1));
        Self::new(vec![identity(2).scale((1.0 - p).sqrt()), z0.scale(p.sqrt()), z1.scale(p.sqrt())])
    }

    /// Dephasing of the second kind: `σ_z` applied with probability `p`.
    pub fn dephasing2(p: f64) -> Result<Self> {
        check_probability(p)?;
        Self::new(vec![identity(2).scale((1.0 - p).sqrt()), pauli_z().scale(p.sqrt())])
    }

    /// Random channel with `n_kraus` Kraus operators from a Ginibre isometry.
    /// `n_kraus` is raised to `⌈in_dim/out_dim⌉` when smaller, the fewest that
    /// admit an isometry.
    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, n_kraus: usize, rng: &mut R) -> Self {
        let n_kraus = n_kraus.max(in_dim.div_ceil(out_dim.max(1)));
        let g = crate::random::ginibre(out_dim * n_kraus, in_dim, rng);
        let gram = HermitianOperator::hermitize(&(g.adjoint() * &g), vec![in_dim]);
        let v = g * gram.map_spectrum(|x| 1.0 / x.sqrt()).matrix();
        Self::from_isometry_unchecked(&v, out_dim, n_kraus)
    }

    fn from_isometry_unchecked(v: &ComplexMatrix, out_dim: usize, env_dim: usize) -> Self {
        let in_dim = v.ncols();
        let kraus = (0..env_dim)
            .map(|i| ComplexMatrix::from_fn(out_dim, in_dim, |a, j| v[(a * env_dim + i, j)]))
            .collect();
        Self { kraus, in_dim, out_dim, trace_preserving: true }
    }

    /// Kraus operators of the channel obtained by tracing out the output
    /// instead of the environment.
    pub fn complementary(&self) -> Self {
        let ext = stinespring_isometry(self);
        let env = ext.env_dim;
        let out = self.out_dim;
        let kraus = (0..out)
            .map(|a| ComplexMatrix::from_fn(env, self.in_dim, |i, j| ext.v[(a * env + i, j)]))
            .collect();
        Self { kraus, in_dim: self.in_dim, out_dim: env, trace_preserving: self.trace_preserving }
    }

    /// Output of the channel on a single-system operator.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` on `[in, out]`.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let (din, dout) = (self.in_dim, self.out_dim);
        let mut out = zeros(din * dout, din * dout);
        for k in &self.kraus {
            // vec(K) in (in, out) ordering: column index j, row index a.
            let v = DVector::from_fn(din * dout, |idx, _| k[(idx % dout, idx / dout)]);
            out += &v * v.adjoint();
        }
        out
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(validation(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Choi state `Φ^N` on `[in_dim, out_dim]`. Subnormalized for
/// trace-decreasing maps.
pub fn choi_state(n: &QuantumChannel) -> DensityOperator {
    let m = n.choi_matrix().unscale(n.in_dim as f64);
    DensityOperator::trusted(HermitianOperator::hermitize(&m, vec![n.in_dim, n.out_dim]))
}

/// Applies `N` to subsystem `subsystem` of `rho`.
pub fn apply(n: &QuantumChannel, rho: &DensityOperator, subsystem: usize) -> Result<DensityOperator> {
    Ok(DensityOperator::trusted(apply_operator(n, rho, subsystem)?))
}

/// Applies `N` to one subsystem of any Hermitian operator.
pub fn apply_operator(n: &QuantumChannel, h: &HermitianOperator, subsystem: usize) -> Result<HermitianOperator> {
    let dims = h.dims();
    if subsystem >= dims.len() {
        return Err(validation(format!("subsystem {subsystem} out of range for dims {dims:?}")));
    }
    if dims[subsystem] != n.in_dim {
        return Err(mismatch(format!(
            "channel input dimension {} does not match subsystem dimension {}",
            n.in_dim, dims[subsystem]
        )));
    }
    let mut out_dims = dims.to_vec();
    out_dims[subsystem] = n.out_dim;
    let d_out: usize = out_dims.iter().product();
    let mut out = zeros(d_out, d_out);
    for k in &n.kraus {
        let big = embed_local(k, dims, subsystem);
        out += &big * h.matrix() * big.adjoint();
    }
    Ok(HermitianOperator::hermitize(&out, out_dims))
}

#[derive(Debug, Clone)]
pub struct IsometryExtension {
    /// `(out_dim·env_dim) × in_dim`, output system before the environment.
    pub v: ComplexMatrix,
    pub in_dim: usize,
    pub out_dim: usize,
    pub env_dim: usize,
}

impl IsometryExtension {
    /// `V ρ V†` on `[out, env]`.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.in_dim {
            return Err(mismatch("input dimension does not match the isometry"));
        }
        let m = &self.v * rho.matrix() * self.v.adjoint();
        Ok(DensityOperator::trusted(HermitianOperator::hermitize(&m, vec![self.out_dim, self.env_dim])))
    }
}

/// `V = Σ_i K_i ⊗ |i⟩_E`, one environment level per Kraus operator.
pub fn stinespring_isometry(n: &QuantumChannel) -> IsometryExtension {
    let env = n.kraus.len();
    let (din, dout) = (n.in_dim, n.out_dim);
    let v = ComplexMatrix::from_fn(dout * env, din, |row, j| n.kraus[row % env][(row / env, j)]);
    IsometryExtension { v, in_dim: din, out_dim: dout, env_dim: env }
}

/// Whether the Choi state stays PSD under partial transposition.
pub fn is_ppt(n: &QuantumChannel) -> bool {
    let pt = partial_transpose(&choi_state(n), 1).expect("Choi state is bipartite");
    pt.min_eigenvalue() >= -tol().ppt
}

/// `N2 ∘ N1`.
pub fn compose(n2: &QuantumChannel, n1: &QuantumChannel) -> Result<QuantumChannel> {
    if n1.out_dim != n2.in_dim {
        return Err(mismatch(format!("cannot compose output {} with input {}", n1.out_dim, n2.in_dim)));
    }
    let kraus = n2.kraus.iter().flat_map(|b| n1.kraus.iter().map(move |a| b * a)).collect();
    Ok(QuantumChannel {
        kraus,
        in_dim: n1.in_dim,
        out_dim: n2.out_dim,
        trace_preserving: n1.trace_preserving && n2.trace_preserving,
    })
}

/// `N ⊗ M`.
pub fn tensor_channels(n: &QuantumChannel, m: &QuantumChannel) -> QuantumChannel {
    let kraus = n.kraus.iter().flat_map(|a| m.kraus.iter().map(move |b| kron(a, b))).collect();
    QuantumChannel {
        kraus,
        in_dim: n.in_dim * m.in_dim,
        out_dim: n.out_dim * m.out_dim,
        trace_preserving: n.trace_preserving && m.trace_preserving,
    }
}

/// SDP for `½‖N − M‖_⋄`: maximize `⟨J, W⟩` subject to `0 ⪯ W ⪯ ρ ⊗ 𝟙`,
/// `tr ρ = 1`, where `J` is the unnormalized Choi matrix of `N − M`.
pub fn diamond_distance_sdp(n: &QuantumChannel, m: &QuantumChannel) -> Result<SdpSolution> {
    if n.in_dim != m.in_dim || n.out_dim != m.out_dim {
        return Err(mismatch("diamond distance needs channels with equal dimensions"));
    }
    let (din, dout) = (n.in_dim, n.out_dim);
    let d = din * dout;
    let j = n.choi_matrix() - m.choi_matrix();
    let mut p = SdpProblem::new(Sense::Maximize);
    let w = p.add_block(d);
    let rho = p.add_block(din);
    let slack = p.add_block(d);
    p.set_objective(w, crate::linalg::hermitian_part(&j));
    p.add_operator_constraint(
        vec![
            (rho, LinearMap::kron_right(din, dout, 1.0)),
            (w, LinearMap::scaled(d, -1.0)),
            (slack, LinearMap::scaled(d, -1.0)),
        ],
        &zeros(d, d),
    );
    p.add_constraint(vec![(rho, identity(din))], 1.0);
    sdp::solve(&p)
}

/// `½‖N − M‖_⋄ ∈ [0, 1]`.
pub fn diamond_distance(n: &QuantumChannel, m: &QuantumChannel) -> Result<f64> {
    if n.in_dim != m.in_dim || n.out_dim != m.out_dim {
        return Err(mismatch("diamond distance needs channels with equal dimensions"));
    }
    let j = n.choi_matrix() - m.choi_matrix();
    if j.iter().all(|z| z.norm() <= 1e-14) {
        return Ok(0.0);
    }
    let sol = diamond_distance_sdp(n, m)?.require_optimal("diamond distance")?;
    Ok(sol.primal_value.clamp(0.0, 1.0))
}

/// SDP for `‖N − M‖_⋄` of arbitrary completely positive maps: maximize
/// `½⟨J, S₂ − S₁⟩` subject to `S₁ + S₂ = 2ρ ⊗ 𝟙`, `S₁, S₂ ⪰ 0`, `tr ρ = 1`,
/// which encodes `−ρ ⊗ 𝟙 ⪯ W ⪯ ρ ⊗ 𝟙`.
pub fn diamond_norm_sdp(n: &QuantumChannel, m: &QuantumChannel) -> Result<SdpSolution> {
    if n.in_dim != m.in_dim || n.out_dim != m.out_dim {
        return Err(mismatch("diamond norm needs maps with equal dimensions"));
    }
    let (din, dout) = (n.in_dim, n.out_dim);
    let d = din * dout;
    let j = crate::linalg::hermitian_part(&(n.choi_matrix() - m.choi_matrix()));
    let mut p = SdpProblem::new(Sense::Maximize);
    let s1 = p.add_block(d);
    let s2 = p.add_block(d);
    let rho = p.add_block(din);
    p.set_objective(s1, j.scale(-0.5));
    p.set_objective(s2, j.scale(0.5));
    p.add_operator_constraint(
        vec![
            (s1, LinearMap::identity(d)),
            (s2, LinearMap::identity(d)),
            (rho, LinearMap::kron_right(din, dout, -2.0)),
        ],
        &zeros(d, d),
    );
    p.add_constraint(vec![(rho, identity(din))], 1.0);
    sdp::solve(&p)
}

/// `‖N − M‖_⋄` for completely positive maps that need not preserve trace.
pub fn diamond_norm(n: &QuantumChannel, m: &QuantumChannel) -> Result<f64> {
    if n.in_dim != m.in_dim || n.out_dim != m.out_dim {
        return Err(mismatch("diamond norm needs maps with equal dimensions"));
    }
    if (n.choi_matrix() - m.choi_matrix()).iter().all(|z| z.norm() <= 1e-14) {
        return Ok(0.0);
    }
    let sol = diamond_norm_sdp(n, m)?.require_optimal("diamond norm")?;
    Ok(sol.primal_value.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    Depolarizing,
    Dephasing1,
    Dephasing2,
    Replacer,
    Unitary,
    Identity,
    Povm,
}

impl ChannelFamily {
    pub const NOISE: [ChannelFamily; 3] = [ChannelFamily::Depolarizing, ChannelFamily::Dephasing1, ChannelFamily::Dephasing2];

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Depolarizing => "depolarizing",
            ChannelFamily::Dephasing1 => "dephasing1",
            ChannelFamily::Dephasing2 => "dephasing2",
            ChannelFamily::Replacer => "replacer",
            ChannelFamily::Unitary => "unitary",
            ChannelFamily::Identity => "identity",
            ChannelFamily::Povm => "povm",
        }
    }
}

impl std::fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ChannelFamily {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| validation(format!("unknown channel family '{s}'")))
    }
}

/// A matrix given as row-major `[re, im]` pairs, or the name of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Entries(Vec<[f64; 2]>),
}

impl MatrixSpec {
    fn to_matrix(&self, default_dim: usize) -> Result<ComplexMatrix> {
        match self {
            MatrixSpec::Named(name) if name == "maximally-mixed" => {
                Ok(identity(default_dim).unscale(default_dim as f64))
            }
            MatrixSpec::Named(name) => Err(validation(format!("unknown named state '{name}'"))),
            MatrixSpec::Entries(e) => {
                let d = (e.len() as f64).sqrt().round() as usize;
                if d == 0 || d * d != e.len() {
                    return Err(validation(format!("{} entries do not form a square matrix", e.len())));
                }
                Ok(ComplexMatrix::from_fn(d, d, |i, j| c64(e[i * d + j][0], e[i * d + j][1])))
            }
        }
    }
}

/// JSON description of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<Vec<MatrixSpec>>,
    /// `[in]` or `[in, out]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

impl ChannelSpec {
    pub fn named(family: ChannelFamily, p: Option<f64>) -> Self {
        Self { family, p, omega: None, unitary: None, povm: None, dims: None }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| validation(format!("invalid channel spec: {e}")))
    }
}

/// `exp(−iπpσ_y/2)`.
pub fn y_rotation(p: f64) -> ComplexMatrix {
    let (sin, cos) = (std::f64::consts::FRAC_PI_2 * p).sin_cos();
    identity(2).scale(cos) - crate::linalg::pauli_y() * c64(0.0, sin)
}

/// Builds a channel from its description.
pub fn make_named_channel(spec: &ChannelSpec) -> Result<QuantumChannel> {
    let need_p = || spec.p.ok_or_else(|| validation(format!("family {} needs p", spec.family.name())));
    let dims = spec.dims.clone().unwrap_or_default();
    match spec.family {
        ChannelFamily::Depolarizing => QuantumChannel::depolarizing(need_p()?),
        ChannelFamily::Dephasing1 => QuantumChannel::dephasing1(need_p()?),
        ChannelFamily::Dephasing2 => QuantumChannel::dephasing2(need_p()?),
        ChannelFamily::Replacer => {
            let out = dims.get(1).or(dims.first()).copied().unwrap_or(2);
            let omega_m = match (&spec.omega, spec.p) {
                (Some(m), _) => m.to_matrix(out)?,
                (None, Some(p)) => {
                    check_probability(p)?;
                    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0 - p, 0.0), c64(p, 0.0)]))
                }
                (None, None) => MatrixSpec::Named("maximally-mixed".into()).to_matrix(out)?,
            };
            let d = omega_m.nrows();
            let omega = DensityOperator::from_matrix(omega_m, vec![d])?;
            let din = dims.first().copied().unwrap_or(d);
            Ok(QuantumChannel::replacer(&omega, din))
        }
        ChannelFamily::Unitary => match (&spec.unitary, spec.p) {
            (Some(u), _) => QuantumChannel::unitary(u.to_matrix(2)?),
            (None, Some(p)) => {
                check_probability(p)?;
                QuantumChannel::unitary(y_rotation(p))
            }
            (None, None) => Ok(QuantumChannel::identity(dims.first().copied().unwrap_or(2))),
        },
        ChannelFamily::Identity => Ok(QuantumChannel::identity(dims.first().copied().unwrap_or(2))),
        ChannelFamily::Povm => {
            let povm = spec.povm.as_ref().ok_or_else(|| validation("family povm needs povm elements"))?;
            let elems = povm.iter().map(|e| e.to_matrix(2)).collect::<Result<Vec<_>>>()?;
            QuantumChannel::measurement(&elems)
        }
    }
}

/// Reduced state on the reference of a Choi state.
pub fn choi_reference_marginal(n: &QuantumChannel) -> HermitianOperator {
    partial_trace(&choi_state(n), &[0]).expect("Choi state is bipartite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{tensor, trace_distance};
    use crate::random::{random_density, random_pure_state, stream_rng};
    use approx::assert_abs_diff_eq;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn pi2() -> DensityOperator {
        DensityOperator::maximally_mixed(2)
    }

    #[test]
    fn depolarizing_endpoints() {
        let id = QuantumChannel::depolarizing(0.0).unwrap();
        assert!(close(&id.apply_matrix(&pauli_x()), &pauli_x(), 1e-15));
        let full = QuantumChannel::depolarizing(0.75).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..10 {
            let rho = random_density(2, &mut rng);
            assert!(close(&full.apply_matrix(rho.matrix()), pi2().matrix(), 1e-12));
        }
        let one = QuantumChannel::depolarizing(1.0).unwrap();
        let out = one.apply_matrix(DensityOperator::basis(2, 0).matrix());
        let want = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c64(1. / 3., 0.), c64(2. / 3., 0.)]));
        assert!(close(&out, &want, 1e-12));
        assert!(QuantumChannel::depolarizing(1.2).is_err());
        assert!(QuantumChannel::dephasing1(-0.1).is_err());
    }

    #[test]
    fn dephasing1_matches_dephasing2_at_half() {
        let mut rng = stream_rng(2, 0);
        for p in [0.0, 0.3, 0.8, 1.0] {
            let a = QuantumChannel::dephasing1(p).unwrap();
            let b = QuantumChannel::dephasing2(p / 2.0).unwrap();
            let rho = random_density(2, &mut rng);
            assert!(close(&a.apply_matrix(rho.matrix()), &b.apply_matrix(rho.matrix()), 1e-12));
        }
    }

    #[test]
    fn choi_cases() {
        let phi = DensityOperator::maximally_entangled(2);
        assert!(close(choi_state(&QuantumChannel::identity(2)).matrix(), phi.matrix(), 1e-15));
        let pp = tensor(&pi2(), &pi2());
        assert!(close(choi_state(&QuantumChannel::completely_depolarizing(2)).matrix(), pp.matrix(), 1e-15));
        for p in [0.1, 0.4, 0.9] {
            let c = choi_state(&QuantumChannel::depolarizing(p).unwrap());
            let mut ev = c.eigenvalues();
            ev.sort_by(|a, b| b.total_cmp(a));
            let mut want = vec![1.0 - p, p / 3.0, p / 3.0, p / 3.0];
            want.sort_by(|a, b| b.total_cmp(a));
            for (g, w) in ev.iter().zip(&want) {
                assert_abs_diff_eq!(g, w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn choi_reference_marginal_is_maximally_mixed() {
        let mut rng = stream_rng(3, 0);
        let chans = vec![
            QuantumChannel::depolarizing(0.3).unwrap(),
            QuantumChannel::dephasing1(0.6).unwrap(),
            QuantumChannel::random(2, 3, 2, &mut rng),
            QuantumChannel::random(3, 2, 4, &mut rng),
        ];
        for n in chans {
            let r = choi_reference_marginal(&n);
            let want = identity(n.in_dim()).unscale(n.in_dim() as f64);
            assert!(close(r.matrix(), &want, 1e-12));
        }
    }

    #[test]
    fn apply_on_subsystem() {
        let phi = DensityOperator::maximally_entangled(2);
        let out = apply(&QuantumChannel::identity(2), &phi, 1).unwrap();
        assert!(close(out.matrix(), phi.matrix(), 1e-15));
        let out = apply(&QuantumChannel::completely_depolarizing(2), &phi, 1).unwrap();
        assert!(close(out.matrix(), tensor(&pi2(), &pi2()).matrix(), 1e-15));
        assert!(apply(&QuantumChannel::identity(3), &phi, 1).is_err());
        assert!(apply(&QuantumChannel::identity(2), &phi, 2).is_err());
        let mut rng = stream_rng(4, 0);
        let n = QuantumChannel::random(2, 3, 3, &mut rng);
        let psi = random_pure_state(&[2, 2], &mut rng);
        let out = apply(&n, &psi, 1).unwrap();
        assert_eq!(out.dims(), &[2, 3]);
        let r_before = partial_trace(&psi, &[0]).unwrap();
        let r_after = partial_trace(&out, &[0]).unwrap();
        assert!(close(r_before.matrix(), r_after.matrix(), 1e-12));
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert!(out.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn stinespring_reproduces_action() {
        let mut rng = stream_rng(5, 0);
        let chans = vec![
            QuantumChannel::depolarizing(0.75).unwrap(),
            QuantumChannel::random(2, 2, 3, &mut rng),
            QuantumChannel::random(3, 2, 2, &mut rng),
        ];
        for n in &chans {
            let ext = stinespring_isometry(n);
            assert!(is_isometry(&ext.v, 1e-10));
            for _ in 0..5 {
                let rho = random_density(n.in_dim(), &mut rng);
                let out = ext.apply(&rho).unwrap();
                let reduced = partial_trace(&out, &[0]).unwrap();
                assert!(close(reduced.matrix(), &n.apply_matrix(rho.matrix()), 1e-10));
            }
        }
        let dep = stinespring_isometry(&chans[0]);
        assert_eq!(dep.env_dim, 4);
        let psi = random_pure_state(&[2], &mut rng);
        let out = partial_trace(&dep.apply(&psi).unwrap(), &[0]).unwrap();
        assert!(close(out.matrix(), pi2().matrix(), 1e-12));
    }

    #[test]
    fn stinespring_of_unitary_and_measurement() {
        let mut rng = stream_rng(6, 0);
        let u = crate::random::haar_unitary(2, &mut rng);
        let ext = stinespring_isometry(&QuantumChannel::unitary(u.clone()).unwrap());
        assert_eq!(ext.env_dim, 1);
        assert!(close(&ext.v, &u, 0.0));
        let z0 = outer(&crate::linalg::ket(2, 0), &crate::linalg::ket(2, 0));
        let z1 = outer(&crate::linalg::ket(2, 1), &crate::linalg::ket(2, 1));
        let meas = QuantumChannel::measurement(&[z0, z1]).unwrap();
        let ext = stinespring_isometry(&meas);
        for i in 0..2 {
            let col = ext.v.column(i).into_owned();
            let want = crate::linalg::ket(2, i).kronecker(&crate::linalg::ket(2, i));
            assert!((col - want).norm() < 1e-12);
        }
    }

    #[test]
    fn measurement_rejects_invalid_povm() {
        assert!(QuantumChannel::measurement(&[identity(2).scale(0.5)]).is_err());
        assert!(QuantumChannel::measurement(&[pauli_z(), identity(2) - pauli_z()]).is_err());
    }

    #[test]
    fn ppt_cases() {
        assert!(!is_ppt(&QuantumChannel::identity(2)));
        assert!(is_ppt(&QuantumChannel::completely_depolarizing(2)));
        assert!(!is_ppt(&QuantumChannel::depolarizing(0.499).unwrap()));
        assert!(is_ppt(&QuantumChannel::depolarizing(0.501).unwrap()));
        assert!(is_ppt(&QuantumChannel::depolarizing(0.5).unwrap()));
    }

    #[test]
    fn composition_and_tensor() {
        let mut rng = stream_rng(7, 0);
        let n = QuantumChannel::random(2, 2, 2, &mut rng);
        let idn = compose(&QuantumChannel::identity(2), &n).unwrap();
        assert!(close(&idn.choi_matrix(), &n.choi_matrix(), 1e-12));
        let rn = compose(&QuantumChannel::completely_depolarizing(2), &n).unwrap();
        for i in 0..2 {
            let b = DensityOperator::basis(2, i);
            assert!(close(&rn.apply_matrix(b.matrix()), pi2().matrix(), 1e-12));
        }
        assert!(compose(&QuantumChannel::identity(3), &n).is_err());

        let m = QuantumChannel::random(2, 3, 2, &mut rng);
        let nm = tensor_channels(&n, &m);
        // Choi of N⊗M on [R1 R2, A1 A2] is the tensor of Chois on [R1, A1, R2, A2] permuted.
        let c = tensor(&choi_state(&n), &choi_state(&m));
        let permuted = crate::linalg::permute_subsystems(&c, &[0, 2, 1, 3]).unwrap();
        assert!(close(choi_state(&nm).matrix(), permuted.matrix(), 1e-12));
    }

    #[test]
    fn replacer_constructions_agree() {
        let mut rng = stream_rng(8, 0);
        let omega = random_density(2, &mut rng);
        let a = QuantumChannel::replacer(&omega, 2);
        let b = QuantumChannel::replacer_via_swap(&omega);
        assert!(close(&a.choi_matrix(), &b.choi_matrix(), 1e-12));
        let rho = random_density(2, &mut rng);
        assert!(close(&b.apply_matrix(rho.matrix()), omega.matrix(), 1e-12));
    }

    #[test]
    fn diamond_distance_cases() {
        let id = QuantumChannel::identity(2);
        let r = QuantumChannel::completely_depolarizing(2);
        assert_eq!(diamond_distance(&id, &id).unwrap(), 0.0);
        let sol = diamond_distance_sdp(&id, &r).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.duality_gap <= 1e-7);
        assert_abs_diff_eq!(sol.primal_value, 0.75, epsilon = 1e-7);
        let half_norm = 0.5 * crate::linalg::trace_norm(
            (DensityOperator::maximally_entangled(2).sub(&tensor(&pi2(), &pi2()))).unwrap().matrix(),
        )
        .unwrap();
        assert_abs_diff_eq!(half_norm, 0.75, epsilon = 1e-12);
        let d0 = diamond_distance(&QuantumChannel::dephasing2(0.0).unwrap(), &id).unwrap();
        assert_abs_diff_eq!(d0, 0.0, epsilon = 1e-12);
        // Dephasing with probability p is at distance p from the identity.
        let d = diamond_distance(&QuantumChannel::dephasing2(0.3).unwrap(), &id).unwrap();
        assert_abs_diff_eq!(d, 0.3, epsilon = 1e-6);
    }

    #[test]
    fn diamond_distance_dominates_sampled_inputs() {
        let mut rng = stream_rng(9, 0);
        for _ in 0..5 {
            let n = QuantumChannel::random(2, 2, 2, &mut rng);
            let m = QuantumChannel::random(2, 2, 3, &mut rng);
            let d = diamond_distance(&n, &m).unwrap();
            assert!((0.0..=1.0).contains(&d));
            for _ in 0..20 {
                let psi = random_pure_state(&[2, 2], &mut rng);
                let a = apply(&n, &psi, 1).unwrap();
                let b = apply(&m, &psi, 1).unwrap();
                assert!(trace_distance(&a, &b).unwrap() <= d + 1e-7);
            }
        }
    }

    #[test]
    fn spec_parsing() {
        let s = ChannelSpec::from_json(r#"{"family":"depolarizing","p":0.75}"#).unwrap();
        let n = make_named_channel(&s).unwrap();
        assert_eq!(n.kraus().len(), 4);
        let s = ChannelSpec::from_json(r#"{"family":"replacer","omega":"maximally-mixed"}"#).unwrap();
        let n = make_named_channel(&s).unwrap();
        assert!(close(&n.apply_matrix(&pauli_x()), &zeros(2, 2), 1e-12));
        let s = ChannelSpec::from_json(r#"{"family":"unitary"}"#).unwrap();
        assert_eq!(make_named_channel(&s).unwrap(), QuantumChannel::identity(2));
        let s = ChannelSpec::from_json(r#"{"family":"unitary","unitary":[[0,0],[1,0],[1,0],[0,0]]}"#).unwrap();
        let n = make_named_channel(&s).unwrap();
        assert!(close(&n.kraus()[0], &pauli_x(), 0.0));
        let s = ChannelSpec::from_json(r#"{"family":"povm","povm":[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[1,0]]]}"#).unwrap();
        assert_eq!(make_named_channel(&s).unwrap().out_dim(), 2);
        assert!(ChannelSpec::from_json(r#"{"family":"bogus"}"#).is_err());
        assert!(make_named_channel(&ChannelSpec::named(ChannelFamily::Depolarizing, None)).is_err());
        assert!(make_named_channel(&ChannelSpec::named(ChannelFamily::Depolarizing, Some(2.0))).is_err());
        let s = ChannelSpec::from_json(r#"{"family":"unitary","unitary":[[1,0],[1,0],[0,0],[1,0]]}"#).unwrap();
        assert!(make_named_channel(&s).is_err());
    }

    #[test]
    fn complementary_channel_output_is_environment() {
        let mut rng = stream_rng(10, 0);
        let n = QuantumChannel::random(2, 2, 3, &mut rng);
        let c = n.complementary();
        let rho = random_density(2, &mut rng);
        let full = stinespring_isometry(&n).apply(&rho).unwrap();
        let env = partial_trace(&full, &[1]).unwrap();
        assert!(close(env.matrix(), &c.apply_matrix(rho.matrix()), 1e-12));
    }

    #[test]
    fn diamond_norm_matches_distance_for_channels() {
        let id = QuantumChannel::identity(2);
        let r = QuantumChannel::completely_depolarizing(2);
        assert!((diamond_norm(&id, &r).unwrap() - 1.5).abs() < 1e-6);
        let mut rng = crate::random::stream_rng(31, 0);
        let a = QuantumChannel::random(2, 2, 2, &mut rng);
        let b = QuantumChannel::random(2, 2, 3, &mut rng);
        let half = diamond_distance(&a, &b).unwrap();
        assert!((diamond_norm(&a, &b).unwrap() - 2.0 * half).abs() < 1e-6);
        assert_eq!(diamond_norm(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn diamond_norm_of_trace_decreasing_maps() {
        // ‖K·K† − 0‖⋄ for K = diag(1, 0) is ‖|0⟩⟨0| projector map‖ = 1.
        let k = crate::linalg::outer(&crate::linalg::ket(2, 0), &crate::linalg::ket(2, 0));
        let proj = QuantumChannel::new_trace_nonincreasing(vec![k.clone()]).unwrap();
        let zero = QuantumChannel::new_trace_nonincreasing(vec![zeros(2, 2)]).unwrap();
        assert!((diamond_norm(&proj, &zero).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn named_families_take_p() {
        let r = make_named_channel(&ChannelSpec::named(ChannelFamily::Replacer, Some(0.25))).unwrap();
        let out = r.apply_matrix(&identity(2).scale(0.5));
        assert_abs_diff_eq!(out[(0, 0)].re, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(out[(1, 1)].re, 0.25, epsilon = 1e-12);

        let u = make_named_channel(&ChannelSpec::named(ChannelFamily::Unitary, Some(1.0))).unwrap();
        let mut zero = ComplexMatrix::zeros(2, 2);
        zero[(0, 0)] = c64(1.0, 0.0);
        assert_abs_diff_eq!(u.apply_matrix(&zero)[(1, 1)].re, 1.0, epsilon = 1e-12);
        assert!(make_named_channel(&ChannelSpec::named(ChannelFamily::Unitary, Some(1.5))).is_err());
    }

    #[test]
    fn random_channels_preserve_trace() {
        let mut rng = stream_rng(11, 0);
        for (din, dout, k) in [(3, 1, 1), (4, 2, 1), (2, 3, 2)] {
            let n = QuantumChannel::random(din, dout, k, &mut rng);
            let gram: ComplexMatrix = n.kraus().iter().map(|k| k.adjoint() * k).sum();
            assert!(close(&gram, &identity(din), 1e-10));
        }
    }

    #[test]
    fn partial_trace_channel() {
        let t = QuantumChannel::partial_trace(2, 3);
        assert!(t.is_trace_preserving());
        let mut rng = stream_rng(3, 0);
        let a = random_density(2, &mut rng);
        let b = random_density(3, &mut rng);
        let out = t.apply_matrix(&kron(a.matrix(), b.matrix()));
        assert!(close(&out, a.matrix(), 1e-12));
    }
}
