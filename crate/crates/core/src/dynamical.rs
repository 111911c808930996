//! Min-entropy of channels: closed form, SDP cross-check, input scans for
//! the dual expressions, smoothing and continuity.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{apply, choi_state, compose, diamond_distance, stinespring_isometry, QuantumChannel};
use crate::entropies::{cond_min_entropy_down_sdp, cond_min_entropy_up, cond_sandwiched_half_up};
use crate::error::{mismatch, validation, Result};
use crate::linalg::{
    c64, identity, is_unitary, ket, partial_trace, swap_bipartite, ComplexMatrix, DensityOperator, HermitianOperator, C64,
};
use crate::random::{random_pure_vector, stream_rng};
use crate::sdp::{solve, LinearMap, Sense, SdpProblem};
use crate::tolerance::tol;

/// Nelder–Mead iterations spent refining the best scan candidate.
const REFINE_ITERATIONS: u64 = 60;

/// Normalized Choi state reordered to `[A, R]` so that `A` is the first
/// (conditioned) subsystem.
fn choi_ar(n: &QuantumChannel) -> HermitianOperator {
    swap_bipartite(&choi_state(n)).expect("Choi state is bipartite")
}

/// `S_min[N] = −log(|A'| λ_max(Φ^N))`.
pub fn channel_min_entropy(n: &QuantumChannel) -> f64 {
    -((n.in_dim() as f64) * choi_state(n).max_eigenvalue()).log2()
}

/// `S_min[N]` as `S_min^↓(A|R)` of the Choi state, via the `D_max` SDP.
pub fn channel_min_entropy_sdp(n: &QuantumChannel) -> Result<f64> {
    cond_min_entropy_down_sdp(&choi_ar(n))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelEntropyReport {
    pub s_min: f64,
    pub closed_form: f64,
    pub sdp_value: f64,
    pub lambda_max: f64,
    pub inf_scan_value: f64,
    pub n_scan_samples: usize,
    pub n_skipped: usize,
    pub gap_flags: Vec<String>,
}

/// Pure inputs `ψ_{RA'}` with `|R| = |A'|`: the maximally entangled state,
/// computational product states, then `n_random` Haar-random vectors drawn
/// from per-sample streams.
pub(crate) fn input_vectors(d: usize, n_random: usize, seed: u64) -> Vec<DVector<C64>> {
    let mut out = Vec::with_capacity(1 + d * d + n_random);
    let mut phi = DVector::zeros(d * d);
    for i in 0..d {
        phi[i * d + i] = c64(1.0 / (d as f64).sqrt(), 0.0);
    }
    out.push(phi);
    for i in 0..d {
        for j in 0..d {
            out.push(ket(d * d, i * d + j));
        }
    }
    out.par_extend((0..n_random).into_par_iter().map(|k| random_pure_vector(d * d, &mut stream_rng(seed, k as u64))));
    out
}

pub(crate) fn pure(psi: &DVector<C64>, d: usize) -> DensityOperator {
    DensityOperator::pure(psi, vec![d, d]).expect("normalized input vector")
}

/// `S_min^↑(A|R)` of `N(ψ_{RA'})`.
pub fn output_min_entropy(n: &QuantumChannel, psi: &DensityOperator) -> Result<f64> {
    let out = apply(n, psi, 1)?;
    cond_min_entropy_up(&swap_bipartite(&out)?)
}

struct RefineCost<'a> {
    channel: &'a QuantumChannel,
}

fn vector_from_params(p: &[f64]) -> Option<DVector<C64>> {
    let v = DVector::from_fn(p.len() / 2, |i, _| c64(p[2 * i], p[2 * i + 1]));
    let norm = v.norm();
    (norm > 1e-12).then(|| v.unscale(norm))
}

impl CostFunction for RefineCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let d = self.channel.in_dim();
        let Some(v) = vector_from_params(p) else { return Ok(f64::INFINITY) };
        Ok(output_min_entropy(self.channel, &pure(&v, d)).unwrap_or(f64::INFINITY))
    }
}

/// Simplex refinement around `start`; returns the best value found.
fn refine(n: &QuantumChannel, start: &DVector<C64>) -> Option<f64> {
    let base: Vec<f64> = start.iter().flat_map(|z| [z.re, z.im]).collect();
    let mut simplex = vec![base.clone()];
    for k in 0..base.len() {
        let mut v = base.clone();
        v[k] += 0.05;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-9).ok()?;
    let res = Executor::new(RefineCost { channel: n }, solver)
        .configure(|s| s.max_iters(REFINE_ITERATIONS))
        .run()
        .ok()?;
    let best = res.state().get_best_param()?;
    // Re-evaluate at the normalized point so the reported value is exact.
    let v = vector_from_params(best)?;
    output_min_entropy(n, &pure(&v, n.in_dim())).ok()
}

/// Sampled infimum of `S_min^↑(A|R)_{N(ψ)}` over pure inputs.
///
/// Every value is attained by an explicit input, so the scan can only sit
/// above `S_min[N]`. The best candidate is refined by a short simplex search.
pub fn channel_min_entropy_scan(n: &QuantumChannel, n_samples: usize, seed: u64) -> Result<ChannelEntropyReport> {
    if n_samples == 0 {
        return Err(validation("n_samples must be at least 1"));
    }
    let d = n.in_dim();
    let inputs = input_vectors(d, n_samples, seed);
    let values: Vec<Option<f64>> =
        inputs.par_iter().map(|v| output_min_entropy(n, &pure(v, d)).ok()).collect();
    let n_skipped = values.iter().filter(|v| v.is_none()).count();
    let (best_idx, mut inf_scan) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| validation("every scan sample failed"))?;
    if let Some(r) = refine(n, &inputs[best_idx]) {
        inf_scan = inf_scan.min(r);
    }

    let closed = channel_min_entropy(n);
    let sdp_value = channel_min_entropy_sdp(n)?;
    let mut gap_flags = Vec::new();
    if (closed - sdp_value).abs() > 1e-6 {
        gap_flags.push(format!("closed form and SDP differ by {:.3e}", closed - sdp_value));
    }
    if inf_scan < closed - 1e-6 {
        gap_flags.push(format!("scan minimum below S_min by {:.3e}", closed - inf_scan));
    }
    Ok(ChannelEntropyReport {
        s_min: closed,
        closed_form: closed,
        sdp_value,
        lambda_max: choi_state(n).max_eigenvalue(),
        inf_scan_value: inf_scan,
        n_scan_samples: inputs.len() - n_skipped,
        n_skipped,
        gap_flags,
    })
}

/// Best singlet fidelity `|A| F((id_A ⊗ D)(ω_{AR}), Φ)` over decoders
/// `D: R → A''`, as the SDP `max tr(ω^T J)` over Choi operators `J` on
/// `R ⊗ A''` with `tr_{A''} J = 𝟙_R`. `omega` has dims `[R, A]`.
pub fn best_singlet_fidelity(omega: &HermitianOperator) -> Result<f64> {
    let (dr, da) = match omega.dims() {
        [r, a] => (*r, *a),
        d => return Err(validation(format!("expected dims [R, A], got {d:?}"))),
    };
    let mut p = SdpProblem::new(Sense::Maximize);
    let j = p.add_block(dr * da);
    p.set_objective(j, omega.matrix().transpose());
    p.add_operator_constraint(vec![(j, LinearMap::trace_second(dr, da))], &identity(dr));
    Ok(solve(&p)?.require_optimal("singlet fidelity")?.primal_value)
}

/// Log of the best singlet fidelity over sampled inputs; a lower bound on
/// `−S_min[N]`.
pub fn singlet_fidelity_dual(n: &QuantumChannel, n_samples: usize, seed: u64) -> Result<f64> {
    let d = n.in_dim();
    let best = input_vectors(d, n_samples, seed)
        .par_iter()
        .filter_map(|v| apply(n, &pure(v, d), 1).ok().and_then(|w| best_singlet_fidelity(&w).ok()))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(validation("every singlet fidelity sample failed"));
    }
    Ok(best.log2())
}

/// Log of the best `|A| F(V(ρ), π_A ⊗ σ_E)` over sampled inputs `ρ` and all
/// `σ_E`. The inputs are the `A'` marginals of the scan's pure states, so
/// `π` and the basis states are included.
pub fn env_decoupling_dual(n: &QuantumChannel, n_samples: usize, seed: u64) -> Result<f64> {
    let d = n.in_dim();
    let v = stinespring_isometry(n);
    let best = input_vectors(d, n_samples, seed)
        .par_iter()
        .filter_map(|psi| {
            let rho = DensityOperator::trusted(partial_trace(&pure(psi, d), &[1]).ok()?);
            let out: DensityOperator = v.apply(&rho).ok()?;
            cond_sandwiched_half_up(&out).ok()
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(validation("every decoupling sample failed"));
    }
    Ok(best)
}

/// `(1−t)N + tM` as a channel.
pub fn mixture(n: &QuantumChannel, m: &QuantumChannel, t: f64) -> Result<QuantumChannel> {
    if n.in_dim() != m.in_dim() || n.out_dim() != m.out_dim() {
        return Err(mismatch("channels with different input or output dimensions"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(validation(format!("mixing weight {t} outside [0, 1]")));
    }
    let kraus = n
        .kraus()
        .iter()
        .map(|k| k.scale((1.0 - t).sqrt()))
        .chain(m.kraus().iter().map(|k| k.scale(t.sqrt())))
        .filter(|k| k.norm() > 0.0)
        .collect();
    QuantumChannel::new(kraus)
}

/// Replacer channel `R^π` with the dimensions of `n`.
pub fn pi_replacer(n: &QuantumChannel) -> QuantumChannel {
    QuantumChannel::replacer(&DensityOperator::maximally_mixed(n.out_dim()), n.in_dim())
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothChannelBound {
    pub value: f64,
    pub unsmoothed: f64,
    /// Weight of `R^π` in the witness channel.
    pub t: f64,
    /// Upper bound on the purified channel distance to the witness.
    pub distance_bound: f64,
}

impl SmoothChannelBound {
    pub fn witness(&self, n: &QuantumChannel) -> Result<QuantumChannel> {
        mixture(n, &pi_replacer(n), self.t)
    }
}

/// Certified lower bound on `S_min^ε[N]` from the witness
/// `M_t = (1−t)N + tR^π`.
///
/// For every input, concavity of the root fidelity gives
/// `√F(N(ψ), M_t(ψ)) ≥ 1−t`, so `t = 1 − √(1−ε²)` keeps `M_t` inside the
/// ball. `λ_max` of the Choi state is affine and decreasing along the path,
/// so the largest admissible `t` is optimal.
pub fn smooth_channel_min_entropy_lower_bound(eps: f64, n: &QuantumChannel) -> Result<SmoothChannelBound> {
    if !(0.0..1.0).contains(&eps) {
        return Err(validation(format!("ε = {eps} outside [0, 1)")));
    }
    let unsmoothed = channel_min_entropy(n);
    if eps == 0.0 {
        return Ok(SmoothChannelBound { value: unsmoothed, unsmoothed, t: 0.0, distance_bound: 0.0 });
    }
    let t = 1.0 - (1.0 - eps * eps).sqrt();
    let value = channel_min_entropy(&mixture(n, &pi_replacer(n), t)?).max(unsmoothed);
    let distance_bound = (1.0 - (1.0 - t).powi(2)).max(0.0).sqrt();
    Ok(SmoothChannelBound { value, unsmoothed, t, distance_bound })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    pub pass: bool,
}

/// `|S_min[N] − S_min[M]| ≤ (1/ln 2)|A| min{|A|, |A'|} δ` with
/// `δ = ½‖N − M‖⋄`.
pub fn continuity_check(n: &QuantumChannel, m: &QuantumChannel) -> Result<ContinuityReport> {
    if n.in_dim() != m.in_dim() || n.out_dim() != m.out_dim() {
        return Err(mismatch("channels with different input or output dimensions"));
    }
    let delta = diamond_distance(n, m)?;
    let lhs = (channel_min_entropy(n) - channel_min_entropy(m)).abs();
    let a = n.out_dim() as f64;
    let rhs = a * a.min(n.in_dim() as f64) * delta / std::f64::consts::LN_2;
    Ok(ContinuityReport { lhs, rhs, delta, pass: lhs <= rhs + 1e-9 })
}

/// Invariance of `S_min` under `N ↦ U₂ ∘ N ∘ U₁`.
pub fn unitary_covariance_check(n: &QuantumChannel, u1: &ComplexMatrix, u2: &ComplexMatrix) -> Result<bool> {
    if !is_unitary(u1, tol().completeness) || !is_unitary(u2, tol().completeness) {
        return Err(validation("covariance check needs unitary matrices"));
    }
    let composed = compose(&QuantumChannel::unitary(u2.clone())?, &compose(n, &QuantumChannel::unitary(u1.clone())?)?)?;
    Ok((channel_min_entropy(&composed) - channel_min_entropy(n)).abs() <= 1e-9)
}

/// Entropies of a composition and its parts. Reported only; no ordering
/// between them is asserted.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionProbe {
    pub composite: f64,
    pub first: f64,
    pub second: f64,
}

pub fn composition_probe(second: &QuantumChannel, first: &QuantumChannel) -> Result<CompositionProbe> {
    let c = compose(second, first)?;
    Ok(CompositionProbe {
        composite: channel_min_entropy(&c),
        first: channel_min_entropy(first),
        second: channel_min_entropy(second),
    })
}
