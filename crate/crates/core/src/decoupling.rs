//! Monte Carlo checks of decoupling for states and for channels, and the
//! subsystem search behind the decoupling erasure protocol.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{compose, diamond_norm_sdp, QuantumChannel};
use crate::dynamical::{channel_min_entropy, pi_replacer, smooth_channel_min_entropy_lower_bound};
use crate::entropies::{cond_min_entropy_up, smooth_min_entropy_lower_bound, MinEntropyVariant};
use crate::error::{mismatch, validation, Result};
use crate::linalg::{
    embed_local, identity, partial_trace, swap_bipartite, tensor, trace_norm, ComplexMatrix, DensityOperator,
    HermitianOperator,
};
use crate::random::{haar_unitary, stream_rng};
use crate::thermo::WorkCost;
use crate::tolerance::tol;

/// Haar-random unitaries of a fixed dimension. Draw `k` comes from stream
/// `k` of the master seed, so results do not depend on the worker count.
#[derive(Debug, Clone)]
pub struct HaarSampler {
    dim: usize,
    seed: u64,
    next: u64,
}

impl HaarSampler {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(validation("Haar sampler needs dimension at least 1"));
        }
        Ok(Self { dim, seed, next: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self, k: u64) -> ComplexMatrix {
        haar_unitary(self.dim, &mut stream_rng(self.seed, k))
    }
}

impl Iterator for HaarSampler {
    type Item = ComplexMatrix;

    fn next(&mut self) -> Option<ComplexMatrix> {
        let u = self.sample(self.next);
        self.next += 1;
        Some(u)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    pub n_samples: usize,
    pub mean_lhs: f64,
    pub std_err: f64,
    pub bound_rhs: f64,
    pub epsilon: f64,
    pub pass: bool,
    #[serde(skip)]
    pub n_skipped: usize,
    #[serde(skip)]
    pub max_duality_gap: f64,
}

impl DecouplingReport {
    fn from_samples(values: &[f64], n_skipped: usize, bound_rhs: f64, epsilon: f64, max_duality_gap: f64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n_samples: n,
            mean_lhs: mean,
            std_err,
            bound_rhs,
            epsilon,
            pass: mean <= bound_rhs + 3.0 * std_err,
            n_skipped,
            max_duality_gap,
        }
    }
}

fn check_mc_args(n_samples: usize, eps: f64) -> Result<()> {
    if n_samples == 0 {
        return Err(validation("n_samples must be at least 1"));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(validation(format!("ε = {eps} outside [0, 1)")));
    }
    Ok(())
}

/// `Φ^T_{AB} = Γ^T / |A|`, after checking `tr Γ^T ≤ |A|`.
fn scaled_choi(t: &QuantumChannel) -> Result<HermitianOperator> {
    let a = t.in_dim() as f64;
    let gamma = HermitianOperator::hermitize(&t.choi_matrix(), vec![t.in_dim(), t.out_dim()]);
    if gamma.trace() > a + tol().trace {
        return Err(validation(format!("tr Γ^T = {} exceeds |A| = {a}", gamma.trace())));
    }
    Ok(gamma.scale(1.0 / a))
}

/// `S_min^ε(A|·)`: exact at `ε = 0`, otherwise a certified lower bound.
fn min_entropy_up(eps: f64, rho: &HermitianOperator) -> Result<f64> {
    if eps == 0.0 {
        return cond_min_entropy_up(rho);
    }
    Ok(smooth_min_entropy_lower_bound(eps, &DensityOperator::trusted(rho.clone()), MinEntropyVariant::Up)?.value)
}

/// Sampled `∫‖T∘U(φ_RA) − φ_R ⊗ Φ^T_B‖₁ dU` against
/// `2^{−½(S_min^ε(A|R)_φ + S_min^ε(A|B)_{Φ^T})} + 12ε`.
pub fn decouple_states_mc(
    phi: &DensityOperator,
    t: &QuantumChannel,
    n_samples: usize,
    eps: f64,
    sampler: &HaarSampler,
) -> Result<DecouplingReport> {
    check_mc_args(n_samples, eps)?;
    let (dr, da) = match phi.dims() {
        [r, a] => (*r, *a),
        d => return Err(validation(format!("expected a state on [R, A], got dims {d:?}"))),
    };
    if t.in_dim() != da || sampler.dim() != da {
        return Err(mismatch(format!("A has dimension {da}, T expects {}, sampler {}", t.in_dim(), sampler.dim())));
    }
    let phi_t = scaled_choi(t)?;
    let phi_r = partial_trace(phi, &[0])?;
    let target = tensor(&phi_r, &partial_trace(&phi_t, &[1])?);

    let s_ar = min_entropy_up(eps, &swap_bipartite(phi)?)?;
    let s_ab = min_entropy_up(eps, &phi_t)?;
    let bound = 2f64.powf(-0.5 * (s_ar + s_ab)) + 12.0 * eps;

    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let u = embed_local(&sampler.sample(k), &[dr, da], 1);
            let rotated = DensityOperator::trusted(phi.conjugate_by(&u, vec![dr, da]));
            let out = crate::channels::apply(t, &rotated, 1)?;
            trace_norm(&(out.matrix() - target.matrix()))
        })
        .collect::<Result<_>>()?;
    Ok(DecouplingReport::from_samples(&values, 0, bound, eps, 0.0))
}

/// Sampled `∫‖T∘U∘N − T∘R^π‖_⋄ dU` against
/// `2^{−½(S_min^ε[N] + S_min^ε(A|B)_{Φ^T})} + 12ε`. Samples whose SDP fails
/// are skipped and counted.
pub fn decouple_channel_mc(
    n: &QuantumChannel,
    t: &QuantumChannel,
    n_samples: usize,
    eps: f64,
    sampler: &HaarSampler,
) -> Result<DecouplingReport> {
    check_mc_args(n_samples, eps)?;
    let da = n.out_dim();
    if t.in_dim() != da || sampler.dim() != da {
        return Err(mismatch(format!("A has dimension {da}, T expects {}, sampler {}", t.in_dim(), sampler.dim())));
    }
    let phi_t = scaled_choi(t)?;
    let s_n = if eps == 0.0 { channel_min_entropy(n) } else { smooth_channel_min_entropy_lower_bound(eps, n)?.value };
    let s_ab = min_entropy_up(eps, &phi_t)?;
    let bound = 2f64.powf(-0.5 * (s_n + s_ab)) + 12.0 * eps;

    let reference = compose(t, &pi_replacer(n))?;
    let samples: Vec<Option<(f64, f64)>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let u = QuantumChannel::unitary(sampler.sample(k)).ok()?;
            let m = compose(t, &compose(&u, n).ok()?).ok()?;
            let sol = diamond_norm_sdp(&m, &reference).ok()?.require_optimal("diamond norm").ok()?;
            Some((sol.primal_value.max(0.0), sol.duality_gap.abs()))
        })
        .collect();
    let n_skipped = samples.iter().filter(|s| s.is_none()).count();
    let ok: Vec<(f64, f64)> = samples.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(validation("every decoupling sample failed"));
    }
    let values: Vec<f64> = ok.iter().map(|s| s.0).collect();
    let max_gap = ok.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(DecouplingReport::from_samples(&values, n_skipped, bound, eps, max_gap))
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsystemSearchResult {
    pub a1_dim: usize,
    pub trace_distance_to_product: f64,
    pub delta_prime: f64,
    #[serde(skip)]
    pub unitary_used: ComplexMatrix,
    /// `½(log|A| + S_min^ε(A|R)) + log(2δ′ − 12ε)`.
    pub guaranteed_log_a1: f64,
    pub tries: usize,
}

fn check_delta(delta_prime: f64, eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(validation(format!("ε = {eps} outside [0, 1)")));
    }
    if delta_prime <= 6.0 * eps {
        return Err(validation(format!("δ′ = {delta_prime} must exceed 6ε = {}", 6.0 * eps)));
    }
    Ok(())
}

fn split_rab(phi: &DensityOperator) -> Result<(usize, usize, HermitianOperator)> {
    let (dr, da) = match phi.dims() {
        [r, a, _] => (*r, *a),
        d => return Err(validation(format!("expected a pure state on [R, A, E], got dims {d:?}"))),
    };
    if (phi.max_eigenvalue() - 1.0).abs() > tol().support || (phi.trace() - 1.0).abs() > tol().trace {
        return Err(validation("φ_RAE must be pure"));
    }
    Ok((dr, da, partial_trace(phi, &[0, 1])?))
}

/// Searches for `A = A₁ ⊗ A₂` (after a Haar rotation of `A`) with
/// `½‖φ_{RA₁} − φ_R ⊗ π_{A₁}‖₁ ≤ δ′`, trying divisors of `|A|` from the
/// largest down. Falls back to the trivial `|A₁| = 1`.
pub fn find_decoupled_subsystem(
    phi: &DensityOperator,
    delta_prime: f64,
    eps: f64,
    seed: u64,
    max_tries: usize,
) -> Result<SubsystemSearchResult> {
    check_delta(delta_prime, eps)?;
    let (dr, da, phi_ra) = split_rab(phi)?;
    let s_ar = min_entropy_up(eps, &swap_bipartite(&phi_ra)?)?;
    let guaranteed_log_a1 = 0.5 * ((da as f64).log2() + s_ar) + (2.0 * delta_prime - 12.0 * eps).log2();
    let phi_r = partial_trace(&phi_ra, &[0])?;
    let sampler = HaarSampler::new(da, seed)?;

    let mut tries = 0;
    for a1 in (2..=da).rev().filter(|a1| da % a1 == 0) {
        let a2 = da / a1;
        let target = tensor(&phi_r, &DensityOperator::maximally_mixed(a1));
        for k in 0..max_tries.max(1) {
            tries += 1;
            // The first try keeps the computational split.
            let u = if k == 0 { identity(da) } else { sampler.sample(((a1 as u64) << 32) | k as u64) };
            let rotated = phi_ra.conjugate_by(&embed_local(&u, &[dr, da], 1), vec![dr, a1, a2]);
            let reduced = partial_trace(&rotated, &[0, 1])?;
            let dist = 0.5 * trace_norm(&(reduced.matrix() - target.matrix()))?;
            if dist <= delta_prime {
                return Ok(SubsystemSearchResult {
                    a1_dim: a1,
                    trace_distance_to_product: dist,
                    delta_prime,
                    unitary_used: u,
                    guaranteed_log_a1,
                    tries,
                });
            }
        }
    }
    Ok(SubsystemSearchResult {
        a1_dim: 1,
        trace_distance_to_product: 0.0,
        delta_prime,
        unitary_used: identity(da),
        guaranteed_log_a1,
        tries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ErasureProtocolReport {
    pub a_dim: usize,
    pub a1_dim: usize,
    /// `(log|A| − 2 log|A₁|) k_B T ln 2`.
    pub work: WorkCost,
    /// `(−S_min^ε(A|R) − 2 log(2δ′ − 12ε)) k_B T ln 2`.
    pub entropy_bound: WorkCost,
    /// Whether the found `|A₁|` reaches the guaranteed size.
    pub guarantee_attained: bool,
    /// `work ≤ entropy_bound`; implied whenever the guarantee is attained.
    pub within_bound: bool,
}

/// Work cost of erasing `A` by first decoupling a subsystem `A₁` from `R`.
pub fn erasure_protocol_work(
    phi: &DensityOperator,
    delta_prime: f64,
    eps: f64,
    temperature_kelvin: f64,
    seed: u64,
    max_tries: usize,
) -> Result<ErasureProtocolReport> {
    check_delta(delta_prime, eps)?;
    let search = find_decoupled_subsystem(phi, delta_prime, eps, seed, max_tries)?;
    let (_, da, phi_ra) = split_rab(phi)?;
    let s_ar = min_entropy_up(eps, &swap_bipartite(&phi_ra)?)?;
    let work_bits = (da as f64).log2() - 2.0 * (search.a1_dim as f64).log2();
    let bound_bits = -s_ar - 2.0 * (2.0 * delta_prime - 12.0 * eps).log2();
    let guarantee_attained = (search.a1_dim as f64).log2() >= search.guaranteed_log_a1 - 1e-12;
    Ok(ErasureProtocolReport {
        a_dim: da,
        a1_dim: search.a1_dim,
        work: WorkCost::new(work_bits, temperature_kelvin)?,
        entropy_bound: WorkCost::new(bound_bits, temperature_kelvin)?,
        guarantee_attained,
        within_bound: work_bits <= bound_bits + 1e-9,
    })
}
