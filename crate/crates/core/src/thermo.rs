//! Work costs of preparing and erasing states and channels.
//!
//! Every quantity is computed in bits (units of `k_B T ln 2`) and converted
//! to joules last.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{apply, stinespring_isometry, QuantumChannel};
use crate::dynamical::{channel_min_entropy, input_vectors, pure, smooth_channel_min_entropy_lower_bound};
use crate::entropies::{
    cond_hypothesis_entropy, cond_min_entropy_down, smooth_min_entropy_lower_bound, MinEntropyVariant,
};
use crate::error::{validation, Result};
use crate::linalg::{partial_trace, swap_bipartite, DensityOperator, HermitianOperator};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
pub const DEFAULT_TEMPERATURE: f64 = 300.0;

/// Joules per bit at temperature `t`: `k_B T ln 2`.
pub fn joules_per_bit(t: f64) -> f64 {
    BOLTZMANN * t * std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkCost {
    pub bits: f64,
    pub temperature_kelvin: f64,
    pub joules: f64,
}

impl WorkCost {
    pub fn new(bits: f64, temperature_kelvin: f64) -> Result<Self> {
        if !(temperature_kelvin.is_finite() && temperature_kelvin > 0.0) {
            return Err(validation(format!("temperature {temperature_kelvin} K must be positive")));
        }
        Ok(Self { bits, temperature_kelvin, joules: bits * joules_per_bit(temperature_kelvin) })
    }

    /// Negative costs mean work can be extracted.
    pub fn is_extractable(&self) -> bool {
        self.bits < 0.0
    }
}

/// How a reported number relates to the true value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certification {
    Exact,
    CertifiedLower,
    CertifiedUpper,
    Sampled,
}

impl Certification {
    pub fn tag(self) -> &'static str {
        match self {
            Certification::Exact => "exact",
            Certification::CertifiedLower => "certified-lower",
            Certification::CertifiedUpper => "certified-upper",
            Certification::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedCost {
    pub cost: WorkCost,
    pub certification: Certification,
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mu) {
        return Err(validation(format!("μ = {mu} outside [0, 1)")));
    }
    Ok(())
}

fn prep_bits(rho: &HermitianOperator, mu: f64) -> Result<(f64, Certification)> {
    if mu == 0.0 {
        return Ok((-cond_min_entropy_down(rho)?, Certification::Exact));
    }
    let lb = smooth_min_entropy_lower_bound(mu, &DensityOperator::trusted(rho.clone()), MinEntropyVariant::Down)?;
    Ok((-lb.value, Certification::CertifiedUpper))
}

/// `W_prep^μ(A|B) = −S_min^{↓,μ}(A|B) k_B T ln 2`. For `μ > 0` the smoothed
/// entropy is bounded from below, so the cost is a certified upper bound.
pub fn resource_prep_cost_state(rho: &HermitianOperator, mu: f64, temperature: f64) -> Result<CertifiedCost> {
    check_mu(mu)?;
    let (bits, certification) = prep_bits(rho, mu)?;
    Ok(CertifiedCost { cost: WorkCost::new(bits, temperature)?, certification })
}

/// `W_eras^μ(A|B) = S_H^μ(A|B) k_B T ln 2`.
pub fn resource_eras_cost_state(rho: &HermitianOperator, mu: f64, temperature: f64) -> Result<CertifiedCost> {
    check_mu(mu)?;
    let bits = cond_hypothesis_entropy(mu, rho)?;
    Ok(CertifiedCost { cost: WorkCost::new(bits, temperature)?, certification: Certification::Exact })
}

#[derive(Debug, Clone, Serialize)]
pub struct SumBoundReport {
    pub sum_bits: f64,
    /// `None` when the bound is vacuous.
    pub lower_bound_bits: Option<f64>,
    pub pass: bool,
    pub certification: Certification,
}

/// Lower bound on the sum of preparation and erasure costs: `0` at `μ = 0`,
/// `log(1 − μ/(1−μ²)) − 2` otherwise, vacuous once `μ² + μ ≥ 1`.
pub fn sum_lower_bound(mu: f64) -> Option<f64> {
    if mu == 0.0 {
        return Some(0.0);
    }
    let arg = 1.0 - mu / (1.0 - mu * mu);
    (arg > 0.0).then(|| arg.log2() - 2.0)
}

/// Checks `W_prep^μ + W_eras^μ` against [`sum_lower_bound`]. For `μ > 0` the
/// preparation term is an upper bound, so the comparison is indicative only.
pub fn sum_bound_check(rho: &HermitianOperator, mu: f64) -> Result<SumBoundReport> {
    check_mu(mu)?;
    let (prep, cert) = prep_bits(rho, mu)?;
    let sum = prep + cond_hypothesis_entropy(mu, rho)?;
    let lower = sum_lower_bound(mu);
    let pass = match lower {
        Some(b) => sum >= b - 1e-9,
        None => true,
    };
    Ok(SumBoundReport { sum_bits: sum, lower_bound_bits: lower, pass, certification: cert })
}

#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub mu: f64,
    pub temperature_kelvin: f64,
    pub prep_bits: f64,
    pub eras_bits: f64,
    pub prep_joules: f64,
    pub eras_joules: f64,
    pub s_min_channel: f64,
    pub certification: Certification,
    #[serde(skip)]
    pub attained_inputs: AttainedInputs,
    #[serde(skip)]
    pub checks: Vec<CostCheck>,
}

impl CostReport {
    pub fn prep_cost(&self) -> WorkCost {
        WorkCost { bits: self.prep_bits, temperature_kelvin: self.temperature_kelvin, joules: self.prep_joules }
    }

    pub fn eras_cost(&self) -> WorkCost {
        WorkCost { bits: self.eras_bits, temperature_kelvin: self.temperature_kelvin, joules: self.eras_joules }
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Indices into the candidate list: 0 is the maximally entangled input (or
/// `π` for erasure), then computational product states, then Haar samples.
#[derive(Debug, Clone, Default)]
pub struct AttainedInputs {
    pub prep_index: usize,
    pub eras_index: usize,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub bound_certification: Certification,
    pub pass: bool,
}

fn argmax(values: &[Option<f64>]) -> Option<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Sampled channel costs: `W_prep^μ[A|R]` as the best preparation cost of
/// `N(ψ_{RA'})` over pure inputs, and `W_eras^μ[A|E]` as the best erasure
/// cost of `V(ρ_{A'})` over the `A'` marginals of the same inputs.
pub fn channel_costs(
    n: &QuantumChannel,
    mu: f64,
    temperature: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CostReport> {
    check_mu(mu)?;
    let jpb = WorkCost::new(1.0, temperature)?.joules;
    let d = n.in_dim();
    let v = stinespring_isometry(n);
    let inputs = input_vectors(d, n_samples, seed);

    let prep: Vec<Option<f64>> = inputs
        .par_iter()
        .map(|psi| {
            let out = apply(n, &pure(psi, d), 1).ok()?;
            prep_bits(&swap_bipartite(&out).ok()?, mu).ok().map(|p| p.0)
        })
        .collect();
    let eras: Vec<Option<f64>> = inputs
        .par_iter()
        .map(|psi| {
            let rho = DensityOperator::trusted(partial_trace(&pure(psi, d), &[1]).ok()?);
            let out: DensityOperator = v.apply(&rho).ok()?;
            cond_hypothesis_entropy(mu, &out).ok()
        })
        .collect();
    let (prep_index, prep_bits) = argmax(&prep).ok_or_else(|| validation("every preparation sample failed"))?;
    let (eras_index, eras_bits) = argmax(&eras).ok_or_else(|| validation("every erasure sample failed"))?;

    let s_min = channel_min_entropy(n);
    let mut checks = vec![CostCheck {
        name: "erasure ≤ −S_min[N] + log(1−μ)".into(),
        value: eras_bits,
        bound: -s_min + (1.0 - mu).log2(),
        bound_certification: Certification::Exact,
        pass: eras_bits <= -s_min + (1.0 - mu).log2() + 1e-6,
    }];
    if mu == 0.0 {
        for (name, value) in [("preparation = −S_min[N]", prep_bits), ("erasure = −S_min[N]", eras_bits)] {
            checks.push(CostCheck {
                name: name.into(),
                value,
                bound: -s_min,
                bound_certification: Certification::Exact,
                pass: value <= -s_min + 1e-6 && value >= -s_min - 0.02,
            });
        }
    } else {
        let smooth = smooth_channel_min_entropy_lower_bound(mu, n)?.value;
        checks.push(CostCheck {
            name: "preparation ≤ −S_min^μ[N] (certified-lower smoothing)".into(),
            value: prep_bits,
            bound: -smooth,
            bound_certification: Certification::CertifiedUpper,
            pass: prep_bits <= -smooth + 1e-6,
        });
    }
    Ok(CostReport {
        mu,
        temperature_kelvin: temperature,
        prep_bits,
        eras_bits,
        prep_joules: prep_bits * jpb,
        eras_joules: eras_bits * jpb,
        s_min_channel: s_min,
        certification: Certification::Sampled,
        attained_inputs: AttainedInputs { prep_index, eras_index, n_candidates: inputs.len() },
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdversarialBound {
    pub bound: WorkCost,
    pub probability: f64,
    /// False when `2^{−Δ/2} + 12ε > 1`, where the probability is clamped to 0.
    pub valid: bool,
    pub smooth_entropy_lower_bound: f64,
}

/// `W_eras[A|E] ≤ (−S_min^ε[N] + Δ) k_B T ln 2` with probability
/// `1 − √(2^{−Δ/2} + 12ε)`. The smoothed entropy enters through its certified
/// lower bound, which can only raise the reported cost.
pub fn adversarial_erasure_bound(n: &QuantumChannel, eps: f64, delta: f64, temperature: f64) -> Result<AdversarialBound> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(validation(format!("Δ = {delta} must be positive")));
    }
    let lb = smooth_channel_min_entropy_lower_bound(eps, n)?.value;
    let inner = 2f64.powf(-delta / 2.0) + 12.0 * eps;
    let raw = 1.0 - inner.sqrt();
    Ok(AdversarialBound {
        bound: WorkCost::new(-lb + delta, temperature)?,
        probability: raw.clamp(0.0, 1.0),
        valid: raw >= 0.0,
        smooth_entropy_lower_bound: lb,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconciliationReport {
    pub thermo_bound_bits: f64,
    pub eras_zero_bits: f64,
    /// `S_min^ε` lower bound minus `S_min[N]`.
    pub smoothing_gain_bits: f64,
    pub delta: f64,
    pub consistent: bool,
}

/// Compares the thermodynamic bound with the sampled zero-error erasure
/// cost: the bound plus the smoothing gain must dominate `W_eras^0 + Δ`.
pub fn reconciliation_report(
    n: &QuantumChannel,
    eps: f64,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ReconciliationReport> {
    let b = adversarial_erasure_bound(n, eps, delta, DEFAULT_TEMPERATURE)?;
    let costs = channel_costs(n, 0.0, DEFAULT_TEMPERATURE, n_samples, seed)?;
    let gain = b.smooth_entropy_lower_bound - channel_min_entropy(n);
    Ok(ReconciliationReport {
        thermo_bound_bits: b.bound.bits,
        eras_zero_bits: costs.eras_bits,
        smoothing_gain_bits: gain,
        delta,
        consistent: b.bound.bits + gain >= costs.eras_bits + delta - 1e-6,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExtractionLedger {
    /// Pure to maximally mixed: work gained.
    pub extraction: WorkCost,
    /// Maximally mixed to pure: work spent.
    pub erasure: WorkCost,
}

/// Work ledger for `d` qubits: `d k_B T ln 2` extracted from pure states and
/// the same amount spent to reset them.
pub fn work_extraction_ledger(d_qubits: u32, temperature: f64) -> Result<ExtractionLedger> {
    let d = f64::from(d_qubits);
    Ok(ExtractionLedger { extraction: WorkCost::new(-d, temperature)?, erasure: WorkCost::new(d, temperature)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor_states;
    use crate::random::{random_density, stream_rng};
    use approx::assert_abs_diff_eq;

    fn states() -> [(DensityOperator, f64); 3] {
        let ket00 = tensor_states(&DensityOperator::basis(2, 0), &DensityOperator::basis(2, 0));
        let mut rng = stream_rng(50, 0);
        let free = tensor_states(&DensityOperator::maximally_mixed(2), &random_density(2, &mut rng));
        [(ket00, 0.0), (DensityOperator::maximally_entangled(2), 1.0), (free, -1.0)]
    }

    #[test]
    fn work_cost_units() {
        let w = WorkCost::new(1.0, 300.0).unwrap();
        assert_abs_diff_eq!(w.joules, 2.871e-21, epsilon = 1e-24);
        let w = WorkCost::new(-3.5, 77.0).unwrap();
        assert!(((w.joules / w.bits) / (BOLTZMANN * 77.0 * std::f64::consts::LN_2) - 1.0).abs() < 1e-12);
        assert!(w.is_extractable());
        assert!(WorkCost::new(1.0, 0.0).is_err());
    }

    #[test]
    fn state_costs() {
        for (rho, prep) in states() {
            let p = resource_prep_cost_state(&rho, 0.0, 300.0).unwrap();
            let e = resource_eras_cost_state(&rho, 0.0, 300.0).unwrap();
            assert_abs_diff_eq!(p.cost.bits, prep, epsilon = 1e-9);
            assert_abs_diff_eq!(e.cost.bits, -prep, epsilon = 1e-9);
            assert_eq!(p.certification, Certification::Exact);
            let s = sum_bound_check(&rho, 0.0).unwrap();
            assert!(s.pass);
        }
        let phi = DensityOperator::maximally_entangled(2);
        let p = resource_prep_cost_state(&phi, 0.1, 300.0).unwrap();
        assert_eq!(p.certification, Certification::CertifiedUpper);
        assert!(p.cost.bits <= 1.0 + 1e-9);
        assert!(resource_prep_cost_state(&phi, 1.0, 300.0).is_err());
    }

    #[test]
    fn sum_bound_regimes() {
        assert_eq!(sum_lower_bound(0.0), Some(0.0));
        assert!(sum_lower_bound(0.3).unwrap() < -2.0);
        assert_eq!(sum_lower_bound(0.62), None);
        let mut rng = stream_rng(51, 0);
        for _ in 0..20 {
            let rho = random_density(4, &mut rng).with_dims(vec![2, 2]).unwrap();
            assert!(sum_bound_check(&rho, 0.0).unwrap().pass);
        }
        let phi = DensityOperator::maximally_entangled(2);
        let r = sum_bound_check(&phi, 0.7).unwrap();
        assert!(r.pass && r.lower_bound_bits.is_none());
    }

    #[test]
    fn channel_cost_examples() {
        let id = channel_costs(&QuantumChannel::identity(2), 0.0, 300.0, 10, 1).unwrap();
        assert_abs_diff_eq!(id.prep_bits, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(id.eras_bits, 1.0, epsilon = 1e-9);
        assert!(id.all_checks_pass());
        let r = channel_costs(&QuantumChannel::completely_depolarizing(2), 0.0, 300.0, 10, 1).unwrap();
        assert_abs_diff_eq!(r.prep_bits, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.eras_bits, -1.0, epsilon = 1e-9);
        let dep = channel_costs(&QuantumChannel::depolarizing(0.5).unwrap(), 0.0, 300.0, 10, 1).unwrap();
        assert!(dep.prep_bits.abs() < 1e-6 && dep.eras_bits.abs() < 1e-6);
        assert!(dep.all_checks_pass(), "{:?}", dep.checks);
        let json = serde_json::to_value(&dep).unwrap();
        assert_eq!(json.as_object().unwrap().len(), 8);
        assert_eq!(json["certification"], "sampled");
    }

    #[test]
    fn channel_costs_with_error() {
        let dep = channel_costs(&QuantumChannel::depolarizing(0.2).unwrap(), 0.1, 300.0, 5, 1).unwrap();
        assert!(dep.checks[0].pass, "{:?}", dep.checks);
    }

    #[test]
    fn adversarial_bound_arithmetic() {
        let b = adversarial_erasure_bound(&QuantumChannel::identity(2), 0.0, 4.0, 300.0).unwrap();
        assert_abs_diff_eq!(b.bound.bits, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.probability, 0.5, epsilon = 1e-12);
        let r = adversarial_erasure_bound(&QuantumChannel::completely_depolarizing(2), 0.0, 2.0, 300.0).unwrap();
        assert_abs_diff_eq!(r.bound.bits, 1.0, epsilon = 1e-12);
        let far = adversarial_erasure_bound(&QuantumChannel::identity(2), 0.001, 1e6, 300.0).unwrap();
        assert_abs_diff_eq!(far.probability, 1.0 - (0.012f64).sqrt(), epsilon = 1e-12);
        let bad = adversarial_erasure_bound(&QuantumChannel::identity(2), 0.2, 1.0, 300.0).unwrap();
        assert!(!bad.valid && bad.probability == 0.0);
        assert!(adversarial_erasure_bound(&QuantumChannel::identity(2), 0.1, 0.0, 300.0).is_err());
    }

    #[test]
    fn reconciliation_is_consistent() {
        let r = reconciliation_report(&QuantumChannel::depolarizing(0.3).unwrap(), 0.05, 3.0, 5, 1).unwrap();
        assert!(r.consistent, "{r:?}");
    }

    #[test]
    fn extraction_ledger() {
        let one = work_extraction_ledger(1, 300.0).unwrap();
        assert_abs_diff_eq!(one.erasure.joules, 2.871e-21, epsilon = 1e-24);
        assert_eq!(one.extraction.bits, -1.0);
        let two = work_extraction_ledger(2, 300.0).unwrap();
        assert_abs_diff_eq!(two.erasure.joules, 2.0 * one.erasure.joules, epsilon = 1e-30);
        assert_eq!(work_extraction_ledger(0, 300.0).unwrap().erasure.bits, 0.0);
    }
}
