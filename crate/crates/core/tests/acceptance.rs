//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dynent_core::channels::{
    is_ppt, make_named_channel, stinespring_isometry, tensor_channels, ChannelFamily, ChannelSpec,
    QuantumChannel,
};
use dynent_core::cli::sweep_rows;
use dynent_core::decoupling::{decouple_channel_mc, decouple_states_mc, HaarSampler};
use dynent_core::dynamical::{
    channel_min_entropy, channel_min_entropy_sdp, continuity_check, mixture, output_min_entropy, pi_replacer,
};
use dynent_core::entropies::{cond_hypothesis_entropy, cond_min_entropy_down};
use dynent_core::linalg::{
    c64, identity, ket, kron, outer, pauli_x, pauli_y, pauli_z, swap_bipartite, trace_distance, HermitianOperator,
};
use dynent_core::random::{ginibre, random_pure_state, random_pure_vector, stream_rng};
use dynent_core::thermo::{channel_costs, resource_eras_cost_state, resource_prep_cost_state};
use dynent_core::{channels, ComplexMatrix, DensityOperator, Result};
use nalgebra::DVector;
use rand::Rng;

const SEED: u64 = 42;
const T_ROOM: f64 = 300.0;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn elapsed(start: Instant) -> String {
    format!("{:.2} s", start.elapsed().as_secs_f64())
}

fn max_entangled_vector(d: usize) -> DVector<dynent_core::C64> {
    let mut v = DVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = c64(1.0 / (d as f64).sqrt(), 0.0);
    }
    v
}

/// Pauli weights `(q_I, q_X, q_Y, q_Z)` of the noise families.
fn pauli_weights(family: ChannelFamily, p: f64) -> [f64; 4] {
    match family {
        ChannelFamily::Depolarizing => [1.0 - p, p / 3.0, p / 3.0, p / 3.0],
        ChannelFamily::Dephasing1 => [1.0 - p / 2.0, 0.0, 0.0, p / 2.0],
        ChannelFamily::Dephasing2 => [1.0 - p, 0.0, 0.0, p],
        other => panic!("{other} is not a Pauli family"),
    }
}

/// `−S_min` from the largest eigenvalue of the Bell-diagonal Choi state
/// `Σ_i q_i |β_i⟩⟨β_i|`, diagonalized with nalgebra directly.
fn bell_diagonal_neg_s_min(q: [f64; 4]) -> f64 {
    let phi = max_entangled_vector(2);
    let paulis = [identity(2), pauli_x(), pauli_y(), pauli_z()];
    let mut choi = ComplexMatrix::zeros(4, 4);
    for (qi, s) in q.iter().zip(&paulis) {
        let beta = kron(&identity(2), s) * &phi;
        choi += outer(&beta, &beta).scale(*qi);
    }
    let lmax = choi.symmetric_eigenvalues().iter().cloned().fold(f64::MIN, f64::max);
    (2.0 * lmax).log2()
}

fn closed_form_neg_s_min(family: ChannelFamily, p: f64) -> f64 {
    match family {
        ChannelFamily::Depolarizing => (2.0 * (1.0 - p).max(p / 3.0)).log2(),
        ChannelFamily::Dephasing1 => (2.0 - p).log2(),
        ChannelFamily::Dephasing2 => (2.0 * (1.0 - p).max(p)).log2(),
        other => panic!("{other} has no closed form here"),
    }
}

fn named(family: ChannelFamily, p: f64) -> Result<QuantumChannel> {
    make_named_channel(&ChannelSpec::named(family, Some(p)))
}

fn random_qubit_channel(seed: u64, stream: u64) -> QuantumChannel {
    let mut rng = stream_rng(seed, stream);
    let k = rng.random_range(1..=4);
    QuantumChannel::random(2, 2, k, &mut rng)
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let rows = sweep_rows(&ChannelFamily::NOISE, 21)?;
    let runtime = start.elapsed();
    let mut max_sweep = 0f64;
    let mut max_oracle = 0f64;
    for r in &rows {
        let family = ChannelFamily::NOISE.into_iter().find(|f| f.name() == r.channel_family).unwrap();
        let closed = closed_form_neg_s_min(family, r.p);
        max_sweep = max_sweep.max((r.neg_s_min - closed).abs());
        max_oracle = max_oracle.max((bell_diagonal_neg_s_min(pauli_weights(family, r.p)) - closed).abs());
    }
    let value = |f: ChannelFamily, p: f64| -> Result<f64> { Ok(-channel_min_entropy(&named(f, p)?)) };
    let endpoints = [
        (value(ChannelFamily::Depolarizing, 0.0)?, 1.0),
        (value(ChannelFamily::Dephasing1, 0.0)?, 1.0),
        (value(ChannelFamily::Dephasing2, 0.0)?, 1.0),
        (value(ChannelFamily::Depolarizing, 0.75)?, -1.0),
        (value(ChannelFamily::Dephasing1, 1.0)?, 0.0),
        (value(ChannelFamily::Dephasing2, 0.5)?, 0.0),
    ];
    let max_end = endpoints.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pass = rows.len() == 63
        && max_sweep <= 1e-9
        && max_oracle <= 1e-9
        && max_end <= 1e-9
        && runtime < Duration::from_secs(5);
    Ok(outcome(
        pass,
        format!(
            "sweep of {} points: max |sweep − closed form| = {max_sweep:.1e}, max |Bell-diagonal oracle − closed form| = {max_oracle:.1e}, max endpoint error = {max_end:.1e} (tol 1e-9), runtime {:.2} s < 5 s",
            rows.len(),
            runtime.as_secs_f64()
        ),
    ))
}

fn criterion_2() -> Result<Outcome> {
    let mut worst = 0f64;
    let mut violations = 0;
    for k in 0..100 {
        let n = random_qubit_channel(SEED, k);
        let diff = (channel_min_entropy(&n) - channel_min_entropy_sdp(&n)?).abs();
        worst = worst.max(diff);
        if diff > 1e-6 {
            violations += 1;
        }
    }
    Ok(outcome(
        violations == 0,
        format!("100 random qubit channels: max |closed form − SDP| = {worst:.1e} (tol 1e-6), {violations} violations"),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let start = Instant::now();
    let families = [
        ChannelFamily::Depolarizing,
        ChannelFamily::Dephasing1,
        ChannelFamily::Dephasing2,
        ChannelFamily::Replacer,
        ChannelFamily::Unitary,
    ];
    let mut inputs = vec![max_entangled_vector(2)];
    inputs.extend((0..4).map(|i| ket(4, i)));
    inputs.extend((0..1995).map(|k| random_pure_vector(4, &mut stream_rng(SEED, k))));
    let states: Vec<DensityOperator> =
        inputs.iter().map(|v| DensityOperator::pure(v, vec![2, 2])).collect::<Result<_>>()?;

    let mut below = 0;
    let mut worst_below = 0f64;
    let mut worst_gap = 0f64;
    for family in families {
        for i in 1..=9 {
            let n = named(family, i as f64 / 10.0)?;
            let s = channel_min_entropy(&n);
            let mut inf = f64::INFINITY;
            for psi in &states {
                let v = output_min_entropy(&n, psi)?;
                if v < s - 1e-6 {
                    below += 1;
                }
                worst_below = worst_below.max(s - v);
                inf = inf.min(v);
            }
            worst_gap = worst_gap.max(inf - s);
        }
    }
    Ok(outcome(
        below == 0 && worst_gap <= 0.05,
        format!(
            "5 families × 9 p × {} inputs: {below} values below S_min − 1e-6 (max shortfall {worst_below:.1e}), max (infimum − S_min) = {worst_gap:.1e} ≤ 0.05, {}",
            states.len(),
            elapsed(start)
        ),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let phi = DensityOperator::maximally_entangled(2);
    let sampler = HaarSampler::new(2, SEED)?;
    let id = decouple_states_mc(&phi, &QuantumChannel::identity(2), 1000, 0.0, &sampler)?;
    let first = (id.mean_lhs - 1.5).abs() <= 1e-9 && id.std_err < 1e-9 && (id.bound_rhs - 2.0).abs() <= 1e-6;

    let trace = QuantumChannel::partial_trace(1, 2);
    let mut violations = 0;
    let mut worst = f64::MIN;
    for k in 0..100 {
        let psi = random_pure_state(&[2, 2], &mut stream_rng(SEED, k));
        let sampler = HaarSampler::new(2, SEED + k)?;
        let r = decouple_states_mc(&psi, &trace, 50, 0.0, &sampler)?;
        worst = worst.max(r.mean_lhs - r.bound_rhs);
        if r.mean_lhs > r.bound_rhs {
            violations += 1;
        }
    }
    Ok(outcome(
        first && violations == 0,
        format!(
            "Φ with T = id: mean_lhs = {:.12}, std_err = {:.1e}, bound = {:.9}; 100 random states with T = tr: {violations} violations (max lhs − bound = {worst:.3})",
            id.mean_lhs, id.std_err, id.bound_rhs
        ),
    ))
}

fn criterion_5() -> Result<Outcome> {
    let start = Instant::now();
    let t = QuantumChannel::partial_trace(2, 2);
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.2, 0.5, 0.8] {
        let d = QuantumChannel::depolarizing(p)?;
        let n = tensor_channels(&d, &d);
        let sampler = HaarSampler::new(4, SEED)?;
        let r = decouple_channel_mc(&n, &t, 200, 0.0, &sampler)?;
        let ok = r.mean_lhs <= r.bound_rhs && r.n_skipped == 0 && r.max_duality_gap <= 1e-7 && r.n_samples == 200;
        pass &= ok;
        parts.push(format!(
            "p = {p}: mean {:.4} ≤ bound {:.4}, gap {:.1e}, skipped {}",
            r.mean_lhs, r.bound_rhs, r.max_duality_gap, r.n_skipped
        ));
    }
    pass &= start.elapsed() < Duration::from_secs(300);
    Ok(outcome(pass, format!("{}; {} < 5 min", parts.join("; "), elapsed(start))))
}

fn criterion_6() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for k in 0..200 {
        let mut rng = stream_rng(SEED, k);
        let rank = 1 + (k as usize % 4);
        let g = ginibre(4, rank, &mut rng);
        let m = &g * g.adjoint();
        let rho = DensityOperator::from_matrix(m.unscale(m.trace().re), vec![2, 2])?;
        let diff = cond_hypothesis_entropy(0.0, &rho)? - cond_min_entropy_down(&rho)?;
        worst = worst.min(diff);
        if diff < -1e-9 {
            violations += 1;
        }
    }
    Ok(outcome(
        violations == 0,
        format!("200 random two-qubit states of rank 1–4: min (S_H^0 − S_min^↓) = {worst:.3e} ≥ −1e-9, {violations} violations"),
    ))
}

/// Preparation and erasure costs of `n` at `μ = 0` with the known optimal
/// inputs: `N(Φ)` for preparation and `V(π)` for erasure.
fn analytic_costs(n: &QuantumChannel) -> Result<(f64, f64)> {
    let d = n.in_dim();
    let out = channels::apply(n, &DensityOperator::maximally_entangled(d), 1)?;
    let prep = resource_prep_cost_state(&swap_bipartite(&out)?, 0.0, T_ROOM)?.cost.bits;
    let eras_state = stinespring_isometry(n).apply(&DensityOperator::maximally_mixed(d))?;
    let eras = resource_eras_cost_state(&eras_state, 0.0, T_ROOM)?.cost.bits;
    Ok((prep, eras))
}

fn criterion_7() -> Result<Outcome> {
    let mut exact_err = 0f64;
    for (n, want) in [(QuantumChannel::identity(2), 1.0), (pi_replacer(&QuantumChannel::identity(2)), -1.0)] {
        let (prep, eras) = analytic_costs(&n)?;
        let report = channel_costs(&n, 0.0, T_ROOM, 100, SEED)?;
        for v in [prep, eras, report.prep_bits, report.eras_bits] {
            exact_err = exact_err.max((v - want).abs());
        }
    }

    let mut above = 0f64;
    let mut below = 0f64;
    for family in ChannelFamily::NOISE {
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let n = named(family, p)?;
            let target = -channel_min_entropy(&n);
            let r = channel_costs(&n, 0.0, T_ROOM, 500, SEED)?;
            for v in [r.prep_bits, r.eras_bits] {
                above = above.max(v - target);
                below = below.max(target - v);
            }
        }
    }
    Ok(outcome(
        exact_err <= 1e-9 && above <= 1e-6 && below <= 0.02,
        format!(
            "identity/R^π max error {exact_err:.1e} (tol 1e-9); noise families at μ = 0: max excess over −S_min {above:.1e} (tol 1e-6), max shortfall {below:.1e} (tol 0.02)"
        ),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let mut violations = 0;
    let mut worst_ratio = 0f64;
    for k in 0..500u64 {
        let n = random_qubit_channel(SEED, 2 * k);
        let other = random_qubit_channel(SEED, 2 * k + 1);
        let m = if k % 2 == 0 {
            let t = stream_rng(SEED + 1, k).random_range(0.0..0.1);
            mixture(&n, &other, t)?
        } else {
            other
        };
        let r = continuity_check(&n, &m)?;
        if !r.pass {
            violations += 1;
        }
        if r.rhs > 0.0 {
            worst_ratio = worst_ratio.max(r.lhs / r.rhs);
        }
    }
    Ok(outcome(
        violations == 0,
        format!("500 channel pairs: {violations} violations of |ΔS_min| ≤ 4δ/ln 2, max lhs/rhs = {worst_ratio:.3}"),
    ))
}

fn criterion_9() -> Result<Outcome> {
    let below = is_ppt(&QuantumChannel::depolarizing(0.5 - 1e-3)?);
    let above = is_ppt(&QuantumChannel::depolarizing(0.5 + 1e-3)?);
    let mut n_ppt = 0;
    let mut violations = 0;
    let noise = QuantumChannel::completely_depolarizing(2);
    for k in 0..500u64 {
        let n = random_qubit_channel(SEED, k);
        let w = stream_rng(SEED + 2, k).random_range(0.0..1.0);
        let n = mixture(&n, &noise, w)?;
        if is_ppt(&n) {
            n_ppt += 1;
            if channel_min_entropy(&n) < -1e-9 {
                violations += 1;
            }
        }
    }
    Ok(outcome(
        !below && above && violations == 0 && n_ppt > 0,
        format!(
            "depolarizing PPT at p = 0.499: {below}, at p = 0.501: {above}; 500 random channels, {n_ppt} PPT, {violations} with S_min < −1e-9"
        ),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let sampler = HaarSampler::new(2, SEED)?;
    let pure = ket(2, 0);
    let psi = outer(&pure, &pure);
    let mut residual = 0f64;
    let mut twirl = ComplexMatrix::zeros(2, 2);
    let n = 10_000;
    for k in 0..n {
        let u = sampler.sample(k);
        residual = residual.max((u.adjoint() * &u - identity(2)).norm());
        twirl += &u * &psi * u.adjoint();
    }
    let twirl = HermitianOperator::single(twirl.unscale(n as f64))?;
    let dist = trace_distance(&twirl, &DensityOperator::maximally_mixed(2))?;
    Ok(outcome(
        residual < 1e-10 && dist <= 0.02,
        format!("10^4 draws: max ‖U†U − 𝟙‖ = {residual:.1e} < 1e-10, twirl trace distance to π = {dist:.4} ≤ 0.02"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("closed-form sweep of the noise families", criterion_1),
        ("closed form vs SDP channel min-entropy", criterion_2),
        ("sampled infimum over pure inputs", criterion_3),
        ("state decoupling", criterion_4),
        ("channel decoupling", criterion_5),
        ("hypothesis-testing vs min-entropy at zero smoothing", criterion_6),
        ("work costs at zero smoothing", criterion_7),
        ("continuity", criterion_8),
        ("PPT consistency", criterion_9),
        ("Haar sampler", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{}]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed(start)
        );
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
