//! The invariant suite run by `dynent check`.
//!
//! Each invariant draws from its own random stream of the master seed, so the
//! ledger is reproducible and does not depend on which invariants ran before.

use serde::Serialize;

use crate::channels::{
    apply, choi_reference_marginal, diamond_distance, diamond_norm_sdp, is_ppt, make_named_channel,
    stinespring_isometry, y_rotation, ChannelFamily, ChannelSpec, QuantumChannel,
};
use crate::decoupling::{decouple_channel_mc, decouple_states_mc, DecouplingReport, HaarSampler};
use crate::dynamical::{
    channel_min_entropy, channel_min_entropy_sdp, env_decoupling_dual, singlet_fidelity_dual,
};
use crate::entropies::{
    cond_min_entropy_down, cond_min_entropy_down_sdp, cond_min_entropy_up, cond_sandwiched_half_up, d_hypothesis,
    d_max, d_zero, petz_renyi, relative_entropy, sandwiched_renyi, RenyiOrder,
};
use crate::error::Result;
use crate::linalg::{
    fidelity, herm_eig, identity, partial_trace, tensor, tensor_states, trace_distance, trace_norm, ComplexMatrix,
    DensityOperator, HermitianOperator,
};
use crate::random::{ginibre, haar_unitary, random_density, random_pure_state, stream_rng, StreamRng};
use crate::sdp::{solve, LinearMap, Sense, SdpProblem};
use crate::thermo::{
    channel_costs, reconciliation_report, work_extraction_ledger, Certification, WorkCost, BOLTZMANN,
    DEFAULT_TEMPERATURE,
};
use C::{Exact, Sampled};
use Certification as C;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// Outcome of one invariant: a worst-case statistic compared with a limit.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantResult {
    pub module: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub statistic: &'static str,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub certification: Certification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InvariantResult {
    pub fn ledger_line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        let mut line = format!(
            "{} {}/{}: {} = {:.3e} [{}] {rel} {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.module,
            self.name,
            self.statistic,
            self.value,
            self.certification.tag(),
            self.limit,
        );
        if let Some(n) = &self.note {
            line.push_str(&format!(" ({n})"));
        }
        line
    }
}

pub struct Stat {
    statistic: &'static str,
    value: f64,
    relation: Relation,
    limit: f64,
    certification: Certification,
    guard: Option<String>,
}

impl Stat {
    fn holds(&self) -> bool {
        let ok = match self.relation {
            Relation::AtMost => self.value <= self.limit,
            Relation::AtLeast => self.value >= self.limit,
        };
        ok && self.guard.is_none()
    }

    /// Fails the invariant with `msg` unless `ok`.
    fn guard(mut self, ok: bool, msg: impl Into<String>) -> Self {
        if !ok && self.guard.is_none() {
            self.guard = Some(msg.into());
        }
        self
    }
}

fn at_most(statistic: &'static str, value: f64, limit: f64, certification: Certification) -> Stat {
    Stat { statistic, value, relation: Relation::AtMost, limit, certification, guard: None }
}

fn at_least(statistic: &'static str, value: f64, limit: f64, certification: Certification) -> Stat {
    Stat { statistic, value, relation: Relation::AtLeast, limit, certification, guard: None }
}

type Run = fn(&mut StreamRng, u64) -> Result<Stat>;

pub struct Invariant {
    pub module: &'static str,
    pub name: &'static str,
    run: Run,
}

pub fn suite() -> Vec<Invariant> {
    macro_rules! inv {
        ($m:literal, $n:literal, $f:ident) => {
            Invariant { module: $m, name: $n, run: $f }
        };
    }
    vec![
        inv!("linalg", "eigendecomposition reconstruction", eig_reconstruction),
        inv!("linalg", "trace norm dominates trace", trace_norm_vs_trace),
        inv!("linalg", "Fuchs-van de Graaf inequalities", fuchs_van_de_graaf),
        inv!("linalg", "partial trace inverts tensor", partial_trace_of_product),
        inv!("sdp", "weak duality at termination", weak_duality),
        inv!("sdp", "min-entropy SDPs match closed forms", sdp_matches_closed_forms),
        inv!("sdp", "objective scaling", objective_scaling),
        inv!("channels", "Choi marginal is maximally mixed", choi_marginal),
        inv!("channels", "Kraus and Stinespring agree", kraus_vs_stinespring),
        inv!("channels", "sampled inputs stay below the diamond distance", sampled_below_diamond),
        inv!("channels", "PPT channels have nonnegative min-entropy", ppt_nonnegative),
        inv!("entropies", "max-divergence data processing", dmax_data_processing),
        inv!("entropies", "Renyi divergences increase with order", renyi_monotone),
        inv!("entropies", "min-entropy duality on pure states", min_entropy_duality),
        inv!("entropies", "down variant below up variant", down_below_up),
        inv!("entropies", "hypothesis-testing divergence chain", hypothesis_chain),
        inv!("entropies", "max-divergence dominates relative entropy", dmax_dominates),
        inv!("dynamical", "min-entropy range", min_entropy_range),
        inv!("dynamical", "closed form matches SDP", closed_form_vs_sdp),
        inv!("dynamical", "isometries attain the minimum", isometries_attain_minimum),
        inv!("dynamical", "noisy channels stay above the minimum", noisy_above_minimum),
        inv!("dynamical", "dual expressions bound -S_min", dual_expressions),
        inv!("decoupling", "Haar sampler unitarity", haar_unitarity),
        inv!("decoupling", "zero-error reports pass", decoupling_reports_pass),
        inv!("decoupling", "unitary channel gives constant samples", unitary_constant_samples),
        inv!("decoupling", "means reproducible across seeds", seed_reproducibility),
        inv!("thermo", "zero-error channel costs equal -S_min", zero_error_costs),
        inv!("thermo", "reconciliation report is consistent", reconciliation),
        inv!("thermo", "joules from bits", joule_units),
        inv!("thermo", "negative costs are extractable", sign_semantics),
        inv!("cli", "sweep matches closed forms", sweep_closed_forms),
        inv!("cli", "sweep CSV is deterministic", csv_determinism),
    ]
}

pub fn run_suite(seed: u64) -> Vec<InvariantResult> {
    suite()
        .iter()
        .enumerate()
        .map(|(k, inv)| {
            let mut rng = stream_rng(seed, 1_000 + k as u64);
            let sub_seed = seed.wrapping_add(k as u64);
            let (pass, stat) = match (inv.run)(&mut rng, sub_seed) {
                Ok(s) => (s.holds(), s),
                Err(e) => (false, at_most("error", f64::NAN, 0.0, Exact).guard(false, e.to_string())),
            };
            InvariantResult {
                module: inv.module,
                name: inv.name,
                pass,
                statistic: stat.statistic,
                value: stat.value,
                relation: stat.relation,
                limit: stat.limit,
                certification: stat.certification,
                note: stat.guard,
            }
        })
        .collect()
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::INFINITY, f64::min)
}

fn random_hermitian(d: usize, rng: &mut StreamRng) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

fn named(family: ChannelFamily, p: f64) -> Result<QuantumChannel> {
    make_named_channel(&ChannelSpec::named(family, Some(p)))
}

const P_FAMILIES: [ChannelFamily; 5] = [
    ChannelFamily::Depolarizing,
    ChannelFamily::Dephasing1,
    ChannelFamily::Dephasing2,
    ChannelFamily::Replacer,
    ChannelFamily::Unitary,
];

fn eig_reconstruction(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = 0.0f64;
    for d in [2, 5, 16, 64] {
        for _ in 0..3 {
            let h = random_hermitian(d, rng);
            worst = worst.max((herm_eig(&h)?.reconstruct() - &h).norm());
        }
    }
    Ok(at_most("max Frobenius residual", worst, 1e-10, Exact))
}

fn trace_norm_vs_trace(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut margins = Vec::new();
    for d in [2, 3, 4, 6] {
        for _ in 0..10 {
            let m = ginibre(d, d, rng);
            margins.push(trace_norm(&m)? - m.trace().norm());
        }
    }
    Ok(at_least("min of ||M||_1 - |tr M|", min_of(margins), -1e-12, Exact))
}

fn fuchs_van_de_graaf(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut margins = Vec::new();
    for _ in 0..20 {
        let r = random_density(3, rng);
        let s = random_density(3, rng);
        let f = fidelity(&r, &s)?;
        let t = trace_distance(&r, &s)?;
        margins.push((t - (1.0 - f.sqrt())).min((1.0 - f).max(0.0).sqrt() - t));
    }
    Ok(at_least("min slack", min_of(margins), -1e-10, Exact))
}

fn partial_trace_of_product(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = random_density(2, rng);
        let b = random_density(3, rng);
        let pt = partial_trace(&tensor(&a, &b), &[0])?;
        worst = worst.max((pt.matrix() - a.matrix()).norm());
    }
    Ok(at_most("max deviation", worst, 1e-12, Exact))
}

/// `min tr(S_B)` subject to `𝟙 ⊗ S_B ⪰ ρ`, with the objective scaled by `c`.
fn min_trace_problem(rho: &HermitianOperator, c: f64) -> SdpProblem {
    let mut p = SdpProblem::new(Sense::Minimize);
    let s_b = p.add_block(2);
    let slack = p.add_block(4);
    p.set_objective(s_b, identity(2).scale(c));
    p.add_operator_constraint(vec![(s_b, LinearMap::kron_left(2, 2, 1.0)), (slack, LinearMap::scaled(4, -1.0))], rho.matrix());
    p
}

fn weak_duality(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let c = random_hermitian(3, rng);
        let sol = solve(&SdpProblem::single(Sense::Minimize, c, vec![(identity(3), 1.0)]))?;
        worst = worst.max((sol.dual_value - sol.primal_value) / (1.0 + sol.primal_value.abs()));
        let rho = random_density(4, rng).with_dims(vec![2, 2])?;
        let sol = solve(&min_trace_problem(&rho, 1.0))?;
        worst = worst.max((sol.dual_value - sol.primal_value) / (1.0 + sol.primal_value.abs()));
    }
    for _ in 0..3 {
        let n = QuantumChannel::random(2, 2, 2, rng);
        let m = QuantumChannel::random(2, 2, 2, rng);
        let sol = diamond_norm_sdp(&n, &m)?;
        worst = worst.max((sol.primal_value - sol.dual_value) / (1.0 + sol.primal_value.abs()));
    }
    Ok(at_most("max relative dual excess", worst, 1e-8, Exact))
}

fn sdp_matches_closed_forms(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let sb = random_density(2, rng);
    let cases = [
        (tensor_states(&DensityOperator::maximally_mixed(2), &sb), 1.0),
        (tensor_states(&DensityOperator::basis(2, 0), &DensityOperator::basis(2, 0)), 0.0),
        (DensityOperator::maximally_entangled(2), -1.0),
    ];
    let mut worst = 0.0f64;
    for (rho, want) in &cases {
        worst = worst.max((cond_min_entropy_up(rho)? - want).abs());
        worst = worst.max((cond_min_entropy_down_sdp(rho)? - cond_min_entropy_down(rho)?).abs());
    }
    for _ in 0..10 {
        let rho = random_density(4, rng).with_dims(vec![2, 2])?;
        worst = worst.max((cond_min_entropy_down_sdp(&rho)? - cond_min_entropy_down(&rho)?).abs());
    }
    Ok(at_most("max deviation [bits]", worst, 1e-6, Exact))
}

fn objective_scaling(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = 0.0f64;
    for c in [0.5, 3.0, 40.0] {
        let rho = random_density(4, rng).with_dims(vec![2, 2])?;
        let base = solve(&min_trace_problem(&rho, 1.0))?.require_optimal("scaling base")?.primal_value;
        let scaled = solve(&min_trace_problem(&rho, c))?.require_optimal("scaled")?.primal_value;
        worst = worst.max((scaled - c * base).abs() / (c * base.abs()).max(1.0));
    }
    Ok(at_most("max relative deviation", worst, 1e-6, Exact))
}

fn random_channels(rng: &mut StreamRng, count: usize) -> Vec<QuantumChannel> {
    (0..count)
        .map(|k| {
            let (din, dout, nk) = (2 + k % 2, 1 + k % 3, 1 + k % 4);
            QuantumChannel::random(din, dout, nk, rng)
        })
        .collect()
}

fn choi_marginal(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let worst = max_of(random_channels(rng, 20).iter().map(|n| {
        let d = n.in_dim();
        (choi_reference_marginal(n).matrix() - identity(d).unscale(d as f64)).norm()
    }));
    Ok(at_most("max deviation from pi_R", worst, 1e-10, Exact))
}

fn kraus_vs_stinespring(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = 0.0f64;
    for n in random_channels(rng, 20) {
        let rho = random_density(n.in_dim(), rng);
        let out = stinespring_isometry(&n).apply(&rho)?;
        let reduced = partial_trace(&out, &[0])?;
        worst = worst.max((reduced.matrix() - n.apply_matrix(rho.matrix())).norm());
    }
    Ok(at_most("max deviation", worst, 1e-10, Exact))
}

fn sampled_below_diamond(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..6 {
        let n = QuantumChannel::random(2, 2, 2, rng);
        let m = QuantumChannel::random(2, 2, 2, rng);
        let dd = diamond_distance(&n, &m)?;
        for _ in 0..20 {
            let psi = random_pure_state(&[2, 2], rng);
            let diff = apply(&n, &psi, 1)?.matrix() - apply(&m, &psi, 1)?.matrix();
            worst = worst.max(0.5 * trace_norm(&diff)? - dd);
        }
    }
    Ok(at_most("max sampled minus diamond", worst, 1e-7, Sampled))
}

fn ppt_nonnegative(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut channels: Vec<QuantumChannel> = (0..300).map(|k| QuantumChannel::random(2, 2, 2 + k % 3, rng)).collect();
    for i in 0..=10 {
        channels.push(named(ChannelFamily::Depolarizing, 0.5 + 0.05 * i as f64)?);
    }
    let ppt: Vec<f64> = channels.iter().filter(|n| is_ppt(n)).map(channel_min_entropy).collect();
    Ok(at_least("min S_min over PPT channels", min_of(ppt.iter().copied()), -1e-9, Exact)
        .guard(!ppt.is_empty(), "no PPT channel sampled"))
}

fn pushed(n: &QuantumChannel, rho: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::hermitize(&n.apply_matrix(rho.matrix()), vec![n.out_dim()])
}

fn dmax_data_processing(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let rho = random_density(2, rng);
        let sigma = random_density(2, rng);
        let n = QuantumChannel::random(2, 3, 2, rng);
        worst = worst.max(d_max(&pushed(&n, &rho), &pushed(&n, &sigma))? - d_max(&rho, &sigma)?);
    }
    Ok(at_most("max increase [bits]", worst, 1e-9, Exact))
}

fn renyi_monotone(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let r = random_density(2, rng);
        let s = random_density(2, rng);
        let mut sw = Vec::new();
        let mut pz = Vec::new();
        for a in [0.5, 0.9, 1.1, 2.0] {
            sw.push(sandwiched_renyi(RenyiOrder::Alpha(a), &r, &s)?);
            pz.push(petz_renyi(RenyiOrder::Alpha(a), &r, &s)?);
        }
        sw.push(sandwiched_renyi(RenyiOrder::Infinity, &r, &s)?);
        for v in [&sw, &pz] {
            worst = worst.max(max_of(v.windows(2).map(|w| w[0] - w[1])));
        }
    }
    Ok(at_most("max decrease [bits]", worst, 1e-9, Exact))
}

fn min_entropy_duality(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let psi = random_pure_state(&[2, 2, 2], rng);
        let ab = partial_trace(&psi, &[0, 1])?;
        let ac = partial_trace(&psi, &[0, 2])?;
        worst = worst.max((cond_min_entropy_up(&ab)? + cond_sandwiched_half_up(&ac)?).abs());
    }
    Ok(at_most("max |S(A|B) + S_1/2(A|C)|", worst, 1e-6, Exact))
}

fn down_below_up(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let rho = random_density(4, rng).with_dims(vec![2, 2])?;
        worst = worst.max(cond_min_entropy_down(&rho)? - cond_min_entropy_up(&rho)?);
    }
    Ok(at_most("max down - up [bits]", worst, 1e-9, Exact))
}

fn hypothesis_chain(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..8 {
        let r = random_density(2, rng);
        let s = random_density(2, rng);
        for eps in [0.05f64, 0.2] {
            let slack = (1.0 / (1.0 - eps)).log2();
            let dh = d_hypothesis(eps, &r, &s)?;
            worst = worst.max(d_zero(&r, &s)? + slack - dh).max(dh - d_max(&r, &s)? - slack);
        }
    }
    Ok(at_most("max violation [bits]", worst, 1e-6, Exact))
}

fn dmax_dominates(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let r = random_density(3, rng);
        let s = random_density(3, rng);
        let d = relative_entropy(&r, &s)?;
        worst = worst.min(d_max(&r, &s)? - d).min(d);
    }
    Ok(at_least("min of D_max - D and D", worst, -1e-9, Exact))
}

fn named_grid() -> Result<Vec<QuantumChannel>> {
    let mut out = Vec::new();
    for family in P_FAMILIES {
        for i in 0..=10 {
            out.push(named(family, i as f64 / 10.0)?);
        }
    }
    Ok(out)
}

fn min_entropy_range(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut channels = named_grid()?;
    channels.extend(random_channels(rng, 30));
    let worst = min_of(channels.iter().map(|n| {
        let s = channel_min_entropy(n);
        let lo = -(n.in_dim().min(n.out_dim()) as f64).log2();
        let hi = (n.out_dim() as f64).log2();
        (s - lo).min(hi - s)
    }));
    Ok(at_least("min distance inside the range", worst, -1e-9, Exact))
}

fn closed_form_vs_sdp(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut channels: Vec<QuantumChannel> = (0..20).map(|k| QuantumChannel::random(2, 2, 1 + k % 4, rng)).collect();
    for family in P_FAMILIES {
        channels.push(named(family, 0.3)?);
    }
    let mut worst = 0.0f64;
    for n in &channels {
        worst = worst.max((channel_min_entropy(n) - channel_min_entropy_sdp(n)?).abs());
    }
    Ok(at_most("max deviation [bits]", worst, 1e-6, Exact))
}

fn isometries_attain_minimum(rng: &mut StreamRng, _: u64) -> Result<Stat> {
    let u3 = haar_unitary(3, rng);
    let channels = [
        QuantumChannel::identity(2),
        QuantumChannel::unitary(y_rotation(0.3))?,
        QuantumChannel::unitary(haar_unitary(2, rng))?,
        QuantumChannel::unitary(u3.clone())?,
        QuantumChannel::isometry(u3.columns(0, 2).into_owned())?,
    ];
    let worst = max_of(channels.iter().map(|n| (channel_min_entropy(n) + (n.in_dim() as f64).log2()).abs()));
    Ok(at_most("max |S_min + log|A'||", worst, 1e-9, Exact))
}

fn noisy_above_minimum(_: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut gaps = Vec::new();
    for family in [ChannelFamily::Depolarizing, ChannelFamily::Dephasing1, ChannelFamily::Dephasing2, ChannelFamily::Replacer] {
        for i in 1..=9 {
            let n = named(family, i as f64 / 10.0)?;
            gaps.push(channel_min_entropy(&n) + (n.in_dim() as f64).log2());
        }
    }
    Ok(at_least("min S_min + log|A'|", min_of(gaps), 1e-6, Exact))
}

fn dual_expressions(_: &mut StreamRng, seed: u64) -> Result<Stat> {
    let mut shortfall = f64::NEG_INFINITY;
    let mut excess = f64::NEG_INFINITY;
    for family in P_FAMILIES {
        let n = named(family, 0.3)?;
        let target = -channel_min_entropy(&n);
        for dual in [singlet_fidelity_dual(&n, 500, seed)?, env_decoupling_dual(&n, 500, seed)?] {
            shortfall = shortfall.max(target - dual);
            excess = excess.max(dual - target);
        }
    }
    Ok(at_most("max shortfall below -S_min [bits]", shortfall, 0.02, Sampled)
        .guard(excess <= 1e-6, format!("a dual exceeds -S_min by {excess:.3e}")))
}

fn haar_unitarity(_: &mut StreamRng, seed: u64) -> Result<Stat> {
    let worst = max_of(
        HaarSampler::new(4, seed)?
            .take(1000)
            .map(|u| (u.adjoint() * &u - identity(4)).norm()),
    );
    Ok(at_most("max ||U*U - 1||", worst, 1e-10, Exact))
}

fn excess(r: &DecouplingReport) -> f64 {
    r.mean_lhs - 3.0 * r.std_err - r.bound_rhs
}

fn decoupling_reports_pass(rng: &mut StreamRng, seed: u64) -> Result<Stat> {
    let mut reports = vec![decouple_states_mc(
        &DensityOperator::maximally_entangled(2),
        &QuantumChannel::identity(2),
        50,
        0.0,
        &HaarSampler::new(2, seed)?,
    )?];
    for _ in 0..10 {
        let phi = random_pure_state(&[2, 2], rng);
        reports.push(decouple_states_mc(&phi, &QuantumChannel::partial_trace(1, 2), 20, 0.0, &HaarSampler::new(2, seed)?)?);
    }
    let phi = random_pure_state(&[2, 4], rng);
    reports.push(decouple_states_mc(&phi, &QuantumChannel::partial_trace(2, 2), 50, 0.0, &HaarSampler::new(4, seed)?)?);
    let n = named(ChannelFamily::Depolarizing, 0.5)?;
    reports.push(decouple_channel_mc(&n, &QuantumChannel::identity(2), 20, 0.0, &HaarSampler::new(2, seed)?)?);
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(at_most("max mean - 3 std_err - bound", max_of(reports.iter().map(excess)), 0.0, Sampled)
        .guard(all_pass, "a report did not pass"))
}

fn unitary_constant_samples(_: &mut StreamRng, seed: u64) -> Result<Stat> {
    let n = QuantumChannel::unitary(y_rotation(0.3))?;
    let r = decouple_channel_mc(&n, &QuantumChannel::identity(2), 20, 0.0, &HaarSampler::new(2, seed)?)?;
    Ok(at_most("std_err", r.std_err, 1e-9, Sampled))
}

fn seed_reproducibility(rng: &mut StreamRng, seed: u64) -> Result<Stat> {
    let phi = random_pure_state(&[2, 4], rng);
    let t = QuantumChannel::partial_trace(2, 2);
    let a = decouple_states_mc(&phi, &t, 200, 0.0, &HaarSampler::new(4, seed)?)?;
    let b = decouple_states_mc(&phi, &t, 200, 0.0, &HaarSampler::new(4, seed.wrapping_add(7919))?)?;
    let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    let z = if se > 0.0 { (a.mean_lhs - b.mean_lhs).abs() / se } else { 0.0 };
    Ok(at_most("|mean difference| / std_err", z, 3.0, Sampled))
}

fn zero_error_costs(_: &mut StreamRng, seed: u64) -> Result<Stat> {
    let mut shortfall = f64::NEG_INFINITY;
    let mut over = f64::NEG_INFINITY;
    for family in P_FAMILIES {
        let n = named(family, 0.3)?;
        let target = -channel_min_entropy(&n);
        let r = channel_costs(&n, 0.0, DEFAULT_TEMPERATURE, 200, seed)?;
        for v in [r.prep_bits, r.eras_bits] {
            shortfall = shortfall.max(target - v);
            over = over.max(v - target);
        }
    }
    Ok(at_most("max shortfall below -S_min [bits]", shortfall, 0.02, Sampled)
        .guard(over <= 1e-6, format!("a sampled cost exceeds -S_min by {over:.3e}")))
}

fn reconciliation(_: &mut StreamRng, seed: u64) -> Result<Stat> {
    let n = named(ChannelFamily::Depolarizing, 0.3)?;
    let r = reconciliation_report(&n, 0.01, 2.0, 200, seed)?;
    let margin = r.thermo_bound_bits + r.smoothing_gain_bits - r.eras_zero_bits - r.delta;
    Ok(at_least("bound + gain - W_eras - delta [bits]", margin, -1e-6, C::CertifiedUpper)
        .guard(r.consistent, "report flagged inconsistent"))
}

fn joule_units(_: &mut StreamRng, _: u64) -> Result<Stat> {
    let mut worst = 0.0f64;
    for bits in [-2.0, -0.5, 1.0, 3.7] {
        for t in [1.0, 4.2, 300.0] {
            let want = bits * BOLTZMANN * t * std::f64::consts::LN_2;
            worst = worst.max((WorkCost::new(bits, t)?.joules - want).abs() / want.abs());
        }
    }
    Ok(at_most("max relative error", worst, 4.0 * f64::EPSILON, Exact))
}

fn sign_semantics(_: &mut StreamRng, _: u64) -> Result<Stat> {
    let ledger = work_extraction_ledger(3, DEFAULT_TEMPERATURE)?;
    let cases = [
        (WorkCost::new(-1.0, DEFAULT_TEMPERATURE)?.is_extractable(), true),
        (WorkCost::new(1.0, DEFAULT_TEMPERATURE)?.is_extractable(), false),
        (WorkCost::new(0.0, DEFAULT_TEMPERATURE)?.is_extractable(), false),
        (ledger.extraction.is_extractable(), true),
        (ledger.erasure.is_extractable(), false),
    ];
    let wrong = cases.iter().filter(|(got, want)| got != want).count();
    Ok(at_most("mislabelled costs", wrong as f64, 0.0, Exact))
}

fn sweep_closed_forms(_: &mut StreamRng, _: u64) -> Result<Stat> {
    let rows = super::sweep_rows(&ChannelFamily::NOISE, 21)?;
    let worst = max_of(rows.iter().map(|r| {
        let p = r.p;
        let want = match r.channel_family.as_str() {
            "depolarizing" => (2.0 * (1.0 - p).max(p / 3.0)).log2(),
            "dephasing1" => (2.0 - p).log2(),
            _ => (2.0 * (1.0 - p).max(p)).log2(),
        };
        (r.neg_s_min - want).abs()
    }));
    Ok(at_most("max deviation [bits]", worst, 1e-9, Exact))
}

fn csv_determinism(_: &mut StreamRng, _: u64) -> Result<Stat> {
    let a = super::sweep_csv(&super::sweep_rows(&ChannelFamily::NOISE, 21)?);
    let b = super::sweep_csv(&super::sweep_rows(&ChannelFamily::NOISE, 21)?);
    let differing = a.lines().zip(b.lines()).filter(|(x, y)| x != y).count() + a.lines().count().abs_diff(b.lines().count());
    Ok(at_most("differing lines", differing as f64, 0.0, Exact))
}
