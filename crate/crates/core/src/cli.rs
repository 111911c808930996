//! Command-line front end of the `dynent` binary.
//!
//! Reports go to stdout as `name = value [certification]` lines, or as JSON
//! with `--json`. Exit codes: 0 success, 1 failed check, 2 invalid input,
//! 3 solver failure, 4 I/O error.

pub mod invariants;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::channels::{
    apply, is_ppt, make_named_channel, stinespring_isometry, tensor_channels, ChannelFamily, ChannelSpec,
    MatrixSpec, QuantumChannel,
};
use crate::decoupling::{
    decouple_channel_mc, decouple_states_mc, erasure_protocol_work, find_decoupled_subsystem, DecouplingReport,
    HaarSampler,
};
use crate::dynamical::{channel_min_entropy, channel_min_entropy_scan};
use crate::error::{validation, Error, Result};
use crate::linalg::DensityOperator;
use crate::random::{random_pure_state, stream_rng};
use crate::thermo::{adversarial_erasure_bound, channel_costs, Certification, DEFAULT_TEMPERATURE};
use crate::tolerance::{set_global, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "dynent", version, about = "One-shot entropies, decoupling and erasure costs of quantum channels")]
pub struct Cli {
    /// Master seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Tolerance override such as `sdp_gap=1e-9`. Repeatable.
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE")]
    pub tolerances: Vec<String>,

    /// Print JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Min-entropy of a channel by closed form, SDP and input scan.
    Entropy(EntropyArgs),
    /// `−S_min[N]` over a grid of noise parameters, as CSV.
    Sweep(SweepArgs),
    /// Monte Carlo decoupling experiments.
    Decouple(DecoupleArgs),
    /// Preparation and erasure work costs of a channel.
    Costs(CostsArgs),
    /// Run the invariant suite.
    Check,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Named channel family: depolarizing, dephasing1, dephasing2, replacer, unitary or identity.
    #[arg(long, conflicts_with = "spec")]
    pub family: Option<ChannelFamily>,

    /// Noise parameter in [0, 1].
    #[arg(long, conflicts_with = "spec")]
    pub p: Option<f64>,

    /// Replacer output: `maximally-mixed` or row-major `[[re, im], ...]` JSON.
    #[arg(long, conflicts_with = "spec")]
    pub omega: Option<String>,

    /// JSON channel description `{family, p?, omega?, unitary?, povm?, dims?}`.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
}

impl ChannelArgs {
    pub fn to_spec(&self) -> Result<ChannelSpec> {
        if let Some(path) = &self.spec {
            return ChannelSpec::from_json(&std::fs::read_to_string(path)?);
        }
        let family = self.family.ok_or_else(|| validation("give --family or --spec"))?;
        let mut spec = ChannelSpec::named(family, self.p);
        spec.omega = self.omega.as_deref().map(parse_matrix_spec).transpose()?;
        Ok(spec)
    }
}

fn parse_matrix_spec(s: &str) -> Result<MatrixSpec> {
    if s.trim_start().starts_with('[') {
        serde_json::from_str(s).map_err(|e| validation(format!("invalid matrix '{s}': {e}")))
    } else {
        Ok(MatrixSpec::Named(s.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,

    /// Random pure inputs in the scan, on top of the structured ones.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ChannelFamily::NOISE.to_vec())]
    pub families: Vec<ChannelFamily>,

    /// Grid points on [0, 1], endpoints included.
    #[arg(long, default_value_t = 21)]
    pub p_steps: usize,

    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Also write a line plot of `−S_min` against `p`.
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoupleMode {
    States,
    Channel,
    Subsystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetMap {
    /// `T = id`.
    Identity,
    /// Trace out all of `A`.
    Trace,
    /// Trace out the second factor of `A = A₁ ⊗ A₂` with `|A₁| = |A₂|`.
    TraceHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputState {
    MaxEntangled,
    Random,
}

#[derive(Debug, Args)]
pub struct DecoupleArgs {
    #[arg(long, value_enum)]
    pub mode: DecoupleMode,

    #[command(flatten)]
    pub channel: ChannelArgs,

    /// Number of tensor copies of the channel.
    #[arg(long, default_value_t = 1)]
    pub copies: usize,

    /// Map applied after the Haar twirl.
    #[arg(long, value_enum, default_value_t = TargetMap::Identity)]
    pub target: TargetMap,

    /// State on `R ⊗ A` in states mode.
    #[arg(long, value_enum, default_value_t = InputState::MaxEntangled)]
    pub state: InputState,

    /// Dimension of `A` (and `R`) in states mode.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,

    /// Haar samples.
    #[arg(long = "samples", short = 'n', default_value_t = 200)]
    pub samples: usize,

    /// Smoothing parameter.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,

    /// Accepted distance from product in subsystem mode.
    #[arg(long, default_value_t = 0.25)]
    pub delta_prime: f64,

    /// Haar rotations tried per subsystem size.
    #[arg(long, default_value_t = 64)]
    pub max_tries: usize,

    /// Bath temperature in kelvin.
    #[arg(long, env = "KELVIN_DEFAULT", default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
}

#[derive(Debug, Args)]
pub struct CostsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,

    /// Failure probability in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,

    /// Bath temperature in kelvin.
    #[arg(long, env = "KELVIN_DEFAULT", default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,

    /// Random pure inputs, on top of the structured ones.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,

    /// Slack `Δ` of the adversarial erasure bound; the bound is reported when given.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Smoothing parameter of the adversarial erasure bound.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
}

/// One grid point of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub channel_family: String,
    pub p: f64,
    pub s_min: f64,
    pub neg_s_min: f64,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::DimensionMismatch(_) | Error::Json(_) => 2,
        Error::Solver { .. } => 3,
        Error::Io(_) => 4,
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command. `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    configure(cli)?;
    match &cli.command {
        Command::Entropy(a) => cmd_entropy(cli, a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Decouple(a) => cmd_decouple(cli, a),
        Command::Costs(a) => cmd_costs(cli, a),
        Command::Check => cmd_check(cli),
    }
}

fn configure(cli: &Cli) -> Result<()> {
    if cli.workers == 0 {
        return Err(validation("--workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| validation(format!("cannot start worker pool: {e}")))?;
    if !cli.tolerances.is_empty() {
        set_global(Tolerances::default().with_overrides(&cli.tolerances)?)?;
    }
    Ok(())
}

fn announce_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

/// A number with its certification tag.
pub fn tagged(value: f64, cert: Certification) -> Value {
    json!({ "value": value, "certification": cert.tag() })
}

/// Echo of a channel description with every real tagged as exact input.
fn spec_json(spec: &ChannelSpec) -> Value {
    fn tag_reals(v: Value) -> Value {
        match v {
            Value::Number(n) if n.is_f64() => tagged(n.as_f64().unwrap_or(f64::NAN), Certification::Exact),
            Value::Array(a) => Value::Array(a.into_iter().map(tag_reals).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, tag_reals(v))).collect()),
            other => other,
        }
    }
    tag_reals(serde_json::to_value(spec).unwrap_or(Value::Null))
}

/// Renders a report as `path = value [tag]` lines.
pub fn render_text(v: &Value) -> String {
    let mut lines = Vec::new();
    flatten("", v, &mut lines);
    lines.join("\n")
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) if m.len() == 2 && m.contains_key("value") && m.contains_key("certification") => {
            out.push(format!("{prefix} = {} [{}]", m["value"], m["certification"].as_str().unwrap_or("")));
        }
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&format!("{prefix}[{i}]"), x, out)),
        Value::String(s) => out.push(format!("{prefix} = {s}")),
        other => out.push(format!("{prefix} = {other}")),
    }
}

fn emit(cli: &Cli, v: &Value) -> Result<()> {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(v)?);
    } else {
        println!("{}", render_text(v));
    }
    Ok(())
}

fn cmd_entropy(cli: &Cli, a: &EntropyArgs) -> Result<bool> {
    announce_seed(cli.seed);
    let spec = a.channel.to_spec()?;
    let n = make_named_channel(&spec)?;
    let r = channel_min_entropy_scan(&n, a.samples, cli.seed)?;
    let report = json!({
        "channel": spec_json(&spec),
        "s_min": tagged(r.s_min, Certification::Exact),
        "neg_s_min": tagged(-r.s_min, Certification::Exact),
        "lambda_max": tagged(r.lambda_max, Certification::Exact),
        "sdp": tagged(r.sdp_value, Certification::Exact),
        "scan": tagged(r.inf_scan_value, Certification::Sampled),
        "scan_inputs": r.n_scan_samples,
        "scan_skipped": r.n_skipped,
        "ppt": is_ppt(&n),
        "warnings": r.gap_flags,
    });
    emit(cli, &report)?;
    Ok(r.gap_flags.is_empty())
}

/// Evaluates the closed-form `S_min` of each family on `p_steps` points of
/// `[0, 1]`.
pub fn sweep_rows(families: &[ChannelFamily], p_steps: usize) -> Result<Vec<SweepRow>> {
    if p_steps < 2 {
        return Err(validation("--p-steps must be at least 2"));
    }
    let mut rows = Vec::with_capacity(families.len() * p_steps);
    for &family in families {
        for i in 0..p_steps {
            let p = i as f64 / (p_steps - 1) as f64;
            let s = channel_min_entropy(&make_named_channel(&ChannelSpec::named(family, Some(p)))?);
            // Adding zero turns −0 into 0.
            rows.push(SweepRow { channel_family: family.name().into(), p, s_min: s + 0.0, neg_s_min: -s + 0.0 });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("family,p,s_min,neg_s_min\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.channel_family, r.p, r.s_min, r.neg_s_min);
    }
    out
}

/// Minimal SVG line plot of `neg_s_min` against `p`, one polyline per family.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#ff7f0e"];
    let lo = rows.iter().map(|r| r.neg_s_min).fold(-1.0, f64::min).floor();
    let hi = rows.iter().map(|r| r.neg_s_min).fold(1.0, f64::max).ceil();
    let x = |p: f64| M + p * (W - 2.0 * M);
    let y = |v: f64| H - M - (v - lo) / (hi - lo) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - M, W - M, H - M);
    let _ = writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M);
    for i in 0..=4 {
        let p = i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{p}</text>"#, x(p), H - M + 18.0);
    }
    let mut v = lo;
    while v <= hi + 1e-12 {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v}</text>"#, M - 6.0, y(v) + 4.0);
        let _ = writeln!(s, r##"<line x1="{M}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#ddd"/>"##, y(v), W - M);
        v += 0.5;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">p</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">-S_min [bits]</text>"#, H / 2.0, H / 2.0);

    let mut families: Vec<&str> = Vec::new();
    for r in rows {
        if !families.contains(&r.channel_family.as_str()) {
            families.push(&r.channel_family);
        }
    }
    for (k, fam) in families.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.channel_family == *fam)
            .map(|r| format!("{:.2},{:.2}", x(r.p), y(r.neg_s_min)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let ly = M + 16.0 * k as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - M - 120.0, W - M - 100.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{fam}</text>"#, W - M - 94.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(Error::from)
}

fn cmd_sweep(a: &SweepArgs) -> Result<bool> {
    let rows = sweep_rows(&a.families, a.p_steps)?;
    let csv = sweep_csv(&rows);
    match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    if let Some(path) = &a.svg {
        write_file(path, &sweep_svg(&rows))?;
    }
    Ok(true)
}

fn target_map(kind: TargetMap, d: usize) -> Result<QuantumChannel> {
    match kind {
        TargetMap::Identity => Ok(QuantumChannel::identity(d)),
        TargetMap::Trace => Ok(QuantumChannel::partial_trace(1, d)),
        TargetMap::TraceHalf => {
            let k = (d as f64).sqrt().round() as usize;
            if k * k != d || k < 2 {
                return Err(validation(format!("trace-half needs |A| to be a square, got {d}")));
            }
            Ok(QuantumChannel::partial_trace(k, k))
        }
    }
}

fn channel_power(a: &DecoupleArgs) -> Result<QuantumChannel> {
    if a.copies == 0 {
        return Err(validation("--copies must be at least 1"));
    }
    let n = make_named_channel(&a.channel.to_spec()?)?;
    Ok((1..a.copies).fold(n.clone(), |acc, _| tensor_channels(&acc, &n)))
}

fn decoupling_json(mode: &str, r: &DecouplingReport) -> Value {
    let bound_cert = if r.epsilon == 0.0 { Certification::Exact } else { Certification::CertifiedUpper };
    json!({
        "mode": mode,
        "n_samples": r.n_samples,
        "n_skipped": r.n_skipped,
        "mean_lhs": tagged(r.mean_lhs, Certification::Sampled),
        "std_err": tagged(r.std_err, Certification::Sampled),
        "bound_rhs": tagged(r.bound_rhs, bound_cert),
        "epsilon": tagged(r.epsilon, Certification::Exact),
        "pass": r.pass,
    })
}

fn cmd_decouple(cli: &Cli, a: &DecoupleArgs) -> Result<bool> {
    announce_seed(cli.seed);
    match a.mode {
        DecoupleMode::States => {
            if a.dim < 1 {
                return Err(validation("--dim must be at least 1"));
            }
            let phi = match a.state {
                InputState::MaxEntangled => DensityOperator::maximally_entangled(a.dim),
                InputState::Random => random_pure_state(&[a.dim, a.dim], &mut stream_rng(cli.seed, u64::MAX)),
            };
            let t = target_map(a.target, a.dim)?;
            let r = decouple_states_mc(&phi, &t, a.samples, a.epsilon, &HaarSampler::new(a.dim, cli.seed)?)?;
            emit(cli, &decoupling_json("states", &r))?;
            Ok(r.pass)
        }
        DecoupleMode::Channel => {
            let n = channel_power(a)?;
            let t = target_map(a.target, n.out_dim())?;
            let sampler = HaarSampler::new(n.out_dim(), cli.seed)?;
            let r = decouple_channel_mc(&n, &t, a.samples, a.epsilon, &sampler)?;
            emit(cli, &decoupling_json("channel", &r))?;
            if 10 * r.n_skipped > a.samples {
                return Err(Error::Solver {
                    status: crate::sdp::SdpStatus::NumericalFailure,
                    context: format!("{} of {} diamond-norm samples failed", r.n_skipped, a.samples),
                });
            }
            Ok(r.pass)
        }
        DecoupleMode::Subsystem => {
            let n = channel_power(a)?;
            let d = n.in_dim();
            let ext = stinespring_isometry(&n);
            let v = QuantumChannel::isometry(ext.v.clone())?;
            let phi = apply(&v, &DensityOperator::maximally_entangled(d), 1)?.with_dims(vec![
                d,
                n.out_dim(),
                ext.env_dim,
            ])?;
            let s = find_decoupled_subsystem(&phi, a.delta_prime, a.epsilon, cli.seed, a.max_tries)?;
            let w = erasure_protocol_work(&phi, a.delta_prime, a.epsilon, a.temperature, cli.seed, a.max_tries)?;
            let smoothed = if a.epsilon == 0.0 { Certification::Exact } else { Certification::CertifiedLower };
            let bound = if a.epsilon == 0.0 { Certification::Exact } else { Certification::CertifiedUpper };
            let report = json!({
                "mode": "subsystem",
                "a_dim": w.a_dim,
                "a1_dim": s.a1_dim,
                "tries": s.tries,
                "trace_distance_to_product": tagged(s.trace_distance_to_product, Certification::Exact),
                "delta_prime": tagged(s.delta_prime, Certification::Exact),
                "guaranteed_log_a1": tagged(s.guaranteed_log_a1, smoothed),
                "work_bits": tagged(w.work.bits, Certification::Exact),
                "work_joules": tagged(w.work.joules, Certification::Exact),
                "entropy_bound_bits": tagged(w.entropy_bound.bits, bound),
                "entropy_bound_joules": tagged(w.entropy_bound.joules, bound),
                "temperature_kelvin": tagged(a.temperature, Certification::Exact),
                "guarantee_attained": w.guarantee_attained,
                "within_bound": w.within_bound,
            });
            emit(cli, &report)?;
            Ok(true)
        }
    }
}

fn cmd_costs(cli: &Cli, a: &CostsArgs) -> Result<bool> {
    announce_seed(cli.seed);
    let spec = a.channel.to_spec()?;
    let n = make_named_channel(&spec)?;
    let r = channel_costs(&n, a.mu, a.temperature, a.samples, cli.seed)?;
    let sampled = Certification::Sampled;
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "value": tagged(c.value, sampled),
                "bound": tagged(c.bound, c.bound_certification),
                "pass": c.pass,
            })
        })
        .collect();
    let mut report = json!({
        "channel": spec_json(&spec),
        "mu": tagged(r.mu, Certification::Exact),
        "temperature_kelvin": tagged(r.temperature_kelvin, Certification::Exact),
        "prep_bits": tagged(r.prep_bits, sampled),
        "eras_bits": tagged(r.eras_bits, sampled),
        "prep_joules": tagged(r.prep_joules, sampled),
        "eras_joules": tagged(r.eras_joules, sampled),
        "s_min_channel": tagged(r.s_min_channel, Certification::Exact),
        "eras_extractable": r.eras_cost().is_extractable(),
        "checks": checks,
    });
    if let Some(delta) = a.delta {
        let b = adversarial_erasure_bound(&n, a.epsilon, delta, a.temperature)?;
        let cert = if a.epsilon == 0.0 { Certification::Exact } else { Certification::CertifiedUpper };
        report["adversarial_erasure"] = json!({
            "epsilon": tagged(a.epsilon, Certification::Exact),
            "delta": tagged(delta, Certification::Exact),
            "bound_bits": tagged(b.bound.bits, cert),
            "bound_joules": tagged(b.bound.joules, cert),
            "probability": tagged(b.probability, Certification::Exact),
            "valid": b.valid,
        });
    }
    emit(cli, &report)?;
    Ok(r.all_checks_pass())
}

fn cmd_check(cli: &Cli) -> Result<bool> {
    announce_seed(cli.seed);
    let results = invariants::run_suite(cli.seed);
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&results)?);
    } else {
        for r in &results {
            println!("{}", r.ledger_line());
        }
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    eprintln!("{} invariants, {} failed", results.len(), failed);
    Ok(failed == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dynent").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_flags() {
        let cli = parse(&["--seed", "7", "entropy", "--family", "depolarizing", "--p", "0.75"]);
        assert_eq!(cli.seed, 7);
        match cli.command {
            Command::Entropy(a) => {
                let spec = a.channel.to_spec().unwrap();
                assert_eq!(spec.family, ChannelFamily::Depolarizing);
                assert_eq!(spec.p, Some(0.75));
            }
            _ => panic!("wrong subcommand"),
        }
        let cli = parse(&["sweep", "--families", "depolarizing,dephasing2", "--p-steps", "3"]);
        match cli.command {
            Command::Sweep(a) => assert_eq!(a.families, vec![ChannelFamily::Depolarizing, ChannelFamily::Dephasing2]),
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["dynent", "entropy", "--family", "nope"]).is_err());
    }

    #[test]
    fn omega_parsing() {
        assert_eq!(parse_matrix_spec("maximally-mixed").unwrap(), MatrixSpec::Named("maximally-mixed".into()));
        let m = parse_matrix_spec("[[1,0],[0,0],[0,0],[0,0]]").unwrap();
        assert!(matches!(m, MatrixSpec::Entries(e) if e.len() == 4));
        assert!(parse_matrix_spec("[[1,0]").is_err());
    }

    #[test]
    fn sweep_endpoints_and_format() {
        let rows = sweep_rows(&ChannelFamily::NOISE, 21).unwrap();
        let at = |fam: &str, p: f64| rows.iter().find(|r| r.channel_family == fam && (r.p - p).abs() < 1e-12).unwrap();
        for fam in ["depolarizing", "dephasing1", "dephasing2"] {
            assert!((at(fam, 0.0).neg_s_min - 1.0).abs() < 1e-12);
        }
        assert!((at("depolarizing", 0.75).neg_s_min + 1.0).abs() < 1e-9);
        assert!(at("dephasing1", 1.0).neg_s_min.abs() < 1e-9);
        assert!(at("dephasing2", 0.5).neg_s_min.abs() < 1e-9);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("family,p,s_min,neg_s_min\ndepolarizing,0,-1,1\n"));
        assert_eq!(csv.lines().count(), 64);
        assert!(!csv.contains(",-0,") && !csv.contains(",-0\n"));
        assert!(sweep_rows(&ChannelFamily::NOISE, 1).is_err());
        let svg = sweep_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn text_rendering_carries_tags() {
        let v = json!({ "a": tagged(1.5, Certification::Exact), "b": { "c": tagged(-1.0, Certification::Sampled) }, "ok": true });
        assert_eq!(render_text(&v), "a = 1.5 [exact]\nb.c = -1.0 [sampled]\nok = true");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&validation("x")), 2);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
        assert_eq!(
            exit_code(&Error::Solver { status: crate::sdp::SdpStatus::Infeasible, context: String::new() }),
            3
        );
    }
}
