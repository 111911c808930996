//! Relative entropies and conditional entropies of states, in bits.
//!
//! Operators are restricted to supports with the eigenvalue cutoff in
//! [`Tolerances::support`](crate::tolerance::Tolerances). Quantities that
//! diverge because of a support mismatch return `f64::INFINITY`.

use serde::Serialize;

use crate::error::{mismatch, validation, Result};
use crate::linalg::{
    c64, identity, partial_trace, purified_distance, tensor, zeros, ComplexMatrix, DensityOperator,
    HermitianOperator,
};
use crate::sdp::{solve, LinearMap, Sense, SdpProblem};
use crate::tolerance::tol;

fn same_dims(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(mismatch(format!("operators of dimension {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

fn bipartite(rho: &HermitianOperator) -> Result<(usize, usize)> {
    match rho.dims() {
        [a, b] => Ok((*a, *b)),
        d => Err(validation(format!("expected a bipartite operator, got dims {d:?}"))),
    }
}

/// Weight of `ρ` outside the support of `σ`.
fn weight_off_support(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    let off = sigma.map_spectrum(|x| if x > tol().support { 0.0 } else { 1.0 });
    off.inner(rho)
}

/// `D_max(ρ‖σ) = log λ_max(σ^{-1/2} ρ σ^{-1/2})`, infinite when the support
/// of `ρ` is not contained in that of `σ`.
pub fn d_max(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    same_dims(rho, sigma)?;
    if weight_off_support(rho, sigma) > tol().support {
        return Ok(f64::INFINITY);
    }
    let isq = sigma.map_spectrum(|x| if x > tol().support { 1.0 / x.sqrt() } else { 0.0 });
    let m = rho.conjugate_by(isq.matrix(), rho.dims().to_vec());
    let lmax = m.max_eigenvalue();
    Ok(if lmax > 0.0 { lmax.log2() } else { f64::NEG_INFINITY })
}

/// Order of a Rényi divergence, including its limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenyiOrder {
    /// `α → 0` limit of the Petz family, `−log tr(Π_ρ σ)`.
    Zero,
    Alpha(f64),
    /// `α → 1`: the Umegaki relative entropy.
    One,
    /// `α → ∞` of the sandwiched family: `D_max`.
    Infinity,
}

impl RenyiOrder {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(validation(format!("invalid Rényi order {alpha}")));
        }
        Ok(if alpha == 0.0 {
            RenyiOrder::Zero
        } else if alpha == 1.0 {
            RenyiOrder::One
        } else if alpha.is_infinite() {
            RenyiOrder::Infinity
        } else {
            RenyiOrder::Alpha(alpha)
        })
    }
}

fn support_log(h: &HermitianOperator) -> HermitianOperator {
    h.map_spectrum(|x| if x > tol().support { x.log2() } else { 0.0 })
}

/// Umegaki relative entropy `tr ρ (log ρ − log σ)`.
pub fn relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    same_dims(rho, sigma)?;
    if weight_off_support(rho, sigma) > tol().support {
        return Ok(f64::INFINITY);
    }
    Ok(rho.inner(&support_log(rho)) - rho.inner(&support_log(sigma)))
}

/// `D̄₀(ρ‖σ) = −log tr(Π_ρ σ)`.
pub fn d_zero(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    same_dims(rho, sigma)?;
    let overlap = rho.support_projector().inner(sigma);
    Ok(if overlap > 0.0 { -overlap.log2() } else { f64::INFINITY })
}

/// Petz Rényi divergence `(1/(α−1)) log tr(ρ^α σ^{1−α})` for `α ∈ (0, 2]`.
pub fn petz_renyi(order: RenyiOrder, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    same_dims(rho, sigma)?;
    match order {
        RenyiOrder::Zero => d_zero(rho, sigma),
        RenyiOrder::One => relative_entropy(rho, sigma),
        RenyiOrder::Infinity => Err(validation("the Petz family is not defined at α = ∞")),
        RenyiOrder::Alpha(a) => {
            if !(a > 0.0 && a <= 2.0) {
                return Err(validation(format!("Petz order {a} outside (0, 2]")));
            }
            if a > 1.0 && weight_off_support(rho, sigma) > tol().support {
                return Ok(f64::INFINITY);
            }
            let q = rho.pow_on_support(a).inner(&sigma.pow_on_support(1.0 - a));
            Ok(renyi_from_trace(a, q))
        }
    }
}

fn renyi_from_trace(a: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return if a < 1.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    q.log2() / (a - 1.0)
}

/// Sandwiched Rényi divergence
/// `(1/(α−1)) log tr[(σ^{(1−α)/2α} ρ σ^{(1−α)/2α})^α]` for `α ≥ 1/2`.
pub fn sandwiched_renyi(order: RenyiOrder, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    same_dims(rho, sigma)?;
    match order {
        RenyiOrder::Zero => Err(validation("the sandwiched family needs α ≥ 1/2")),
        RenyiOrder::One => relative_entropy(rho, sigma),
        RenyiOrder::Infinity => d_max(rho, sigma),
        RenyiOrder::Alpha(a) => {
            if a < 0.5 {
                return Err(validation(format!("sandwiched order {a} below 1/2")));
            }
            if a > 1.0 && weight_off_support(rho, sigma) > tol().support {
                return Ok(f64::INFINITY);
            }
            let s = sigma.pow_on_support((1.0 - a) / (2.0 * a));
            let inner = rho.conjugate_by(s.matrix(), rho.dims().to_vec());
            let q: f64 = inner.eigenvalues().iter().map(|&x| x.max(0.0).powf(a)).sum();
            Ok(renyi_from_trace(a, q))
        }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(validation(format!("ε = {eps} outside [0, 1)")));
    }
    Ok(())
}

/// `D_H^ε(ρ‖σ) = −log min{tr(Λσ) : 0 ⪯ Λ ⪯ 𝟙, tr(ρΛ) ≥ 1−ε}`. The `ε = 0`
/// value uses the closed form `−log tr(Π_ρ σ)`.
pub fn d_hypothesis(eps: f64, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    check_epsilon(eps)?;
    if eps == 0.0 {
        return d_zero(rho, sigma);
    }
    d_hypothesis_sdp(eps, rho, sigma)
}

/// SDP evaluation of [`d_hypothesis`], valid for every `ε ∈ [0, 1)`.
pub fn d_hypothesis_sdp(eps: f64, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    check_epsilon(eps)?;
    same_dims(rho, sigma)?;
    let d = rho.dim();
    let mut p = SdpProblem::new(Sense::Minimize);
    let lam = p.add_block(d);
    let slack = p.add_block(d);
    let s = p.add_block(1);
    p.set_objective(lam, sigma.matrix().clone());
    p.add_operator_constraint(vec![(lam, LinearMap::identity(d)), (slack, LinearMap::identity(d))], &identity(d));
    p.add_constraint(vec![(lam, rho.matrix().clone()), (s, -identity(1))], 1.0 - eps);
    let sol = solve(&p)?.require_optimal("hypothesis testing divergence")?;
    let v = sol.primal_value;
    Ok(if v > 0.0 { -v.log2() } else { f64::INFINITY })
}

/// `S_min^↑(A|B) = −log max{tr(ρY) : Y ⪰ 0, tr_A Y = 𝟙_B}` for `ρ` on
/// `[A, B]`. The optimum equals `min{tr σ : 𝟙_A ⊗ σ ⪰ ρ}`.
pub fn cond_min_entropy_up(rho: &HermitianOperator) -> Result<f64> {
    Ok(cond_min_entropy_up_certificate(rho)?.value)
}

/// Conditional min-entropy together with the optimal `σ_B` (normalized).
#[derive(Debug, Clone)]
pub struct MinEntropyCertificate {
    pub value: f64,
    /// Optimal `σ_B` from the dual, rescaled to unit trace.
    pub sigma: HermitianOperator,
    /// Optimal `Y` of the primal.
    pub y: HermitianOperator,
    pub duality_gap: f64,
}

pub fn cond_min_entropy_up_certificate(rho: &HermitianOperator) -> Result<MinEntropyCertificate> {
    let (da, db) = bipartite(rho)?;
    let mut p = SdpProblem::new(Sense::Maximize);
    let y = p.add_block(da * db);
    p.set_objective(y, rho.matrix().clone());
    let g = p.add_operator_constraint(vec![(y, LinearMap::trace_first(da, db))], &identity(db));
    let sol = solve(&p)?.require_optimal("conditional min-entropy")?;
    let v = sol.primal_value;
    let sigma = HermitianOperator::hermitize(&sol.dual_operator(g), vec![db]);
    let tr = sigma.trace();
    let sigma = if tr > 0.0 { sigma.scale(1.0 / tr) } else { sigma };
    Ok(MinEntropyCertificate {
        value: if v > 0.0 { -v.log2() } else { f64::INFINITY },
        sigma,
        y: sol.primal[0].clone(),
        duality_gap: sol.duality_gap,
    })
}

/// `S_min^↑(A|B)` from `min{tr σ : 𝟙_A ⊗ σ ⪰ ρ, σ ⪰ 0}`.
pub fn cond_min_entropy_up_primal(rho: &HermitianOperator) -> Result<f64> {
    let (da, db) = bipartite(rho)?;
    let mut p = SdpProblem::new(Sense::Minimize);
    let s = p.add_block(db);
    let slack = p.add_block(da * db);
    p.set_objective(s, identity(db));
    p.add_operator_constraint(
        vec![(s, LinearMap::kron_left(da, db, 1.0)), (slack, LinearMap::scaled(da * db, -1.0))],
        rho.matrix(),
    );
    let sol = solve(&p)?.require_optimal("conditional min-entropy")?;
    let v = sol.primal_value;
    Ok(if v > 0.0 { -v.log2() } else { f64::INFINITY })
}

/// `S_min^↓(A|B) = −D_max(ρ_AB ‖ 𝟙_A ⊗ ρ_B)`.
pub fn cond_min_entropy_down(rho: &HermitianOperator) -> Result<f64> {
    let (da, _) = bipartite(rho)?;
    let rho_b = partial_trace(rho, &[1])?;
    let sigma = tensor(&HermitianOperator::identity(vec![da]), &rho_b);
    Ok(-d_max(rho, &sigma)?)
}

/// [`cond_min_entropy_down`] through the SDP
/// `min{λ : λ 𝟙_A ⊗ ρ_B ⪰ ρ_AB}`.
pub fn cond_min_entropy_down_sdp(rho: &HermitianOperator) -> Result<f64> {
    let (da, _) = bipartite(rho)?;
    let rho_b = partial_trace(rho, &[1])?;
    let sigma = tensor(&HermitianOperator::identity(vec![da]), &rho_b);
    // ρ lives on the support of 𝟙 ⊗ ρ_B; compressing keeps the slack interior nonempty.
    let v = support_isometry(&sigma);
    let r = v.ncols();
    let mut p = SdpProblem::new(Sense::Minimize);
    let lam = p.add_block(1);
    let slack = p.add_block(r);
    p.set_objective(lam, identity(1));
    p.add_operator_constraint(
        vec![(lam, LinearMap::scalar(&(v.adjoint() * sigma.matrix() * &v))), (slack, LinearMap::scaled(r, -1.0))],
        &(v.adjoint() * rho.matrix() * &v),
    );
    let sol = solve(&p)?.require_optimal("max-relative entropy")?;
    Ok(-sol.primal_value.log2())
}

/// `S_H^ε(A|B) = −inf_σ D_H^ε(ρ_AB ‖ 𝟙_A ⊗ σ_B)`.
///
/// At `ε = 0` this is `log λ_max(tr_A Π_ρ)`. For `ε > 0` the inner
/// minimization is dualized, giving the single SDP
/// `max μ(1−ε) − tr Z` over `σ ⪰ 0, tr σ = 1, μ ≥ 0, Z ⪰ 0` with
/// `μρ ⪯ 𝟙 ⊗ σ + Z`.
pub fn cond_hypothesis_entropy(eps: f64, rho: &HermitianOperator) -> Result<f64> {
    check_epsilon(eps)?;
    bipartite(rho)?;
    if eps == 0.0 {
        let proj = rho.support_projector();
        let reduced = partial_trace(&proj, &[1])?;
        return Ok(reduced.max_eigenvalue().log2());
    }
    cond_hypothesis_entropy_sdp(eps, rho)
}

/// SDP evaluation of [`cond_hypothesis_entropy`].
pub fn cond_hypothesis_entropy_sdp(eps: f64, rho: &HermitianOperator) -> Result<f64> {
    check_epsilon(eps)?;
    let (da, db) = bipartite(rho)?;
    let d = da * db;
    let mut p = SdpProblem::new(Sense::Maximize);
    let sigma = p.add_block(db);
    let mu = p.add_block(1);
    let z = p.add_block(d);
    let slack = p.add_block(d);
    p.set_objective(mu, identity(1).scale(1.0 - eps));
    p.set_objective(z, -identity(d));
    p.add_operator_constraint(
        vec![
            (sigma, LinearMap::kron_left(da, db, 1.0)),
            (z, LinearMap::identity(d)),
            (mu, LinearMap::scalar(&rho.matrix().scale(-1.0))),
            (slack, LinearMap::scaled(d, -1.0)),
        ],
        &zeros(d, d),
    );
    p.add_constraint(vec![(sigma, identity(db))], 1.0);
    let sol = solve(&p)?.require_optimal("hypothesis testing conditional entropy")?;
    Ok(sol.primal_value.log2())
}

/// `S_{1/2}^↑(A|B) = max_σ log F(ρ_AB, 𝟙_A ⊗ σ_B)`, from the SDP
/// `max Re tr X` subject to `[[ρ, X], [X†, 𝟙 ⊗ σ]] ⪰ 0`, `tr σ = 1`.
pub fn cond_sandwiched_half_up(rho: &HermitianOperator) -> Result<f64> {
    let (da, db) = bipartite(rho)?;
    // F(ρ, τ) = F(V†ρV, V†τV) for V onto supp ρ; the compressed corner is invertible.
    let v = support_isometry(rho);
    let r = v.ncols();
    let mut p = SdpProblem::new(Sense::Maximize);
    let big = p.add_block(2 * r);
    let sigma = p.add_block(db);
    let mut c = zeros(2 * r, 2 * r);
    for i in 0..r {
        c[(i, r + i)] = c64(0.5, 0.0);
        c[(r + i, i)] = c64(0.5, 0.0);
    }
    p.set_objective(big, c);
    p.add_operator_constraint(vec![(big, LinearMap::corner(2 * r, 0, r))], &(v.adjoint() * rho.matrix() * &v));
    p.add_operator_constraint(
        vec![
            (big, LinearMap::corner(2 * r, r, r)),
            (sigma, LinearMap::kron_left(da, db, -1.0).then_conjugate(&v.adjoint())),
        ],
        &zeros(r, r),
    );
    p.add_constraint(vec![(sigma, identity(db))], 1.0);
    let sol = solve(&p)?.require_optimal("fidelity with product operators")?;
    let root = sol.primal_value;
    Ok(if root > 0.0 { 2.0 * root.log2() } else { f64::NEG_INFINITY })
}

/// Isometry onto the support of `h`, columns ordered by eigenvalue.
fn support_isometry(h: &HermitianOperator) -> ComplexMatrix {
    let eig = h.eigen();
    let r = eig.values.iter().filter(|&&x| x > tol().support).count();
    eig.vectors.columns(0, r).into_owned()
}

/// The set of subnormalized operators within purified distance `ε` of a
/// normalized state.
#[derive(Debug, Clone)]
pub struct SmoothingBall {
    pub epsilon: f64,
    pub center: DensityOperator,
}

impl SmoothingBall {
    pub fn new(epsilon: f64, center: DensityOperator) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(validation(format!("ε = {epsilon} outside [0, 1]")));
        }
        Ok(Self { epsilon, center })
    }

    pub fn distance(&self, candidate: &HermitianOperator) -> Result<f64> {
        purified_distance(&self.center, candidate)
    }

    pub fn contains(&self, candidate: &HermitianOperator) -> Result<bool> {
        if candidate.min_eigenvalue() < -tol().psd || candidate.trace() > 1.0 + tol().trace {
            return Ok(false);
        }
        Ok(self.distance(candidate)? <= self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MinEntropyVariant {
    Up,
    Down,
}

/// A certified lower bound on a smoothed min-entropy: the value at an
/// explicit member of the smoothing ball.
#[derive(Debug, Clone)]
pub struct SmoothBound {
    pub value: f64,
    pub unsmoothed: f64,
    pub witness: HermitianOperator,
    pub distance: f64,
}

fn min_entropy_of(variant: MinEntropyVariant, rho: &HermitianOperator) -> Result<f64> {
    match variant {
        MinEntropyVariant::Up => cond_min_entropy_up(rho),
        // Smoothed operator in both arguments.
        MinEntropyVariant::Down => cond_min_entropy_down(rho),
    }
}

/// Largest `t ∈ [0, 1]` with `P(ρ, ρ_t) ≤ ε`, by bisection. The root
/// fidelity is concave along the path, so feasibility is monotone in `t`.
fn max_feasible_t(ball: &SmoothingBall, path: &dyn Fn(f64) -> HermitianOperator) -> Result<f64> {
    if ball.distance(&path(1.0))? <= ball.epsilon {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ball.distance(&path(mid))? <= ball.epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Golden-section maximization of a unimodal function on `[0, b]`.
fn golden_max(b: f64, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, b);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > 1e-9 * b.max(1e-12) && hi - lo > 1e-14 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for t in [0.0, b] {
        let v = f(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Certified lower bound on `S_min^ε` (`Up`) or `S_min^{↓,ε}` (`Down`).
///
/// The search runs along `ρ_t = (1−t)ρ + tΔ` for a few directions `Δ`:
/// trace reduction, mixing with `π_A ⊗ ρ_B` and `π_A ⊗ π_B`, and lowering
/// the largest eigenvalue to the second one. `t` ranges over the part of the
/// path inside the ball, and the best value found at a verified member of
/// the ball is returned. The center is always a candidate.
pub fn smooth_min_entropy_lower_bound(
    eps: f64,
    rho: &DensityOperator,
    variant: MinEntropyVariant,
) -> Result<SmoothBound> {
    check_epsilon(eps)?;
    let (da, _) = bipartite(rho)?;
    let unsmoothed = min_entropy_of(variant, rho)?;
    let mut best = SmoothBound { value: unsmoothed, unsmoothed, witness: rho.op().clone(), distance: 0.0 };
    if eps == 0.0 {
        return Ok(best);
    }
    let ball = SmoothingBall::new(eps, rho.clone())?;
    let pi_a = DensityOperator::maximally_mixed(da);
    let rho_b = partial_trace(rho, &[1])?;
    let eig = rho.eigen();
    let clip = (eig.values[0] - eig.values.get(1).copied().unwrap_or(0.0)).max(0.0);
    let v1 = eig.vectors.columns(0, 1).into_owned();
    let dims = rho.dims().to_vec();
    let directions: Vec<HermitianOperator> = vec![
        HermitianOperator::hermitize(&zeros(rho.dim(), rho.dim()), dims.clone()),
        tensor(&pi_a, &rho_b),
        tensor(&pi_a, &DensityOperator::maximally_mixed(rho.dims()[1])),
        HermitianOperator::hermitize(&(rho.matrix() - (&v1 * v1.adjoint()).scale(clip)), dims.clone()),
    ];
    for delta in directions {
        let path = |t: f64| {
            HermitianOperator::hermitize(&(rho.matrix().scale(1.0 - t) + delta.matrix().scale(t)), dims.clone())
        };
        let t_max = max_feasible_t(&ball, &path)?;
        if t_max <= 0.0 {
            continue;
        }
        let mut eval = |t: f64| -> Result<f64> {
            let cand = path(t);
            if ball.contains(&cand)? {
                min_entropy_of(variant, &cand)
            } else {
                Ok(f64::NEG_INFINITY)
            }
        };
        let (t, value) = golden_max(t_max, &mut eval)?;
        if value > best.value {
            let witness = path(t);
            let distance = ball.distance(&witness)?;
            best = SmoothBound { value, unsmoothed, witness, distance };
        }
    }
    Ok(best)
}
