//! Numerical tolerances shared by every module.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Thresholds used for validation and rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Elementwise Hermiticity check.
    pub hermitian: f64,
    /// Smallest eigenvalue accepted as positive semidefinite.
    pub psd: f64,
    /// Deviation of the trace from one for states.
    pub trace: f64,
    /// Kraus completeness and isometry checks.
    pub completeness: f64,
    /// Eigenvalue cutoff deciding the support of an operator.
    pub support: f64,
    /// Minimum eigenvalue of a partial transpose still counted as PPT.
    pub ppt: f64,
    /// Relative duality gap at which the SDP solver stops.
    pub sdp_gap: f64,
    /// Scaled primal/dual residual at which the SDP solver stops.
    pub sdp_feasibility: f64,
    /// Fraction-to-boundary factor for interior-point steps.
    pub sdp_step: f64,
    pub sdp_max_iterations: usize,
    /// Objective magnitude past which the problem is declared infeasible.
    pub sdp_divergence: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        psd: 1e-10,
        trace: 1e-10,
        completeness: 1e-10,
        support: 1e-9,
        ppt: 1e-10,
        sdp_gap: 1e-8,
        sdp_feasibility: 1e-9,
        sdp_step: 0.98,
        sdp_max_iterations: 200,
        sdp_divergence: 1e10,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static GLOBAL: OnceLock<Tolerances> = OnceLock::new();

/// Process-wide tolerances: the defaults unless [`set_global`] ran first.
pub fn tol() -> &'static Tolerances {
    GLOBAL.get_or_init(Tolerances::default)
}

/// Installs process-wide tolerances. Fails once [`tol`] has been read.
pub fn set_global(t: Tolerances) -> Result<()> {
    GLOBAL.set(t).map_err(|_| validation("tolerances are already fixed for this process"))
}

impl Tolerances {
    /// Applies `name=value` overrides, e.g. `sdp_gap=1e-9`.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            let (key, value) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| validation(format!("tolerance override '{}' is not name=value", o.as_ref())))?;
            let slot = v
                .get_mut(key.trim())
                .ok_or_else(|| validation(format!("unknown tolerance '{}'", key.trim())))?;
            let parsed: f64 = value
                .trim()
                .parse()
                .map_err(|_| validation(format!("tolerance value '{}' is not a number", value.trim())))?;
            *slot = if slot.is_u64() { serde_json::json!(parsed as u64) } else { serde_json::json!(parsed) };
        }
        Ok(serde_json::from_value(v)?)
    }
}
