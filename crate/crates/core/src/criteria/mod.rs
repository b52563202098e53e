//! The stability-test catalogue. Each check evaluates one sufficient (or
//! necessary) condition on a finite window and returns a [`Verdict`] that
//! names every hypothesis it relied on.

mod context;
mod dominant;
mod integrable;
mod positivity;
mod report;
mod weighted;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::expr::{Extremum, PiecewiseFn};
use crate::model::DelayEquation;
use crate::solver::StepControl;

pub use dominant::check_dominant_positive;
pub use integrable::{check_integrable, check_ode_necessary, check_perturbation};
pub use positivity::{char_test, check_positivity_char, check_positivity_integral, CharTest};
pub use report::{run_all, Report};
pub use weighted::{check_one_over_e_shift, check_one_plus_one_over_e};

/// `1 + 1/e`.
pub const ONE_PLUS_INV_E: f64 = 1.0 + 1.0 / std::f64::consts::E;
/// `1/e`.
pub const INV_E: f64 = 1.0 / std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Conclusion {
    NoConclusion,
    FundamentalPositive,
    SolutionsBounded,
    NotAsymptoticallyStable,
    AsymptoticallyStable,
    ExponentiallyStable,
}

impl Conclusion {
    /// Whether this conclusion includes asymptotic stability.
    pub fn is_stable(self) -> bool {
        matches!(self, Conclusion::AsymptoticallyStable | Conclusion::ExponentiallyStable)
    }
}

/// A number together with the window it was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evidence {
    pub value: f64,
    pub window: [f64; 2],
    /// Where an extremum was attained, when that is meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
}

impl Evidence {
    pub fn new(value: f64, window: [f64; 2]) -> Self {
        Self { value, window, at: None }
    }
}

impl From<Extremum> for Evidence {
    fn from(e: Extremum) -> Self {
        Self { value: e.value, window: e.window, at: Some(e.at) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub passed: bool,
    /// Decided by a finite-horizon heuristic rather than exactly.
    pub proxy: bool,
    /// Part of the route that produced the conclusion.
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: String,
    pub status: Status,
    pub conclusion: Conclusion,
    pub evidence: BTreeMap<String, Evidence>,
    pub hypotheses: Vec<Hypothesis>,
    /// How the conclusion was reached, e.g. `weighted_delay+bounded_delays`.
    pub route: String,
}

impl Verdict {
    pub(crate) fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            status: Status::Inconclusive,
            conclusion: Conclusion::NoConclusion,
            evidence: BTreeMap::new(),
            hypotheses: Vec::new(),
            route: String::new(),
        }
    }

    pub(crate) fn evidence(&mut self, name: &str, e: impl Into<Evidence>) {
        self.evidence.insert(name.to_string(), e.into());
    }

    pub(crate) fn hypothesis(&mut self, name: &str, passed: bool, proxy: bool, detail: impl Into<String>) -> bool {
        self.hypotheses.push(Hypothesis { name: name.to_string(), passed, proxy, required: false, detail: detail.into() });
        passed
    }

    /// Marks the named hypotheses as the ones the conclusion rests on.
    pub(crate) fn conclude(&mut self, conclusion: Conclusion, route: &str, needs: &[&str]) {
        for h in &mut self.hypotheses {
            if h.name == "model_assumptions" || needs.contains(&h.name.as_str()) {
                h.required = true;
            }
        }
        debug_assert!(self.hypotheses.iter().filter(|h| h.required).all(|h| h.passed));
        self.conclusion = conclusion;
        self.route = route.to_string();
    }

    /// Records whether the model assumptions hold on the horizon; every check
    /// stops here when they do not.
    pub(crate) fn require_model(&mut self, eq: &DelayEquation, horizon: f64) -> bool {
        let report = crate::model::validate(eq, horizon);
        let failed: Vec<String> = report.failures().map(|c| format!("{:?}: {}", c.assumption, c.detail)).collect();
        let detail = if failed.is_empty() { "bounded coefficients, h(t) <= t, h(t) -> infinity".to_string() } else { failed.join("; ") };
        self.hypothesis("model_assumptions", failed.is_empty(), true, detail)
    }

    pub fn hypothesis_passed(&self, name: &str) -> Option<bool> {
        self.hypotheses.iter().find(|h| h.name == name).map(|h| h.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Shared settings of every check.
#[derive(Debug, Clone)]
pub struct CheckParams {
    /// Horizon `H`.
    pub horizon: f64,
    /// Grid step for limsup/liminf estimates.
    pub step: f64,
    /// Buffer `ε` applied to strict inequalities.
    pub margin: f64,
    /// Start of the tail window; defaults to `t_start + 0.2·(H − t_start)`.
    pub window_start: Option<f64>,
    /// Index set of the dominant terms (0-based).
    pub index_set: Option<Vec<usize>>,
    /// Comparison function `r(t) ≤ t` of the shifted test; built from the density if absent.
    pub r: Option<PiecewiseFn>,
    /// Window length `R` for sliding-integral conditions. Exponential tiers
    /// that need such a window are only evaluated when it is given, except in
    /// [`check_ode_necessary`], which scans for one.
    pub big_r: Option<f64>,
    /// Treat `∫^∞ Σ aₖ = ∞` as known.
    pub assume_divergent: bool,
    /// Treat `Σ aₖ ≠ 0` almost everywhere as known.
    pub assume_nonvanishing: bool,
    /// Solver settings for numerical positivity checks.
    pub ctrl: StepControl,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            horizon: 1000.0,
            step: 1e-3,
            margin: 1e-6,
            window_start: None,
            index_set: None,
            r: None,
            big_r: None,
            assume_divergent: false,
            assume_nonvanishing: false,
            ctrl: StepControl::default(),
        }
    }
}

impl CheckParams {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self { horizon, step, ..Self::default() }
    }
}
