use serde::Serialize;

use super::{
    check_dominant_positive, check_integrable, check_ode_necessary, check_one_over_e_shift, check_one_plus_one_over_e,
    check_positivity_char, check_positivity_integral, CheckParams, Conclusion, Verdict,
};
use crate::model::{sign_pattern, validate, DelayEquation, SignPattern, ValidationReport};
use crate::solver::par_map;

type Check = fn(&DelayEquation, &CheckParams) -> Verdict;

const CHECKS: [Check; 7] = [
    check_positivity_integral,
    check_positivity_char,
    check_one_plus_one_over_e,
    check_one_over_e_shift,
    check_dominant_positive,
    check_integrable,
    check_ode_necessary,
];

/// Every check on one equation.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub horizon: f64,
    pub window: [f64; 2],
    pub validation: ValidationReport,
    pub sign_pattern: SignPattern,
    pub checks: Vec<Verdict>,
    pub strongest: Conclusion,
    /// `check:route` of the verdict behind `strongest`, empty if none.
    pub provenance: String,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn check(&self, id: &str) -> Option<&Verdict> {
        self.checks.iter().find(|v| v.id == id)
    }
}

/// Runs all checks in parallel and keeps the strongest conclusion.
pub fn run_all(eq: &DelayEquation, p: &CheckParams) -> Report {
    let t0 = eq.t_start();
    let w0 = p.window_start.unwrap_or(t0 + 0.2 * (p.horizon - t0)).clamp(t0, p.horizon);
    let checks = par_map(&CHECKS, |c| c(eq, p));
    let best = checks.iter().filter(|v| v.conclusion != Conclusion::NoConclusion).max_by_key(|v| v.conclusion);
    Report {
        horizon: p.horizon,
        window: [w0, p.horizon],
        validation: validate(eq, p.horizon),
        sign_pattern: sign_pattern(eq, p.horizon),
        strongest: best.map_or(Conclusion::NoConclusion, |v| v.conclusion),
        provenance: best.map_or_else(String::new, |v| format!("{}:{}", v.id, v.route)),
        checks,
    }
}
