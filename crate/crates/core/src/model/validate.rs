use serde::Serialize;

use super::{DelayEquation, InitialData};

/// Tolerance below zero still counted as nonnegative.
pub const NONNEGATIVE_TOL: f64 = 1e-14;

const DEFAULT_SAMPLES: f64 = 16384.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// Coefficients (and forcing) bounded on the horizon.
    A1,
    /// `hₖ(t) ≤ t` on the samples and `hₖ` growing.
    A2,
    /// Bounded history.
    A3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub term: Option<usize>,
    pub passed: bool,
    /// A sample time where the check failed.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub horizon: f64,
    pub step: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignClass {
    NonnegativeOnHorizon,
    MixedSign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignPattern {
    pub classes: Vec<SignClass>,
    /// Smallest sampled value of each coefficient.
    pub minima: Vec<f64>,
    /// Indices (0-based) of the nonnegative terms.
    pub index_set: Vec<usize>,
}

impl SignPattern {
    pub fn all_nonnegative(&self) -> bool {
        self.index_set.len() == self.classes.len()
    }
}

/// Uniform grid `t_start + i·step` up to `horizon`, joined with the equation's breakpoints.
pub fn sample_grid(eq: &DelayEquation, horizon: f64, step: f64) -> Vec<f64> {
    let t0 = eq.t_start();
    let n = ((horizon - t0) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * step).collect();
    grid.push(horizon);
    grid.extend(eq.breakpoints(t0, horizon));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn default_step(eq: &DelayEquation, horizon: f64) -> f64 {
    (horizon - eq.t_start()) / DEFAULT_SAMPLES
}

pub fn sign_pattern(eq: &DelayEquation, horizon: f64) -> SignPattern {
    sign_pattern_on(eq, horizon, default_step(eq, horizon))
}

/// Sign classification on [`sample_grid`]; refining `step` can only shrink the index set.
pub fn sign_pattern_on(eq: &DelayEquation, horizon: f64, step: f64) -> SignPattern {
    let grid = sample_grid(eq, horizon, step);
    let minima: Vec<f64> = eq
        .terms()
        .iter()
        .map(|k| grid.iter().map(|&t| k.coef.value(t)).fold(f64::INFINITY, f64::min))
        .collect();
    let classes: Vec<SignClass> = minima
        .iter()
        .map(|&m| if m >= -NONNEGATIVE_TOL { SignClass::NonnegativeOnHorizon } else { SignClass::MixedSign })
        .collect();
    let index_set = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == SignClass::NonnegativeOnHorizon)
        .map(|(i, _)| i)
        .collect();
    SignPattern { classes, minima, index_set }
}

pub fn validate(eq: &DelayEquation, horizon: f64) -> ValidationReport {
    validate_on(eq, None, horizon, default_step(eq, horizon))
}

/// Checks (a1)-(a3) on a sample grid. The unbounded-delay part of (a2) is a
/// finite-horizon proxy: the delay's maximum over the last quarter of the
/// window must exceed its maximum over the first half.
pub fn validate_on(eq: &DelayEquation, init: Option<&InitialData>, horizon: f64, step: f64) -> ValidationReport {
    assert!(horizon > eq.t_start(), "validation horizon must exceed t_start");
    let t0 = eq.t_start();
    let grid = sample_grid(eq, horizon, step);
    let mut checks = Vec::new();

    let bounded = |f: &crate::expr::PiecewiseFn| match f.sup_abs(t0, horizon) {
        Ok(v) if v.is_finite() => (true, None, format!("sup |.| = {v:e}")),
        _ => {
            let w = f.singularities(t0, horizon).first().copied();
            (false, w, "unbounded on the horizon".to_string())
        }
    };
    for (k, term) in eq.terms().iter().enumerate() {
        let (passed, witness, detail) = bounded(&term.coef);
        checks.push(AssumptionCheck { assumption: Assumption::A1, term: Some(k), passed, witness, detail });
    }
    if let Some(f) = eq.forcing() {
        let (passed, witness, detail) = bounded(f);
        checks.push(AssumptionCheck { assumption: Assumption::A1, term: None, passed, witness, detail });
    }

    let half = grid.partition_point(|&t| t <= 0.5 * (t0 + horizon));
    let last_quarter = grid.partition_point(|&t| t < t0 + 0.75 * (horizon - t0));
    for (k, term) in eq.terms().iter().enumerate() {
        let h = &term.delay;
        let ahead = grid.iter().copied().find(|&t| h.value(t) > t + 1e-12 * (1.0 + t.abs()));
        if let Some(w) = ahead {
            let detail = format!("h({w}) = {} > t", h.value(w));
            checks.push(AssumptionCheck { assumption: Assumption::A2, term: Some(k), passed: false, witness: Some(w), detail });
            continue;
        }
        let early = grid[..half.max(1)].iter().map(|&t| h.value(t)).fold(f64::NEG_INFINITY, f64::max);
        let late = grid[last_quarter.min(grid.len() - 1)..].iter().map(|&t| h.value(t)).fold(f64::NEG_INFINITY, f64::max);
        let passed = late > early;
        let detail = format!("h(t) <= t on samples; growth proxy: late max {late:e} vs early max {early:e}");
        let witness = if passed { None } else { Some(horizon) };
        checks.push(AssumptionCheck { assumption: Assumption::A2, term: Some(k), passed, witness, detail });
    }

    if let Some(init) = init {
        let lo = eq
            .terms()
            .iter()
            .flat_map(|k| grid.iter().filter(|&&t| t >= init.t0).map(move |&t| k.delay.value(t)))
            .fold(init.t0, f64::min)
            .max(init.floor);
        let sup = if lo < init.t0 {
            let phi = init.phi.clone().with_domain_start(f64::NEG_INFINITY);
            phi.sup_abs(lo, init.t0.next_down()).unwrap_or(f64::INFINITY)
        } else {
            0.0
        };
        let passed = sup.is_finite() && init.x0.is_finite();
        let detail = format!("sup |phi| on [{lo}, {}) = {sup:e}", init.t0);
        checks.push(AssumptionCheck { assumption: Assumption::A3, term: None, passed, witness: None, detail });
    }

    ValidationReport { horizon, step, checks }
}
