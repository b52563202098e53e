//! Scalar linear delay equations `ẋ(t) + Σ aₖ(t) x(hₖ(t)) = f(t)` and their initial data.

mod file;
mod validate;

use thiserror::Error;

use crate::expr::{ParseError, PiecewiseFn};

pub use file::{EquationFile, HistorySpec, TermSpec};
pub use validate::{
    sample_grid, sign_pattern, sign_pattern_on, validate, validate_on, Assumption, AssumptionCheck, SignClass,
    SignPattern, ValidationReport, NONNEGATIVE_TOL,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("equation needs at least one term")]
    NoTerms,
    #[error("malformed equation file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot parse {field}: {source}")]
    Expr {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("initial time {t0} precedes the equation start {t_start}")]
    InitialTime { t0: f64, t_start: f64 },
}

/// One delayed term `aₖ(t) x(hₖ(t))`.
#[derive(Debug, Clone)]
pub struct Term {
    pub coef: PiecewiseFn,
    pub delay: PiecewiseFn,
}

impl Term {
    pub fn new(coef: PiecewiseFn, delay: PiecewiseFn) -> Self {
        Self { coef, delay }
    }

    /// Parses a term from two expressions, e.g. `Term::parse("0.3", "t - 1")`.
    pub fn parse(coef: &str, delay: &str) -> Result<Self, ModelError> {
        let c = PiecewiseFn::parse(coef).map_err(|source| ModelError::Expr { field: "coef".into(), source })?;
        let d = PiecewiseFn::parse(delay).map_err(|source| ModelError::Expr { field: "delay".into(), source })?;
        Ok(Self::new(c, d))
    }
}

#[derive(Debug, Clone)]
pub struct DelayEquation {
    terms: Vec<Term>,
    t_start: f64,
    forcing: Option<PiecewiseFn>,
}

impl DelayEquation {
    pub fn new(terms: Vec<Term>, t_start: f64) -> Result<Self, ModelError> {
        if terms.is_empty() {
            return Err(ModelError::NoTerms);
        }
        let terms = terms
            .into_iter()
            .map(|t| Term {
                coef: t.coef.clone().with_domain_start(t.coef.domain_start().max(t_start)),
                delay: t.delay.clone().with_domain_start(t.delay.domain_start().max(t_start)),
            })
            .collect();
        Ok(Self { terms, t_start, forcing: None })
    }

    /// Shorthand for tests and examples: `(coef, delay)` expression pairs.
    pub fn parse(terms: &[(&str, &str)], t_start: f64) -> Result<Self, ModelError> {
        let terms = terms.iter().map(|(c, d)| Term::parse(c, d)).collect::<Result<Vec<_>, _>>()?;
        Self::new(terms, t_start)
    }

    #[must_use]
    pub fn with_forcing(mut self, f: PiecewiseFn) -> Self {
        let start = f.domain_start().max(self.t_start);
        self.forcing = Some(f.with_domain_start(start));
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn forcing(&self) -> Option<&PiecewiseFn> {
        self.forcing.as_ref()
    }

    /// `Σₖ aₖ`.
    pub fn coefficient_sum(&self) -> PiecewiseFn {
        let cs: Vec<PiecewiseFn> = self.terms.iter().map(|t| t.coef.clone()).collect();
        PiecewiseFn::sum(&cs)
    }

    /// `Σₖ |aₖ|`.
    pub fn abs_coefficient_sum(&self) -> PiecewiseFn {
        let cs: Vec<PiecewiseFn> = self.terms.iter().map(|t| t.coef.abs()).collect();
        PiecewiseFn::sum(&cs)
    }

    /// `minₖ hₖ(t)`.
    pub fn min_delay_at(&self, t: f64) -> f64 {
        self.terms.iter().map(|k| k.delay.value(t)).fold(f64::INFINITY, f64::min)
    }

    /// Breakpoints of every coefficient, delay and the forcing in `[a, b]`.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|k| k.coef.breakpoints(a, b).into_iter().chain(k.delay.breakpoints(a, b)))
            .chain(self.forcing.iter().flat_map(|f| f.breakpoints(a, b)))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + y.abs()));
        out
    }

    /// The same equation without forcing.
    pub fn homogeneous(&self) -> DelayEquation {
        Self { terms: self.terms.clone(), t_start: self.t_start, forcing: None }
    }

    /// The equation keeping only the listed terms (forcing dropped).
    pub fn subequation(&self, indices: &[usize]) -> Result<DelayEquation, ModelError> {
        let terms = indices.iter().filter_map(|&i| self.terms.get(i).cloned()).collect();
        DelayEquation::new(terms, self.t_start)
    }

    /// The equation with extra terms appended.
    pub fn with_terms(&self, extra: &[Term]) -> DelayEquation {
        let mut terms = self.terms.clone();
        terms.extend(extra.iter().cloned());
        let mut eq = DelayEquation::new(terms, self.t_start).expect("non-empty");
        eq.forcing = self.forcing.clone();
        eq
    }

    /// True when `hₖ(t) = t` at every sample of `grid`.
    pub fn is_undelayed(&self, k: usize, grid: &[f64]) -> bool {
        let h = &self.terms[k].delay;
        if h.expr().is_some_and(|e| matches!(e, crate::expr::Expr::Time)) {
            return true;
        }
        grid.iter().all(|&t| (h.value(t) - t).abs() <= 1e-14 * (1.0 + t.abs()))
    }
}

/// Initial data `x(t) = φ(t)` for `t < t₀`, `x(t₀) = x₀`.
///
/// Below `floor` the history is extended by the constant `φ(floor)`.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub phi: PiecewiseFn,
    pub x0: f64,
    pub t0: f64,
    pub floor: f64,
}

impl InitialData {
    pub fn new(phi: PiecewiseFn, x0: f64, t0: f64) -> Self {
        Self { phi, x0, t0, floor: f64::NEG_INFINITY }
    }

    /// Zero prehistory and unit value at `s`: the data defining `X(·, s)`.
    pub fn unit_at(s: f64) -> Self {
        Self { phi: PiecewiseFn::constant(0.0), x0: 1.0, t0: s, floor: f64::NEG_INFINITY }
    }

    #[must_use]
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    /// History value at `t < t₀`.
    #[inline]
    pub fn history(&self, t: f64) -> f64 {
        self.phi.value(t.max(self.floor))
    }

    /// `max(|x₀|, sup |φ|)` over `[lo, t₀)`.
    pub fn scale(&self, lo: f64) -> f64 {
        let lo = lo.max(self.floor).min(self.t0);
        let sup = if lo < self.t0 {
            let phi = self.phi.clone().with_domain_start(f64::NEG_INFINITY);
            phi.sup_abs(lo, self.t0.next_down()).unwrap_or(f64::INFINITY)
        } else {
            0.0
        };
        self.x0.abs().max(sup)
    }

    /// `a·self + b·other` (same `t₀`).
    pub fn combine(&self, a: f64, other: &InitialData, b: f64) -> InitialData {
        let phi = match (self.phi.expr(), other.phi.expr()) {
            (Some(p), Some(q)) => PiecewiseFn::new(
                crate::expr::Expr::Num(a) * p.clone() + crate::expr::Expr::Num(b) * q.clone(),
            ),
            _ => {
                let (p, q) = (self.clone(), other.clone());
                PiecewiseFn::custom(std::sync::Arc::new(Combined { p, a, q, b }))
            }
        };
        InitialData { phi, x0: a * self.x0 + b * other.x0, t0: self.t0, floor: self.floor.max(other.floor) }
    }
}

#[derive(Debug)]
struct Combined {
    p: InitialData,
    a: f64,
    q: InitialData,
    b: f64,
}

impl crate::expr::RealFn for Combined {
    fn value(&self, t: f64) -> f64 {
        self.a * self.p.history(t) + self.b * self.q.history(t)
    }
}
