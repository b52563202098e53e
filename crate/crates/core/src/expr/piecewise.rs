use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::ast::Expr;
use super::parse::{parse_with, ParseError};
use super::quad::adaptive_simpson;

/// A real function of time that is not given by an expression, e.g. a
/// table-backed function produced by a change of variables.
pub trait RealFn: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> f64;

    /// Jumps and kinks in `[a, b]`, sorted.
    fn breakpoints(&self, _a: f64, _b: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Exact integral over `[a, b]` when one is cheaply available.
    fn exact_integral(&self, _a: f64, _b: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("t = {t} lies below the domain start {start}")]
    BelowDomain { t: f64, start: f64 },
    #[error("function is not finite at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("integration bound {t} lies below the domain start {start}")]
    BelowDomain { t: f64, start: f64 },
    #[error("non-integrable singularity at t = {at}")]
    Singular { at: f64 },
    #[error("integral over [{a}, {b}] is not finite")]
    NonFinite { a: f64, b: f64 },
}

#[derive(Clone)]
enum Repr {
    Expr(Expr),
    Custom(Arc<dyn RealFn>),
}

/// A piecewise-analytic function with a domain floor.
///
/// Values at breakpoints are right limits. Cloning is cheap for custom
/// functions and proportional to the expression size otherwise.
#[derive(Clone)]
pub struct PiecewiseFn {
    repr: Repr,
    domain_start: f64,
}

impl fmt::Debug for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Expr(e) => write!(f, "PiecewiseFn({e}, t >= {})", self.domain_start),
            Repr::Custom(c) => write!(f, "PiecewiseFn({c:?}, t >= {})", self.domain_start),
        }
    }
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Expr(e) => write!(f, "{e}"),
            Repr::Custom(c) => write!(f, "<{c:?}>"),
        }
    }
}

impl From<Expr> for PiecewiseFn {
    fn from(e: Expr) -> Self {
        Self::new(e)
    }
}

impl PiecewiseFn {
    pub fn new(expr: Expr) -> Self {
        Self { repr: Repr::Expr(expr), domain_start: f64::NEG_INFINITY }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Expr::Num(c))
    }

    pub fn custom(f: Arc<dyn RealFn>) -> Self {
        Self { repr: Repr::Custom(f), domain_start: f64::NEG_INFINITY }
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Self::parse_with(src, &BTreeMap::new())
    }

    pub fn parse_with(src: &str, params: &BTreeMap<String, f64>) -> Result<Self, ParseError> {
        parse_with(src, params).map(Self::new)
    }

    #[must_use]
    pub fn with_domain_start(mut self, t_min: f64) -> Self {
        self.domain_start = t_min;
        self
    }

    pub fn domain_start(&self) -> f64 {
        self.domain_start
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Expr(e) => Some(e),
            Repr::Custom(_) => None,
        }
    }

    /// The constant value, if the function does not depend on `t`.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.repr {
            Repr::Expr(e) if e.is_const() => Some(e.eval(0.0)),
            _ => None,
        }
    }

    /// Unchecked evaluation (right limit at breakpoints).
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Expr(e) => e.eval(t),
            Repr::Custom(c) => c.value(t),
        }
    }

    /// Left limit at `t`.
    #[inline]
    pub fn value_left(&self, t: f64) -> f64 {
        self.value(t.next_down())
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        if t < self.domain_start {
            return Err(EvalError::BelowDomain { t, start: self.domain_start });
        }
        let v = self.value(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { t })
        }
    }

    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Expr(e) => e.breakpoints(a, b),
            Repr::Custom(c) => c.breakpoints(a, b),
        }
    }

    pub fn singularities(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Expr(e) => e.singularities(a, b),
            Repr::Custom(_) => Vec::new(),
        }
    }

    /// `∫ₐᵇ f` to absolute tolerance `tol`; `a > b` gives the negated integral.
    pub fn integrate(&self, a: f64, b: f64, tol: f64) -> Result<f64, IntegrateError> {
        if a > b {
            return self.integrate(b, a, tol).map(|v| -v);
        }
        if a < self.domain_start {
            return Err(IntegrateError::BelowDomain { t: a, start: self.domain_start });
        }
        if a == b {
            return Ok(0.0);
        }
        let v = match &self.repr {
            Repr::Custom(c) => match c.exact_integral(a, b) {
                Some(v) => v,
                None => {
                    let bps = c.breakpoints(a, b);
                    split_sum(a, b, &bps, |lo, hi| adaptive_simpson(&|t| c.value(t), lo, hi, tol * (hi - lo) / (b - a)))
                }
            },
            Repr::Expr(e) => {
                if let Some(&at) = e.singularities(a, b).first() {
                    return Err(IntegrateError::Singular { at });
                }
                let bps = e.breakpoints(a, b);
                split_sum(a, b, &bps, |lo, hi| {
                    e.closed_integral(lo, hi)
                        .unwrap_or_else(|| adaptive_simpson(&|t| e.eval(t), lo, hi, tol * (hi - lo) / (b - a)))
                })
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(IntegrateError::NonFinite { a, b })
        }
    }

    /// Upper bound on `sup |f|` over `[a, b]`; `+∞` when unbounded there.
    pub fn sup_abs(&self, a: f64, b: f64) -> Result<f64, EvalError> {
        if a < self.domain_start {
            return Err(EvalError::BelowDomain { t: a, start: self.domain_start });
        }
        if !self.singularities(a, b).is_empty() {
            return Ok(f64::INFINITY);
        }
        let bps = self.breakpoints(a, b);
        let mut best = self.value(b).abs();
        let mut lo = a;
        for &hi in bps.iter().filter(|&&p| p > a && p < b).chain(std::iter::once(&b)) {
            best = best.max(self.piece_sup(lo, hi));
            lo = hi;
        }
        Ok(if best.is_nan() { f64::INFINITY } else { best })
    }

    fn piece_sup(&self, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            return self.value(lo).abs();
        }
        let f = |t: f64| self.value(t).abs();
        let n = (((hi - lo) / 0.005).ceil() as usize).clamp(16, 20_000);
        let h = (hi - lo) / n as f64;
        let sample = |i: usize| if i == n { hi.next_down().max(lo) } else { lo + i as f64 * h };
        let (mut best_i, mut best) = (0, f(lo));
        for i in 1..=n {
            let v = f(sample(i));
            if v.is_nan() || v == f64::INFINITY {
                return f64::INFINITY;
            }
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let a = sample(best_i.saturating_sub(1));
        let b = sample((best_i + 1).min(n));
        best.max(golden_max(&f, a, b, 60).1)
    }

    /// Pointwise sum; stays an expression when every summand is one.
    pub fn sum(fns: &[PiecewiseFn]) -> PiecewiseFn {
        let start = fns.iter().map(|f| f.domain_start).fold(f64::NEG_INFINITY, f64::max);
        if fns.is_empty() {
            return PiecewiseFn::constant(0.0);
        }
        if fns.iter().all(|f| f.expr().is_some()) {
            let mut it = fns.iter().map(|f| f.expr().cloned().unwrap_or(Expr::Num(0.0)));
            let first = it.next().unwrap_or(Expr::Num(0.0));
            return PiecewiseFn::new(it.fold(first, |acc, e| acc + e)).with_domain_start(start);
        }
        PiecewiseFn::custom(Arc::new(SumFn(fns.to_vec()))).with_domain_start(start)
    }

    /// `|f|`.
    pub fn abs(&self) -> PiecewiseFn {
        let repr = match &self.repr {
            Repr::Expr(e) => Repr::Expr(Expr::Abs(Box::new(e.clone()))),
            Repr::Custom(_) => Repr::Custom(Arc::new(AbsFn(self.clone()))),
        };
        PiecewiseFn { repr, domain_start: self.domain_start }
    }
}

fn split_sum(a: f64, b: f64, bps: &[f64], mut piece: impl FnMut(f64, f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = a;
    for &p in bps.iter().filter(|&&p| p > a && p < b) {
        acc += piece(lo, p);
        lo = p;
    }
    acc + piece(lo, b)
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns `(arg, value)`.
pub(crate) fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best) = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..iters {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best {
                best = fc;
                best_x = c;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best {
                best = fd;
                best_x = d;
            }
        }
    }
    (best_x, best)
}

#[derive(Debug)]
struct SumFn(Vec<PiecewiseFn>);

impl RealFn for SumFn {
    fn value(&self, t: f64) -> f64 {
        self.0.iter().map(|f| f.value(t)).sum()
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.0.iter().flat_map(|f| f.breakpoints(a, b)).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn exact_integral(&self, a: f64, b: f64) -> Option<f64> {
        self.0
            .iter()
            .map(|f| match &f.repr {
                Repr::Custom(c) => c.exact_integral(a, b),
                Repr::Expr(_) => f.integrate(a, b, 1e-12).ok(),
            })
            .sum()
    }
}

#[derive(Debug)]
struct AbsFn(PiecewiseFn);

impl RealFn for AbsFn {
    fn value(&self, t: f64) -> f64 {
        self.0.value(t).abs()
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = self.0.breakpoints(a, b);
        super::ast::scan_roots(|t| self.0.value(t), a, b, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn f(src: &str) -> PiecewiseFn {
        PiecewiseFn::parse(src).unwrap()
    }

    #[test]
    fn eval_examples() {
        let sq = f("pw(2; [0,1): 1; [1,2): 0)");
        assert_eq!(sq.eval(0.5).unwrap(), 1.0);
        assert_eq!(sq.eval(1.0).unwrap(), 0.0);
        assert_eq!(sq.value_left(1.0), 1.0);
        let inv = f("1/t").with_domain_start(1.0);
        assert_eq!(inv.eval(2.0).unwrap(), 0.5);
        assert!(matches!(inv.eval(0.5), Err(EvalError::BelowDomain { .. })));
        assert_eq!(f("exp(-t)").eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn integrate_examples() {
        let sq = f("pw(2; [0,1): 1; [1,2): 0)");
        assert!((sq.integrate(0.0, 2.0, 1e-10).unwrap() - 1.0).abs() < 1e-14);
        let ex2 = f("abs(sin(t)) - sin(t)");
        assert!((ex2.integrate(PI, 2.0 * PI, 1e-10).unwrap() - 4.0).abs() < 1e-13);
        let inv = f("1/t").with_domain_start(1e-9);
        assert!((inv.integrate(4.0, 8.0, 1e-10).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn integrate_reports_singularity() {
        let inv = f("1/t");
        assert!(matches!(inv.integrate(-1.0, 1.0, 1e-10), Err(IntegrateError::Singular { .. })));
        let inv = f("1/(t-3)");
        assert!(matches!(inv.integrate(0.0, 5.0, 1e-10), Err(IntegrateError::Singular { at }) if (at - 3.0).abs() < 1e-12));
    }

    #[test]
    fn integrate_falls_back_to_quadrature() {
        // exp(-t^2) has no closed form here
        let g = f("exp(-t*t)");
        let v = g.integrate(-6.0, 6.0, 1e-11).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sup_abs_examples() {
        assert_eq!(f("pw(2; [0,1): 1; [1,2): 0)").sup_abs(0.0, 10.0).unwrap(), 1.0);
        let s = f("abs(sin(t)) - sin(t)").sup_abs(0.0, 2.0 * PI).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(f("1/t").with_domain_start(1.0).sup_abs(1.0, 10.0).unwrap(), 1.0);
        assert_eq!(f("1/(t-2)").sup_abs(1.0, 3.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn sum_of_expressions_stays_symbolic() {
        let s = PiecewiseFn::sum(&[f("1/t").with_domain_start(1.0), f("0.5/t").with_domain_start(1.0)]);
        assert!(s.expr().is_some());
        assert_eq!(s.domain_start(), 1.0);
        assert!((s.integrate(1.0, 2.0, 1e-12).unwrap() - 1.5 * 2f64.ln()).abs() < 1e-14);
    }
}
