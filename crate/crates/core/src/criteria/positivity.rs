use serde::Serialize;

use super::context::Ctx;
use super::{CheckParams, Conclusion, Evidence, Status, Verdict, INV_E};
use crate::expr::limsup_estimate;
use crate::model::DelayEquation;

/// Slack for rounding on the non-strict `≤ 1/e` comparison.
const ROUNDING: f64 = 1e-12;

/// `∫_{max(h(t), t₀)}^t Σ aᵢ ≤ 1/e` for all `t ≥ t₀`, `h = minₖ hₖ`
/// (sup over the whole horizon, no margin) ⇒ positive fundamental function.
pub fn check_positivity_integral(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let ctx = Ctx::new(eq, p);
    let mut v = Verdict::new("positivity_integral");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    if !ctx.require_nonnegative(&mut v, &ctx.all_terms()) || !ctx.require_primitive(&mut v) {
        return v;
    }
    let g = |t: f64| ctx.between(eq.min_delay_at(t), t);
    let sup = limsup_estimate(g, ctx.t0, ctx.h, p.step);
    v.evidence("sup_min_delay_integral", sup);
    v.evidence("threshold", Evidence::new(INV_E, ctx.full()));
    if sup.value <= INV_E + ROUNDING {
        v.status = Status::Satisfied;
        v.conclude(Conclusion::FundamentalPositive, "min_delay_integral_below_inv_e", &["nonnegative_coefficients", "density_integrable"]);
    } else {
        v.status = Status::Violated;
    }
    v
}

/// Outcome of `max_{λ>0} λ − Σ Aₖ e^{λσₖ} ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharTest {
    /// Maximizer (or a witness when the function is unbounded above).
    pub lambda: f64,
    /// `λ − Σ Aₖ e^{λσₖ}` at `lambda`.
    pub value: f64,
    pub satisfied: bool,
}

/// Maximizes the concave `g(λ) = λ − Σ Aₖ e^{λσₖ}` over `λ > 0`.
/// Satisfied when `g(λ*) ≥ −1e-9` (the boundary case counts).
pub fn char_test(a: &[f64], sigma: &[f64]) -> CharTest {
    assert_eq!(a.len(), sigma.len());
    let g = |l: f64| l - a.iter().zip(sigma).map(|(&ak, &sk)| ak * (l * sk).exp()).sum::<f64>();
    let dg = |l: f64| 1.0 - a.iter().zip(sigma).map(|(&ak, &sk)| ak * sk * (l * sk).exp()).sum::<f64>();
    let total: f64 = a.iter().sum();
    if a.iter().zip(sigma).all(|(&ak, &sk)| ak == 0.0 || sk == 0.0) {
        // g(λ) = λ − ΣA grows without bound
        let lambda = total + 1.0;
        return CharTest { lambda, value: g(lambda), satisfied: true };
    }
    if dg(0.0) <= 0.0 {
        return CharTest { lambda: 0.0, value: g(0.0), satisfied: g(0.0) >= -1e-9 && total == 0.0 };
    }
    let mut hi = 1.0;
    while dg(hi) > 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if dg(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let value = g(lambda);
    CharTest { lambda, value, satisfied: value >= -1e-9 }
}

/// `∃λ > 0: λ ≥ Σ Aₖ e^{λσₖ}` with `Aₖ = sup aₖ`, `σₖ = sup (t − hₖ(t))` on the horizon.
pub fn check_positivity_char(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let ctx = Ctx::new(eq, p);
    let mut v = Verdict::new("positivity_char");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    let nonneg = ctx.require_nonnegative(&mut v, &ctx.all_terms());
    let bounded = ctx.bounded_delays(&mut v);
    if !nonneg || !bounded {
        return v;
    }
    let mut a = Vec::new();
    let mut sigma = Vec::new();
    for (k, term) in eq.terms().iter().enumerate() {
        let ak = term.coef.sup_abs(ctx.t0, ctx.h).unwrap_or(f64::INFINITY);
        let lag = limsup_estimate(|t| t - term.delay.value(t), ctx.t0, ctx.h, p.step);
        v.evidence(&format!("A[{k}]"), Evidence::new(ak, ctx.full()));
        v.evidence(&format!("sigma[{k}]"), lag);
        a.push(ak);
        sigma.push(lag.value.max(0.0));
    }
    if a.iter().any(|x| !x.is_finite()) {
        v.hypothesis("bounded_coefficients", false, false, "a coefficient is unbounded on the horizon");
        return v;
    }
    let c = char_test(&a, &sigma);
    v.evidence("lambda", Evidence::new(c.lambda, ctx.full()));
    v.evidence("char_value", Evidence::new(c.value, ctx.full()));
    if c.satisfied {
        v.status = Status::Satisfied;
        v.conclude(Conclusion::FundamentalPositive, "characteristic_inequality", &["nonnegative_coefficients", "bounded_delays"]);
    } else {
        v.status = Status::Violated;
    }
    v
}
