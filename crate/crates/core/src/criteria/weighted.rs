use super::context::Ctx;
use super::{CheckParams, Conclusion, Evidence, Status, Verdict, INV_E, ONE_PLUS_INV_E};
use crate::model::DelayEquation;

/// `Σₖ aₖ(t)/Σᵢ aᵢ(t) · ∫_{hₖ(t)}^t Σᵢ aᵢ`, zero where the density vanishes.
fn weighted(ctx: &Ctx, t: f64) -> f64 {
    let d = ctx.density.value(t);
    if d <= 0.0 {
        return 0.0;
    }
    let ct = ctx.cum(t);
    ctx.eq.terms().iter().map(|k| k.coef.value(t) / d * (ct - ctx.cum(k.delay.value(t)))).sum()
}

/// The weighted-delay test `limsup Σ aₖ/Σaᵢ ∫_{hₖ}^t Σaᵢ < 1 + 1/e`, routed by
/// which further hypotheses hold:
///
/// * positive lower density and bounded delays: exponentially stable;
/// * divergent density integral, bounded delay integrals and nonvanishing
///   density (via the time change `s = ∫ Σaₖ`): asymptotically stable;
/// * divergent density integral and the same bound for the smallest delay
///   alone: asymptotically stable, with no condition on zeros of the density.
///
/// In the last two routes a caller-supplied window `R` with
/// `liminf ∫_t^{t+R} Σaₖ > 0` adds an exponential estimate of the fundamental
/// function, and bounded delays then give exponential stability.
pub fn check_one_plus_one_over_e(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let ctx = Ctx::new(eq, p);
    let mut v = Verdict::new("one_plus_one_over_e");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    if !ctx.require_nonnegative(&mut v, &ctx.all_terms()) || !ctx.require_primitive(&mut v) {
        return v;
    }
    let w13 = ctx.limsup(|t| weighted(&ctx, t));
    let w14 = ctx.limsup(|t| ctx.between(eq.min_delay_at(t), t));
    v.evidence("weighted_limsup", w13);
    v.evidence("min_delay_limsup", w14);
    v.evidence("threshold", Evidence::new(ONE_PLUS_INV_E, ctx.window()));
    let thr = ONE_PLUS_INV_E - p.margin;
    if !(w13.value < thr) {
        v.status = Status::Violated;
        return v;
    }
    v.status = Status::Satisfied;

    let base = ["nonnegative_coefficients", "density_integrable"];
    let liminf = ctx.density_liminf(&mut v);
    let bounded = ctx.bounded_delays(&mut v);
    if liminf && bounded {
        let needs = [&base[..], &["density_liminf_positive", "bounded_delays"]].concat();
        v.conclude(Conclusion::ExponentiallyStable, "weighted_delay+density_liminf+bounded_delays", &needs);
        return v;
    }
    let diverges = ctx.density_diverges(&mut v);
    let delay_integrals = ctx.bounded_delay_integrals(&mut v);
    let nonvanishing = ctx.density_nonvanishing(&mut v);
    let min_delay = v.hypothesis(
        "min_delay_integral_below_threshold",
        w14.value < thr,
        true,
        format!("limsup {:.6} vs {:.6}", w14.value, ONE_PLUS_INV_E),
    );
    let (route, mut needs) = if diverges && delay_integrals && nonvanishing {
        ("rescaled_weighted_delay", vec!["density_integral_diverges", "bounded_delay_integral", "density_nonvanishing"])
    } else if diverges && min_delay {
        ("regularized_min_delay", vec!["density_integral_diverges", "min_delay_integral_below_threshold"])
    } else {
        return v;
    };
    needs.extend(base);
    let mut route = route.to_string();
    let mut conclusion = Conclusion::AsymptoticallyStable;
    if ctx.window_integral_liminf(&mut v, "window_integral_liminf_positive") == Some(true) {
        needs.push("window_integral_liminf_positive");
        route.push_str("+exponential_estimate");
        v.evidence("fundamental_exponential_estimate", Evidence::new(1.0, ctx.window()));
        if bounded {
            needs.push("bounded_delays");
            route.push_str("+bounded_delays");
            conclusion = Conclusion::ExponentiallyStable;
        }
    }
    v.conclude(conclusion, &route, &needs);
    v
}

/// The shifted test `limsup Σ aₖ/Σaᵢ |∫_{hₖ}^{r} Σaᵢ| < 1` with `∫_r^t Σaᵢ ≤ 1/e`,
/// positive lower density and bounded delays ⇒ exponentially stable.
/// Without a caller-supplied `r`, `r(t)` solves `∫_{r(t)}^t Σaᵢ = 1/e`.
pub fn check_one_over_e_shift(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let ctx = Ctx::new(eq, p);
    let mut v = Verdict::new("one_over_e_shift");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    if !ctx.require_nonnegative(&mut v, &ctx.all_terms()) || !ctx.require_primitive(&mut v) {
        return v;
    }
    let liminf = ctx.density_liminf(&mut v);
    let bounded = ctx.bounded_delays(&mut v);
    let prim = ctx.prim.as_ref().expect("checked above");
    let mut needs = vec!["nonnegative_coefficients", "density_integrable", "density_liminf_positive", "bounded_delays"];

    let r_of = |t: f64| -> f64 {
        match &p.r {
            Some(r) => r.value(t),
            None => prim.inverse(ctx.cum(t) - INV_E),
        }
    };
    if let Some(r) = &p.r {
        let above = ctx.limsup(|t| r.value(t) - t);
        v.hypothesis("r_below_t", above.value <= 0.0, true, format!("max r(t) - t = {:e}", above.value));
        let shift = ctx.limsup(|t| ctx.between(r.value(t), t));
        v.evidence("r_integral_sup", shift);
        v.hypothesis("r_integral_below_inv_e", shift.value <= INV_E + 1e-12, true, format!("sup {:.6}", shift.value));
        needs.extend(["r_below_t", "r_integral_below_inv_e"]);
    } else {
        let enough = ctx.cum(ctx.w0) >= INV_E;
        let detail = if enough { "r(t) solves the 1/e equation on the window" } else { "density too small to build r(t)" };
        if !v.hypothesis("r_constructed", enough, false, detail) {
            return v;
        }
        needs.push("r_constructed");
    }

    let value = ctx.limsup(|t| {
        let d = ctx.density.value(t);
        if d <= 0.0 {
            return 0.0;
        }
        let cr = ctx.cum(r_of(t));
        eq.terms().iter().map(|k| k.coef.value(t) / d * (cr - ctx.cum(k.delay.value(t))).abs()).sum()
    });
    v.evidence("shifted_limsup", value);
    v.evidence("threshold", Evidence::new(1.0, ctx.window()));
    if !(value.value < 1.0 - p.margin) {
        v.status = Status::Violated;
        return v;
    }
    v.status = Status::Satisfied;
    if liminf && bounded && v.hypotheses.iter().filter(|h| needs.contains(&h.name.as_str())).all(|h| h.passed) {
        v.conclude(Conclusion::ExponentiallyStable, "shifted_weighted_delay+density_liminf+bounded_delays", &needs);
    }
    v
}
