use super::context::Ctx;
use super::positivity::{check_positivity_char, check_positivity_integral};
use super::{CheckParams, Conclusion, Evidence, Status, Verdict};
use crate::expr::PiecewiseFn;
use crate::model::{sample_grid, sign_pattern, DelayEquation};
use crate::solver::fundamental;

/// Nonnegative undelayed terms if there are any, otherwise every nonnegative term.
pub(crate) fn default_index_set(eq: &DelayEquation, horizon: f64) -> Vec<usize> {
    let signs = sign_pattern(eq, horizon);
    let grid = sample_grid(eq, horizon, (horizon - eq.t_start()) / 256.0);
    let undelayed: Vec<usize> = signs.index_set.iter().copied().filter(|&k| eq.is_undelayed(k, &grid)).collect();
    if undelayed.is_empty() {
        signs.index_set
    } else {
        undelayed
    }
}

/// Dominance of a nonnegative group `I`:
/// `limsup Σ_{k∉I}|aₖ| / Σ_{k∈I} aₖ < 1`, with the numerator required to vanish
/// wherever the denominator does, and the equation restricted to `I`
/// eventually having a positive fundamental function.
///
/// With bounded delays and `liminf Σ_I aₖ > 0`: exponentially stable.
/// Otherwise, with `∫^∞ Σ_I aₖ = ∞` and bounded `∫_{hₖ}^t Σ_I aᵢ`: solutions
/// tend to zero; a caller-supplied window `R` with `liminf ∫_t^{t+R} Σ_I aₖ > 0`
/// adds an exponential estimate, and bounded delays then exponential stability.
pub fn check_dominant_positive(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let mut v = Verdict::new("dominant_positive");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    let index = p.index_set.clone().unwrap_or_else(|| default_index_set(eq, p.horizon));
    let valid = !index.is_empty() && index.iter().all(|&k| k < eq.len());
    if !v.hypothesis("index_set_valid", valid, false, format!("I = {index:?}")) {
        return v;
    }
    let group: Vec<PiecewiseFn> = index.iter().map(|&k| eq.terms()[k].coef.clone()).collect();
    let ctx = Ctx::with_density(eq, p, PiecewiseFn::sum(&group));
    if !ctx.require_nonnegative(&mut v, &index) || !ctx.require_primitive(&mut v) {
        return v;
    }
    let others: Vec<usize> = (0..eq.len()).filter(|k| !index.contains(k)).collect();
    let ratio = |t: f64| {
        let num: f64 = others.iter().map(|&k| eq.terms()[k].coef.value(t).abs()).sum();
        let den = ctx.density.value(t);
        if den < 1e-14 {
            if num <= 1e-14 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / den
        }
    };
    let lim = ctx.limsup(ratio);
    v.evidence("ratio_limsup", lim);
    v.evidence("threshold", Evidence::new(1.0, ctx.window()));
    let clean = v.hypothesis(
        "exceptional_set_clean",
        lim.value.is_finite(),
        true,
        "other terms vanish wherever the dominant group does",
    );
    if !(clean && lim.value < 1.0 - p.margin) {
        v.status = Status::Violated;
        return v;
    }
    v.status = Status::Satisfied;

    let positive = subequation_positive(eq, &index, &ctx, &mut v);
    let bounded = ctx.bounded_delays(&mut v);
    let liminf = ctx.density_liminf(&mut v);
    let mut needs = vec![
        "index_set_valid",
        "nonnegative_coefficients",
        "density_integrable",
        "exceptional_set_clean",
        "subequation_fundamental_positive",
    ];
    if !positive {
        return v;
    }
    if bounded && liminf {
        needs.extend(["bounded_delays", "density_liminf_positive"]);
        v.conclude(Conclusion::ExponentiallyStable, "dominant_group+density_liminf+bounded_delays", &needs);
        return v;
    }
    let diverges = ctx.density_diverges(&mut v);
    let delay_integrals = ctx.bounded_delay_integrals(&mut v);
    if !(diverges && delay_integrals) {
        return v;
    }
    needs.extend(["density_integral_diverges", "bounded_delay_integral"]);
    let mut route = "dominant_group+divergent_density".to_string();
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

/// Eventual positivity of the fundamental function of the `I`-equation,
/// started at the window: first by the two positivity tests, then by direct
/// simulation of two slices.
fn subequation_positive(eq: &DelayEquation, index: &[usize], ctx: &Ctx, v: &mut Verdict) -> bool {
    let terms = index.iter().map(|&k| eq.terms()[k].clone()).collect();
    let Ok(sub) = DelayEquation::new(terms, ctx.w0) else {
        return v.hypothesis("subequation_fundamental_positive", false, false, "empty group");
    };
    let mut sp = ctx.p.clone();
    sp.window_start = None;
    if check_positivity_integral(&sub, &sp).status == super::Status::Satisfied {
        return v.hypothesis("subequation_fundamental_positive", true, false, "integral positivity test");
    }
    if check_positivity_char(&sub, &sp).status == super::Status::Satisfied {
        return v.hypothesis("subequation_fundamental_positive", true, false, "characteristic positivity test");
    }
    let starts = [ctx.w0, 0.5 * (ctx.w0 + ctx.h)];
    let mut min = f64::INFINITY;
    for s in starts {
        match fundamental(&sub, s, ctx.h, &ctx.p.ctrl) {
            Ok(x) => min = min.min(x.trajectory.min_between(s, ctx.h)),
            Err(e) => return v.hypothesis("subequation_fundamental_positive", false, false, format!("solver: {e}")),
        }
    }
    v.evidence("subequation_fundamental_min", Evidence::new(min, ctx.window()));
    v.hypothesis("subequation_fundamental_positive", min > 0.0, true, format!("simulated slices, min {min:e}"))
}
