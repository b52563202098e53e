use super::context::{primitive, Ctx};
use super::report::run_all;
use super::{CheckParams, Conclusion, Evidence, Status, Verdict};
use crate::expr::PiecewiseFn;
use crate::model::{DelayEquation, Term};
use crate::proxy::{bounded_above, integral_growth, Growth};

/// `R` values tried when the caller gives none.
const R_SCAN: [f64; 8] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

/// Integrable coefficients: `∫^∞ Σ|aₖ| < ∞` makes every solution bounded and
/// rules out asymptotic stability. Evidence carries `A = exp(∫ Σ|aₖ|)` and the
/// first `t₀` whose tail is below `1/(2A)`, after which `X(t, t₀) ≥ 1/2`.
pub fn check_integrable(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let mut v = Verdict::new("integrable");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    let (t0, h) = (eq.t_start(), p.horizon);
    let abs = eq.abs_coefficient_sum();
    let Some(prim) = primitive(&abs, t0, h) else {
        v.hypothesis("density_integrable", false, false, "absolute coefficient sum not integrable on the horizon");
        return v;
    };
    let g = integral_growth(|t| prim.eval(t), t0, h);
    let beyond = abs.integrate(h, 2.0 * h - t0, 1e-12).unwrap_or(f64::INFINITY);
    let full = [t0, h];
    v.evidence("abs_integral", Evidence::new(prim.total(), full));
    v.evidence("abs_integral_beyond_horizon", Evidence::new(beyond, [h, 2.0 * h - t0]));
    v.evidence("increment_ratio", Evidence::new(g.increment_ratio, full));
    let converges = g.growth == Growth::Converges && beyond <= (0.75 * g.tail).max(1e-12);
    v.hypothesis(
        "abs_coefficients_integrable",
        converges,
        true,
        format!("{:?}, tail beyond horizon {beyond:e}", g.growth),
    );
    if g.growth == Growth::Diverges {
        v.status = Status::Violated;
        return v;
    }
    if !converges {
        return v;
    }
    v.status = Status::Satisfied;
    // geometric extrapolation of the increments past 2H
    let q = if g.increment_ratio.is_finite() { g.increment_ratio.clamp(0.0, 0.75) } else { 0.0 };
    let total = prim.total() + beyond + beyond * q / (1.0 - q);
    let a = total.exp();
    let target = total - 0.5 / a;
    let t_half = if target <= 0.0 { t0 } else { prim.inverse(target) };
    v.evidence("abs_integral_limit", Evidence::new(total, full));
    v.evidence("growth_constant", Evidence::new(a, full));
    v.evidence("t0_half", Evidence::new(t_half, full));
    v.conclude(Conclusion::NotAsymptoticallyStable, "integrable_coefficients", &["abs_coefficients_integrable"]);
    v
}

/// Necessary condition through the ordinary equation `ẏ + Σaₖ(t) y = 0`: it
/// is exponentially stable iff `liminf ∫_t^{t+R} Σaₖ > 0` for some `R`, and
/// asymptotic stability of the delay equation forces `∫^∞ Σaₖ = ∞`.
///
/// `Satisfied` means both hold (with the given `R`, or the first one found in
/// a scan). `Violated` means one fails for every `R` tried, so the delay
/// equation is not exponentially stable. A supplied `R` that fails gives
/// `Inconclusive`, with the scan result in the evidence.
pub fn check_ode_necessary(eq: &DelayEquation, p: &CheckParams) -> Verdict {
    let ctx = Ctx::new(eq, p);
    let mut v = Verdict::new("ode_necessary");
    if !v.require_model(eq, p.horizon) {
        return v;
    }
    if !ctx.require_nonnegative(&mut v, &ctx.all_terms()) || !ctx.require_primitive(&mut v) {
        return v;
    }
    let diverges = ctx.density_diverges(&mut v);
    let window_ok = |r: f64| ctx.liminf(|t| ctx.between(t, t + r));
    let scan = || R_SCAN.iter().copied().find(|&r| window_ok(r).passed);
    let found = match p.big_r {
        Some(r) => {
            let l = window_ok(r);
            v.evidence("window_integral_liminf", l.late);
            v.hypothesis("window_integral_liminf_positive", l.passed, true, format!("R = {r}: late min {:e}", l.late.value));
            if !l.passed {
                if let Some(s) = scan() {
                    v.evidence("scanned_r", Evidence::new(s, ctx.window()));
                }
                return v;
            }
            Some(r)
        }
        None => {
            let s = scan();
            v.hypothesis("window_integral_liminf_positive", s.is_some(), true, format!("scanned R in {R_SCAN:?}: {s:?}"));
            s
        }
    };
    let Some(r) = found.filter(|_| diverges) else {
        v.status = Status::Violated;
        v.route = "not_exponentially_stable".into();
        return v;
    };
    v.status = Status::Satisfied;
    v.evidence("r", Evidence::new(r, ctx.window()));
    let grid: Vec<f64> = (0..=256).map(|i| ctx.t0 + (ctx.h - ctx.t0) * i as f64 / 256.0).collect();
    let undelayed = (0..eq.len()).all(|k| eq.is_undelayed(k, &grid));
    if v.hypothesis("all_terms_undelayed", undelayed, false, "equation is an ordinary one") {
        v.conclude(
            Conclusion::ExponentiallyStable,
            "ode_window_integral",
            &["nonnegative_coefficients", "density_integral_diverges", "window_integral_liminf_positive", "all_terms_undelayed"],
        );
    }
    v
}

/// Integrable perturbation `Σ bₖ(t) x(gₖ(t))` of an exponentially stable
/// equation with bounded extra delays keeps exponential stability.
pub fn check_perturbation(base: &DelayEquation, extra: &[Term], p: &CheckParams) -> Verdict {
    let mut v = Verdict::new("perturbation");
    if !v.require_model(&base.with_terms(extra), p.horizon) {
        return v;
    }
    let report = run_all(base, p);
    let certified = report.strongest == Conclusion::ExponentiallyStable;
    v.hypothesis("base_exponentially_stable", certified, false, format!("base: {}", report.provenance));
    if !certified {
        return v;
    }
    let (t0, h) = (base.t_start(), p.horizon);
    let abs = PiecewiseFn::sum(&extra.iter().map(|k| k.coef.clone().with_domain_start(t0).abs()).collect::<Vec<_>>());
    let Some(prim) = primitive(&abs, t0, h) else {
        v.hypothesis("perturbation_integrable", false, false, "not integrable on the horizon");
        return v;
    };
    let g = integral_growth(|t| prim.eval(t), t0, h);
    v.evidence("perturbation_integral", Evidence::new(prim.total(), [t0, h]));
    let integrable = v.hypothesis("perturbation_integrable", g.growth == Growth::Converges, true, format!("{:?}", g.growth));
    let w0 = p.window_start.unwrap_or(t0 + 0.2 * (h - t0)).clamp(t0, h);
    let lag = |t: f64| extra.iter().map(|k| t - k.delay.value(t)).fold(0.0, f64::max);
    let b = bounded_above(lag, w0, h, p.step);
    v.evidence("perturbation_max_lag", b.late);
    let bounded = v.hypothesis("perturbation_bounded_delays", b.passed, true, format!("late max lag {:e}", b.late.value));
    if integrable && bounded {
        v.status = Status::Satisfied;
        let route = format!("integrable_perturbation<{}>", report.provenance);
        v.conclude(
            Conclusion::ExponentiallyStable,
            &route,
            &["base_exponentially_stable", "perturbation_integrable", "perturbation_bounded_delays"],
        );
    }
    v
}
