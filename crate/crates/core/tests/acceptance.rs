//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{E, LN_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use ddestab::criteria::*;
use ddestab::estimator::{classify, classify_slices, fit_exponential, Class, EstimatorError};
use ddestab::expr::PiecewiseFn;
use ddestab::model::{DelayEquation, InitialData};
use ddestab::solver::{
    ensemble_decay, fundamental, fundamental_slices, random_histories, representation_check, solve, StepControl, Trajectory,
};
use ddestab::transform::{build_rescaling, pullback_check, transform_equation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn eq(terms: &[(&str, &str)], t0: f64) -> DelayEquation {
    DelayEquation::parse(terms, t0).unwrap()
}

fn constant(src: &str, x0: f64, t0: f64) -> InitialData {
    InitialData::new(PiecewiseFn::parse(src).unwrap().with_domain_start(f64::NEG_INFINITY), x0, t0)
}

fn ev(v: &Verdict, name: &str) -> Result<f64, String> {
    v.evidence.get(name).map(|e| e.value).ok_or_else(|| format!("{} has no evidence {name}", v.id))
}

fn solved(runs: Vec<Result<Trajectory, ddestab::solver::SolveError>>) -> Result<Vec<Trajectory>, String> {
    runs.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())
}

fn example_one() -> Outcome {
    let started = Instant::now();
    let e = eq(&[("pw(2; [0,1): 1; [1,2): 0)", "t")], 0.0);
    let ctrl = StepControl::default();
    // ∫₀ᵗ a = ⌊t/2⌋ + min(t mod 2, 1)
    let int_a = |t: f64| (t / 2.0).floor() + (t % 2.0).min(1.0);
    let x = fundamental(&e, 0.0, 40.0, &ctrl).map_err(|e| e.to_string())?;
    let err = (0..=4000).map(|i| i as f64 * 0.01).map(|t| (x.value(t) - (-int_a(t)).exp()).abs()).fold(0.0, f64::max);
    ensure!(err <= 1e-8, "X(t,0) off by {err:e}");

    let starts: Vec<f64> = (0..20).map(|i| 0.25 * i as f64).collect();
    let slices = fundamental_slices(&e, &starts, 40.0, &ctrl).map_err(|e| e.to_string())?;
    let fit = fit_exponential(&slices).map_err(|e| e.to_string())?;
    ensure!((0.48..=0.52).contains(&fit.lambda), "fitted rate {}", fit.lambda);
    for sl in &slices {
        for i in 0..=400 {
            let t = sl.s + 0.1 * i as f64;
            if t > 40.0 {
                break;
            }
            let bound = E * (-0.5 * (t - sl.s)).exp();
            ensure!(sl.value(t).abs() <= bound, "|X({t},{})| = {} above {bound}", sl.s, sl.value(t));
        }
    }

    let mut p = CheckParams::new(200.0, 1e-2);
    p.big_r = Some(1.0);
    let r1 = ev(&check_ode_necessary(&e, &p), "window_integral_liminf")?;
    ensure!(r1.abs() < 1e-9, "R=1 liminf {r1}");
    p.big_r = Some(2.0);
    let v = check_ode_necessary(&e, &p);
    let r2 = ev(&v, "window_integral_liminf")?;
    ensure!(r2 >= 1.0 - 2.0 * p.step, "R=2 liminf {r2}");
    ensure!(v.conclusion == Conclusion::ExponentiallyStable, "R=2 conclusion {:?}", v.conclusion);
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2} s");
    Ok(format!("max |X - exp(-∫a)| {err:.1e}, rate {:.4}, K {:.3}, liminf R=1 {r1:.1e} R=2 {r2:.4}, {secs:.2} s", fit.lambda, fit.k))
}

fn example_two() -> Outcome {
    let family = |alpha: f64| eq(&[(&format!("{alpha}*(abs(sin(t)) - sin(t))"), "t - pi")], 0.0);
    let p = CheckParams::new(400.0, 1e-2);
    let v = check_one_plus_one_over_e(&family(0.3), &p);
    let w = ev(&v, "weighted_limsup")?;
    ensure!((w - 1.2).abs() <= 0.01, "weighted evidence {w}");
    ensure!(v.conclusion == Conclusion::AsymptoticallyStable, "conclusion {:?}", v.conclusion);

    let e = family(0.3);
    let lag = (0..100).map(|i| 0.37 * i as f64).map(|t| t - e.terms()[0].delay.value(t)).fold(0.0, f64::max);
    ensure!((lag - PI).abs() < 1e-12, "lag {lag}");
    let runs = solved(ensemble_decay(&e, &random_histories(5, 0.0, 7), 500.0, &StepControl::default()))?;
    let finals: Vec<f64> = runs.iter().map(|r| r.last_value().abs()).collect();
    let worst = finals.iter().copied().fold(0.0, f64::max);
    ensure!(worst < 1e-2, "|x(500)| up to {worst:e}");

    let v4 = check_one_plus_one_over_e(&family(0.4), &p);
    ensure!(v4.status == Status::Violated, "alpha 0.4 status {:?}", v4.status);
    Ok(format!("evidence {w:.5} via {}, worst |x(500)| {worst:.1e}, alpha 0.4 Violated ({:.4})", v.route, ev(&v4, "weighted_limsup")?))
}

fn example_three_eq(alpha: f64, beta: f64) -> DelayEquation {
    eq(&[(&format!("{alpha}/t"), "t/2 - sin(t)"), (&format!("{beta}/t"), "t/2")], 1.0)
}

fn example_three() -> Outcome {
    let h = 4000.0;
    let e = example_three_eq(1.0, 0.9);
    let p = CheckParams::new(h, 1e-2);
    let v = check_one_plus_one_over_e(&e, &p);
    let w = ev(&v, "weighted_limsup")?;
    let expect = 1.9 * LN_2;
    ensure!((w - expect).abs() <= 0.005, "weighted evidence {w} vs {expect}");
    ensure!(v.conclusion.is_stable(), "original conclusion {:?}", v.conclusion);

    // exponential stability in the rescaled time s = ∫ Σaₖ
    let r = build_rescaling(&e, h, false).map_err(|e| e.to_string())?;
    let teq = transform_equation(&e, &r).map_err(|e| e.to_string())?;
    let mut q = CheckParams::new(r.p(h), 1e-4);
    q.window_start = Some(r.p(0.2 * h));
    let vt = check_one_plus_one_over_e(&teq, &q);
    let wt = ev(&vt, "weighted_limsup")?;
    ensure!(vt.conclusion == Conclusion::ExponentiallyStable, "rescaled conclusion {:?} ({})", vt.conclusion, vt.route);
    ensure!((wt - expect).abs() <= 0.005, "rescaled evidence {wt}");

    let gap = pullback_check(&e, &r, &constant("1", 1.0, 1.0), 60.0, &StepControl::default()).map_err(|e| e.to_string())?;
    ensure!(gap <= 1e-4, "pullback mismatch {gap:e}");

    let v2 = check_one_plus_one_over_e(&example_three_eq(1.0, 1.0), &p);
    ensure!(v2.status == Status::Violated, "alpha+beta=2 status {:?}", v2.status);
    Ok(format!(
        "evidence {w:.4} ({:?} via {}), rescaled {wt:.4} ExponentiallyStable, pullback {gap:.1e}, alpha+beta=2 Violated ({:.4})",
        v.conclusion,
        v.route,
        ev(&v2, "weighted_limsup")?
    ))
}

fn example_four() -> Outcome {
    let e = eq(&[("1/t", "t"), ("0.5/t", "t/2")], 1.0);
    let v = check_dominant_positive(&e, &CheckParams::new(1000.0, 1e-2));
    let ratio = ev(&v, "ratio_limsup")?;
    ensure!(v.status == Status::Satisfied, "status {:?}", v.status);
    ensure!((ratio - 0.5).abs() <= 1e-9, "ratio {ratio}");
    let started = Instant::now();
    let runs = solved(ensemble_decay(&e, &random_histories(5, 1.0, 11), 1e4, &StepControl::default()))?;
    let c = classify(&runs).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    ensure!(c.class == Class::Decaying, "ensemble {:?} {:?}", c.class, c.tail_ratios);
    ensure!(secs < 60.0, "ensemble took {secs:.1} s");
    let worst = c.tail_ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!("ratio {ratio:.12}, {:?}, ensemble Decaying (tail ratio {worst:.1e}) in {secs:.2} s", v.conclusion))
}

fn integrable_coefficient() -> Outcome {
    let e = eq(&[("exp(-t)", "t - 1")], 0.0);
    let v = check_integrable(&e, &CheckParams::new(100.0, 1e-2));
    ensure!(v.status == Status::Satisfied, "status {:?}", v.status);
    let sl = fundamental(&e, 2.0, 50.0, &StepControl::default()).map_err(|e| e.to_string())?;
    let low = (0..=4800).map(|i| sl.value(2.0 + 0.01 * i as f64)).fold(f64::INFINITY, f64::min).min(sl.trajectory.min_between(2.0, 50.0));
    ensure!(low >= 0.5, "slice dips to {low}");
    let c = classify_slices(std::slice::from_ref(&sl)).map_err(|e| e.to_string())?;
    ensure!(c.class == Class::Bounded, "class {:?}", c.class);
    let fit = fit_exponential(std::slice::from_ref(&sl));
    ensure!(matches!(fit, Err(EstimatorError::NotDecaying { .. })), "fit {fit:?}");
    Ok(format!("{:?}, min X(t,2) {low:.4}, class Bounded, fit NotDecaying", v.conclusion))
}

fn representation() -> Outcome {
    let ctrl = StepControl::default();
    let ode = eq(&[("1", "t")], 0.0).with_forcing(PiecewiseFn::parse("1").unwrap());
    let init = constant("0", 0.0, 0.0);
    let x = solve(&ode, &init, 5.0, &ctrl).map_err(|e| e.to_string())?;
    let analytic = (0..=500).map(|i| 0.01 * i as f64).map(|t| (x.value(t) - (1.0 - (-t).exp())).abs()).fold(0.0, f64::max);
    ensure!(analytic <= 1e-6, "ODE off analytic by {analytic:e}");
    let r1 = representation_check(&ode, &init, 5.0, &ctrl).map_err(|e| e.to_string())?;
    ensure!(r1 <= 1e-6, "ODE residual {r1:e}");

    let dde = eq(&[("1", "t - 1")], 0.0);
    let init = constant("1", 1.0, 0.0);
    let r2 = representation_check(&dde, &init, 4.0, &ctrl).map_err(|e| e.to_string())?;
    ensure!(r2 <= 1e-5, "delay residual {r2:e}");
    let y = solve(&dde, &init, 4.0, &ctrl).map_err(|e| e.to_string())?;
    ensure!(y.value(1.0).abs() < 1e-10 && (y.value(2.0) + 0.5).abs() < 1e-10, "x(1) {} x(2) {}", y.value(1.0), y.value(2.0));
    Ok(format!("ODE residual {r1:.1e} (analytic {analytic:.1e}), delay residual {r2:.1e}, x(1) = 0, x(2) = -0.5"))
}

/// Random nonnegative coefficients `cₖ(1 + bₖ sin(ωₖt + ψₖ))` with delays
/// `t − τₖ(1 + 0.3 cos(νₖt))`, rescaled so `sup Σaₖ · max lag` equals `target`.
fn random_equation(rng: &mut ChaCha8Rng, target: f64) -> (DelayEquation, Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(1..=3);
    let mut raw = Vec::new();
    for _ in 0..n {
        let c: f64 = rng.gen_range(0.2..1.0);
        let b: f64 = rng.gen_range(0.0..0.9);
        let w: f64 = rng.gen_range(0.3..3.0);
        let psi: f64 = rng.gen_range(0.0..6.0);
        let tau: f64 = rng.gen_range(0.2..1.5);
        let nu: f64 = rng.gen_range(0.2..2.0);
        raw.push((c, b, w, psi, tau, nu));
    }
    let sup_sum: f64 = raw.iter().map(|r| r.0 * (1.0 + r.1)).sum();
    let max_lag = raw.iter().map(|r| 1.3 * r.4).fold(0.0, f64::max);
    let scale = target / (sup_sum * max_lag);
    let terms: Vec<(String, String)> = raw
        .iter()
        .map(|&(c, b, w, psi, tau, nu)| {
            (format!("{}*(1 + {b}*sin({w}*t + {psi}))", c * scale), format!("t - {tau}*(1 + 0.3*cos({nu}*t))"))
        })
        .collect();
    let refs: Vec<(&str, &str)> = terms.iter().map(|(a, d)| (a.as_str(), d.as_str())).collect();
    let amps = raw.iter().map(|r| r.0 * scale * (1.0 + r.1)).collect();
    let lags = raw.iter().map(|r| 1.3 * r.4).collect();
    (eq(&refs, 0.0), amps, lags)
}

fn slices_positive(e: &DelayEquation, horizon: f64) -> Result<f64, String> {
    let starts = [0.0, 1.7, 4.2];
    let slices = fundamental_slices(e, &starts, horizon, &StepControl::default()).map_err(|e| e.to_string())?;
    Ok(slices.iter().map(|s| s.trajectory.min_between(s.s, horizon)).fold(f64::INFINITY, f64::min))
}

fn positivity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let horizon = 30.0;
    let p = CheckParams::new(horizon, 1e-2);
    let (mut ok6, mut ok7, mut min6, mut min7) = (0, 0, f64::INFINITY, f64::INFINITY);
    for _ in 0..20 {
        let (e, _, _) = random_equation(&mut rng, 0.95 / E);
        let v = check_positivity_integral(&e, &p);
        ensure!(v.status == Status::Satisfied, "integral condition not met: {:.4}", ev(&v, "sup_min_delay_integral")?);
        let m = slices_positive(&e, horizon)?;
        min6 = min6.min(m);
        ok6 += usize::from(m > 0.0);
    }
    let mut beyond = 0;
    for _ in 0..20 {
        // same shape, scaled up while the characteristic inequality still holds
        let seed: u64 = rng.gen();
        let make = |target: f64| random_equation(&mut ChaCha8Rng::seed_from_u64(seed), target);
        let mut target = 0.3;
        while char_test(&make(target * 1.05).1, &make(target * 1.05).2).satisfied && target < 10.0 {
            target *= 1.05;
        }
        let (e, a, s) = make(target);
        ensure!(char_test(&a, &s).satisfied, "characteristic inequality fails");
        let v = check_positivity_char(&e, &p);
        ensure!(v.status == Status::Satisfied, "characteristic check {:?}", v.status);
        beyond += usize::from(check_positivity_integral(&e, &p).status == Status::Violated);
        let m = slices_positive(&e, horizon)?;
        min7 = min7.min(m);
        ok7 += usize::from(m > 0.0);
    }
    ensure!(ok6 == 20 && ok7 == 20, "positive slices {ok6}/20 and {ok7}/20");
    Ok(format!("integral condition 20/20 (min X {min6:.2e}), characteristic condition 20/20 (min X {min7:.2e}, {beyond} beyond the integral test)"))
}

fn transform_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let horizon = 20.0;
    let (mut worst_sum, mut worst_gap) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let target = rng.gen_range(0.5..3.0);
        let (e, _, _) = random_equation(&mut rng, target);
        let r = build_rescaling(&e, horizon, false).map_err(|e| e.to_string())?;
        let teq = transform_equation(&e, &r).map_err(|e| e.to_string())?;
        for i in 0..=400 {
            let s = r.p(horizon) * i as f64 / 400.0;
            let sum: f64 = teq.terms().iter().map(|k| k.coef.value(s)).sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
        }
        let x0: f64 = rng.gen_range(-1.0..1.0);
        let init = constant(&format!("{x0} + 0.5*cos(t)"), x0 + 0.5, 0.0);
        worst_gap = worst_gap.max(pullback_check(&e, &r, &init, horizon, &StepControl::default()).map_err(|e| e.to_string())?);
    }
    ensure!(worst_sum <= 1e-12, "coefficient sum off by {worst_sum:e}");
    ensure!(worst_gap <= 1e-4, "pullback mismatch {worst_gap:e}");
    Ok(format!("max |Σb - 1| {worst_sum:.1e}, max pullback mismatch {worst_gap:.1e}"))
}

fn soundness_sweep() -> Outcome {
    let horizon = 60.0;
    let p = CheckParams::new(horizon, 1e-2);
    let ctrl = StepControl::default();
    let (mut stable_cells, mut necessary_fails, mut cells) = (0, 0, 0);
    for i in 0..10 {
        for j in 0..10 {
            let alpha = 0.2 * i as f64;
            let tau = 0.2 + 0.2 * j as f64;
            let e = eq(&[(&format!("{alpha}"), &format!("t - {tau}"))], 0.0);
            let report = run_all(&e, &p);
            let runs = solved(ensemble_decay(&e, &random_histories(3, 0.0, (10 * i + j) as u64), horizon, &ctrl))?;
            let class = classify(&runs).map_err(|e| e.to_string())?.class;
            cells += 1;
            if report.strongest.is_stable() {
                stable_cells += 1;
                ensure!(class != Class::Growing, "alpha {alpha} tau {tau}: {:?} but ensemble Growing", report.strongest);
            }
            let necessary = check_ode_necessary(&e, &p);
            if necessary.status == Status::Violated {
                necessary_fails += 1;
                let slices = fundamental_slices(&e, &[0.0, 1.0, 2.0], horizon, &ctrl).map_err(|e| e.to_string())?;
                let decaying = classify_slices(&slices).map_err(|e| e.to_string())?.class == Class::Decaying;
                if let Ok(fit) = fit_exponential(&slices) {
                    ensure!(!(decaying && fit.lambda > p.margin), "alpha {alpha} tau {tau}: necessary condition fails but rate {}", fit.lambda);
                }
            }
        }
    }
    Ok(format!("{cells} cells, {stable_cells} with a stability conclusion and none Growing, {necessary_fails} failing the necessary condition"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("example 1: square-wave ODE", example_one),
        ("example 2: weighted delay test", example_two),
        ("example 3: rescaled time", example_three),
        ("example 4: dominant positive part", example_four),
        ("integrable coefficient", integrable_coefficient),
        ("representation formula", representation),
        ("positivity suite", positivity_suite),
        ("transform invariants", transform_invariants),
        ("soundness sweep", soundness_sweep),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name} [{secs:.2} s]: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name} [{secs:.2} s]: {why}", n + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
