//! Dense-output integration of delay equations, fundamental functions and
//! the variation-of-constants oracle.

mod integrate;
mod trajectory;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{quad::simpson_samples, Expr, PiecewiseFn};
use crate::model::{DelayEquation, InitialData};

pub use integrate::solve;
pub use trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("step size fell below {step:e} at t = {t}")]
    StepUnderflow { t: f64, step: f64 },
    #[error("solution is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("end time {t_end} must exceed the initial time {t0}")]
    Horizon { t0: f64, t_end: f64 },
    #[error("initial time {t0} precedes the equation start {t_start}")]
    InitialTime { t0: f64, t_start: f64 },
    #[error("invalid step control: {0}")]
    Control(&'static str),
}

/// Step-size policy for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub max_step: f64,
    /// Accepted steps satisfy `|ẋ − rhs| ≤ res_tol·(1 + |x| + |ẋ|)` at the step midpoint.
    pub res_tol: f64,
    pub min_step: f64,
    /// Depth to which discontinuities are propagated through the delays.
    pub max_level: u8,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { max_step: 0.01, res_tol: 1e-8, min_step: 1e-12, max_level: 4 }
    }
}

impl StepControl {
    pub fn with_max_step(max_step: f64) -> Self {
        Self { max_step, ..Self::default() }
    }

    /// `max_step = 0.01·min(1, τ)` with `τ` the smallest positive lag `t − hₖ(t)` seen on the horizon.
    pub fn for_equation(eq: &DelayEquation, horizon: f64) -> Self {
        let t0 = eq.t_start();
        let n = 2048;
        let mut lag = f64::INFINITY;
        for term in eq.terms() {
            for i in 0..=n {
                let t = t0 + (horizon - t0) * i as f64 / n as f64;
                let l = t - term.delay.value(t);
                if l > 1e-10 {
                    lag = lag.min(l);
                }
            }
        }
        Self::with_max_step(0.01 * lag.min(1.0))
    }

    fn check(&self) -> Result<(), SolveError> {
        if !(self.max_step > 0.0) {
            return Err(SolveError::Control("max_step must be positive"));
        }
        if !(self.res_tol > 0.0) {
            return Err(SolveError::Control("res_tol must be positive"));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.max_step) {
            return Err(SolveError::Control("min_step must lie in (0, max_step]"));
        }
        Ok(())
    }
}

/// `t ↦ X(t, s)`.
#[derive(Debug, Clone)]
pub struct FundamentalSlice {
    pub s: f64,
    pub trajectory: Trajectory,
}

impl FundamentalSlice {
    /// `X(t, s)`, zero for `t < s`.
    pub fn value(&self, t: f64) -> f64 {
        if t < self.s {
            0.0
        } else {
            self.trajectory.value(t)
        }
    }
}

/// `X(·, s)` of the homogeneous part of `eq`.
pub fn fundamental(eq: &DelayEquation, s: f64, t_end: f64, ctrl: &StepControl) -> Result<FundamentalSlice, SolveError> {
    let eq = eq.homogeneous();
    let trajectory = solve(&eq, &InitialData::unit_at(s), t_end, ctrl)?;
    Ok(FundamentalSlice { s, trajectory })
}

/// Fundamental slices for several initial times, solved in parallel.
pub fn fundamental_slices(
    eq: &DelayEquation,
    starts: &[f64],
    t_end: f64,
    ctrl: &StepControl,
) -> Result<Vec<FundamentalSlice>, SolveError> {
    let eq = eq.homogeneous();
    par_map(starts, |&s| fundamental(&eq, s, t_end, ctrl)).into_iter().collect()
}

/// Solves every initial-data set; results keep the input order.
pub fn ensemble_decay(
    eq: &DelayEquation,
    inits: &[InitialData],
    t_end: f64,
    ctrl: &StepControl,
) -> Vec<Result<Trajectory, SolveError>> {
    par_map(inits, |init| solve(eq, init, t_end, ctrl))
}

/// `n` smooth bounded histories `c + b·sin(ωt + ψ)` with random `x₀`, all of scale at most 1.5.
pub fn random_histories(n: usize, t0: f64, seed: u64) -> Vec<InitialData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-0.5..0.5);
            let w: f64 = rng.gen_range(0.5..3.0);
            let psi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let x0: f64 = rng.gen_range(-1.0..1.0);
            let phi = Expr::Num(c) + Expr::Num(b) * Expr::Sin(Box::new(Expr::Num(w) * Expr::Time + Expr::Num(psi)));
            InitialData::new(PiecewiseFn::new(phi).with_domain_start(f64::NEG_INFINITY), x0, t0)
        })
        .collect()
}

/// Largest gap between the direct solution and the variation-of-constants
/// formula
/// `x(t) = X(t,t₀)x₀ − ∫ X(t,s) Σ aₖ(s) φ(hₖ(s)) ds + ∫ X(t,s) f(s) ds`
/// (with `φ = 0` from `t₀` on), over 16 sample times in `(t₀, T]`.
///
/// The integrals use composite Simpson over fundamental slices spaced
/// `max_step/8` apart, split where the integrand jumps.
pub fn representation_check(
    eq: &DelayEquation,
    init: &InitialData,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<f64, SolveError> {
    let t0 = init.t0;
    let direct = solve(eq, init, t_end, ctrl)?;
    let samples: Vec<f64> = (1..=16).map(|j| t0 + (t_end - t0) * j as f64 / 16.0).collect();

    // g(s) = f(s) − Σ aₖ(s) φ(hₖ(s)) [hₖ(s) < t₀]
    let g = |s: f64| {
        let mut acc = eq.forcing().map_or(0.0, |f| f.value(s));
        for term in eq.terms() {
            let th = term.delay.value(s);
            if th < t0 {
                acc -= term.coef.value(s) * init.history(th);
            }
        }
        acc
    };

    let mut nodes = vec![t0, t_end];
    nodes.extend(eq.breakpoints(t0, t_end));
    nodes.extend(&samples);
    let lowest = integrate::lowest_argument(eq, t0, t_end).max(init.floor);
    let mut levels = vec![t0];
    if lowest < t0 {
        levels.extend(init.phi.breakpoints(lowest, t0));
        if init.floor.is_finite() {
            levels.push(init.floor);
        }
    }
    for term in eq.terms() {
        for &lv in &levels {
            nodes.extend(crossings(&term.delay, lv, t0, t_end));
        }
    }
    nodes.retain(|&n| n >= t0 && n <= t_end);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));

    let ds = ctrl.max_step / 8.0;
    // per interval: its sample points
    let panels: Vec<Vec<f64>> = nodes
        .windows(2)
        .map(|w| {
            let m = 2 * (((w[1] - w[0]) / (2.0 * ds)).ceil() as usize).max(1);
            let mut p: Vec<f64> = (0..m).map(|i| w[0] + (w[1] - w[0]) * i as f64 / m as f64).collect();
            p.push(w[1]);
            p
        })
        .collect();
    let mut starts: Vec<f64> = panels.iter().flat_map(|p| p[..p.len() - 1].iter().copied()).collect();
    starts.dedup();
    let slices = fundamental_slices(eq, &starts, t_end, ctrl)?;
    let slice_at = |s: f64| -> Option<&FundamentalSlice> {
        let i = starts.partition_point(|&v| v < s);
        slices.get(i).filter(|sl| sl.s == s)
    };
    let x_of = |t: f64, s: f64| if s >= t { 1.0 } else { slice_at(s).map_or(f64::NAN, |sl| sl.value(t)) };

    let head = slice_at(t0).expect("slice at t0");
    let mut worst: f64 = 0.0;
    for &t in &samples {
        let mut formula = head.value(t) * init.x0;
        for p in panels.iter().take_while(|p| p[0] < t) {
            let h = p[1] - p[0];
            let last = p.len() - 1;
            let vals: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let gs = if i == last { g(s.next_down()) } else { g(s) };
                    x_of(t, s) * gs
                })
                .collect();
            formula += simpson_samples(&vals, h);
        }
        let gap = (direct.value(t) - formula).abs();
        worst = if gap.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(gap) };
    }
    Ok(worst)
}

/// Times in `[a, b]` where `f` crosses `level`, by sign changes on a fine scan.
fn crossings(f: &PiecewiseFn, level: f64, a: f64, b: f64) -> Vec<f64> {
    let n = 4096;
    let mut out = Vec::new();
    let grid = |i: usize| a + (b - a) * i as f64 / n as f64;
    let mut prev = f.value(a) - level;
    for i in 1..=n {
        let (l, r) = (grid(i - 1), grid(i));
        let cur = f.value(r) - level;
        if prev < 0.0 && cur >= 0.0 || prev >= 0.0 && cur < 0.0 {
            let (mut lo, mut hi) = (l, r);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                if (f.value(m) - level < 0.0) == (prev < 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            out.push(hi);
        }
        prev = cur;
    }
    out
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(terms: &[(&str, &str)]) -> DelayEquation {
        DelayEquation::parse(terms, 0.0).unwrap()
    }

    #[test]
    fn unit_delay_method_of_steps() {
        // x = 1 − t on [0,1], x = t²/2 − 2t + 3/2 on [1,2]
        let e = eq(&[("1", "t - 1")]);
        let init = InitialData::new(PiecewiseFn::constant(1.0), 1.0, 0.0);
        let tr = solve(&e, &init, 4.0, &StepControl::default()).unwrap();
        assert!(tr.value(1.0).abs() < 1e-12);
        assert!((tr.value(2.0) + 0.5).abs() < 1e-12);
        assert!((tr.value(1.5) - (1.125 - 3.0 + 1.5)).abs() < 1e-12);
        assert_eq!(tr.value(-0.3), 1.0);
    }

    #[test]
    fn linear_ode() {
        let e = eq(&[("1", "t")]);
        let tr = solve(&e, &InitialData::unit_at(0.0), 1.0, &StepControl::default()).unwrap();
        assert!((tr.value(1.0) - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn square_wave_ode() {
        let e = eq(&[("pw(2; [0,1): 1; [1,2): 0)", "t")]);
        let tr = solve(&e, &InitialData::unit_at(0.0), 4.0, &StepControl::default()).unwrap();
        assert!((tr.value(2.0) - (-1f64).exp()).abs() < 1e-10);
        assert!((tr.value(4.0) - (-2f64).exp()).abs() < 1e-10);
        assert!(tr.times().contains(&1.0) && tr.times().contains(&3.0));
    }

    #[test]
    fn fundamental_of_unit_delay() {
        // X = 1 on [0,1], 2 − t on [1,2], t²/2 − 3t + 4 on [2,3]
        let e = eq(&[("1", "t - 1")]);
        let x = fundamental(&e, 0.0, 4.0, &StepControl::default()).unwrap();
        assert_eq!(x.value(0.0), 1.0);
        assert_eq!(x.value(-1e-9), 0.0);
        assert!((x.value(1.0) - 1.0).abs() < 1e-12);
        assert!(x.value(2.0).abs() < 1e-12);
        assert!((x.value(3.0) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn representation_with_forcing() {
        let e = eq(&[("1", "t")]).with_forcing(PiecewiseFn::constant(1.0));
        let init = InitialData::new(PiecewiseFn::constant(0.0), 0.0, 0.0);
        let r = representation_check(&e, &init, 4.0, &StepControl::default()).unwrap();
        assert!(r <= 1e-6, "{r}");
    }

    #[test]
    fn representation_with_history() {
        let e = eq(&[("1", "t - 1")]);
        let init = InitialData::new(PiecewiseFn::constant(1.0), 1.0, 0.0);
        let r = representation_check(&e, &init, 4.0, &StepControl::default()).unwrap();
        assert!(r <= 1e-5, "{r}");
    }

    #[test]
    fn bad_horizon() {
        let e = eq(&[("1", "t")]);
        assert!(matches!(
            solve(&e, &InitialData::unit_at(1.0), 0.5, &StepControl::default()),
            Err(SolveError::Horizon { .. })
        ));
    }
}
