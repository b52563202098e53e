use std::cell::Cell;

use super::trajectory::{hermite, Trajectory};
use super::{SolveError, StepControl};
use crate::expr::Expr;
use crate::model::{DelayEquation, InitialData};

/// Delayed arguments within this distance of the stage time read the stage value.
#[inline]
fn vanishing(t: f64) -> f64 {
    1e-10 * (1.0 + t.abs())
}

/// Where delayed arguments inside the current step are read from.
#[derive(Clone, Copy)]
enum InStep {
    /// First pass: extrapolate the previous segment.
    Predict,
    /// Second pass: the step's own Hermite interpolant.
    Correct { t1: f64, x1: f64, f1: f64 },
}

struct Rhs<'a> {
    eq: &'a DelayEquation,
    undelayed: Vec<bool>,
}

struct StepCtx<'a> {
    traj: &'a Trajectory,
    tn: f64,
    xn: f64,
    fn_: f64,
    in_step: InStep,
    touched: Cell<bool>,
    /// Set when evaluating a right derivative at a knot: arguments a rounding
    /// error below a discontinuity read the value at the discontinuity.
    snap: Option<&'a Discontinuities>,
}

impl StepCtx<'_> {
    #[inline]
    fn lookup(&self, mut theta: f64) -> f64 {
        if let Some(d) = self.snap {
            theta = d.snap_up(theta);
        }
        if theta <= self.tn {
            return self.traj.value(theta);
        }
        self.touched.set(true);
        match self.in_step {
            InStep::Predict => self.traj.extrapolate(theta),
            InStep::Correct { t1, x1, f1 } => hermite(self.tn, t1, self.xn, self.fn_, x1, f1, theta).0,
        }
    }
}

impl<'a> Rhs<'a> {
    fn new(eq: &'a DelayEquation) -> Self {
        let undelayed = eq.terms().iter().map(|k| matches!(k.delay.expr(), Some(Expr::Time))).collect();
        Self { eq, undelayed }
    }

    /// `f(τ) − Σ aₖ(τ) x(hₖ(τ))` with `x(τ) = state`; `left` evaluates
    /// coefficients and delays as left limits at `τ`.
    #[inline]
    fn eval(&self, tau: f64, left: bool, state: f64, ctx: &StepCtx) -> f64 {
        let te = if left { tau.next_down() } else { tau };
        let mut acc = self.eq.forcing().map_or(0.0, |f| f.value(te));
        for (k, term) in self.eq.terms().iter().enumerate() {
            let a = term.coef.value(te);
            if a == 0.0 {
                continue;
            }
            let xv = if self.undelayed[k] {
                state
            } else {
                let theta = term.delay.value(te);
                if theta >= tau - vanishing(tau) {
                    state
                } else {
                    ctx.lookup(theta)
                }
            };
            acc -= a * xv;
        }
        acc
    }
}

/// History discontinuities and the times where a delayed argument crosses them.
struct Discontinuities {
    pts: Vec<(f64, u8)>,
}

/// Relative tolerance for matching a delayed argument with a discontinuity.
#[inline]
fn disc_eps(x: f64) -> f64 {
    1e-12 * (1.0 + x.abs())
}

impl Discontinuities {
    /// The first point in `(θ, θ + eps]`, or `θ` itself.
    fn snap_up(&self, theta: f64) -> f64 {
        let i = self.pts.partition_point(|p| p.0 <= theta);
        match self.pts.get(i) {
            Some(&(d, _)) if d - theta <= disc_eps(d) => d,
            _ => theta,
        }
    }

    fn insert(&mut self, t: f64, level: u8) {
        let i = self.pts.partition_point(|p| p.0 < t);
        if self.pts.get(i).is_some_and(|p| p.0 == t) {
            self.pts[i].1 = self.pts[i].1.min(level);
        } else {
            self.pts.insert(i, (t, level));
        }
    }

    /// Shortens `[t, t+h]` so it ends where the first delayed argument meets a
    /// discontinuity lying before `t`. Returns the new length and the level of
    /// the discontinuity hit.
    fn cut(&self, rhs: &Rhs, t: f64, h: f64) -> (f64, Option<u8>) {
        let mut best = (h, None);
        let tol_t = 1e-12 * (1.0 + t.abs());
        for (k, term) in rhs.eq.terms().iter().enumerate() {
            if rhs.undelayed[k] {
                continue;
            }
            let d = &term.delay;
            let ta = d.value(t);
            let tb = d.value((t + best.0).next_down());
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            let eps = disc_eps(lo.abs().max(hi.abs()));
            // points strictly past the start argument, up to a rounding error past
            // the end argument, so a crossing that lands next to the step end
            // still ends the step
            let cand = if ta <= tb {
                let i0 = self.pts.partition_point(|p| p.0 <= lo + eps);
                let i1 = self.pts.partition_point(|p| p.0 <= hi + eps);
                self.pts.get(i0..i1).and_then(<[_]>::first)
            } else {
                let i0 = self.pts.partition_point(|p| p.0 < lo);
                let i1 = self.pts.partition_point(|p| p.0 < hi - eps);
                self.pts.get(i0..i1).and_then(<[_]>::last)
            };
            let Some(&(level_pt, level)) = cand else { continue };
            if level_pt >= t - tol_t {
                continue;
            }
            let g = |s: f64| d.value(s) - level_pt;
            let (mut a, mut b) = (t, t + best.0);
            let ga = g(a);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if (g(m) > 0.0) == (ga > 0.0) && g(m) != 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let len = (b - t).min(best.0);
            if len > tol_t && len <= best.0 {
                best = (len, Some(level));
            }
        }
        best
    }
}

pub fn solve(eq: &DelayEquation, init: &InitialData, t_end: f64, ctrl: &StepControl) -> Result<Trajectory, SolveError> {
    ctrl.check()?;
    let t0 = init.t0;
    if t0 < eq.t_start() {
        return Err(SolveError::InitialTime { t0, t_start: eq.t_start() });
    }
    if !(t_end > t0) {
        return Err(SolveError::Horizon { t0, t_end });
    }
    let rhs = Rhs::new(eq);

    let mut stops: Vec<f64> = eq.breakpoints(t0, t_end).into_iter().filter(|&b| b > t0 && b < t_end).collect();
    stops.push(t_end);

    let mut disc = Discontinuities { pts: vec![(t0, 0)] };
    let lowest = lowest_argument(eq, t0, t_end).max(init.floor);
    if lowest < t0 {
        for b in init.phi.breakpoints(lowest, t0) {
            if b < t0 {
                disc.insert(b, 0);
            }
        }
        if init.floor.is_finite() && init.floor < t0 {
            disc.insert(init.floor, 0);
        }
    }
    for &b in &stops[..stops.len() - 1] {
        disc.insert(b, 1);
    }

    let capacity = (((t_end - t0) / ctrl.max_step) as usize).saturating_add(stops.len() + 8).min(1 << 26);
    let probe = Trajectory::start(init.clone(), 0.0, 1);
    let f0 = rhs.eval(t0, false, init.x0, &StepCtx {
        traj: &probe,
        tn: t0,
        xn: init.x0,
        fn_: 0.0,
        in_step: InStep::Predict,
        touched: Cell::new(false),
        snap: None,
    });
    if !f0.is_finite() {
        return Err(SolveError::NonFinite { t: t0 });
    }
    let mut traj = Trajectory::start(init.clone(), f0, capacity);

    let (mut t, mut x, mut f) = (t0, init.x0, f0);
    let mut h_next = ctrl.max_step;
    let mut stop_i = 0;
    while t < t_end {
        while stops[stop_i] <= t {
            stop_i += 1;
        }
        let stop = stops[stop_i];
        let mut h = h_next.min(stop - t);
        if stop - t - h < 0.01 * h {
            h = stop - t;
        }
        let (cut_h, mut hit) = disc.cut(&rhs, t, h);
        let mut ends_at_stop = cut_h == h && h == stop - t;
        h = cut_h;
        // a crossing a rounding error short of the stop is the stop
        if !ends_at_stop && stop - t - h <= disc_eps(stop) {
            h = stop - t;
            ends_at_stop = true;
        }
        let mut halved = false;
        let (x1, f1_left) = loop {
            match attempt(&rhs, &traj, t, x, f, h, ctrl) {
                Some(ok) => break ok,
                None => {
                    h *= 0.5;
                    halved = true;
                    hit = None;
                    ends_at_stop = false;
                    if h < ctrl.min_step {
                        return Err(SolveError::StepUnderflow { t, step: h });
                    }
                }
            }
        };
        let t1 = if ends_at_stop { stop } else { t + h };
        if !x1.is_finite() {
            return Err(SolveError::NonFinite { t: t1 });
        }
        let f1_right = if ends_at_stop || hit.is_some() {
            // right derivative at the new knot; delayed values after t come from the finished step
            rhs.eval(t1, false, x1, &StepCtx {
                traj: &traj,
                tn: t,
                xn: x,
                fn_: f,
                in_step: InStep::Correct { t1, x1, f1: f1_left },
                touched: Cell::new(false),
                snap: Some(&disc),
            })
        } else {
            f1_left
        };
        traj.push(t1, x1, f1_left, f1_right);
        if let Some(level) = hit {
            if level < ctrl.max_level {
                disc.insert(t1, level + 1);
            }
        }
        t = t1;
        x = x1;
        f = f1_right;
        h_next = if halved { h } else { (2.0 * h).min(ctrl.max_step).max(h_next) };
    }
    Ok(traj)
}

/// One RK4 step with dense-output residual check; `None` rejects the step.
fn attempt(rhs: &Rhs, traj: &Trajectory, t: f64, x: f64, f: f64, h: f64, ctrl: &StepControl) -> Option<(f64, f64)> {
    let mut ctx = StepCtx { traj, tn: t, xn: x, fn_: f, in_step: InStep::Predict, touched: Cell::new(false), snap: None };
    let t1 = t + h;
    let mut x1 = rk4(rhs, &ctx, t, x, f, h);
    let mut f1 = rhs.eval(t1, true, x1, &ctx);
    if ctx.touched.get() {
        ctx.in_step = InStep::Correct { t1, x1, f1 };
        x1 = rk4(rhs, &ctx, t, x, f, h);
        f1 = rhs.eval(t1, true, x1, &ctx);
    }
    ctx.in_step = InStep::Correct { t1, x1, f1 };
    let tm = t + 0.5 * h;
    let (xm, dxm) = hermite(t, t1, x, f, x1, f1, tm);
    let res = (dxm - rhs.eval(tm, false, xm, &ctx)).abs();
    let scale = 1.0 + x.abs() + f.abs();
    if res <= ctrl.res_tol * scale || !res.is_finite() && !x1.is_finite() {
        Some((x1, f1))
    } else {
        None
    }
}

#[inline]
fn rk4(rhs: &Rhs, ctx: &StepCtx, t: f64, x: f64, k1: f64, h: f64) -> f64 {
    let tm = t + 0.5 * h;
    let k2 = rhs.eval(tm, false, x + 0.5 * h * k1, ctx);
    let k3 = rhs.eval(tm, false, x + 0.5 * h * k2, ctx);
    let k4 = rhs.eval(t + h, true, x + h * k3, ctx);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Coarse lower bound of the delayed arguments met on `[t0, t_end]`.
pub(crate) fn lowest_argument(eq: &DelayEquation, t0: f64, t_end: f64) -> f64 {
    let n = 1024;
    let mut lo = t0;
    for term in eq.terms() {
        for i in 0..=n {
            let t = t0 + (t_end - t0) * i as f64 / n as f64;
            lo = lo.min(term.delay.value(t));
        }
    }
    lo - 1.0
}
