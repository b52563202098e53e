//! The time change `s = p(t) = ∫ Σ aₖ` that maps an equation with
//! nonnegative coefficients to one whose coefficients sum to one.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, IntegrateError, PiecewiseFn, Primitive, RealFn};
use crate::model::{sign_pattern, DelayEquation, InitialData, Term};
use crate::proxy::{integral_growth, Growth, GrowthProxy};
use crate::solver::{solve, SolveError, StepControl};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("coefficient {term} is negative (min {min:e}); the density must be nonnegative")]
    NegativeDensity { term: usize, min: f64 },
    #[error("density vanishes on {fraction:.3} of the samples; rebuild with regularization")]
    Degenerate { fraction: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

const SAMPLES: usize = 8192;

/// `p(t) = ∫_{t_start}^t ρ` for the density `ρ = Σ aₖ` (plus `e^{−t}` when
/// regularized), tabulated up to the horizon. Below `t_start` it continues
/// with slope one so histories map one-to-one.
#[derive(Debug, Clone)]
pub struct Rescaling {
    table: Arc<Primitive>,
    regularized: bool,
    zero_fraction: f64,
    growth: GrowthProxy,
}

pub fn build_rescaling(eq: &DelayEquation, horizon: f64, regularize: bool) -> Result<Rescaling, TransformError> {
    let t0 = eq.t_start();
    let signs = sign_pattern(eq, horizon);
    if let Some(k) = (0..eq.len()).find(|k| !signs.index_set.contains(k)) {
        return Err(TransformError::NegativeDensity { term: k, min: signs.minima[k] });
    }
    let sum = eq.coefficient_sum();
    let density = if regularize {
        let decay = PiecewiseFn::new(Expr::Exp(Box::new(-Expr::Time)));
        PiecewiseFn::sum(&[sum, decay])
    } else {
        sum
    };
    let density = density.with_domain_start(t0);
    let zeros = (0..=SAMPLES)
        .filter(|&i| density.value(t0 + (horizon - t0) * i as f64 / SAMPLES as f64) < 1e-14)
        .count();
    let cell = ((horizon - t0) / 4096.0).min(1.0);
    let table = Primitive::new(density, t0, horizon, cell)?;
    let growth = integral_growth(|t| table.eval(t), t0, horizon);
    Ok(Rescaling { table: Arc::new(table), regularized: regularize, zero_fraction: zeros as f64 / (SAMPLES + 1) as f64, growth })
}

impl Rescaling {
    pub fn t_start(&self) -> f64 {
        self.table.start()
    }

    pub fn horizon(&self) -> f64 {
        self.table.end()
    }

    pub fn density(&self) -> &PiecewiseFn {
        self.table.integrand()
    }

    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    /// Share of samples where the density is below 1e-14.
    pub fn zero_fraction(&self) -> f64 {
        self.zero_fraction
    }

    /// Whether `p` looks unbounded on the horizon; `Converges` means `p` stays
    /// bounded and the substitution cannot reach all of `[0, ∞)`.
    pub fn growth(&self) -> GrowthProxy {
        self.growth
    }

    pub fn is_surjective(&self) -> bool {
        self.growth.growth == Growth::Diverges
    }

    pub fn p(&self, t: f64) -> f64 {
        let a = self.t_start();
        if t < a {
            t - a
        } else {
            self.table.eval(t)
        }
    }

    pub fn p_inverse(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.t_start() + s;
        }
        if s <= self.table.total() {
            return self.table.inverse(s);
        }
        // beyond the table: bracket by doubling, then bisect
        let mut lo = self.table.end();
        let mut step = 1.0;
        let mut hi = lo + step;
        let mut n = 0;
        while self.p(hi) < s {
            lo = hi;
            step *= 2.0;
            hi = lo + step;
            n += 1;
            if n > 200 {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if self.p(m) < s {
                lo = m;
            } else {
                hi = m;
            }
        }
        hi
    }
}

/// Source breakpoints carried into `s`-time.
#[derive(Debug)]
struct Breaks {
    src: DelayEquation,
    r: Rescaling,
}

impl Breaks {
    fn get(&self, a: f64, b: f64) -> Vec<f64> {
        let (ta, tb) = (self.r.p_inverse(a), self.r.p_inverse(b));
        let mut out: Vec<f64> =
            self.src.breakpoints(ta, tb).into_iter().map(|t| self.r.p(t)).filter(|&s| s >= a && s <= b).collect();
        out.dedup();
        out
    }
}

#[derive(Debug)]
struct Weight {
    coef: PiecewiseFn,
    r: Rescaling,
    breaks: Arc<Breaks>,
}

impl RealFn for Weight {
    fn value(&self, s: f64) -> f64 {
        let t = self.r.p_inverse(s);
        let d = self.r.density().value(t);
        if d > 0.0 {
            self.coef.value(t) / d
        } else {
            0.0
        }
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.breaks.get(a, b)
    }

    /// `∫ bₖ ds = ∫ aₖ dt` over the matching `t` interval.
    fn exact_integral(&self, a: f64, b: f64) -> Option<f64> {
        let (ta, tb) = (self.r.p_inverse(a), self.r.p_inverse(b));
        if self.r.regularized {
            return None;
        }
        self.coef.integrate(ta, tb, 1e-13).ok()
    }
}

#[derive(Debug)]
struct Lag {
    delay: PiecewiseFn,
    r: Rescaling,
    breaks: Arc<Breaks>,
}

impl RealFn for Lag {
    fn value(&self, s: f64) -> f64 {
        self.r.p(self.delay.value(self.r.p_inverse(s)))
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.breaks.get(a, b)
    }
}

#[derive(Debug)]
struct Pulled {
    f: PiecewiseFn,
    r: Rescaling,
}

impl RealFn for Pulled {
    fn value(&self, s: f64) -> f64 {
        let t = self.r.p_inverse(s);
        let d = self.r.density().value(t);
        if d > 0.0 {
            self.f.value(t) / d
        } else {
            0.0
        }
    }
}

#[derive(Debug)]
struct PulledHistory {
    init: InitialData,
    r: Rescaling,
}

impl RealFn for PulledHistory {
    fn value(&self, s: f64) -> f64 {
        self.init.history(self.r.p_inverse(s))
    }
}

/// `ẏ(s) + Σ bₖ(s) y(lₖ(s)) = g(s)` with `bₖ = aₖ/ρ`, `lₖ = p∘hₖ∘p⁻¹`, `g = f/ρ` (all at `t = p⁻¹(s)`).
pub fn transform_equation(eq: &DelayEquation, r: &Rescaling) -> Result<DelayEquation, TransformError> {
    if !r.regularized && r.zero_fraction > 0.0 {
        return Err(TransformError::Degenerate { fraction: r.zero_fraction });
    }
    let breaks = Arc::new(Breaks { src: eq.clone(), r: r.clone() });
    let terms = eq
        .terms()
        .iter()
        .map(|k| {
            let coef = PiecewiseFn::custom(Arc::new(Weight { coef: k.coef.clone(), r: r.clone(), breaks: breaks.clone() }));
            let delay = PiecewiseFn::custom(Arc::new(Lag { delay: k.delay.clone(), r: r.clone(), breaks: breaks.clone() }));
            Term::new(coef, delay)
        })
        .collect();
    let mut out = DelayEquation::new(terms, 0.0).expect("non-empty");
    if let Some(f) = eq.forcing() {
        out = out.with_forcing(PiecewiseFn::custom(Arc::new(Pulled { f: f.clone(), r: r.clone() })));
    }
    Ok(out)
}

/// Initial data of the transformed equation: `ψ(σ) = φ(p⁻¹(σ))`, `y(p(t₀)) = x₀`.
pub fn transform_initial(init: &InitialData, r: &Rescaling) -> InitialData {
    let phi = PiecewiseFn::custom(Arc::new(PulledHistory { init: init.clone(), r: r.clone() }))
        .with_domain_start(f64::NEG_INFINITY);
    InitialData::new(phi, init.x0, r.p(init.t0))
}

/// `max |x(t) − y(p(t))|` over 2001 points of `[t₀, T]`.
pub fn pullback_check(
    eq: &DelayEquation,
    r: &Rescaling,
    init: &InitialData,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<f64, TransformError> {
    let x = solve(eq, init, t_end, ctrl)?;
    let teq = transform_equation(eq, r)?;
    let y = solve(&teq, &transform_initial(init, r), r.p(t_end), ctrl)?;
    let n = 2000;
    let worst = (0..=n)
        .map(|i| init.t0 + (t_end - init.t0) * i as f64 / n as f64)
        .map(|t| (x.value(t) - y.value(r.p(t))).abs())
        .fold(0.0, f64::max);
    Ok(worst)
}
