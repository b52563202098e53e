use crate::expr::{Extremum, PiecewiseFn, Primitive};
use crate::model::{sign_pattern, DelayEquation, SignPattern};
use crate::proxy::{bounded_above, integral_growth, positive_liminf, BoundedProxy, Growth, GrowthProxy, LiminfProxy};

use super::{CheckParams, Evidence, Verdict};

/// Per-equation data shared by the checks: window, signs and the cumulative density.
pub(crate) struct Ctx<'a> {
    pub eq: &'a DelayEquation,
    pub p: &'a CheckParams,
    pub t0: f64,
    pub h: f64,
    pub w0: f64,
    pub signs: SignPattern,
    pub density: PiecewiseFn,
    pub prim: Option<Primitive>,
}

pub(crate) fn primitive(f: &PiecewiseFn, t0: f64, h: f64) -> Option<Primitive> {
    let cell = ((h - t0) / 4096.0).min(1.0);
    Primitive::new(f.clone(), t0, h, cell).ok()
}

impl<'a> Ctx<'a> {
    pub fn new(eq: &'a DelayEquation, p: &'a CheckParams) -> Self {
        Self::with_density(eq, p, eq.coefficient_sum())
    }

    pub fn with_density(eq: &'a DelayEquation, p: &'a CheckParams, density: PiecewiseFn) -> Self {
        let t0 = eq.t_start();
        let h = p.horizon;
        let w0 = p.window_start.unwrap_or(t0 + 0.2 * (h - t0)).clamp(t0, h);
        let signs = sign_pattern(eq, h);
        let prim = primitive(&density, t0, h);
        Self { eq, p, t0, h, w0, signs, density, prim }
    }

    pub fn window(&self) -> [f64; 2] {
        [self.w0, self.h]
    }

    pub fn full(&self) -> [f64; 2] {
        [self.t0, self.h]
    }

    /// `∫_{t0}^{t} ρ`, with the lower limit clamped to `t0`.
    pub fn cum(&self, t: f64) -> f64 {
        self.prim.as_ref().map_or(f64::NAN, |p| p.eval(t.max(self.t0)))
    }

    /// `∫_{max(u,t0)}^{v} ρ`.
    pub fn between(&self, u: f64, v: f64) -> f64 {
        self.cum(v) - self.cum(u)
    }

    pub fn growth(&self) -> GrowthProxy {
        integral_growth(|t| self.cum(t), self.t0, self.h)
    }

    pub fn liminf(&self, g: impl Fn(f64) -> f64 + Sync) -> LiminfProxy {
        positive_liminf(g, self.w0, self.h, self.p.step, self.p.margin)
    }

    pub fn bounded(&self, g: impl Fn(f64) -> f64 + Sync) -> BoundedProxy {
        bounded_above(g, self.w0, self.h, self.p.step)
    }

    pub fn limsup(&self, g: impl Fn(f64) -> f64 + Sync) -> Extremum {
        crate::expr::limsup_estimate(g, self.w0, self.h, self.p.step)
    }

    /// Records the nonnegativity hypothesis for the listed terms.
    pub fn require_nonnegative(&self, v: &mut Verdict, terms: &[usize]) -> bool {
        let bad: Vec<usize> = terms.iter().copied().filter(|k| !self.signs.index_set.contains(k)).collect();
        let detail = if bad.is_empty() {
            "coefficients nonnegative on the samples".to_string()
        } else {
            format!("terms {bad:?} take negative values (min {:e})", bad.iter().map(|&k| self.signs.minima[k]).fold(f64::INFINITY, f64::min))
        };
        v.hypothesis("nonnegative_coefficients", bad.is_empty(), false, detail)
    }

    pub fn all_terms(&self) -> Vec<usize> {
        (0..self.eq.len()).collect()
    }

    /// Density integral is finite on the horizon.
    pub fn require_primitive(&self, v: &mut Verdict) -> bool {
        v.hypothesis("density_integrable", self.prim.is_some(), false, "density integrable on the horizon")
    }

    /// `liminf Σ aₖ > 0`.
    pub fn density_liminf(&self, v: &mut Verdict) -> bool {
        let l = self.liminf(|t| self.density.value(t));
        v.evidence("density_liminf", l.late);
        v.hypothesis("density_liminf_positive", l.passed, true, format!("late min {:e}, early min {:e}", l.late.value, l.early.value))
    }

    /// `limsup (t − hₖ(t)) < ∞` for every term.
    pub fn bounded_delays(&self, v: &mut Verdict) -> bool {
        let lag = |t: f64| self.eq.terms().iter().map(|k| t - k.delay.value(t)).fold(f64::NEG_INFINITY, f64::max);
        let b = self.bounded(lag);
        v.evidence("max_lag", b.late);
        v.hypothesis("bounded_delays", b.passed, true, format!("late max lag {:e}, early {:e}", b.late.value, b.early.value))
    }

    /// `∫^∞ Σ aₖ = ∞`.
    pub fn density_diverges(&self, v: &mut Verdict) -> bool {
        let g = self.growth();
        v.evidence("density_integral", Evidence::new(self.cum(self.h), self.full()));
        v.evidence("density_growth_ratio", Evidence::new(g.ratio, self.full()));
        v.evidence("density_increment_ratio", Evidence::new(g.increment_ratio, self.full()));
        let passed = self.p.assume_divergent || g.growth == Growth::Diverges;
        let detail = if self.p.assume_divergent { "asserted by the caller".to_string() } else { format!("{:?}", g.growth) };
        v.hypothesis("density_integral_diverges", passed, !self.p.assume_divergent, detail)
    }

    /// `limsup ∫_{hₖ(t)}^t Σ aᵢ < ∞` for every term.
    pub fn bounded_delay_integrals(&self, v: &mut Verdict) -> bool {
        let g = |t: f64| self.eq.terms().iter().map(|k| self.between(k.delay.value(t), t)).fold(f64::NEG_INFINITY, f64::max);
        let b = self.bounded(g);
        v.evidence("max_delay_integral", b.late);
        v.hypothesis("bounded_delay_integral", b.passed, true, format!("late max {:e}, early {:e}", b.late.value, b.early.value))
    }

    /// `Σ aₖ ≠ 0` a.e., by the absence of zero samples.
    pub fn density_nonvanishing(&self, v: &mut Verdict) -> bool {
        if self.p.assume_nonvanishing {
            return v.hypothesis("density_nonvanishing", true, false, "asserted by the caller");
        }
        let n = (((self.h - self.t0) / self.p.step) as usize).clamp(1, 1 << 22);
        let zeros = (0..=n).filter(|&i| self.density.value(self.t0 + (self.h - self.t0) * i as f64 / n as f64) < 1e-14).count();
        v.evidence("density_zero_samples", Evidence::new(zeros as f64, self.full()));
        v.hypothesis("density_nonvanishing", zeros == 0, true, format!("{zeros} of {} samples below 1e-14", n + 1))
    }

    /// `liminf ∫_t^{t+R} ρ > 0` for the caller's `R`; `None` when no `R` was given.
    pub fn window_integral_liminf(&self, v: &mut Verdict, name: &str) -> Option<bool> {
        let r = self.p.big_r?;
        let l = self.liminf(|t| self.between(t, t + r));
        v.evidence(&format!("{name}_liminf"), l.late);
        Some(v.hypothesis(name, l.passed, true, format!("R = {r}: late min {:e}, early min {:e}", l.late.value, l.early.value)))
    }
}
