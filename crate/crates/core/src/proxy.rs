//! Finite-horizon stand-ins for asymptotic statements (`∫^∞ = ∞`,
//! `liminf > 0`, boundedness). Every result here is a heuristic on `[t₀, H]`.

use serde::Serialize;

use crate::expr::{liminf_estimate, limsup_estimate, Extremum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Growth {
    Diverges,
    Converges,
    Undecided,
}

/// Growth of a cumulative integral `P` on `[t0, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthProxy {
    pub growth: Growth,
    /// `P(h) / P(mid)` with `mid` the window midpoint.
    pub ratio: f64,
    /// `I(mid, h) / I(quarter, mid)` for the increments `I(u, v) = P(v) − P(u)`.
    pub increment_ratio: f64,
    /// `P(h) − P(mid)`.
    pub tail: f64,
}

/// Decides `∫_{t0}^∞ = ∞` from a cumulative integral.
///
/// Diverges if `P(h)/P(mid) ≥ 1.5` (linear growth) or the increment ratio is
/// at least 0.9 (logarithmic growth). Converges if the increment ratio is at
/// most 0.75 or the last increment is below 1e-12.
pub fn integral_growth(p: impl Fn(f64) -> f64, t0: f64, h: f64) -> GrowthProxy {
    let span = h - t0;
    let (q, mid) = (t0 + 0.25 * span, t0 + 0.5 * span);
    let (pq, pm, ph) = (p(q), p(mid), p(h));
    let ratio = ph / pm;
    let tail = ph - pm;
    let increment_ratio = tail / (pm - pq);
    let growth = if tail <= 1e-12 {
        Growth::Converges
    } else if ratio >= 1.5 || increment_ratio >= 0.9 {
        Growth::Diverges
    } else if increment_ratio <= 0.75 {
        Growth::Converges
    } else {
        Growth::Undecided
    };
    GrowthProxy { growth, ratio, increment_ratio, tail }
}

/// Lower-limit proxy on a window split at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiminfProxy {
    pub passed: bool,
    pub early: Extremum,
    pub late: Extremum,
}

/// `liminf g > 0`: the late minimum exceeds `eps` and has not fallen below
/// three quarters of the early minimum.
pub fn positive_liminf(g: impl Fn(f64) -> f64 + Sync, w0: f64, h: f64, step: f64, eps: f64) -> LiminfProxy {
    let mid = 0.5 * (w0 + h);
    let early = liminf_estimate(&g, w0, mid, step);
    let late = liminf_estimate(&g, mid, h, step);
    let passed = late.value > eps && late.value >= 0.75 * early.value;
    LiminfProxy { passed, early, late }
}

/// Upper-limit proxy on a window split at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedProxy {
    pub passed: bool,
    pub early: Extremum,
    pub late: Extremum,
}

/// `limsup g < ∞`: the late maximum is at most 1.25 times the early one.
pub fn bounded_above(g: impl Fn(f64) -> f64 + Sync, w0: f64, h: f64, step: f64) -> BoundedProxy {
    let mid = 0.5 * (w0 + h);
    let early = limsup_estimate(&g, w0, mid, step);
    let late = limsup_estimate(&g, mid, h, step);
    let passed = late.value.is_finite() && late.value <= 1.25 * early.value.max(0.0) + 1e-9;
    BoundedProxy { passed, early, late }
}
