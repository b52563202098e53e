//! Empirical decay rates and coarse classification of simulated solutions.

use serde::Serialize;
use thiserror::Error;

use crate::solver::{FundamentalSlice, Trajectory};

/// Tail max relative to the initial scale below which a trajectory counts as decaying.
pub const DECAY_THRESHOLD: f64 = 0.01;
/// Tail max relative to the initial scale above which a trajectory counts as growing.
pub const GROWTH_THRESHOLD: f64 = 10.0;
/// History length used for the initial scale `max(|x₀|, sup |φ|)`.
pub const DEFAULT_LOOKBACK: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no samples to fit")]
    Empty,
    #[error("data is not decaying (slope {slope:e}, envelope fell to {drop:e} of its maximum)")]
    NotDecaying { slope: f64, drop: f64 },
    #[error("horizon too short: tail window [{0}, {1}] is empty")]
    ShortHorizon(f64, f64),
}

/// `|X(t, s)| ≤ K e^{−λ(t−s)}` on the sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub k: f64,
    pub lambda: f64,
    /// Coefficient of determination of the log-envelope regression.
    pub r2: f64,
    /// Range of `t − s` used.
    pub window: [f64; 2],
}

/// Fits `K e^{−λτ}`, `τ = t − s`, to the upper envelope of `|X|`.
///
/// Envelope knots are the local maxima of `|X|` on the solver nodes; a
/// monotone slice has none, and then the running maximum from the right on a
/// uniform grid is used instead. `λ` is minus the least-squares slope of
/// `log |X|` at the knots; `K` is raised afterwards until the bound holds at
/// every node, so it is never below `exp(intercept)`. Samples below `1e-12` of
/// the slice maximum are dropped as round-off.
pub fn fit_exponential(slices: &[FundamentalSlice]) -> Result<DecayFit, EstimatorError> {
    let mut knots = Vec::new();
    let mut nodes = Vec::new();
    let (mut top, mut bottom) = (0.0f64, f64::INFINITY);
    for sl in slices {
        let tr = &sl.trajectory;
        let pts: Vec<(f64, f64)> = tr.times().iter().zip(tr.values()).map(|(&t, &x)| (t - sl.s, x.abs())).collect();
        let peak = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        let pts: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.1 >= 1e-12 * peak).collect();
        top = top.max(peak);
        let k = slice_knots(&pts);
        bottom = bottom.min(k.iter().map(|p| p.1).fold(f64::INFINITY, f64::min));
        knots.extend(k);
        nodes.extend(pts);
    }
    if knots.len() < 2 {
        return Err(EstimatorError::Empty);
    }
    let (slope, intercept, r2) = regress(&knots);
    let drop = bottom / top;
    if slope >= 0.0 || drop > DECAY_THRESHOLD {
        return Err(EstimatorError::NotDecaying { slope, drop });
    }
    let lambda = -slope;
    let k = nodes.iter().map(|&(tau, x)| x * (lambda * tau).exp()).fold(intercept.exp(), f64::max);
    let hi = nodes.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok(DecayFit { k, lambda, r2, window: [0.0, hi] })
}

fn slice_knots(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let peaks: Vec<(f64, f64)> =
        pts.windows(3).filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1).map(|w| w[1]).collect();
    if peaks.len() >= 3 {
        return peaks;
    }
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Vec::new();
    };
    let n = 256;
    let mut out = Vec::with_capacity(n + 1);
    let mut j = pts.len();
    let mut run = 0.0f64;
    for i in (0..=n).rev() {
        let tau = first.0 + (last.0 - first.0) * i as f64 / n as f64;
        while j > 0 && pts[j - 1].0 >= tau {
            j -= 1;
            run = run.max(pts[j].1);
        }
        out.push((tau, run));
    }
    out.reverse();
    out
}

/// Least squares of `log y` on `τ`: `(slope, intercept, r²)`.
fn regress(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in pts {
        sx += x;
        sy += y.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (dx, dy) = (x - mx, y.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).min(1.0) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Class {
    Decaying,
    Bounded,
    Growing,
}

/// Ensemble classification with the per-trajectory tail ratios behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: Class,
    /// `max |x|` over the last fifth of each run divided by its initial scale.
    pub tail_ratios: Vec<f64>,
    pub decay_threshold: f64,
    pub growth_threshold: f64,
}

/// Decaying if every tail ratio is below [`DECAY_THRESHOLD`], growing if any
/// exceeds [`GROWTH_THRESHOLD`], bounded otherwise. The tail window is the
/// last fifth of `[t₀, T]`.
pub fn classify(trajectories: &[Trajectory]) -> Result<Classification, EstimatorError> {
    classify_with(trajectories, DEFAULT_LOOKBACK)
}

/// [`classify`] with the history length used for the initial scale.
pub fn classify_with(trajectories: &[Trajectory], lookback: f64) -> Result<Classification, EstimatorError> {
    if trajectories.is_empty() {
        return Err(EstimatorError::Empty);
    }
    let mut tail_ratios = Vec::with_capacity(trajectories.len());
    for tr in trajectories {
        let (t0, t1) = (tr.t0(), tr.t_end());
        let a = t0 + 0.8 * (t1 - t0);
        if t1 <= t0 {
            return Err(EstimatorError::ShortHorizon(a, t1));
        }
        let scale = tr.initial().scale(t0 - lookback);
        let tail = tr.max_abs_between(a, t1);
        tail_ratios.push(if scale > 0.0 { tail / scale } else if tail > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let worst = tail_ratios.iter().copied().fold(0.0, f64::max);
    let class = if tail_ratios.iter().any(|r| r.is_nan()) || worst > GROWTH_THRESHOLD {
        Class::Growing
    } else if worst < DECAY_THRESHOLD {
        Class::Decaying
    } else {
        Class::Bounded
    };
    Ok(Classification { class, tail_ratios, decay_threshold: DECAY_THRESHOLD, growth_threshold: GROWTH_THRESHOLD })
}

/// [`classify`] applied to fundamental slices.
pub fn classify_slices(slices: &[FundamentalSlice]) -> Result<Classification, EstimatorError> {
    let trs: Vec<Trajectory> = slices.iter().map(|s| s.trajectory.clone()).collect();
    classify_with(&trs, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DelayEquation;
    use crate::solver::{fundamental, fundamental_slices, StepControl};

    fn eq(terms: &[(&str, &str)]) -> DelayEquation {
        DelayEquation::parse(terms, 0.0).unwrap()
    }

    #[test]
    fn plain_exponential() {
        let s = fundamental(&eq(&[("1", "t")]), 0.0, 20.0, &StepControl::default()).unwrap();
        let fit = fit_exponential(&[s]).unwrap();
        assert!((fit.lambda - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.k - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn square_wave_rate() {
        let e = eq(&[("pw(2; [0,1): 1; [1,2): 0)", "t")]);
        let slices = fundamental_slices(&e, &[0.0, 0.5, 1.0, 1.5], 40.0, &StepControl::default()).unwrap();
        let fit = fit_exponential(&slices).unwrap();
        assert!((fit.lambda - 0.5).abs() < 0.02, "{fit:?}");
        assert!(fit.k <= std::f64::consts::E, "{fit:?}");
    }

    #[test]
    fn oscillating_decay_uses_peaks() {
        let s = fundamental(&eq(&[("1.2", "t - 1")]), 0.0, 60.0, &StepControl::default()).unwrap();
        let fit = fit_exponential(std::slice::from_ref(&s)).unwrap();
        assert!(fit.lambda > 0.0 && fit.r2 > 0.9, "{fit:?}");
        for (&t, &x) in s.trajectory.times().iter().zip(s.trajectory.values()) {
            assert!(x.abs() <= fit.k * (-fit.lambda * t).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn integrable_coefficient_does_not_decay() {
        let s = fundamental(&eq(&[("exp(-t)", "t - 1")]), 0.0, 50.0, &StepControl::default()).unwrap();
        assert!(matches!(fit_exponential(std::slice::from_ref(&s)), Err(EstimatorError::NotDecaying { .. })));
        assert_eq!(classify_slices(&[s]).unwrap().class, Class::Bounded);
    }

    #[test]
    fn growing_solution() {
        let s = fundamental(&eq(&[("-1", "t")]), 0.0, 10.0, &StepControl::default()).unwrap();
        assert_eq!(classify_slices(&[s]).unwrap().class, Class::Growing);
    }
}
