use serde::Serialize;

use super::piecewise::golden_max;

/// A finite-horizon estimate of an asymptotic upper or lower limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    /// Where the extremum was attained.
    pub at: f64,
    pub window: [f64; 2],
}

/// Grid maximum of `g` over `[t0, t1]` with one golden-section refinement
/// around every interior grid local maximum.
///
/// Grid points are `t0 + i·step`, so the value is nondecreasing in `t1`.
/// This is a finite-horizon estimate of `limsup g`, not the limit itself.
pub fn limsup_estimate(g: impl Fn(f64) -> f64 + Sync, t0: f64, t1: f64, step: f64) -> Extremum {
    assert!(t0 < t1 && step > 0.0, "limsup window needs t0 < t1 and step > 0");
    let n = ((t1 - t0) / step + 1e-9).floor() as usize;
    let grid = |i: usize| t0 + i as f64 * step;
    let values = sample(&g, n + 1, &grid);
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };

    let mut best = Extremum { value: f64::NEG_INFINITY, at: t0, window: [t0, t1] };
    for (i, &v) in values.iter().enumerate() {
        if key(v) > best.value {
            best.value = key(v);
            best.at = grid(i);
        }
    }
    for i in 1..n {
        let (l, c, r) = (key(values[i - 1]), key(values[i]), key(values[i + 1]));
        if c >= l && c >= r && (c > l || c > r) {
            let (at, v) = golden_max(&|t| key(g(t)), grid(i - 1), grid(i + 1), 40);
            if v > best.value {
                best.value = v;
                best.at = at;
            }
        }
    }
    if best.value == f64::NEG_INFINITY && values.iter().all(|v| v.is_nan()) {
        best.value = f64::NAN;
    }
    best
}

/// Lower counterpart of [`limsup_estimate`].
pub fn liminf_estimate(g: impl Fn(f64) -> f64 + Sync, t0: f64, t1: f64, step: f64) -> Extremum {
    let mut e = limsup_estimate(|t| -g(t), t0, t1, step);
    e.value = -e.value;
    e
}

#[cfg(feature = "parallel")]
fn sample(g: &(impl Fn(f64) -> f64 + Sync), n: usize, grid: &(impl Fn(usize) -> f64 + Sync)) -> Vec<f64> {
    use rayon::prelude::*;
    (0..n).into_par_iter().with_min_len(4096).map(|i| g(grid(i))).collect()
}

#[cfg(not(feature = "parallel"))]
fn sample(g: &(impl Fn(f64) -> f64 + Sync), n: usize, grid: &(impl Fn(usize) -> f64 + Sync)) -> Vec<f64> {
    (0..n).map(|i| g(grid(i))).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::expr::PiecewiseFn;

    #[test]
    fn sine_limsup() {
        let e = limsup_estimate(f64::sin, 0.0, 100.0, 0.01);
        assert!((e.value - 1.0).abs() < 1e-3);
        assert!((e.value - 1.0).abs() < 1e-12, "refinement should hit the peak: {}", e.value);
    }

    #[test]
    fn monotone_function_extremum_at_window_start() {
        let e = limsup_estimate(|t| 1.0 / t, 10.0, 100.0, 0.01);
        assert_eq!(e.value, 0.1);
        assert_eq!(e.at, 10.0);
        let m = liminf_estimate(|t| 1.0 / t, 10.0, 100.0, 0.01);
        assert!((m.value - 0.01).abs() < 1e-12);
    }

    #[test]
    fn sliding_integral_of_example_two_density() {
        // oracle: ∫ over any window of length π of α(|sin|-sin) peaks at 4α when the window is [π,2π] mod 2π
        let alpha = 0.3;
        let a = PiecewiseFn::parse("0.3*(abs(sin(t)) - sin(t))").unwrap();
        let g = |t: f64| a.integrate(t - PI, t, 1e-12).unwrap();
        let dense = (0..=20_000).map(|i| g(PI + 2.0 * PI * i as f64 / 20_000.0)).fold(f64::MIN, f64::max);
        assert!((dense - 4.0 * alpha).abs() < 1e-9);
        let e = limsup_estimate(g, 10.0, 60.0, 0.01);
        assert!((e.value - 4.0 * alpha).abs() < 1e-9, "{}", e.value);
    }

    proptest! {
        #[test]
        fn limsup_nondecreasing_in_window_end(w in 0.3f64..3.0, phase in 0.0f64..6.0, t1 in 5.0f64..30.0, extra in 0.0f64..20.0) {
            let g = |t: f64| (w * t + phase).sin() * (1.0 + 0.5 * (0.37 * t).cos());
            let a = limsup_estimate(g, 0.0, t1, 0.05);
            let b = limsup_estimate(g, 0.0, t1 + extra, 0.05);
            prop_assert!(b.value >= a.value);
        }
    }
}
