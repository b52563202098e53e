use super::piecewise::{IntegrateError, PiecewiseFn};
use super::DEFAULT_QUAD_TOL;

/// Cumulative integral `P(t) = ∫ₐᵗ f` tabulated on a breakpoint-refined grid.
///
/// Between nodes the value is completed by an exact (or adaptive) integral of
/// `f`, so evaluation is as accurate as [`PiecewiseFn::integrate`] while only
/// touching one short interval per call.
#[derive(Debug, Clone)]
pub struct Primitive {
    f: PiecewiseFn,
    nodes: Vec<f64>,
    cum: Vec<f64>,
    tol: f64,
}

impl Primitive {
    pub fn new(f: PiecewiseFn, a: f64, b: f64, cell: f64) -> Result<Self, IntegrateError> {
        Self::with_tol(f, a, b, cell, DEFAULT_QUAD_TOL)
    }

    pub fn with_tol(f: PiecewiseFn, a: f64, b: f64, cell: f64, tol: f64) -> Result<Self, IntegrateError> {
        assert!(b >= a && cell > 0.0, "primitive needs a <= b and a positive cell");
        let n = ((b - a) / cell).ceil().max(1.0) as usize;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + i as f64 * cell).collect();
        nodes.push(b);
        nodes.extend(f.breakpoints(a, b));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + y.abs()));
        let per_cell = tol / nodes.len() as f64;
        let mut cum = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in nodes.windows(2) {
            acc += f.integrate(w[0], w[1], per_cell.max(1e-15))?;
            cum.push(acc);
        }
        Ok(Self { f, nodes, cum, tol })
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    pub fn integrand(&self) -> &PiecewiseFn {
        &self.f
    }

    /// `∫ₐᵗ f`; outside the table the integral is extended directly.
    pub fn eval(&self, t: f64) -> f64 {
        let a = self.start();
        if t <= a {
            return -self.f.integrate(t, a, self.tol).unwrap_or(f64::NAN);
        }
        let i = self.nodes.partition_point(|&n| n <= t) - 1;
        self.cum[i] + self.f.integrate(self.nodes[i], t, self.tol).unwrap_or(f64::NAN)
    }

    /// `∫ᵤᵛ f` via the table.
    pub fn between(&self, u: f64, v: f64) -> f64 {
        self.eval(v) - self.eval(u)
    }

    /// Smallest `t` in the table range with `P(t) = y`, for nonnegative `f`.
    /// Values outside `[0, total]` are clamped to the table ends.
    pub fn inverse(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= 0.0 {
            return self.start();
        }
        if y >= self.total() {
            return self.end();
        }
        let j = self.cum.partition_point(|&c| c < y);
        let (mut lo, mut hi) = (self.nodes[j - 1], self.nodes[j]);
        let base = self.cum[j - 1];
        let p = |t: f64| base + self.f.integrate(self.nodes[j - 1], t, self.tol).unwrap_or(f64::NAN);
        let mut t = lo + (hi - lo) * (y - base) / (self.cum[j] - base);
        for _ in 0..100 {
            let r = p(t) - y;
            if r.abs() <= 1e-15 * (1.0 + y.abs()) {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.f.value(t);
            let newton = t - r / d;
            t = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }
}
