use std::io::{self, Write};

use crate::model::InitialData;

/// Cubic Hermite value and slope on `[a, b]` at `t`.
#[inline]
pub(crate) fn hermite(a: f64, b: f64, xa: f64, da: f64, xb: f64, db: f64, t: f64) -> (f64, f64) {
    let h = b - a;
    let s = (t - a) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let x = (2.0 * s3 - 3.0 * s2 + 1.0) * xa
        + (s3 - 2.0 * s2 + s) * h * da
        + (-2.0 * s3 + 3.0 * s2) * xb
        + (s3 - s2) * h * db;
    let dx = (6.0 * s2 - 6.0 * s) / h * (xa - xb) + (3.0 * s2 - 4.0 * s + 1.0) * da + (3.0 * s2 - 2.0 * s) * db;
    (x, dx)
}

/// Dense numerical solution from `t₀` to `T`, with the history below `t₀`.
///
/// Knots store the value, the right derivative (start of the next segment)
/// and the left derivative (end of the previous one), so slopes may jump at
/// coefficient breakpoints while the interpolant stays continuous.
#[derive(Debug, Clone)]
pub struct Trajectory {
    init: InitialData,
    t: Vec<f64>,
    x: Vec<f64>,
    dr: Vec<f64>,
    dl: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn start(init: InitialData, slope: f64, capacity: usize) -> Self {
        let mut tr = Self {
            t: Vec::with_capacity(capacity),
            x: Vec::with_capacity(capacity),
            dr: Vec::with_capacity(capacity),
            dl: Vec::with_capacity(capacity),
            init,
        };
        tr.t.push(tr.init.t0);
        tr.x.push(tr.init.x0);
        tr.dr.push(slope);
        tr.dl.push(slope);
        tr
    }

    pub(crate) fn push(&mut self, t: f64, x: f64, left_slope: f64, right_slope: f64) {
        self.t.push(t);
        self.x.push(x);
        self.dl.push(left_slope);
        self.dr.push(right_slope);
    }

    pub fn initial(&self) -> &InitialData {
        &self.init
    }

    pub fn t0(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// Right derivatives at the knots.
    pub fn slopes(&self) -> &[f64] {
        &self.dr
    }

    pub fn last_value(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// `x(t)`: the history below `t₀`, the interpolant on `[t₀, T]`, and the
    /// last segment extrapolated beyond `T`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t < self.t[0] {
            return self.init.history(t);
        }
        self.eval(t).0
    }

    /// `ẋ(t)` from the interpolant (right derivative at knots).
    pub fn derivative(&self, t: f64) -> f64 {
        if t < self.t[0] {
            return f64::NAN;
        }
        self.eval(t).1
    }

    #[inline]
    fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.t.len();
        if n == 1 {
            return (self.x[0] + (t - self.t[0]) * self.dr[0], self.dr[0]);
        }
        let i = self.t.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
        if t == self.t[i] {
            return (self.x[i], self.dr[i]);
        }
        hermite(self.t[i], self.t[i + 1], self.x[i], self.dr[i], self.x[i + 1], self.dl[i + 1], t)
    }

    /// Value on the last accepted segment, used to predict delayed values inside a step.
    pub(crate) fn extrapolate(&self, t: f64) -> f64 {
        let n = self.t.len();
        if n == 1 {
            return self.x[0] + (t - self.t[0]) * self.dr[0];
        }
        let i = n - 2;
        hermite(self.t[i], self.t[i + 1], self.x[i], self.dr[i], self.x[i + 1], self.dl[i + 1], t).0
    }

    /// Largest `|x|` over the knots in `[a, b]`.
    pub fn max_abs_between(&self, a: f64, b: f64) -> f64 {
        let lo = self.t.partition_point(|&k| k < a);
        let hi = self.t.partition_point(|&k| k <= b);
        self.x[lo..hi].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest `x` over the knots in `[a, b]`.
    pub fn min_between(&self, a: f64, b: f64) -> f64 {
        let lo = self.t.partition_point(|&k| k < a);
        let hi = self.t.partition_point(|&k| k <= b);
        self.x[lo..hi].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `t,x` rows, one per knot.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "t,x")?;
        for (t, x) in self.t.iter().zip(&self.x) {
            writeln!(w, "{t},{x}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}
