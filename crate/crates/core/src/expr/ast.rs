use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use thiserror::Error;

/// Abstract syntax tree of a real function of the time variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Piecewise(Piecewise),
}

/// One half-open piece `[lo, hi): body` of a [`Piecewise`].
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub body: Expr,
}

/// Piecewise definition over a base interval, optionally repeated with a period.
///
/// A periodic piecewise evaluates its bodies at the time reduced into the base
/// interval. A non-periodic one extends its first body to the left of the base
/// interval and its last body to the right, so it is defined on all of ℝ.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    period: Option<f64>,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PiecewiseError {
    #[error("piecewise needs at least one segment")]
    Empty,
    #[error("segment [{lo}, {hi}) is empty or not finite")]
    BadSegment { lo: f64, hi: f64 },
    #[error("segments overlap at t = {at}")]
    Overlap { at: f64 },
    #[error("segments leave a gap starting at t = {at}")]
    Gap { at: f64 },
    #[error("period {period} does not match base interval length {base}")]
    PeriodMismatch { period: f64, base: f64 },
    #[error("period must be non-negative and finite, got {0}")]
    BadPeriod(f64),
}

impl Piecewise {
    /// Builds a piecewise function; `period == 0` means non-periodic.
    pub fn new(period: f64, mut segments: Vec<Segment>) -> Result<Self, PiecewiseError> {
        if !(period.is_finite() && period >= 0.0) {
            return Err(PiecewiseError::BadPeriod(period));
        }
        if segments.is_empty() {
            return Err(PiecewiseError::Empty);
        }
        for s in &segments {
            if !(s.lo.is_finite() && s.hi.is_finite() && s.lo < s.hi) {
                return Err(PiecewiseError::BadSegment { lo: s.lo, hi: s.hi });
            }
        }
        segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in segments.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(PiecewiseError::Overlap { at: w[1].lo });
            }
            if w[1].lo > w[0].hi {
                return Err(PiecewiseError::Gap { at: w[0].hi });
            }
        }
        let base = segments[segments.len() - 1].hi - segments[0].lo;
        let period = if period > 0.0 {
            if (base - period).abs() > 1e-12 * period.max(1.0) {
                return Err(PiecewiseError::PeriodMismatch { period, base });
            }
            Some(period)
        } else {
            None
        };
        Ok(Self { period, segments })
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn base_lo(&self) -> f64 {
        self.segments[0].lo
    }

    fn base_hi(&self) -> f64 {
        self.segments[self.segments.len() - 1].hi
    }

    /// Segment index and the time at which its body is evaluated.
    pub(crate) fn locate(&self, t: f64) -> (usize, f64) {
        let u = match self.period {
            Some(p) => {
                let lo = self.base_lo();
                let u = lo + (t - lo).rem_euclid(p);
                if u >= self.base_hi() {
                    lo
                } else {
                    u
                }
            }
            None => t,
        };
        let i = self
            .segments
            .partition_point(|s| s.hi <= u)
            .min(self.segments.len() - 1);
        (i, u)
    }

    fn collect(&self, a: f64, b: f64, mode: Collect, out: &mut Vec<f64>) {
        match self.period {
            Some(p) => {
                let lo = self.base_lo();
                let k0 = ((a - lo) / p).floor() as i64;
                let k1 = ((b - lo) / p).floor() as i64;
                for k in k0..=k1 {
                    let shift = k as f64 * p;
                    for s in &self.segments {
                        if mode == Collect::Breakpoints {
                            let edge = s.lo + shift;
                            if edge >= a && edge <= b {
                                out.push(edge);
                            }
                        }
                        let lo_b = s.lo.max(a - shift);
                        let hi_b = s.hi.min(b - shift);
                        if lo_b < hi_b && !s.body.is_const() {
                            let start = out.len();
                            s.body.collect(lo_b, hi_b, mode, out);
                            for v in &mut out[start..] {
                                *v += shift;
                            }
                        }
                    }
                }
            }
            None => {
                let n = self.segments.len();
                for (i, s) in self.segments.iter().enumerate() {
                    if i > 0 && mode == Collect::Breakpoints && s.lo >= a && s.lo <= b {
                        out.push(s.lo);
                    }
                    let lo_s = if i == 0 { f64::NEG_INFINITY } else { s.lo };
                    let hi_s = if i + 1 == n { f64::INFINITY } else { s.hi };
                    let lo_b = lo_s.max(a);
                    let hi_b = hi_s.min(b);
                    if lo_b < hi_b && !s.body.is_const() {
                        s.body.collect(lo_b, hi_b, mode, out);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Collect {
    Breakpoints,
    Singularities,
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn time() -> Self {
        Expr::Time
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Time => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Abs(a) => a.eval(t).abs(),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, n) => {
                let x = a.eval(t);
                if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
                    x.powi(*n as i32)
                } else {
                    x.powf(*n)
                }
            }
            Expr::Sin(a) => a.eval(t).sin(),
            Expr::Cos(a) => a.eval(t).cos(),
            Expr::Exp(a) => a.eval(t).exp(),
            Expr::Piecewise(p) => {
                let (i, u) = p.locate(t);
                p.segments[i].body.eval(u)
            }
        }
    }

    /// True when the expression does not depend on `t`.
    pub fn is_const(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Time => false,
            Expr::Neg(a) | Expr::Abs(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.is_const()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_const() && b.is_const()
            }
            Expr::Piecewise(p) => p.period.is_none() && p.segments.len() == 1 && p.segments[0].body.is_const(),
        }
    }

    /// `(slope, intercept)` when the expression is affine in `t`.
    pub fn affine(&self) -> Option<(f64, f64)> {
        if self.is_const() {
            return Some((0.0, self.eval(0.0)));
        }
        match self {
            Expr::Time => Some((1.0, 0.0)),
            Expr::Neg(a) => a.affine().map(|(m, c)| (-m, -c)),
            Expr::Add(a, b) => {
                let (m1, c1) = a.affine()?;
                let (m2, c2) = b.affine()?;
                Some((m1 + m2, c1 + c2))
            }
            Expr::Sub(a, b) => {
                let (m1, c1) = a.affine()?;
                let (m2, c2) = b.affine()?;
                Some((m1 - m2, c1 - c2))
            }
            Expr::Mul(a, b) if a.is_const() => {
                let k = a.eval(0.0);
                b.affine().map(|(m, c)| (k * m, k * c))
            }
            Expr::Mul(a, b) if b.is_const() => {
                let k = b.eval(0.0);
                a.affine().map(|(m, c)| (k * m, k * c))
            }
            Expr::Div(a, b) if b.is_const() => {
                let k = b.eval(0.0);
                a.affine().map(|(m, c)| (m / k, c / k))
            }
            Expr::Pow(a, n) if *n == 1.0 => a.affine(),
            _ => None,
        }
    }

    /// Ascending polynomial coefficients, when the expression is a polynomial in `t`.
    pub fn poly(&self) -> Option<Vec<f64>> {
        const MAX_DEGREE: usize = 32;
        if self.is_const() {
            return Some(vec![self.eval(0.0)]);
        }
        let p = match self {
            Expr::Time => vec![0.0, 1.0],
            Expr::Neg(a) => a.poly()?.into_iter().map(|c| -c).collect(),
            Expr::Add(a, b) => poly_add(&a.poly()?, &b.poly()?, 1.0),
            Expr::Sub(a, b) => poly_add(&a.poly()?, &b.poly()?, -1.0),
            Expr::Mul(a, b) => poly_mul(&a.poly()?, &b.poly()?),
            Expr::Div(a, b) if b.is_const() => {
                let k = b.eval(0.0);
                a.poly()?.into_iter().map(|c| c / k).collect()
            }
            Expr::Pow(a, n) if n.fract() == 0.0 && *n >= 0.0 && *n <= MAX_DEGREE as f64 => {
                let base = a.poly()?;
                let mut acc = vec![1.0];
                for _ in 0..(*n as usize) {
                    acc = poly_mul(&acc, &base);
                }
                acc
            }
            _ => return None,
        };
        (p.len() <= MAX_DEGREE + 1).then_some(p)
    }

    /// Kinks, jumps and singular points in `[a, b]`, sorted and deduplicated.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if a <= b {
            self.collect(a, b, Collect::Breakpoints, &mut out);
        }
        finish_points(out, a, b)
    }

    /// Points in `[a, b]` where a denominator (or a negative power base) vanishes.
    pub fn singularities(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if a <= b {
            self.collect(a, b, Collect::Singularities, &mut out);
        }
        finish_points(out, a, b)
    }

    fn collect(&self, a: f64, b: f64, mode: Collect, out: &mut Vec<f64>) {
        if self.is_const() {
            return;
        }
        match self {
            Expr::Num(_) | Expr::Time => {}
            Expr::Neg(g) | Expr::Sin(g) | Expr::Cos(g) | Expr::Exp(g) => g.collect(a, b, mode, out),
            Expr::Pow(g, n) => {
                g.collect(a, b, mode, out);
                if *n < 0.0 || (mode == Collect::Breakpoints && n.fract() != 0.0) {
                    g.roots(a, b, out);
                }
            }
            Expr::Abs(g) => {
                g.collect(a, b, mode, out);
                if mode == Collect::Breakpoints {
                    g.roots(a, b, out);
                }
            }
            Expr::Add(f, g) | Expr::Sub(f, g) | Expr::Mul(f, g) => {
                f.collect(a, b, mode, out);
                g.collect(a, b, mode, out);
            }
            Expr::Div(f, g) => {
                f.collect(a, b, mode, out);
                g.collect(a, b, mode, out);
                g.roots(a, b, out);
            }
            Expr::Piecewise(p) => p.collect(a, b, mode, out),
        }
    }

    /// Appends the zeros of the expression in `[a, b]`.
    ///
    /// Affine arguments of `sin`/`cos` (optionally offset by a constant) are
    /// solved exactly; everything else falls back to a sign-change scan.
    pub(crate) fn roots(&self, a: f64, b: f64, out: &mut Vec<f64>) {
        if self.is_const() || !(a <= b) {
            return;
        }
        if let Some((m, c)) = self.affine() {
            if m != 0.0 {
                let r = -c / m;
                if r >= a && r <= b {
                    out.push(r);
                }
            }
            return;
        }
        if let Some((is_cos, m, c, level)) = trig_offset(self) {
            if level.abs() <= 1.0 {
                if is_cos {
                    let base = level.acos();
                    affine_lattice(m, c, base, 2.0 * PI, a, b, out);
                    affine_lattice(m, c, -base, 2.0 * PI, a, b, out);
                } else {
                    let base = level.asin();
                    affine_lattice(m, c, base, 2.0 * PI, a, b, out);
                    affine_lattice(m, c, PI - base, 2.0 * PI, a, b, out);
                }
            }
            return;
        }
        match self {
            Expr::Neg(g) => g.roots(a, b, out),
            Expr::Pow(g, n) if *n > 0.0 => g.roots(a, b, out),
            Expr::Mul(f, g) => {
                f.roots(a, b, out);
                g.roots(a, b, out);
            }
            Expr::Div(f, _) => f.roots(a, b, out),
            Expr::Exp(_) => {}
            Expr::Sin(g) | Expr::Cos(g) if g.affine().is_some() => {
                let (m, c) = g.affine().expect("guarded");
                let offset = if matches!(self, Expr::Cos(_)) { FRAC_PI_2 } else { 0.0 };
                affine_lattice(m, c, offset, PI, a, b, out);
            }
            _ => scan_roots(|t| self.eval(t), a, b, out),
        }
    }

    /// Exact integral over `[a, b]`, assuming no breakpoint lies strictly inside.
    pub(crate) fn closed_integral(&self, a: f64, b: f64) -> Option<f64> {
        if self.is_const() {
            return Some(self.eval(0.0) * (b - a));
        }
        if let Some(p) = self.poly() {
            return Some(poly_antiderivative(&p, b) - poly_antiderivative(&p, a));
        }
        let v = match self {
            Expr::Neg(g) => -g.closed_integral(a, b)?,
            Expr::Add(f, g) => f.closed_integral(a, b)? + g.closed_integral(a, b)?,
            Expr::Sub(f, g) => f.closed_integral(a, b)? - g.closed_integral(a, b)?,
            Expr::Mul(f, g) if f.is_const() => f.eval(0.0) * g.closed_integral(a, b)?,
            Expr::Mul(f, g) if g.is_const() => g.eval(0.0) * f.closed_integral(a, b)?,
            Expr::Div(f, g) if g.is_const() => f.closed_integral(a, b)? / g.eval(0.0),
            Expr::Div(f, g) if f.is_const() => {
                let (m, c) = g.affine()?;
                f.eval(0.0) * log_ratio(m, c, a, b)?
            }
            Expr::Pow(g, n) => {
                let (m, c) = g.affine()?;
                if m == 0.0 {
                    return None;
                }
                if *n == -1.0 {
                    log_ratio(m, c, a, b)?
                } else {
                    let k = n + 1.0;
                    ((m * b + c).powf(k) - (m * a + c).powf(k)) / (m * k)
                }
            }
            Expr::Sin(g) => {
                let (m, c) = g.affine()?;
                -((m * b + c).cos() - (m * a + c).cos()) / m
            }
            Expr::Cos(g) => {
                let (m, c) = g.affine()?;
                ((m * b + c).sin() - (m * a + c).sin()) / m
            }
            Expr::Exp(g) => {
                let (m, c) = g.affine()?;
                ((m * b + c).exp() - (m * a + c).exp()) / m
            }
            Expr::Abs(g) => {
                let s = g.eval(0.5 * (a + b)).signum();
                s * g.closed_integral(a, b)?
            }
            Expr::Piecewise(p) => {
                let mid = 0.5 * (a + b);
                let (i, u) = p.locate(mid);
                let shift = mid - u;
                p.segments[i].body.closed_integral(a - shift, b - shift)?
            }
            _ => return None,
        };
        v.is_finite().then_some(v)
    }
}

/// `(is_cos, slope, intercept, level)` for `sin(mt+c) ± k` or `k ± cos(mt+c)`,
/// meaning the zeros solve `trig(mt+c) = level`.
fn trig_offset(e: &Expr) -> Option<(bool, f64, f64, f64)> {
    let trig = |x: &Expr| match x {
        Expr::Sin(g) => g.affine().map(|(m, c)| (false, m, c)),
        Expr::Cos(g) => g.affine().map(|(m, c)| (true, m, c)),
        _ => None,
    };
    match e {
        Expr::Add(x, y) if y.is_const() => trig(x).map(|(k, m, c)| (k, m, c, -y.eval(0.0))),
        Expr::Add(x, y) if x.is_const() => trig(y).map(|(k, m, c)| (k, m, c, -x.eval(0.0))),
        Expr::Sub(x, y) if y.is_const() => trig(x).map(|(k, m, c)| (k, m, c, y.eval(0.0))),
        Expr::Sub(x, y) if x.is_const() => trig(y).map(|(k, m, c)| (k, m, c, x.eval(0.0))),
        _ => None,
    }
}

/// Solutions of `m t + c = offset + k·spacing` in `[a, b]`.
fn affine_lattice(m: f64, c: f64, offset: f64, spacing: f64, a: f64, b: f64, out: &mut Vec<f64>) {
    if m == 0.0 {
        return;
    }
    let (u0, u1) = {
        let ua = m * a + c;
        let ub = m * b + c;
        (ua.min(ub), ua.max(ub))
    };
    let k0 = ((u0 - offset) / spacing).ceil() as i64;
    let k1 = ((u1 - offset) / spacing).floor() as i64;
    for k in k0..=k1 {
        let t = (offset + k as f64 * spacing - c) / m;
        if t >= a && t <= b {
            out.push(t);
        }
    }
}

pub(crate) fn scan_roots(f: impl Fn(f64) -> f64, a: f64, b: f64, out: &mut Vec<f64>) {
    let n = (((b - a) / 0.01).ceil() as usize).clamp(32, 2_000_000);
    let h = (b - a) / n as f64;
    let mut t_prev = a;
    let mut f_prev = f(a);
    if f_prev == 0.0 {
        out.push(a);
    }
    for i in 1..=n {
        let t = if i == n { b } else { a + i as f64 * h };
        let v = f(t);
        if v == 0.0 {
            out.push(t);
        } else if f_prev != 0.0 && f_prev.signum() != v.signum() && v.is_finite() && f_prev.is_finite() {
            let (mut lo, mut hi, mut flo) = (t_prev, t, f_prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        t_prev = t;
        f_prev = v;
    }
}

fn finish_points(mut out: Vec<f64>, a: f64, b: f64) -> Vec<f64> {
    out.retain(|v| v.is_finite() && *v >= a && *v <= b);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + y.abs()));
    out
}

fn log_ratio(m: f64, c: f64, a: f64, b: f64) -> Option<f64> {
    if m == 0.0 {
        return None;
    }
    let ua = m * a + c;
    let ub = m * b + c;
    if ua == 0.0 || ub == 0.0 || ua.signum() != ub.signum() {
        return None;
    }
    Some((ub / ua).ln() / m)
}

fn poly_add(p: &[f64], q: &[f64], sign: f64) -> Vec<f64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| p.get(i).copied().unwrap_or(0.0) + sign * q.get(i).copied().unwrap_or(0.0))
        .collect()
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            r[i + j] += a * b;
        }
    }
    r
}

fn poly_antiderivative(p: &[f64], t: f64) -> f64 {
    p.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, c)| acc * t + c / (i + 1) as f64)
        * t
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Time => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n:?}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Piecewise(p) => {
                write!(f, "pw({:?}", p.period.unwrap_or(0.0))?;
                for s in &p.segments {
                    write!(f, "; [{:?}, {:?}): {}", s.lo, s.hi, s.body)?;
                }
                write!(f, ")")
            }
        }
    }
}

macro_rules! bin_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

bin_op!(Add, add, Add);
bin_op!(Sub, sub, Sub);
bin_op!(Mul, mul, Mul);
bin_op!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_wave() -> Expr {
        Expr::Piecewise(
            Piecewise::new(
                2.0,
                vec![
                    Segment { lo: 0.0, hi: 1.0, body: Expr::Num(1.0) },
                    Segment { lo: 1.0, hi: 2.0, body: Expr::Num(0.0) },
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn square_wave_right_limits() {
        let w = sq_wave();
        assert_eq!(w.eval(0.5), 1.0);
        assert_eq!(w.eval(1.0), 0.0);
        assert_eq!(w.eval(2.0), 1.0);
        assert_eq!(w.eval(-0.5), 0.0);
        assert_eq!(w.eval(1001.25), 0.0);
    }

    #[test]
    fn piecewise_rejects_overlap_gap_and_period() {
        let seg = |lo, hi| Segment { lo, hi, body: Expr::Num(1.0) };
        assert!(matches!(
            Piecewise::new(0.0, vec![seg(0.0, 1.0), seg(0.5, 2.0)]),
            Err(PiecewiseError::Overlap { .. })
        ));
        assert!(matches!(
            Piecewise::new(0.0, vec![seg(0.0, 1.0), seg(1.5, 2.0)]),
            Err(PiecewiseError::Gap { .. })
        ));
        assert!(matches!(
            Piecewise::new(3.0, vec![seg(0.0, 1.0), seg(1.0, 2.0)]),
            Err(PiecewiseError::PeriodMismatch { .. })
        ));
    }

    #[test]
    fn sine_roots_are_exact() {
        let e = Expr::Sin(Box::new(Expr::Time));
        let mut out = vec![];
        e.roots(0.0, 10.0, &mut out);
        assert_eq!(out, vec![0.0, PI, 2.0 * PI, 3.0 * PI]);
    }

    #[test]
    fn abs_kinks_show_up_as_breakpoints() {
        let e = Expr::Abs(Box::new(Expr::Sin(Box::new(Expr::Time)))) - Expr::Sin(Box::new(Expr::Time));
        let bps = e.breakpoints(1.0, 7.0);
        assert_eq!(bps.len(), 2);
        assert!((bps[0] - PI).abs() < 1e-15 && (bps[1] - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn periodic_breakpoints_repeat() {
        let bps = sq_wave().breakpoints(0.0, 5.0);
        assert_eq!(bps, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn scan_handles_generic_roots() {
        // t^3 - 2 has one root at 2^(1/3); not affine, not trig
        let e = Expr::Pow(Box::new(Expr::Time), 3.0) - Expr::Num(2.0);
        let mut out = vec![];
        e.roots(0.0, 3.0, &mut out);
        assert_eq!(out.len(), 1);
        assert!((out[0] - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_integrals_match_antiderivatives() {
        let t = Expr::Time;
        let inv = Expr::Num(1.0) / t.clone();
        assert!((inv.closed_integral(4.0, 8.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let quad = t.clone() * t.clone() + Expr::Num(3.0);
        assert!((quad.closed_integral(0.0, 3.0).unwrap() - 18.0).abs() < 1e-12);
        let ex = Expr::Exp(Box::new(-t.clone()));
        assert!((ex.closed_integral(0.0, 1.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!(Expr::Exp(Box::new(t.clone() * t)).closed_integral(0.0, 1.0).is_none());
    }
}
