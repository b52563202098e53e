//! Piecewise-analytic real functions of time.
//!
//! Coefficients, delays, forcing terms and initial histories are all written
//! in a small expression language (see [`parse`]) and wrapped in a
//! [`PiecewiseFn`], which knows its breakpoints and how to integrate itself.

mod ast;
mod extremum;
mod parse;
mod piecewise;
mod primitive;
pub(crate) mod quad;

pub use ast::{Expr, Piecewise, Segment};
pub use extremum::{liminf_estimate, limsup_estimate, Extremum};
pub use parse::{parse, parse_with, ParseError};
pub use piecewise::{EvalError, IntegrateError, PiecewiseFn, RealFn};
pub use primitive::Primitive;

/// Default absolute tolerance for quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
