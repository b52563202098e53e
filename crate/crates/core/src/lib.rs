//! Stability tests for scalar linear delay differential equations
//! `ẋ(t) + Σ aₖ(t) x(hₖ(t)) = f(t)` with piecewise coefficients and delays,
//! together with a dense-output solver used to cross-check them.

pub mod criteria;
pub mod estimator;
pub mod expr;
pub mod model;
pub mod proxy;
pub mod solver;
pub mod transform;
