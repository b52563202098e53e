use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DelayEquation, InitialData, ModelError, Term};
use crate::expr::PiecewiseFn;

/// On-disk equation description.
///
/// ```json
/// { "t_start": 0, "terms": [{ "coef": "alpha", "delay": "t - 1" }],
///   "history": { "phi": "1", "x0": 1, "t0": 0 }, "params": { "alpha": 0.3 } }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationFile {
    pub t_start: f64,
    pub terms: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<HistorySpec>,
    /// Default values for named parameters used in the expressions.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: String,
    pub delay: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySpec {
    pub phi: String,
    pub x0: f64,
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

impl EquationFile {
    pub fn from_json(src: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(src)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("equation file serializes")
    }

    /// Builds the equation and optional initial data; `overrides` replace file params.
    pub fn build(&self, overrides: &BTreeMap<String, f64>) -> Result<(DelayEquation, Option<InitialData>), ModelError> {
        let mut params = self.params.clone();
        params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        let parse = |field: String, src: &str| {
            PiecewiseFn::parse_with(src, &params).map_err(|source| ModelError::Expr { field, source })
        };
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(k, t)| {
                Ok(Term::new(parse(format!("terms[{k}].coef"), &t.coef)?, parse(format!("terms[{k}].delay"), &t.delay)?))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let mut eq = DelayEquation::new(terms, self.t_start)?;
        if let Some(f) = &self.forcing {
            eq = eq.with_forcing(parse("forcing".into(), f)?);
        }
        let init = match &self.history {
            None => None,
            Some(h) => {
                if h.t0 < self.t_start {
                    return Err(ModelError::InitialTime { t0: h.t0, t_start: self.t_start });
                }
                let phi = parse("history.phi".into(), &h.phi)?.with_domain_start(f64::NEG_INFINITY);
                let mut init = InitialData::new(phi, h.x0, h.t0);
                if let Some(floor) = h.floor {
                    init = init.with_floor(floor);
                }
                Some(init)
            }
        };
        Ok((eq, init))
    }
}
