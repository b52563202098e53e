//! Browser bindings: each operation takes an equation file as JSON text and
//! returns JSON text, so the page needs no schema glue.
//!
//! The plain functions ([`simulate`], [`fundamental`], [`check`]) are what the
//! `wasm_bindgen` exports call; they also run natively for testing.

use std::collections::BTreeMap;

use ddestab::criteria::{run_all, CheckParams};
use ddestab::estimator::{classify, fit_exponential};
use ddestab::model::{DelayEquation, EquationFile, InitialData};
use ddestab::solver::{ensemble_decay, fundamental as fundamental_slice, random_histories, StepControl, Trajectory};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points per plotted curve.
const PLOT_POINTS: usize = 600;

#[derive(Debug, Serialize)]
struct Curves {
    t: Vec<f64>,
    series: Vec<Vec<f64>>,
}

fn load(src: &str, params: &str) -> Result<(DelayEquation, Option<InitialData>), String> {
    let file = EquationFile::from_json(src).map_err(|e| e.to_string())?;
    let overrides: BTreeMap<String, f64> = if params.trim().is_empty() {
        BTreeMap::new()
    } else {
        serde_json::from_str(params).map_err(|e| format!("params: {e}"))?
    };
    file.build(&overrides).map_err(|e| e.to_string())
}

fn sample(trs: &[Trajectory], t0: f64, t1: f64) -> Curves {
    let t: Vec<f64> = (0..=PLOT_POINTS).map(|i| t0 + (t1 - t0) * i as f64 / PLOT_POINTS as f64).collect();
    let series = trs.iter().map(|tr| t.iter().map(|&s| tr.value(s)).collect()).collect();
    Curves { t, series }
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// Solutions for the file's history (if any) plus `histories` random ones.
pub fn simulate(src: &str, params: &str, horizon: f64, histories: usize, seed: u64) -> Result<String, String> {
    let (eq, init) = load(src, params)?;
    let t0 = init.as_ref().map_or(eq.t_start(), |i| i.t0);
    if !(horizon > t0) {
        return Err(format!("horizon must exceed {t0}"));
    }
    let mut inits: Vec<InitialData> = init.into_iter().collect();
    inits.extend(random_histories(histories, t0, seed));
    let ctrl = StepControl::for_equation(&eq, horizon);
    let trs = ensemble_decay(&eq, &inits, horizon, &ctrl).into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let class = classify(&trs).map_err(|e| e.to_string())?;
    Ok(to_json(&serde_json::json!({ "curves": sample(&trs, t0, horizon), "classification": class })))
}

/// `X(t, s)` on `[s, horizon]` with its exponential fit when it decays.
pub fn fundamental(src: &str, params: &str, s: f64, horizon: f64) -> Result<String, String> {
    let (eq, _) = load(src, params)?;
    if !(s >= eq.t_start() && horizon > s) {
        return Err(format!("need t_start <= s < horizon, got s = {s}"));
    }
    let slice = fundamental_slice(&eq, s, horizon, &StepControl::for_equation(&eq, horizon)).map_err(|e| e.to_string())?;
    let fit = fit_exponential(std::slice::from_ref(&slice));
    let curves = sample(std::slice::from_ref(&slice.trajectory), s, horizon);
    Ok(to_json(&serde_json::json!({
        "curves": curves,
        "fit": fit.as_ref().ok(),
        "fit_error": fit.err().map(|e| e.to_string()),
    })))
}

/// The full check report.
pub fn check(src: &str, params: &str, horizon: f64, step: f64) -> Result<String, String> {
    let (eq, _) = load(src, params)?;
    if !(horizon > eq.t_start() && step > 0.0) {
        return Err("need horizon > t_start and step > 0".into());
    }
    let mut p = CheckParams::new(horizon, step);
    p.ctrl = StepControl::for_equation(&eq, horizon);
    Ok(run_all(&eq, &p).to_json())
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(src: &str, params: &str, horizon: f64, histories: usize, seed: u32) -> Result<String, JsValue> {
    simulate(src, params, horizon, histories, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fundamental)]
pub fn fundamental_js(src: &str, params: &str, s: f64, horizon: f64) -> Result<String, JsValue> {
    fundamental(src, params, s, horizon).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = check)]
pub fn check_js(src: &str, params: &str, horizon: f64, step: f64) -> Result<String, JsValue> {
    check(src, params, horizon, step).map_err(|e| JsValue::from_str(&e))
}
