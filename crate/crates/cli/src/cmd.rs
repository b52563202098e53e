use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ddestab::criteria::{run_all, CheckParams};
use ddestab::estimator::{classify, classify_slices, fit_exponential};
use ddestab::expr::PiecewiseFn;
use ddestab::model::{DelayEquation, EquationFile, InitialData, ModelError};
use ddestab::solver::{ensemble_decay, fundamental, random_histories, SolveError, StepControl};
use serde_json::json;
use thiserror::Error;

use crate::config::{CheckArgs, Cli, Command, Common, FundamentalArgs, SimulateArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
    #[error("r: {0}")]
    Comparison(#[from] ddestab::expr::ParseError),
    #[error("solver: {0}")]
    Solve(#[from] SolveError),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check(a) => check(a),
        Command::Simulate(a) => simulate(a),
        Command::Fundamental(a) => fundamental_cmd(a),
    }
}

fn load(c: &Common) -> Result<(EquationFile, DelayEquation, Option<InitialData>)> {
    let path = &c.equation;
    let src = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let model = |source| CliError::Model { path: path.clone(), source };
    let file = EquationFile::from_json(&src).map_err(model)?;
    let (eq, init) = file.build(&c.overrides()).map_err(model)?;
    if !(c.horizon > eq.t_start()) {
        return Err(CliError::Usage(format!("horizon {} must exceed t_start {}", c.horizon, eq.t_start())));
    }
    Ok((file, eq, init))
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<()> {
    match out {
        Some(dir) if dir.is_dir() => write(&dir.join(name), body),
        Some(file) => write(file, body),
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{body}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<Option<&Path>> {
    let Some(dir) = out else { return Ok(None) };
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    Ok(Some(dir.as_path()))
}

fn check(a: CheckArgs) -> Result<u8> {
    let (file, eq, _) = load(&a.common)?;
    if !(a.step > 0.0 && a.margin > 0.0) {
        return Err(CliError::Usage("step and margin must be positive".into()));
    }
    let mut params = file.params.clone();
    params.extend(a.common.overrides());
    let mut p = CheckParams::new(a.common.horizon, a.step);
    p.margin = a.margin;
    p.window_start = a.window_start;
    p.index_set = a.index_set;
    p.big_r = a.window;
    p.assume_divergent = a.assume_divergent;
    p.assume_nonvanishing = a.assume_nonvanishing;
    p.r = a.r.as_deref().map(|s| PiecewiseFn::parse_with(s, &params)).transpose()?;
    p.ctrl = StepControl::for_equation(&eq, p.horizon);
    let report = run_all(&eq, &p);
    emit(a.common.out.as_deref(), "report.json", &report.to_json())?;
    Ok(if report.validation.passed() { 0 } else { 2 })
}

fn control(eq: &DelayEquation, horizon: f64, step: Option<f64>) -> Result<StepControl> {
    match step {
        Some(s) if s > 0.0 => Ok(StepControl::with_max_step(s)),
        Some(s) => Err(CliError::Usage(format!("step must be positive, got {s}"))),
        None => Ok(StepControl::for_equation(eq, horizon)),
    }
}

fn simulate(a: SimulateArgs) -> Result<u8> {
    let (_, eq, init) = load(&a.common)?;
    let t0 = init.as_ref().map_or(eq.t_start(), |i| i.t0);
    let h = a.common.horizon;
    if h <= t0 {
        return Err(CliError::Usage(format!("horizon {h} must exceed the initial time {t0}")));
    }
    let ctrl = control(&eq, h, a.step)?;
    let mut inits: Vec<InitialData> = init.into_iter().collect();
    inits.extend(random_histories(a.histories, t0, a.seed));
    if inits.is_empty() {
        return Err(CliError::Usage("nothing to simulate: no history in the file and --histories 0".into()));
    }
    let trajectories = ensemble_decay(&eq, &inits, h, &ctrl).into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    let class = classify(&trajectories).map_err(|e| CliError::Usage(e.to_string()))?;
    let dir = out_dir(&a.common.out)?;
    if let Some(dir) = dir {
        for (i, tr) in trajectories.iter().enumerate() {
            write(&dir.join(format!("trajectory_{i:02}.csv")), &tr.to_csv())?;
        }
    }
    let summary = json!({
        "horizon": h,
        "seed": a.seed,
        "histories": inits.len(),
        "final_values": trajectories.iter().map(|t| t.last_value()).collect::<Vec<_>>(),
        "classification": class,
    });
    emit(dir, "summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(0)
}

fn fundamental_cmd(a: FundamentalArgs) -> Result<u8> {
    let (_, eq, _) = load(&a.common)?;
    let h = a.common.horizon;
    if a.s < eq.t_start() || a.s >= h {
        return Err(CliError::Usage(format!("need t_start <= s < horizon, got s = {}", a.s)));
    }
    let ctrl = control(&eq, h, a.step)?;
    let slice = fundamental(&eq, a.s, h, &ctrl)?;
    let dir = out_dir(&a.common.out)?;
    if let Some(dir) = dir {
        write(&dir.join("fundamental.csv"), &slice.trajectory.to_csv())?;
    }
    let (fit, fit_error) = match fit_exponential(std::slice::from_ref(&slice)) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = json!({
        "s": a.s,
        "horizon": h,
        "final_value": slice.trajectory.last_value(),
        "fit": fit,
        "fit_error": fit_error,
        "classification": classify_slices(std::slice::from_ref(&slice)).ok(),
    });
    emit(dir, "fit.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(0)
}
