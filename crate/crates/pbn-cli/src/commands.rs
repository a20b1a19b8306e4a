//! The eval, evolve, and stationary commands. Each returns the full
//! stdout text plus an exit code so the binary stays a thin shell and
//! tests can drive commands directly.

use std::path::Path;

use pbn_core::fmt::sig15;
use pbn_core::lang::parse_query;
use pbn_core::markov::{expectation_at_t, stationary, DEFAULT_TAIL_TOL};
use pbn_core::observable::system_ket;

use crate::model::{load_and_build, CliError};

pub struct CmdOutput {
    pub stdout: String,
    pub exit: i32,
}

impl CmdOutput {
    pub fn ok(stdout: String) -> Self {
        CmdOutput { stdout, exit: 0 }
    }
}

pub fn resolve_tol(tol: Option<f64>) -> Result<Option<f64>, CliError> {
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Usage(format!(
                "--tol must be a positive finite number, got {t}"
            )));
        }
    }
    Ok(tol)
}

/// Message plus a caret line pointing at a byte position in the query.
fn point_at(query: &str, position: usize, message: &str) -> String {
    let col = query
        .get(..position)
        .map_or_else(|| query.chars().count(), |s| s.chars().count());
    format!("{message}\n  {query}\n  {}^", " ".repeat(col))
}

pub fn cmd_eval(model: &Path, tol: Option<f64>, query: &str) -> Result<CmdOutput, CliError> {
    let tol = resolve_tol(tol)?;
    let mut loaded = load_and_build(model)?;
    if let Some(t) = tol {
        loaded.context.set_tail_tol(t);
    }
    let node = parse_query(query)
        .map_err(|e| CliError::Query(point_at(query, e.position(), &e.to_string())))?;
    let value = loaded
        .context
        .evaluate(&node)
        .map_err(|e| CliError::Query(e.to_string()))?;
    Ok(CmdOutput::ok(format!("{}\n", sig15(value))))
}

pub fn cmd_evolve(
    model: &Path,
    tol: Option<f64>,
    t_max: f64,
    step: f64,
    observable: Option<&str>,
) -> Result<CmdOutput, CliError> {
    let tail = resolve_tol(tol)?.unwrap_or(DEFAULT_TAIL_TOL);
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(CliError::Usage(format!(
            "--t-max must be a finite nonnegative number, got {t_max}"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(CliError::Usage(format!(
            "--step must be a finite positive number, got {step}"
        )));
    }
    let loaded = load_and_build(model)?;
    let ctx = &loaded.context;
    let dynamics = ctx.dynamics().ok_or_else(|| {
        CliError::Usage("this model is static; evolve needs kind \"dtmc\" or \"ctmc\"".into())
    })?;
    let observable = observable
        .map(|name| {
            ctx.observable(name)
                .map(|obs| (name, obs))
                .ok_or_else(|| {
                    CliError::Usage(format!("observable {name:?} is not defined in the model"))
                })
        })
        .transpose()?;

    let mut out = String::from("t");
    for label in ctx.space().labels() {
        out.push_str(",p:");
        out.push_str(label);
    }
    if let Some((name, _)) = observable {
        out.push_str(",E[");
        out.push_str(name);
        out.push(']');
    }
    out.push('\n');

    let initial = system_ket(ctx.space());
    // the +1e-9 keeps a t_max that is a whole multiple of step from
    // losing its last row to division rounding
    let rows = (t_max / step + 1e-9).floor() as u64;
    for k in 0..=rows {
        let t = k as f64 * step;
        let ket = dynamics.evolve_with(&initial, t, tail).map_err(|e| match e {
            pbn_core::Error::NonIntegerTime(bad) => CliError::Usage(format!(
                "discrete-time dynamics cannot reach t = {bad}; use a whole number of steps"
            )),
            other => CliError::Run(other.to_string()),
        })?;
        out.push_str(&sig15(t));
        for c in ket.coefficients() {
            out.push(',');
            out.push_str(&sig15(*c));
        }
        if let Some((_, x)) = observable {
            let v = expectation_at_t(|y| y, x, &ket).map_err(|e| CliError::Run(e.to_string()))?;
            out.push(',');
            out.push_str(&sig15(v));
        }
        out.push('\n');
    }
    Ok(CmdOutput::ok(out))
}

pub fn cmd_stationary(model: &Path, tol: Option<f64>) -> Result<CmdOutput, CliError> {
    resolve_tol(tol)?;
    let loaded = load_and_build(model)?;
    let ctx = &loaded.context;
    let dynamics = ctx.dynamics().ok_or_else(|| {
        CliError::Usage("this model is static; stationary needs kind \"dtmc\" or \"ctmc\"".into())
    })?;
    let pi = stationary(dynamics).map_err(|e| CliError::Run(e.to_string()))?;
    let mut out = String::from("state,p\n");
    for (label, p) in ctx.space().labels().zip(pi.coefficients()) {
        out.push_str(label);
        out.push(',');
        out.push_str(&sig15(*p));
        out.push('\n');
    }
    Ok(CmdOutput::ok(out))
}
