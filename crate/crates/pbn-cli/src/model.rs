//! Model files: JSON documents binding a space, optional dynamics,
//! and named observables, events, and lookup functions.
//!
//! Validation failures point into the document with a JSON-pointer
//! style path, e.g. `/dynamics/1` or `/observables/X`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use pbn_core::lang::{EvalContext, Func};
use pbn_core::markov::{Dynamics, Generator, TransitionMatrix};
use pbn_core::{DiscreteSpace, Event, Observable};
use serde::Deserialize;

pub const MODEL_SCHEMA: &str = "model-schema-1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    #[serde(default)]
    pub name: Option<String>,
    pub kind: String,
    pub states: Vec<String>,
    pub measure: HashMap<String, f64>,
    /// Rescale the measure by its sum instead of requiring it to be
    /// normalized as written.
    #[serde(default)]
    pub normalize: bool,
    /// Row-stochastic matrix for `dtmc`, rate matrix for `ctmc`.
    #[serde(default)]
    pub dynamics: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub observables: BTreeMap<String, HashMap<String, f64>>,
    #[serde(default)]
    pub events: BTreeMap<String, Vec<String>>,
    /// Lookup tables usable as `f(X)` in queries, as `[x, f(x)]` rows.
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Static,
    Dtmc,
    Ctmc,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {pointer}: {message}")]
    Model {
        path: String,
        pointer: String,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    /// A query failed to parse or evaluate; the message may span
    /// several lines to point at the offending spot.
    #[error("{0}")]
    Query(String),
    #[error("{0}")]
    Run(String),
}

#[derive(Debug)]
pub struct LoadedModel {
    pub kind: ModelKind,
    pub context: EvalContext,
}

pub fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: shown, source })
}

fn model_err(path: &str, pointer: impl Into<String>, message: impl ToString) -> CliError {
    CliError::Model {
        path: path.to_string(),
        pointer: pointer.into(),
        message: message.to_string(),
    }
}

fn valid_state_label(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Shape-level checks: schema, kind, state labels, measure keys, and
/// dynamics dimensions. Numeric content is left to the builders.
pub fn validate_structure(model: &ModelFile, path: &str) -> Result<ModelKind, CliError> {
    if model.schema != MODEL_SCHEMA {
        return Err(model_err(
            path,
            "/schema",
            format!("unsupported schema {:?} (expected {MODEL_SCHEMA:?})", model.schema),
        ));
    }
    let kind = match model.kind.as_str() {
        "static" => ModelKind::Static,
        "dtmc" => ModelKind::Dtmc,
        "ctmc" => ModelKind::Ctmc,
        other => {
            return Err(model_err(
                path,
                "/kind",
                format!("unknown kind {other:?} (expected \"static\", \"dtmc\", or \"ctmc\")"),
            ))
        }
    };
    if model.states.is_empty() {
        return Err(model_err(path, "/states", "at least one state is required"));
    }
    let mut seen = std::collections::HashSet::new();
    for (i, label) in model.states.iter().enumerate() {
        if !valid_state_label(label) {
            return Err(model_err(
                path,
                format!("/states/{i}"),
                format!("bad state label {label:?} (allowed: letters, digits, underscore)"),
            ));
        }
        if !seen.insert(label.as_str()) {
            return Err(model_err(
                path,
                format!("/states/{i}"),
                format!("duplicate state {label:?}"),
            ));
        }
    }
    let mut measure_keys: Vec<&str> = model.measure.keys().map(String::as_str).collect();
    measure_keys.sort_unstable();
    for key in measure_keys {
        if !seen.contains(key) {
            return Err(model_err(
                path,
                format!("/measure/{key}"),
                format!("{key:?} is not a state"),
            ));
        }
    }
    let n = model.states.len();
    match (kind, &model.dynamics) {
        (ModelKind::Static, Some(_)) => {
            return Err(model_err(path, "/dynamics", "not allowed for kind \"static\""))
        }
        (ModelKind::Static, None) => {}
        (_, None) => {
            return Err(model_err(
                path,
                "/dynamics",
                format!("required for kind {:?}", model.kind),
            ))
        }
        (_, Some(rows)) => {
            if rows.len() != n {
                return Err(model_err(
                    path,
                    "/dynamics",
                    format!("expected {n} rows, found {}", rows.len()),
                ));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(model_err(
                        path,
                        format!("/dynamics/{i}"),
                        format!("expected {n} entries, found {}", row.len()),
                    ));
                }
            }
        }
    }
    Ok(kind)
}

/// Per-state weights in state order; states missing from the measure
/// get zero.
pub fn measure_weights(model: &ModelFile) -> Vec<(String, f64)> {
    model
        .states
        .iter()
        .map(|s| (s.clone(), model.measure.get(s).copied().unwrap_or(0.0)))
        .collect()
}

pub fn build_space(model: &ModelFile, path: &str) -> Result<DiscreteSpace, CliError> {
    let pairs = measure_weights(model);
    let space = if model.normalize {
        DiscreteSpace::new_normalized(pairs)
    } else {
        DiscreteSpace::new(pairs)
    };
    space.map_err(|e| model_err(path, "/measure", e))
}

/// Context with the observables, events, and functions attached but no
/// dynamics yet. Shared by the strict loader and by `check`, which
/// handles dynamics leniently.
pub fn build_statics(
    model: &ModelFile,
    path: &str,
    space: DiscreteSpace,
) -> Result<EvalContext, CliError> {
    let mut context = EvalContext::new(space);
    for (name, values) in &model.observables {
        let obs = Observable::new(context.space(), values)
            .map_err(|e| model_err(path, format!("/observables/{name}"), e))?;
        context
            .define_observable(name, obs)
            .map_err(|e| model_err(path, format!("/observables/{name}"), e))?;
    }
    for (name, labels) in &model.events {
        context
            .define_event(name, Event::new(labels.clone()))
            .map_err(|e| model_err(path, format!("/events/{name}"), e))?;
    }
    for (name, rows) in &model.functions {
        context
            .define_function(name, Func::Table(rows.clone()))
            .map_err(|e| model_err(path, format!("/functions/{name}"), e))?;
    }
    Ok(context)
}

/// Strict load: every declared piece must be fully valid.
pub fn build_context(model: &ModelFile, path: &str) -> Result<LoadedModel, CliError> {
    let kind = validate_structure(model, path)?;
    let space = build_space(model, path)?;
    let mut context = build_statics(model, path, space)?;
    if let Some(rows) = &model.dynamics {
        let dynamics = match kind {
            ModelKind::Dtmc => Dynamics::Dtmc(
                TransitionMatrix::new(rows).map_err(|e| model_err(path, "/dynamics", e))?,
            ),
            ModelKind::Ctmc => {
                Dynamics::Ctmc(Generator::new(rows).map_err(|e| model_err(path, "/dynamics", e))?)
            }
            ModelKind::Static => unreachable!("structure check rejects this"),
        };
        context
            .set_dynamics(dynamics)
            .map_err(|e| model_err(path, "/dynamics", e))?;
    }
    Ok(LoadedModel { kind, context })
}

pub fn load_and_build(path: &Path) -> Result<LoadedModel, CliError> {
    let model = load_model(path)?;
    build_context(&model, &path.display().to_string())
}
