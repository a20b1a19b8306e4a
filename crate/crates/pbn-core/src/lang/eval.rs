//! Query evaluation against a space, optional dynamics, and a set of
//! named events, observables, and scalar functions.
//!
//! Events and observables live in separate namespaces; the syntax
//! position of an identifier decides which one is consulted, and using
//! a name from the wrong one is reported as a mismatch rather than as
//! an unknown identifier.

use std::collections::HashMap;

use super::ast::{AstNode, EventExpr, OpExpr};
use crate::error::Error;
use crate::markov::Dynamics;
use crate::observable::{system_ket, Observable};
use crate::space::{DiscreteSpace, Event};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{name}` is {actual}, but the query uses it as {wanted}")]
    TypeMismatch {
        name: String,
        actual: &'static str,
        wanted: &'static str,
    },
    #[error("`Omega@{0}` needs dynamics, and this model has none")]
    TimeTagWithoutDynamics(f64),
    #[error("discrete-time dynamics cannot reach t = {0}; use a whole number of steps")]
    NonIntegerTimeForDtmc(f64),
    #[error("function `{func}` is not defined at {value}")]
    FunctionDomain { func: String, value: f64 },
    #[error("name {0:?} is reserved or not a valid identifier")]
    InvalidName(String),
    #[error("query tree cannot come from the grammar: {0}")]
    InvalidAst(&'static str),
    #[error(transparent)]
    Engine(#[from] Error),
}

/// A scalar function usable in `f(X)` position.
#[derive(Debug)]
pub enum Func {
    Builtin(fn(f64) -> f64),
    /// Exact-match lookup table over observable values.
    Table(Vec<(f64, f64)>),
}

impl Func {
    fn apply(&self, name: &str, v: f64) -> Result<f64, EvalError> {
        match self {
            Func::Builtin(f) => Ok(f(v)),
            Func::Table(rows) => rows
                .iter()
                .find(|(x, _)| *x == v)
                .map(|(_, y)| *y)
                .ok_or_else(|| EvalError::FunctionDomain {
                    func: name.to_string(),
                    value: v,
                }),
        }
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "Omega"
}

#[derive(Debug)]
pub struct EvalContext {
    space: DiscreteSpace,
    dynamics: Option<Dynamics>,
    events: HashMap<String, Event>,
    observables: HashMap<String, Observable>,
    functions: HashMap<String, Func>,
    tail_tol: f64,
}

impl EvalContext {
    /// Context over a bare space. The functions `id`, `sq`, `abs`, and
    /// `exp` come predefined.
    pub fn new(space: DiscreteSpace) -> Self {
        let mut functions: HashMap<String, Func> = HashMap::new();
        functions.insert("id".into(), Func::Builtin(|x| x));
        functions.insert("sq".into(), Func::Builtin(|x| x * x));
        functions.insert("abs".into(), Func::Builtin(f64::abs));
        functions.insert("exp".into(), Func::Builtin(f64::exp));
        EvalContext {
            space,
            dynamics: None,
            events: HashMap::new(),
            observables: HashMap::new(),
            functions,
            tail_tol: crate::markov::DEFAULT_TAIL_TOL,
        }
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn dynamics(&self) -> Option<&Dynamics> {
        self.dynamics.as_ref()
    }

    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.get(name)
    }

    /// Defined observable names, sorted.
    pub fn observable_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.observables.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    /// Defined events with their names, sorted by name.
    pub fn named_events(&self) -> Vec<(&str, &Event)> {
        let mut out: Vec<(&str, &Event)> =
            self.events.iter().map(|(k, v)| (k.as_str(), v)).collect();
        out.sort_unstable_by_key(|(name, _)| *name);
        out
    }

    pub fn set_dynamics(&mut self, dynamics: Dynamics) -> Result<(), EvalError> {
        if dynamics.dim() != self.space.len() {
            return Err(Error::DimensionMismatch {
                expected: self.space.len(),
                found: dynamics.dim(),
            }
            .into());
        }
        self.dynamics = Some(dynamics);
        Ok(())
    }

    /// Series tail tolerance used when evolving continuous dynamics.
    pub fn set_tail_tol(&mut self, tol: f64) {
        self.tail_tol = tol;
    }

    pub fn define_event(&mut self, name: &str, event: Event) -> Result<(), EvalError> {
        if !valid_name(name) {
            return Err(EvalError::InvalidName(name.to_string()));
        }
        for label in event.iter() {
            if self.space.index_of(label).is_none() {
                return Err(Error::UnknownLabel(label.to_string()).into());
            }
        }
        self.events.insert(name.to_string(), event);
        Ok(())
    }

    pub fn define_observable(&mut self, name: &str, obs: Observable) -> Result<(), EvalError> {
        if !valid_name(name) {
            return Err(EvalError::InvalidName(name.to_string()));
        }
        if obs.len() != self.space.len() {
            return Err(Error::DimensionMismatch {
                expected: self.space.len(),
                found: obs.len(),
            }
            .into());
        }
        self.observables.insert(name.to_string(), obs);
        Ok(())
    }

    pub fn define_function(&mut self, name: &str, func: Func) -> Result<(), EvalError> {
        if !valid_name(name) {
            return Err(EvalError::InvalidName(name.to_string()));
        }
        self.functions.insert(name.to_string(), func);
        Ok(())
    }

    pub fn evaluate(&self, node: &AstNode) -> Result<f64, EvalError> {
        match node {
            AstNode::Bracket { bra, ket } => {
                if let EventExpr::Omega { time: Some(t) } = ket {
                    let coeffs = self.evolved(*t)?;
                    let indices = self.event_indices(bra)?;
                    Ok(indices.iter().map(|&i| coeffs[i]).sum())
                } else {
                    let a = self.resolve_event(bra)?;
                    let b = self.resolve_event(ket)?;
                    Ok(self.space.bracket(&a, &b)?)
                }
            }
            AstNode::Sandwich { bra, op, ket } => {
                if *bra != (EventExpr::Omega { time: None }) {
                    return Err(EvalError::InvalidAst("sandwich opens with plain Omega"));
                }
                let values = self.resolve_op(op)?;
                match ket {
                    EventExpr::Omega { time: Some(t) } => {
                        let coeffs = self.evolved(*t)?;
                        Ok(values.iter().zip(&coeffs).map(|(v, c)| v * c).sum())
                    }
                    EventExpr::Omega { time: None } => Ok(self.plain_expectation(&values)),
                    _ => {
                        let h = self.resolve_event(ket)?;
                        self.conditional(&values, &h)
                    }
                }
            }
            AstNode::Expect { op, given } => {
                let values = self.resolve_op(op)?;
                match given {
                    None | Some(EventExpr::Omega { time: None }) => {
                        Ok(self.plain_expectation(&values))
                    }
                    Some(h) => {
                        let h = self.resolve_event(h)?;
                        self.conditional(&values, &h)
                    }
                }
            }
        }
    }

    /// Measure coefficients advanced to time `t` from the space's own
    /// measure as the initial condition.
    fn evolved(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        let dynamics = self
            .dynamics
            .as_ref()
            .ok_or(EvalError::TimeTagWithoutDynamics(t))?;
        let initial = system_ket(&self.space);
        let ket = dynamics
            .evolve_with(&initial, t, self.tail_tol)
            .map_err(|e| match e {
                Error::NonIntegerTime(bad) => EvalError::NonIntegerTimeForDtmc(bad),
                other => EvalError::Engine(other),
            })?;
        Ok(ket.coefficients().to_vec())
    }

    fn plain_expectation(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(self.space.weights())
            .map(|(v, m)| v * m)
            .sum()
    }

    fn conditional(&self, values: &[f64], h: &Event) -> Result<f64, EvalError> {
        let ph = self.space.event_prob(h)?;
        if ph == 0.0 {
            return Err(Error::ZeroConditioningEvent.into());
        }
        let mut acc = 0.0;
        for label in h.iter() {
            let i = self.space.index_of(label).expect("validated by event_prob");
            acc += values[i] * (self.space.weight_at(i) / ph);
        }
        Ok(acc)
    }

    fn resolve_event(&self, e: &EventExpr) -> Result<Event, EvalError> {
        match e {
            EventExpr::Name(name) => self.events.get(name).cloned().ok_or_else(|| {
                if self.observables.contains_key(name) {
                    EvalError::TypeMismatch {
                        name: name.clone(),
                        actual: "an observable",
                        wanted: "an event",
                    }
                } else if self.functions.contains_key(name) {
                    EvalError::TypeMismatch {
                        name: name.clone(),
                        actual: "a function",
                        wanted: "an event",
                    }
                } else {
                    EvalError::UnknownIdentifier(name.clone())
                }
            }),
            EventExpr::Set(labels) => Ok(labels.iter().cloned().collect()),
            EventExpr::Omega { time: None } => Ok(self.space.omega()),
            EventExpr::Omega { time: Some(_) } => {
                Err(EvalError::InvalidAst("a time tag only closes a bracket"))
            }
            EventExpr::Intersect(a, b) => {
                Ok(self.resolve_event(a)?.intersect(&self.resolve_event(b)?))
            }
        }
    }

    fn event_indices(&self, e: &EventExpr) -> Result<Vec<usize>, EvalError> {
        let event = self.resolve_event(e)?;
        event
            .iter()
            .map(|label| {
                self.space
                    .index_of(label)
                    .ok_or_else(|| Error::UnknownLabel(label.to_string()).into())
            })
            .collect()
    }

    fn resolve_op(&self, op: &OpExpr) -> Result<Vec<f64>, EvalError> {
        match op {
            OpExpr::Observable(name) => Ok(self.lookup_observable(name)?.values().to_vec()),
            OpExpr::Apply { func, observable } => {
                let f = self.functions.get(func).ok_or_else(|| {
                    if self.observables.contains_key(func) || self.events.contains_key(func) {
                        EvalError::TypeMismatch {
                            name: func.clone(),
                            actual: "not a function",
                            wanted: "a function",
                        }
                    } else {
                        EvalError::UnknownIdentifier(func.clone())
                    }
                })?;
                let x = self.lookup_observable(observable)?;
                x.values().iter().map(|&v| f.apply(func, v)).collect()
            }
        }
    }

    fn lookup_observable(&self, name: &str) -> Result<&Observable, EvalError> {
        self.observables.get(name).ok_or_else(|| {
            if self.events.contains_key(name) {
                EvalError::TypeMismatch {
                    name: name.to_string(),
                    actual: "an event",
                    wanted: "an observable",
                }
            } else if self.functions.contains_key(name) {
                EvalError::TypeMismatch {
                    name: name.to_string(),
                    actual: "a function",
                    wanted: "an observable",
                }
            } else {
                EvalError::UnknownIdentifier(name.to_string())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_query;
    use crate::markov::{Generator, TransitionMatrix};
    use approx::assert_relative_eq;

    fn die_context() -> EvalContext {
        let labels: Vec<String> = (1..=6).map(|i| i.to_string()).collect();
        let space = DiscreteSpace::uniform(&labels).unwrap();
        let mut ctx = EvalContext::new(space.clone());
        ctx.define_observable(
            "X",
            Observable::from_fn(&space, |l| l.parse::<f64>().unwrap()),
        )
        .unwrap();
        ctx.define_event("Low", Event::new(["1", "2", "3"])).unwrap();
        ctx.define_event("Even", Event::new(["2", "4", "6"])).unwrap();
        ctx
    }

    fn eval(ctx: &EvalContext, q: &str) -> Result<f64, EvalError> {
        ctx.evaluate(&parse_query(q).unwrap())
    }

    fn dtmc_context() -> EvalContext {
        let space = DiscreteSpace::new([("0", 1.0), ("1", 0.0)]).unwrap();
        let mut ctx = EvalContext::new(space.clone());
        ctx.define_observable("X", Observable::from_fn(&space, |l| l.parse().unwrap()))
            .unwrap();
        ctx.set_dynamics(Dynamics::Dtmc(
            TransitionMatrix::new(&[vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap(),
        ))
        .unwrap();
        ctx
    }

    #[test]
    fn die_queries() {
        let ctx = die_context();
        assert_relative_eq!(eval(&ctx, "P({2}|{1,2,3})").unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "P({2}|Low)").unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        assert_eq!(eval(&ctx, "P(Omega|Omega)").unwrap(), 1.0);
        assert_eq!(eval(&ctx, "P(Low|Low)").unwrap(), 1.0);
        assert_relative_eq!(eval(&ctx, "P(Low&Even|Omega)").unwrap(), 1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "E[X]").unwrap(), 3.5, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "E[sq(X)]").unwrap(), 91.0 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(eval(&ctx, "E[X|Even]").unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "E[X|Low]").unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "P(Omega|X|Omega)").unwrap(), 3.5, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "P(Omega|X|Even)").unwrap(), 4.0, epsilon = 1e-14);
        assert_eq!(eval(&ctx, "E[X]").unwrap(), eval(&ctx, "E[X|Omega]").unwrap());
    }

    #[test]
    fn sandwich_and_expect_agree() {
        let ctx = die_context();
        for (a, b) in [
            ("P(Omega|X|Even)", "E[X|Even]"),
            ("P(Omega|sq(X)|Low)", "E[sq(X)|Low]"),
            ("P(Omega|X|Omega)", "E[X]"),
        ] {
            assert_eq!(eval(&ctx, a).unwrap(), eval(&ctx, b).unwrap());
        }
    }

    #[test]
    fn lookup_tables_apply_and_miss() {
        let mut ctx = die_context();
        ctx.define_function(
            "half",
            Func::Table((1..=6).map(|i| (i as f64, i as f64 / 2.0)).collect()),
        )
        .unwrap();
        assert_relative_eq!(eval(&ctx, "E[half(X)]").unwrap(), 1.75, epsilon = 1e-14);

        ctx.define_function("partial", Func::Table(vec![(1.0, 0.0)])).unwrap();
        assert_eq!(
            eval(&ctx, "E[partial(X)]").unwrap_err(),
            EvalError::FunctionDomain { func: "partial".into(), value: 2.0 }
        );
    }

    #[test]
    fn dtmc_time_tags() {
        let ctx = dtmc_context();
        assert_relative_eq!(eval(&ctx, "P({1}|Omega@2)").unwrap(), 0.625, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "P({0}|Omega@2)").unwrap(), 0.375, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "P(Omega|Omega@2)").unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(eval(&ctx, "P(Omega|X|Omega@2)").unwrap(), 0.625, epsilon = 1e-14);
        assert_eq!(
            eval(&ctx, "P({1}|Omega@0)").unwrap(),
            0.0,
        );
        assert_eq!(
            eval(&ctx, "P(Omega|X|Omega@2.5)").unwrap_err(),
            EvalError::NonIntegerTimeForDtmc(2.5)
        );
    }

    #[test]
    fn ctmc_time_tags() {
        let space = DiscreteSpace::new([("a", 1.0), ("b", 0.0)]).unwrap();
        let mut ctx = EvalContext::new(space);
        ctx.set_dynamics(Dynamics::Ctmc(
            Generator::new(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap(),
        ))
        .unwrap();
        let expected = 2.0 / 3.0 + (1.0 / 3.0) * (-3.0f64).exp();
        assert_relative_eq!(eval(&ctx, "P({a}|Omega@1)").unwrap(), expected, epsilon = 1e-10);
        assert_relative_eq!(eval(&ctx, "P(Omega|Omega@1)").unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tag_without_dynamics_is_refused() {
        let ctx = die_context();
        assert_eq!(
            eval(&ctx, "P(Omega|Omega@1)").unwrap_err(),
            EvalError::TimeTagWithoutDynamics(1.0)
        );
    }

    #[test]
    fn identifier_roles_are_reported() {
        let ctx = die_context();
        assert_eq!(
            eval(&ctx, "P(Nope|Omega)").unwrap_err(),
            EvalError::UnknownIdentifier("Nope".into())
        );
        assert_eq!(
            eval(&ctx, "P(X|Omega)").unwrap_err(),
            EvalError::TypeMismatch { name: "X".into(), actual: "an observable", wanted: "an event" }
        );
        assert_eq!(
            eval(&ctx, "E[Low]").unwrap_err(),
            EvalError::TypeMismatch { name: "Low".into(), actual: "an event", wanted: "an observable" }
        );
        assert_eq!(
            eval(&ctx, "E[Low(X)]").unwrap_err(),
            EvalError::TypeMismatch { name: "Low".into(), actual: "not a function", wanted: "a function" }
        );
        assert_eq!(
            eval(&ctx, "P(sq|Omega)").unwrap_err(),
            EvalError::TypeMismatch { name: "sq".into(), actual: "a function", wanted: "an event" }
        );
        assert_eq!(
            eval(&ctx, "P({7}|Omega)").unwrap_err(),
            EvalError::Engine(Error::UnknownLabel("7".into()))
        );
    }

    #[test]
    fn zero_mass_conditioning_is_refused() {
        let ctx = die_context();
        assert_eq!(
            eval(&ctx, "E[X|{1}&{2}]").unwrap_err(),
            EvalError::Engine(Error::ZeroConditioningEvent)
        );
        assert_eq!(
            eval(&ctx, "P({1}|{1}&{2})").unwrap_err(),
            EvalError::Engine(Error::ZeroConditioningEvent)
        );
    }

    #[test]
    fn definitions_are_validated() {
        let space = DiscreteSpace::uniform(&["a".to_string(), "b".to_string()]).unwrap();
        let mut ctx = EvalContext::new(space.clone());
        assert_eq!(
            ctx.define_event("Omega", Event::singleton("a")).unwrap_err(),
            EvalError::InvalidName("Omega".into())
        );
        assert_eq!(
            ctx.define_event("1bad", Event::singleton("a")).unwrap_err(),
            EvalError::InvalidName("1bad".into())
        );
        assert_eq!(
            ctx.define_event("E", Event::singleton("zzz")).unwrap_err(),
            EvalError::Engine(Error::UnknownLabel("zzz".into()))
        );
        let other = DiscreteSpace::uniform(&["x".to_string()]).unwrap();
        assert!(matches!(
            ctx.define_observable("Y", Observable::constant(&other, 1.0)),
            Err(EvalError::Engine(Error::DimensionMismatch { .. }))
        ));
        assert!(matches!(
            ctx.set_dynamics(Dynamics::Dtmc(TransitionMatrix::new(&[vec![1.0]]).unwrap())),
            Err(EvalError::Engine(Error::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn names_can_repeat_across_roles() {
        // same identifier as event and observable, position disambiguates
        let space = DiscreteSpace::uniform(&["a".to_string(), "b".to_string()]).unwrap();
        let mut ctx = EvalContext::new(space.clone());
        ctx.define_event("N", Event::singleton("a")).unwrap();
        ctx.define_observable("N", Observable::from_fn(&space, |l| if l == "a" { 1.0 } else { 0.0 }))
            .unwrap();
        assert_relative_eq!(eval(&ctx, "P(N|Omega)").unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(eval(&ctx, "E[N]").unwrap(), 0.5, epsilon = 1e-14);
        assert_eq!(eval(&ctx, "E[N|N]").unwrap(), 1.0);
    }
}
