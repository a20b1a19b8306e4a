//! `pbn check`: run a model's internal consistency identities and
//! report one line per identity.
//!
//! Loading is lenient about numeric invariants: an unnormalized
//! measure or a non-conserving dynamics matrix becomes a FAIL line
//! (with everything it blocks reported as SKIP) instead of a load
//! error. Shape problems in the file are still load errors.

use std::path::Path;

use pbn_core::composite::{weighted_expectation, OccupationSpace, WeightedBasis};
use pbn_core::fmt::sig15;
use pbn_core::markov::{
    dtmc_evolve_row, expectation_at_t, heisenberg_expectation, stationary,
    time_dependent_unit_residual, Dynamics, Generator, TransitionMatrix, DEFAULT_TAIL_TOL,
};
use pbn_core::observable::{
    conditional_expectation, expectation_indicator, system_bra, system_ket,
};
use pbn_core::{DiscreteSpace, Error, Event};

use crate::commands::{resolve_tol, CmdOutput};
use crate::model::{
    build_space, build_statics, load_model, measure_weights, validate_structure, CliError,
    ModelFile, ModelKind,
};

/// Identity thresholds. `--tol` replaces all three.
struct Tols {
    /// Algebraic identities that hold to rounding error.
    exact: f64,
    /// Identities read through a propagator.
    transport: f64,
    /// Identities limited by series truncation.
    series: f64,
}

impl Tols {
    fn new(user: Option<f64>) -> Self {
        match user {
            Some(t) => Tols { exact: t, transport: t, series: t },
            None => Tols { exact: 1e-12, transport: 1e-10, series: 1e-9 },
        }
    }
}

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Report {
    catalog: Vec<String>,
    lines: Vec<(Status, String)>,
}

impl Report {
    fn new(catalog: Vec<String>) -> Self {
        Report { catalog, lines: Vec::new() }
    }

    fn pass(&mut self, detail: String) {
        self.lines.push((Status::Pass, detail));
    }

    fn fail(&mut self, detail: String) {
        self.lines.push((Status::Fail, detail));
    }

    fn skip(&mut self, reason: &str) {
        self.lines.push((Status::Skip, reason.to_string()));
    }

    fn residual(&mut self, residual: f64, tol: f64) {
        if residual <= tol {
            self.pass(format!("max residual {residual:.3e}"));
        } else {
            self.fail(format!("max residual {residual:.3e} exceeds tolerance {tol:.0e}"));
        }
    }

    fn skip_rest(&mut self, reason: &str) {
        while self.lines.len() < self.catalog.len() {
            self.skip(reason);
        }
    }

    fn render(&self, quiet: bool) -> CmdOutput {
        assert_eq!(self.lines.len(), self.catalog.len());
        let mut passed = 0usize;
        let mut failed = 0usize;
        let mut skipped = 0usize;
        let mut out = String::new();
        for (name, (status, detail)) in self.catalog.iter().zip(&self.lines) {
            let word = match status {
                Status::Pass => {
                    passed += 1;
                    "PASS"
                }
                Status::Fail => {
                    failed += 1;
                    "FAIL"
                }
                Status::Skip => {
                    skipped += 1;
                    "SKIP"
                }
            };
            if !quiet || matches!(status, Status::Fail) {
                out.push_str(&format!("{name} {word} ({detail})\n"));
            }
        }
        out.push_str(&format!("check: {passed} passed, {failed} failed, {skipped} skipped\n"));
        CmdOutput { stdout: out, exit: if failed > 0 { 1 } else { 0 } }
    }
}

fn run_err(e: Error) -> CliError {
    CliError::Run(e.to_string())
}

/// Deterministic event family: every nonempty subset for small spaces,
/// otherwise singletons, prefixes, and the two parity classes.
fn event_family(space: &DiscreteSpace) -> Vec<Event> {
    let labels: Vec<&str> = space.labels().collect();
    let n = labels.len();
    if n <= 6 {
        (1u32..(1 << n))
            .map(|mask| {
                Event::new(
                    labels
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1u32 << i) != 0)
                        .map(|(_, l)| *l),
                )
            })
            .collect()
    } else {
        let mut family: Vec<Event> = labels.iter().map(|l| Event::singleton(*l)).collect();
        for k in 2..=n {
            family.push(Event::new(labels[..k].iter().copied()));
        }
        family.push(Event::new(labels.iter().step_by(2).copied()));
        family.push(Event::new(labels.iter().skip(1).step_by(2).copied()));
        family
    }
}

/// State labels that are exactly the counts 0..=k, in any order.
fn count_labels(space: &DiscreteSpace) -> Option<Vec<u32>> {
    let n = space.len();
    if n > 21 {
        return None;
    }
    let mut counts = Vec::with_capacity(n);
    for label in space.labels() {
        counts.push(label.parse::<u32>().ok().filter(|c| (*c as usize) < n)?);
    }
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    sorted
        .iter()
        .enumerate()
        .all(|(i, c)| *c as usize == i)
        .then_some(counts)
}

fn catalog_for(model: &ModelFile, kind: ModelKind) -> Vec<String> {
    let mut names = vec![
        "measure_normalization".to_string(),
        "omega_conditioning".to_string(),
        "bayes_bracket_agreement".to_string(),
        "system_contraction".to_string(),
    ];
    for obs in model.observables.keys() {
        names.push(format!("indicator_identity[{obs}]"));
    }
    names.push("peliti_agreement".to_string());
    if kind != ModelKind::Static {
        names.push("conservation".to_string());
        names.push("bra_left_invariance".to_string());
        if kind == ModelKind::Dtmc {
            names.push("duality".to_string());
        }
        names.push("semigroup".to_string());
        names.push("stationary_fixed_point".to_string());
        names.push("picture_equivalence".to_string());
        names.push("time_dependent_unit".to_string());
    }
    names
}

pub fn cmd_check(path: &Path, tol: Option<f64>, quiet: bool) -> Result<CmdOutput, CliError> {
    let tols = Tols::new(resolve_tol(tol)?);
    let tail = tol.unwrap_or(DEFAULT_TAIL_TOL);
    let shown = path.display().to_string();
    let model = load_model(path)?;
    let kind = validate_structure(&model, &shown)?;
    let mut report = Report::new(catalog_for(&model, kind));

    // measure_normalization
    let pairs = measure_weights(&model);
    let raw_sum: f64 = pairs.iter().map(|(_, w)| w).sum();
    if let Some((label, w)) = pairs.iter().find(|(_, w)| *w < 0.0) {
        report.fail(format!("weight of {label:?} is {}", sig15(*w)));
        report.skip_rest("measure is invalid");
        return Ok(report.render(quiet));
    }
    if model.normalize {
        if raw_sum <= 0.0 {
            report.fail(format!("weights sum to {}", sig15(raw_sum)));
            report.skip_rest("measure is invalid");
            return Ok(report.render(quiet));
        }
    } else if (raw_sum - 1.0).abs() > tols.exact {
        report.fail(format!("weights sum to {}", sig15(raw_sum)));
        report.skip_rest("measure is invalid");
        return Ok(report.render(quiet));
    }
    let space = build_space(&model, &shown)?;
    let built_sum: f64 = space.weights().iter().sum();
    report.residual((built_sum - 1.0).abs(), tols.exact);

    let context = build_statics(&model, &shown, space.clone())?;
    let mut family = event_family(&space);
    for (_, event) in context.named_events() {
        family.push(event.clone());
    }
    let omega = space.omega();

    // omega_conditioning: conditioning on the whole space changes nothing
    let mut worst = 0.0f64;
    for a in &family {
        let lhs = space.bracket(a, &omega).map_err(run_err)?;
        let rhs = space.event_prob(a).map_err(run_err)?;
        worst = worst.max((lhs - rhs).abs());
    }
    report.residual(worst, tols.exact);

    // bayes_bracket_agreement: the two conditional-probability routes
    let mut worst = 0.0f64;
    for a in &family {
        if space.event_prob(a).map_err(run_err)? == 0.0 {
            continue;
        }
        for b in &family {
            if space.event_prob(b).map_err(run_err)? == 0.0 {
                continue;
            }
            let direct = space.bracket(a, b).map_err(run_err)?;
            let routed = space.bayes(a, b).map_err(run_err)?;
            worst = worst.max((direct - routed).abs());
        }
    }
    report.residual(worst, tols.exact);

    // system_contraction: all-ones bra against the measure ket
    let contraction = system_bra(&space)
        .contract(&system_ket(&space))
        .map_err(run_err)?;
    report.residual((contraction - 1.0).abs(), tols.exact);

    // indicator_identity[X]: E[X·1_B] = P(B)·E[X|B]
    for name in context.observable_names() {
        let x = context.observable(name).expect("names come from the context");
        let mut worst = 0.0f64;
        for b in &family {
            let pb = space.event_prob(b).map_err(run_err)?;
            if pb == 0.0 {
                continue;
            }
            let lhs = expectation_indicator(&space, x, b).map_err(run_err)?;
            let rhs = pb * conditional_expectation(&space, x, b).map_err(run_err)?;
            worst = worst.max((lhs - rhs).abs());
        }
        report.residual(worst, tols.exact);
    }

    // peliti_agreement: factorial-weighted pairing matches the plain one
    match count_labels(&space) {
        Some(counts) => {
            let k = space.len();
            let mut by_count = vec![0.0f64; k];
            for (i, c) in counts.iter().enumerate() {
                by_count[*c as usize] = space.weight_at(i);
            }
            match OccupationSpace::single_site(&by_count) {
                Ok(occ) => {
                    let mut fns: Vec<Box<dyn Fn(f64) -> f64>> =
                        vec![Box::new(|n| n), Box::new(|n| n * n)];
                    for name in context.observable_names() {
                        let values = context
                            .observable(name)
                            .expect("names come from the context")
                            .values()
                            .to_vec();
                        let counts = counts.clone();
                        fns.push(Box::new(move |n| {
                            let c = n as u32;
                            let i = counts.iter().position(|x| *x == c).expect("count exists");
                            values[i]
                        }));
                    }
                    let mut worst = 0.0f64;
                    for f in &fns {
                        let weighted = weighted_expectation(&occ, WeightedBasis::Peliti, f)
                            .map_err(run_err)?;
                        let plain: f64 = by_count
                            .iter()
                            .enumerate()
                            .map(|(c, w)| f(c as f64) * w)
                            .sum();
                        worst = worst.max((weighted - plain).abs());
                    }
                    report.residual(worst, tols.exact);
                }
                Err(e) => report.skip(&e.to_string()),
            }
        }
        None => report.skip("states are not the counts 0..K with K <= 20"),
    }

    if kind == ModelKind::Static {
        return Ok(report.render(quiet));
    }

    // conservation, checked on the raw rows so a broken matrix is a
    // reported failure rather than a load error
    let rows = model.dynamics.as_ref().expect("structure check requires dynamics");
    let n = space.len();
    let mut bad_entry: Option<(usize, usize, f64)> = None;
    let mut worst = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        let target = if kind == ModelKind::Dtmc { 1.0 } else { 0.0 };
        worst = worst.max((sum - target).abs());
        for (j, v) in row.iter().enumerate() {
            let must_be_nonneg = kind == ModelKind::Dtmc || i != j;
            if must_be_nonneg && *v < 0.0 && bad_entry.is_none() {
                bad_entry = Some((i, j, *v));
            }
        }
    }
    let dynamics = if let Some((i, j, v)) = bad_entry {
        report.fail(format!("entry ({i},{j}) is {}", sig15(v)));
        None
    } else if worst > tols.exact {
        report.fail(format!("max row-sum residual {worst:.3e} exceeds tolerance {:.0e}", tols.exact));
        None
    } else {
        let built = match kind {
            ModelKind::Dtmc => TransitionMatrix::new(rows).map(Dynamics::Dtmc),
            ModelKind::Ctmc => Generator::new(rows).map(Dynamics::Ctmc),
            ModelKind::Static => unreachable!(),
        };
        match built {
            Ok(d) => {
                report.residual(worst, tols.exact);
                Some(d)
            }
            Err(e) => {
                // reachable when --tol is looser than the engine accepts
                report.fail(e.to_string());
                None
            }
        }
    };
    let Some(dynamics) = dynamics else {
        report.skip_rest("dynamics are invalid");
        return Ok(report.render(quiet));
    };

    let probes: &[f64] = if kind == ModelKind::Dtmc {
        &[1.0, 2.0, 5.0]
    } else {
        &[0.5, 1.0, 2.0]
    };
    let semi_pairs: &[(f64, f64)] = if kind == ModelKind::Dtmc {
        &[(1.0, 2.0), (2.0, 3.0)]
    } else {
        &[(0.5, 1.0), (0.7, 1.3)]
    };
    let initial = system_ket(&space);

    // bra_left_invariance: the all-ones bra is fixed by transport
    let mut worst = 0.0f64;
    for &t in probes {
        let u = dynamics.propagator_at_with(t, tail).map_err(run_err)?;
        for j in 0..n {
            let col: f64 = (0..n).map(|i| u.matrix_raw()[(i, j)]).sum();
            worst = worst.max((col - 1.0).abs());
        }
    }
    report.residual(worst, tols.transport);

    // duality: row-vector evolution against ket evolution
    if let Dynamics::Dtmc(p) = &dynamics {
        let mut worst = 0.0f64;
        for &t in probes {
            let row = dtmc_evolve_row(space.weights(), p, t as u64).map_err(run_err)?;
            let ket = dynamics.evolve(&initial, t).map_err(run_err)?;
            for (a, b) in row.iter().zip(ket.coefficients()) {
                worst = worst.max((a - b).abs());
            }
        }
        report.residual(worst, tols.exact);
    }

    // semigroup: U(t+s) = U(t) U(s)
    let mut worst = 0.0f64;
    for &(t, s) in semi_pairs {
        let u_ts = dynamics.propagator_at_with(t + s, tail).map_err(run_err)?;
        let u_t = dynamics.propagator_at_with(t, tail).map_err(run_err)?;
        let u_s = dynamics.propagator_at_with(s, tail).map_err(run_err)?;
        let composed = u_t.matrix_raw() * u_s.matrix_raw();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((composed[(i, j)] - u_ts.matrix_raw()[(i, j)]).abs());
            }
        }
    }
    report.residual(worst, tols.series);

    // stationary_fixed_point: the computed distribution does not move
    match stationary(&dynamics) {
        Ok(pi) => {
            let mut worst = 0.0f64;
            let t_probe = if kind == ModelKind::Dtmc { 1.0 } else { 0.5 };
            let moved = dynamics.evolve_with(&pi, t_probe, tail).map_err(run_err)?;
            for (a, b) in pi.coefficients().iter().zip(moved.coefficients()) {
                worst = worst.max((a - b).abs());
            }
            report.residual(worst, tols.transport);
        }
        Err(Error::Reducible) => report.skip("chain is reducible"),
        Err(e) => return Err(run_err(e)),
    }

    // picture_equivalence: moving the state or moving the observable
    if context.observable_names().is_empty() {
        report.skip("no observables defined");
    } else {
        let mut worst = 0.0f64;
        let mut singular_at: Option<f64> = None;
        'outer: for name in context.observable_names() {
            let x = context.observable(name).expect("names come from the context");
            for &t in probes {
                let evolved = dynamics.evolve_with(&initial, t, tail).map_err(run_err)?;
                let schrodinger = expectation_at_t(|v| v, x, &evolved).map_err(run_err)?;
                match heisenberg_expectation(x, &dynamics, &initial, t) {
                    Ok(heisenberg) => worst = worst.max((schrodinger - heisenberg).abs()),
                    Err(Error::SingularPropagator) => {
                        singular_at = Some(t);
                        break 'outer;
                    }
                    Err(e) => return Err(run_err(e)),
                }
            }
        }
        match singular_at {
            Some(t) => report.skip(&format!("propagator is singular at t = {}", sig15(t))),
            None => report.residual(worst, tols.transport),
        }
    }

    // time_dependent_unit: completeness of the moving point basis
    let mut worst = 0.0f64;
    let mut singular_at: Option<f64> = None;
    for &t in probes {
        match time_dependent_unit_residual(&dynamics, t) {
            Ok(r) => worst = worst.max(r),
            Err(Error::SingularPropagator) => {
                singular_at = Some(t);
                break;
            }
            Err(e) => return Err(run_err(e)),
        }
    }
    match singular_at {
        Some(t) => report.skip(&format!("propagator is singular at t = {}", sig15(t))),
        None => report.residual(worst, tols.series),
    }

    Ok(report.render(quiet))
}
