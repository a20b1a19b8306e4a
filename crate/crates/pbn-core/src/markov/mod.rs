//! Markov dynamics on a finite space, in both pictures.
//!
//! Users hand in the conventional row-oriented data: a row-stochastic
//! step matrix for discrete time, or a rate matrix with zero row sums
//! for continuous time. State columns evolve under the transpose, and
//! that transposition happens in exactly one place, the propagator
//! constructors, so the row and column pictures cannot drift apart.
//!
//! Continuous-time propagators come from uniformization: with rate
//! r = max |G_ii| the matrix Q = I + G/r is row-stochastic and
//! exp(G^T t) is a Poisson-weighted series in Q^T. Every partial sum
//! is entrywise non-negative with column sums telescoping to one, so
//! probability is conserved by construction rather than by luck.

mod counting;
mod picture;
mod stationary;

pub use counting::increment_stationarity_residual;
pub use picture::{
    density_two_pictures, heisenberg_expectation, heisenberg_observable, PicturePair,
    time_dependent_unit_residual,
};
pub use stationary::stationary;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::fmt;
use crate::observable::{Observable, PKet};

/// Hard cap on the number of states a dense chain may have.
pub const MAX_STATES: usize = 4096;
/// Default truncation tolerance for the uniformized series.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Series terms allowed before giving up.
pub const MAX_SERIES_TERMS: usize = 1_000_000;
/// Column sums of a propagator must hold to this.
pub const PROPAGATOR_COL_TOL: f64 = 1e-10;
/// Entries this far below zero are roundoff; anything worse is a bug.
pub const ENTRY_NEG_TOL: f64 = 1e-12;
/// Evolved coefficient sums must hold to this.
pub const KET_SUM_TOL: f64 = 1e-10;
/// How far a discrete step count may sit from an integer.
pub const DTMC_TIME_TOL: f64 = 1e-9;
/// Determinants at or below this magnitude count as singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

fn check_square(rows: &[Vec<f64>]) -> Result<usize> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    if n > MAX_STATES {
        return Err(Error::CapacityExceeded {
            size: n as u128,
            cap: MAX_STATES,
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        for &v in row {
            if !v.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "non-finite entry in row {i}"
                )));
            }
        }
    }
    Ok(n)
}

/// A row-stochastic one-step matrix: P[i][j] is the probability of
/// moving from state i to state j.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = check_square(rows)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 {
                    return Err(Error::NonStochasticMatrix(format!(
                        "entry ({i}, {j}) is {v}"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > crate::space::NORMALIZATION_TOL {
                return Err(Error::NonStochasticMatrix(format!(
                    "row {i} sums to {}",
                    fmt::sig15(sum)
                )));
            }
        }
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(TransitionMatrix { p })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    /// (P^T)^steps, the column-picture evolution operator.
    pub fn propagator(&self, steps: u64) -> Result<Propagator> {
        let n = self.dim();
        let pt = self.p.transpose();
        let mut u = DMatrix::identity(n, n);
        for _ in 0..steps {
            u = &pt * &u;
        }
        Propagator::checked(u, steps as f64)
    }
}

/// A rate matrix: non-negative off-diagonal rates, rows summing to
/// zero. G[i][j] is the rate of jumping from i to j.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    g: DMatrix<f64>,
}

impl Generator {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = check_square(rows)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j && v < 0.0 {
                    return Err(Error::InvalidGenerator(format!(
                        "negative rate {v} at ({i}, {j})"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > crate::space::NORMALIZATION_TOL {
                return Err(Error::InvalidGenerator(format!(
                    "row {i} sums to {}",
                    fmt::sig15(sum)
                )));
            }
        }
        let g = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Generator { g })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// The uniformization rate max |G_ii|.
    pub fn uniformization_rate(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.g[(i, i)].abs())
            .fold(0.0, f64::max)
    }
}

/// Builds exp(G^T t) by uniformization, truncating once the Poisson
/// tail drops below `tail_tol`. The kept weights are rescaled by their
/// own total, so the truncated operator still conserves probability.
pub fn ctmc_propagator(g: &Generator, t: f64, tail_tol: f64) -> Result<Propagator> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidDistribution(format!("bad time {t}")));
    }
    let n = g.dim();
    let rate = g.uniformization_rate();
    let a = rate * t;
    if a == 0.0 {
        return Propagator::checked(DMatrix::identity(n, n), t);
    }
    let qt = {
        let mut q = g.matrix() / rate;
        for i in 0..n {
            q[(i, i)] += 1.0;
        }
        q.transpose()
    };
    let mut weight = (-a).exp();
    let mut cumulative = weight;
    let mut power = DMatrix::identity(n, n);
    let mut acc = &power * weight;
    let mut terms = 1usize;
    while 1.0 - cumulative >= tail_tol {
        if terms >= MAX_SERIES_TERMS || weight == 0.0 && cumulative == 0.0 {
            return Err(Error::TruncationFailure { terms });
        }
        weight *= a / terms as f64;
        power = &qt * &power;
        acc += &power * weight;
        cumulative += weight;
        terms += 1;
    }
    acc /= cumulative;
    Propagator::checked(acc, t)
}

/// A column-stochastic evolution operator: kets evolve as U * ket.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    u: DMatrix<f64>,
    time: f64,
}

impl Propagator {
    fn checked(u: DMatrix<f64>, time: f64) -> Result<Self> {
        let p = Propagator { u, time };
        p.validate()?;
        Ok(p)
    }

    /// Wraps an externally assembled matrix, enforcing the invariants.
    pub fn from_matrix(u: DMatrix<f64>, time: f64) -> Result<Self> {
        Self::checked(u, time)
    }

    fn validate(&self) -> Result<()> {
        let n = self.u.nrows();
        if n == 0 || self.u.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.u.ncols(),
            });
        }
        for j in 0..n {
            let mut sum = 0.0;
            for i in 0..n {
                let v = self.u[(i, j)];
                if v < -ENTRY_NEG_TOL || !v.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "propagator entry ({i}, {j}) is {v}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > PROPAGATOR_COL_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "propagator column {j} sums to {}",
                    fmt::sig15(sum)
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Entry with negative roundoff clamped to zero.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.u[(i, j)].max(0.0)
    }

    /// The raw matrix, roundoff and all.
    pub fn matrix_raw(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// A copy with negative roundoff clamped to zero.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.u.map(|v| v.max(0.0))
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        if self.u.determinant().abs() <= SINGULARITY_TOL {
            return Err(Error::SingularPropagator);
        }
        self.u.clone().try_inverse().ok_or(Error::SingularPropagator)
    }

    /// Applies the operator to an evolved ket, advancing its clock.
    pub fn apply(&self, ket: &SystemKetAtT) -> Result<SystemKetAtT> {
        if ket.coefficients.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: ket.coefficients.len(),
            });
        }
        let v = DVector::from_column_slice(&ket.coefficients);
        let out = &self.u * v;
        SystemKetAtT::new(out.iter().copied().collect(), ket.time + self.time)
    }
}

/// The state distribution at a given time, written as a column.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemKetAtT {
    coefficients: Vec<f64>,
    time: f64,
}

impl SystemKetAtT {
    /// Accepts coefficients that sum to one within [`KET_SUM_TOL`];
    /// negative roundoff down to -[`ENTRY_NEG_TOL`] is clamped to zero.
    pub fn new(mut coefficients: Vec<f64>, time: f64) -> Result<Self> {
        for c in &mut coefficients {
            if *c < -ENTRY_NEG_TOL || !c.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "coefficient {c} out of range"
                )));
            }
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        let sum: f64 = coefficients.iter().sum();
        if (sum - 1.0).abs() > KET_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "coefficients sum to {}",
                fmt::sig15(sum)
            )));
        }
        Ok(SystemKetAtT { coefficients, time })
    }

    pub fn initial(ket: &PKet) -> Self {
        SystemKetAtT {
            coefficients: ket.coefficients().to_vec(),
            time: 0.0,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

fn check_distribution(u0: &[f64]) -> Result<()> {
    for &v in u0 {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::InvalidDistribution(format!("entry {v}")));
        }
    }
    let sum: f64 = u0.iter().sum();
    if (sum - 1.0).abs() > KET_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "sums to {}",
            fmt::sig15(sum)
        )));
    }
    Ok(())
}

/// Row picture: u(t) = u(0) P^t by repeated right-multiplication.
pub fn dtmc_evolve_row(u0: &[f64], p: &TransitionMatrix, steps: u64) -> Result<Vec<f64>> {
    if u0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: u0.len(),
        });
    }
    check_distribution(u0)?;
    let mut v = RowDVector::from_row_slice(u0);
    for _ in 0..steps {
        v *= p.matrix();
    }
    Ok(v.iter().copied().collect())
}

/// Column picture: the ket advances by P^T each step. Componentwise
/// this is the row picture transposed.
pub fn dtmc_evolve_ket(
    k0: &SystemKetAtT,
    p: &TransitionMatrix,
    steps: u64,
) -> Result<SystemKetAtT> {
    if k0.coefficients.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: k0.coefficients.len(),
        });
    }
    let pt = p.matrix().transpose();
    let mut v = DVector::from_column_slice(&k0.coefficients);
    for _ in 0..steps {
        v = &pt * v;
    }
    SystemKetAtT::new(v.iter().copied().collect(), k0.time + steps as f64)
}

/// Evolves an initial ket through exp(G^T t).
pub fn ctmc_evolve(k0: &SystemKetAtT, g: &Generator, t: f64, tail_tol: f64) -> Result<SystemKetAtT> {
    ctmc_propagator(g, t, tail_tol)?.apply(k0)
}

/// E[F(X)] read against an evolved ket.
pub fn expectation_at_t(
    f: impl Fn(f64) -> f64,
    x: &Observable,
    ket: &SystemKetAtT,
) -> Result<f64> {
    if x.len() != ket.coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: ket.coefficients.len(),
            found: x.len(),
        });
    }
    let mut acc = 0.0;
    for (v, c) in x.values().iter().zip(&ket.coefficients) {
        acc += f(*v) * c;
    }
    Ok(acc)
}

/// Either kind of dynamics, with a single clock interface. Discrete
/// chains only accept times that are whole step counts.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    Dtmc(TransitionMatrix),
    Ctmc(Generator),
}

impl Dynamics {
    pub fn dim(&self) -> usize {
        match self {
            Dynamics::Dtmc(p) => p.dim(),
            Dynamics::Ctmc(g) => g.dim(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Dynamics::Dtmc(_))
    }

    fn steps_for(t: f64) -> Result<u64> {
        if !(t.is_finite() && t >= 0.0) || (t - t.round()).abs() > DTMC_TIME_TOL {
            return Err(Error::NonIntegerTime(t));
        }
        Ok(t.round() as u64)
    }

    pub fn propagator_at(&self, t: f64) -> Result<Propagator> {
        self.propagator_at_with(t, DEFAULT_TAIL_TOL)
    }

    pub fn propagator_at_with(&self, t: f64, tail_tol: f64) -> Result<Propagator> {
        match self {
            Dynamics::Dtmc(p) => p.propagator(Self::steps_for(t)?),
            Dynamics::Ctmc(g) => ctmc_propagator(g, t, tail_tol),
        }
    }

    pub fn evolve(&self, initial: &PKet, t: f64) -> Result<SystemKetAtT> {
        self.evolve_with(initial, t, DEFAULT_TAIL_TOL)
    }

    pub fn evolve_with(&self, initial: &PKet, t: f64, tail_tol: f64) -> Result<SystemKetAtT> {
        let k0 = SystemKetAtT::initial(initial);
        match self {
            Dynamics::Dtmc(p) => dtmc_evolve_ket(&k0, p, Self::steps_for(t)?),
            Dynamics::Ctmc(g) => ctmc_evolve(&k0, g, t, tail_tol),
        }
    }
}
