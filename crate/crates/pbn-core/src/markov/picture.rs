//! The observable-side picture: conjugated observables, expectations
//! against the fixed initial ket, and the consistency checks that tie
//! the two pictures together.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::observable::{Observable, PKet};

use super::{Dynamics, Propagator};

/// X(t) = U^{-1} diag(x) U. Needs an invertible step; continuous-time
/// propagators always qualify, discrete ones may not.
pub fn heisenberg_observable(x: &Observable, u: &Propagator) -> Result<DMatrix<f64>> {
    let n = u.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let inv = u.inverse()?;
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(x.values()));
    Ok(inv * diag * u.matrix_raw())
}

/// Expectation in the moving-observable picture: the all-ones row
/// against X(t) applied to the initial coefficients.
pub fn heisenberg_expectation(
    x: &Observable,
    dynamics: &Dynamics,
    initial: &PKet,
    t: f64,
) -> Result<f64> {
    if initial.len() != dynamics.dim() {
        return Err(Error::DimensionMismatch {
            expected: dynamics.dim(),
            found: initial.len(),
        });
    }
    let u = dynamics.propagator_at(t)?;
    let xt = heisenberg_observable(x, &u)?;
    let moved = xt * nalgebra::DVector::from_column_slice(initial.coefficients());
    Ok(moved.iter().sum())
}

/// One state probability computed both ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicturePair {
    /// Evolve the ket, then read the component.
    pub schrodinger: f64,
    /// Contract the time-dependent point bra with the fixed ket.
    pub heisenberg: f64,
}

impl PicturePair {
    pub fn spread(&self) -> f64 {
        (self.schrodinger - self.heisenberg).abs()
    }
}

/// P(state at t) via the evolved ket and via the evolved bra. The bra
/// route lives in the moving-basis picture, so it insists on an
/// invertible step even though only a row of U is contracted.
pub fn density_two_pictures(
    dynamics: &Dynamics,
    initial: &PKet,
    state: usize,
    t: f64,
) -> Result<PicturePair> {
    let n = dynamics.dim();
    if state >= n {
        return Err(Error::IndexOutOfRange {
            index: state,
            len: n,
        });
    }
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: initial.len(),
        });
    }
    let evolved = dynamics.evolve(initial, t)?;
    let schrodinger = evolved.coefficients()[state];

    let u = dynamics.propagator_at(t)?;
    u.inverse()?;
    let mut heisenberg = 0.0;
    for (k, c) in initial.coefficients().iter().enumerate() {
        heisenberg += u.matrix_raw()[(state, k)] * c;
    }
    Ok(PicturePair {
        schrodinger,
        heisenberg,
    })
}

/// Residual of the moving-basis completeness sum: assembling
/// sum_i U^{-1} e_i e_i^T U outer product by outer product must give
/// back the identity.
pub fn time_dependent_unit_residual(dynamics: &Dynamics, t: f64) -> Result<f64> {
    let u = dynamics.propagator_at(t)?;
    let inv = u.inverse()?;
    let n = u.dim();
    let mut assembled = DMatrix::zeros(n, n);
    for i in 0..n {
        let col = inv.column(i);
        let row = u.matrix_raw().row(i);
        assembled += col * row;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((assembled[(i, j)] - want).abs());
        }
    }
    Ok(worst)
}
