use crate::error::{Error, Result};

use super::{ctmc_propagator, Generator};

/// Boundary mass above this means the truncation is eating the tail.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// For a pure-birth counting chain started in state 0, the increment
/// over a window of width t must not care where the window sits:
/// P(X_{t+s} - X_s = x) has to match P(X_t - X_0 = x). Returns the
/// worst deviation over all increments x.
///
/// The generator must be a counting chain: every positive rate sits on
/// the first superdiagonal, so increments are plain state shifts.
pub fn increment_stationarity_residual(
    g: &Generator,
    t: f64,
    s: f64,
    tail_tol: f64,
) -> Result<f64> {
    let n = g.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && j != i + 1 && g.matrix()[(i, j)] > 0.0 {
                return Err(Error::InvalidGenerator(format!(
                    "rate at ({i}, {j}) breaks the pure-birth shape"
                )));
            }
        }
    }
    let u_t = ctmc_propagator(g, t, tail_tol)?;
    let u_s = ctmc_propagator(g, s, tail_tol)?;
    let u_both = ctmc_propagator(g, t + s, tail_tol)?;

    let boundary_mass = u_both.entry(n - 1, 0);
    if boundary_mass >= BOUNDARY_TOL {
        return Err(Error::CutoffTooSmall { boundary_mass });
    }

    let mut worst = 0.0f64;
    for x in 0..n {
        let reference = u_t.entry(x, 0);
        let mut shifted = 0.0;
        for y in 0..n - x {
            shifted += u_s.entry(y, 0) * u_t.entry(y + x, y);
        }
        worst = worst.max((shifted - reference).abs());
    }
    Ok(worst)
}
