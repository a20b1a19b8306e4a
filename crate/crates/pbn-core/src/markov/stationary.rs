use nalgebra::{DMatrix, RowDVector};

use crate::error::{Error, Result};
use crate::observable::PKet;

use super::Dynamics;

/// Residual the fixed point must reach.
pub const STATIONARY_RESIDUAL: f64 = 1e-12;
/// Sweep budget for the power iteration.
pub const MAX_SWEEPS: usize = 1_000_000;

/// Strong connectivity of the positive-rate pattern: every state must
/// reach state 0 and be reachable from it.
fn irreducible(adj: &[Vec<usize>], radj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let reach = |edges: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &edges[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(adj) && reach(radj)
}

fn adjacency(m: &DMatrix<f64>) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n = m.nrows();
    let mut adj = vec![Vec::new(); n];
    let mut radj = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > 0.0 {
                adj[i].push(j);
                radj[j].push(i);
            }
        }
    }
    (adj, radj)
}

/// The unique stationary distribution of an irreducible chain.
///
/// Iterates the half-lazy step (M + I)/2, which shares its fixed
/// points with M but converges even for periodic chains; the residual
/// is measured against the original dynamics.
pub fn stationary(dynamics: &Dynamics) -> Result<PKet> {
    let n = dynamics.dim();
    let step = match dynamics {
        Dynamics::Dtmc(p) => p.matrix().clone(),
        Dynamics::Ctmc(g) => {
            let rate = g.uniformization_rate();
            if rate == 0.0 {
                // no transitions at all
                if n == 1 {
                    return PKet::new(vec![1.0]);
                }
                return Err(Error::Reducible);
            }
            let mut q = g.matrix() / rate;
            for i in 0..n {
                q[(i, i)] += 1.0;
            }
            q
        }
    };
    let (adj, radj) = adjacency(&step);
    if !irreducible(&adj, &radj) {
        return Err(Error::Reducible);
    }
    if n == 1 {
        return PKet::new(vec![1.0]);
    }

    let residual = |pi: &RowDVector<f64>| -> f64 {
        match dynamics {
            Dynamics::Dtmc(p) => {
                let next = pi * p.matrix();
                (0..n).map(|j| (next[j] - pi[j]).abs()).fold(0.0, f64::max)
            }
            Dynamics::Ctmc(g) => {
                let flow = pi * g.matrix();
                (0..n).map(|j| flow[j].abs()).fold(0.0, f64::max)
            }
        }
    };

    let mut pi = RowDVector::from_element(n, 1.0 / n as f64);
    for _ in 0..MAX_SWEEPS {
        if residual(&pi) <= STATIONARY_RESIDUAL {
            let total: f64 = pi.iter().sum();
            return PKet::new(pi.iter().map(|v| v / total).collect());
        }
        let moved = &pi * &step;
        pi = (&pi + moved) * 0.5;
        let total: f64 = pi.iter().sum();
        pi /= total;
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}
