//! Product spaces, occupation-number spaces, and the weighted bra
//! conventions used for particle-counting expectations.

use crate::error::{Error, Result};
use crate::observable::{Observable, PBra};
use crate::space::{DiscreteSpace, Event};

/// Joint spaces larger than this are refused outright.
pub const DEFAULT_PRODUCT_CAP: usize = 1_000_000;

/// Separator between factor labels in a joint point label.
pub const LABEL_SEPARATOR: char = '_';

/// The product of finitely many spaces under the product measure,
/// materialized eagerly as an ordinary [`DiscreteSpace`].
#[derive(Debug, Clone)]
pub struct ProductSpace {
    factors: Vec<DiscreteSpace>,
    joint: DiscreteSpace,
    // per joint point, the point index in each factor
    tuples: Vec<Vec<usize>>,
}

/// Builds the joint space of the given factors. Joint labels join the
/// factor labels with [`LABEL_SEPARATOR`], last factor varying fastest.
pub fn product(factors: &[DiscreteSpace]) -> Result<ProductSpace> {
    product_with_cap(factors, DEFAULT_PRODUCT_CAP)
}

pub fn product_with_cap(factors: &[DiscreteSpace], cap: usize) -> Result<ProductSpace> {
    if factors.is_empty() {
        return Err(Error::EmptySpace);
    }
    let mut size: u128 = 1;
    for f in factors {
        size *= f.len() as u128;
    }
    if size > cap as u128 {
        return Err(Error::CapacityExceeded { size, cap });
    }
    let mut tuples = Vec::with_capacity(size as usize);
    let mut points = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; factors.len()];
    loop {
        let label = idx
            .iter()
            .zip(factors)
            .map(|(&i, f)| f.label(i))
            .collect::<Vec<_>>()
            .join(&LABEL_SEPARATOR.to_string());
        let weight: f64 = idx
            .iter()
            .zip(factors)
            .map(|(&i, f)| f.weight_at(i))
            .product();
        tuples.push(idx.clone());
        points.push((label, weight));
        // odometer increment, last factor fastest
        let mut pos = factors.len();
        loop {
            if pos == 0 {
                return Ok(ProductSpace {
                    factors: factors.to_vec(),
                    joint: DiscreteSpace::new(points)?,
                    tuples,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < factors[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

impl ProductSpace {
    pub fn joint(&self) -> &DiscreteSpace {
        &self.joint
    }

    pub fn factors(&self) -> &[DiscreteSpace] {
        &self.factors
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    fn check_factor(&self, factor: usize) -> Result<()> {
        if factor >= self.factors.len() {
            return Err(Error::IndexOutOfRange {
                index: factor,
                len: self.factors.len(),
            });
        }
        Ok(())
    }

    /// Sums the joint measure over all other factors. Recovers the
    /// factor's own measure exactly up to float regrouping.
    pub fn marginal(&self, factor: usize) -> Result<DiscreteSpace> {
        self.check_factor(factor)?;
        let f = &self.factors[factor];
        let mut weights = vec![0.0; f.len()];
        for (tuple, w) in self.tuples.iter().zip(self.joint.weights()) {
            weights[tuple[factor]] += w;
        }
        DiscreteSpace::new_normalized(
            f.labels()
                .map(str::to_string)
                .zip(weights)
                .collect::<Vec<_>>(),
        )
    }

    /// The joint event "factor `factor` lands in `labels`".
    pub fn cylinder(&self, factor: usize, labels: &Event) -> Result<Event> {
        self.check_factor(factor)?;
        for l in labels.iter() {
            if self.factors[factor].index_of(l).is_none() {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        let mut members = Vec::new();
        for (i, tuple) in self.tuples.iter().enumerate() {
            let component = self.factors[factor].label(tuple[factor]);
            if labels.contains(component) {
                members.push(self.joint.label(i).to_string());
            }
        }
        Ok(Event::new(members))
    }

    /// Whether P(A|B) = P(A) within 1e-12 on the joint space.
    pub fn independence_check(&self, a: &Event, b: &Event) -> Result<bool> {
        let conditional = self.joint.bracket(a, b)?;
        let plain = self.joint.event_prob(a)?;
        Ok((conditional - plain).abs() <= 1e-12)
    }
}

/// A distribution over occupation-number tuples: `sites` slots, each
/// holding 0..=cutoff particles. The full grid is materialized.
#[derive(Debug, Clone)]
pub struct OccupationSpace {
    sites: usize,
    cutoff: u32,
    space: DiscreteSpace,
    states: Vec<Vec<u32>>,
}

fn occupation_label(counts: &[u32]) -> String {
    counts
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(&LABEL_SEPARATOR.to_string())
}

impl OccupationSpace {
    /// Grid of all count tuples with the given weights; tuples not
    /// listed get weight zero. Weights must sum to one.
    pub fn new(sites: usize, cutoff: u32, weights: &[(Vec<u32>, f64)]) -> Result<Self> {
        if sites == 0 {
            return Err(Error::EmptySpace);
        }
        let per_site = cutoff as u128 + 1;
        let size = per_site.pow(sites as u32);
        if size > DEFAULT_PRODUCT_CAP as u128 {
            return Err(Error::CapacityExceeded {
                size,
                cap: DEFAULT_PRODUCT_CAP,
            });
        }
        let mut states = Vec::with_capacity(size as usize);
        let mut grid = vec![0u32; sites];
        loop {
            states.push(grid.clone());
            let mut pos = sites;
            loop {
                if pos == 0 {
                    let mut w = vec![0.0; states.len()];
                    for (counts, weight) in weights {
                        let slot = states.iter().position(|s| s == counts).ok_or_else(|| {
                            Error::IndexOutOfRange {
                                index: counts.iter().map(|&c| c as usize).max().unwrap_or(0),
                                len: cutoff as usize + 1,
                            }
                        })?;
                        w[slot] = *weight;
                    }
                    let space = DiscreteSpace::new(
                        states
                            .iter()
                            .map(|s| occupation_label(s))
                            .zip(w)
                            .collect::<Vec<_>>(),
                    )?;
                    return Ok(OccupationSpace {
                        sites,
                        cutoff,
                        space,
                        states,
                    });
                }
                pos -= 1;
                grid[pos] += 1;
                if grid[pos] <= cutoff {
                    break;
                }
                grid[pos] = 0;
            }
        }
    }

    /// Single site with the given weights on counts 0..weights.len().
    pub fn single_site(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        let cutoff = weights.len() as u32 - 1;
        let listed: Vec<(Vec<u32>, f64)> = weights
            .iter()
            .enumerate()
            .map(|(n, &w)| (vec![n as u32], w))
            .collect();
        OccupationSpace::new(1, cutoff, &listed)
    }

    /// Uniform distribution over the whole grid.
    pub fn uniform(sites: usize, cutoff: u32) -> Result<Self> {
        let per_site = (cutoff as usize) + 1;
        let total = per_site.pow(sites as u32);
        let w = 1.0 / total as f64;
        let mut listed = Vec::with_capacity(total);
        let mut grid = vec![0u32; sites];
        'outer: loop {
            listed.push((grid.clone(), w));
            let mut pos = sites;
            loop {
                if pos == 0 {
                    break 'outer;
                }
                pos -= 1;
                grid[pos] += 1;
                if grid[pos] <= cutoff {
                    break;
                }
                grid[pos] = 0;
            }
        }
        OccupationSpace::new(sites, cutoff, &listed)
    }

    /// All mass on one tuple.
    pub fn point_mass(counts: &[u32], cutoff: u32) -> Result<Self> {
        OccupationSpace::new(counts.len(), cutoff, &[(counts.to_vec(), 1.0)])
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            return Err(Error::IndexOutOfRange {
                index: site,
                len: self.sites,
            });
        }
        Ok(())
    }

    /// Mean particle number at one site.
    pub fn occupation_expectation(&self, site: usize) -> Result<f64> {
        self.check_site(site)?;
        let mut acc = 0.0;
        for (state, w) in self.states.iter().zip(self.space.weights()) {
            acc += state[site] as f64 * w;
        }
        Ok(acc)
    }

    /// The count at `site` as a diagonal observable on the grid.
    pub fn count_observable(&self, site: usize) -> Result<Observable> {
        self.check_site(site)?;
        let values: Vec<f64> = self.states.iter().map(|s| s[site] as f64).collect();
        let map = self
            .space
            .labels()
            .map(str::to_string)
            .zip(values)
            .collect();
        Observable::new(&self.space, &map)
    }

    /// Collapses the grid onto one site.
    pub fn site_marginal(&self, site: usize) -> Result<OccupationSpace> {
        self.check_site(site)?;
        let mut weights = vec![0.0; self.cutoff as usize + 1];
        for (state, w) in self.states.iter().zip(self.space.weights()) {
            weights[state[site] as usize] += w;
        }
        OccupationSpace::single_site(&weights)
    }
}

/// Largest n with n! exactly representable in u64.
const FACTORIAL_LIMIT: u32 = 20;

fn factorial_u64(n: u32) -> Result<u64> {
    if n > FACTORIAL_LIMIT {
        return Err(Error::FactorialOverflow(n));
    }
    Ok((2..=n as u64).product::<u64>().max(1))
}

/// Which pairing the standard bra uses against number states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightedBasis {
    /// Unit weights, unit norms.
    Plain,
    /// Bra weights 1/n! against basis norms n!.
    Peliti,
}

impl WeightedBasis {
    /// The bra weight attached to count n.
    pub fn bra_weight(&self, n: u32) -> Result<f64> {
        Ok(match self {
            WeightedBasis::Plain => 1.0,
            WeightedBasis::Peliti => 1.0 / factorial_u64(n)? as f64,
        })
    }

    /// The squared norm of the number state |n).
    pub fn gram(&self, n: u32) -> Result<f64> {
        Ok(match self {
            WeightedBasis::Plain => 1.0,
            WeightedBasis::Peliti => factorial_u64(n)? as f64,
        })
    }

    /// bra_weight(n) * gram(n), taken as one exact factorial ratio so
    /// the cancellation introduces no rounding at all.
    pub fn pairing(&self, n: u32) -> Result<f64> {
        Ok(match self {
            WeightedBasis::Plain => 1.0,
            WeightedBasis::Peliti => {
                let f = factorial_u64(n)? as f64;
                #[allow(clippy::eq_op)]
                {
                    f / f
                }
            }
        })
    }
}

/// The flat row over any space: every weight 1. Contracting it with a
/// system ket sums the coefficients.
pub fn doi_state_bra(space: &DiscreteSpace) -> PBra {
    PBra::ones(space.len())
}

/// The standard bra with weights 1/n! on a single-site number basis.
pub fn peliti_bra(occ: &OccupationSpace) -> Result<PBra> {
    if occ.sites != 1 {
        return Err(Error::UnsupportedBasis(format!(
            "standard bra is defined on a single site, got {}",
            occ.sites
        )));
    }
    let mut weights = Vec::with_capacity(occ.states.len());
    for state in &occ.states {
        weights.push(WeightedBasis::Peliti.bra_weight(state[0])?);
    }
    Ok(PBra::from_weights(weights))
}

/// Expectation of F(n) through the weighted pairing: each term is
/// weight(n) * F(n) * m(n) * gram(n).
pub fn weighted_expectation(
    occ: &OccupationSpace,
    basis: WeightedBasis,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    if basis == WeightedBasis::Peliti && occ.sites != 1 {
        return Err(Error::UnsupportedBasis(format!(
            "weighted expectation over {} sites",
            occ.sites
        )));
    }
    let mut acc = 0.0;
    for (state, m) in occ.states.iter().zip(occ.space.weights()) {
        let n = state[0];
        acc += basis.pairing(n)? * f(n as f64) * m;
    }
    Ok(acc)
}

/// Max deviation of weight(n) * gram(n) from 1 over the truncated
/// basis: the resolution-of-identity residual.
pub fn resolution_residual(basis: WeightedBasis, cutoff: u32) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..=cutoff {
        worst = worst.max((basis.pairing(n)? - 1.0).abs());
    }
    Ok(worst)
}
