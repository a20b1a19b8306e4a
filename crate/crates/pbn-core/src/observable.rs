//! Real-valued observables over a space, expectation machinery, and the
//! row/column vector pair used to write expectations as contractions.
//!
//! The system ket carries the measure as its coefficients; the plain
//! system bra is a row of ones. Their contraction is the total mass,
//! and sandwiching a diagonal observable between them is expectation.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::space::{DiscreteSpace, Event};

/// A total map from sample points to real values, stored in point order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    values: Vec<f64>,
}

impl Observable {
    /// Builds an observable from a label-to-value map. The map must
    /// cover the space exactly: no missing points, no strays.
    pub fn new(space: &DiscreteSpace, values: &HashMap<String, f64>) -> Result<Self> {
        for label in values.keys() {
            if space.index_of(label).is_none() {
                return Err(Error::ExtraValue(label.clone()));
            }
        }
        let mut out = Vec::with_capacity(space.len());
        for label in space.labels() {
            match values.get(label) {
                Some(v) => out.push(*v),
                None => return Err(Error::MissingValue(label.to_string())),
            }
        }
        Ok(Observable { values: out })
    }

    pub fn from_fn(space: &DiscreteSpace, f: impl Fn(&str) -> f64) -> Self {
        Observable {
            values: space.labels().map(f).collect(),
        }
    }

    pub fn constant(space: &DiscreteSpace, c: f64) -> Self {
        Observable {
            values: vec![c; space.len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column of probability coefficients: non-negative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PKet {
    coefficients: Vec<f64>,
}

impl PKet {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        for &c in &coefficients {
            if c < 0.0 || !c.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "coefficient {c} out of range"
                )));
            }
        }
        let sum: f64 = coefficients.iter().sum();
        if (sum - 1.0).abs() > crate::space::NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "coefficients sum to {sum}"
            )));
        }
        Ok(PKet { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Row of weights paired against kets by plain dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct PBra {
    weights: Vec<f64>,
}

impl PBra {
    pub fn ones(len: usize) -> Self {
        PBra {
            weights: vec![1.0; len],
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        PBra { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn contract(&self, ket: &PKet) -> Result<f64> {
        self.sandwich_values(None, ket)
    }

    /// (bra| diag(values) |ket): expectation when the bra is all ones
    /// and the ket carries the measure.
    pub fn sandwich(&self, values: &[f64], ket: &PKet) -> Result<f64> {
        self.sandwich_values(Some(values), ket)
    }

    fn sandwich_values(&self, values: Option<&[f64]>, ket: &PKet) -> Result<f64> {
        if self.weights.len() != ket.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: ket.len(),
            });
        }
        if let Some(v) = values {
            if v.len() != ket.len() {
                return Err(Error::DimensionMismatch {
                    expected: ket.len(),
                    found: v.len(),
                });
            }
        }
        let mut acc = 0.0;
        for i in 0..ket.len() {
            let mid = values.map_or(1.0, |v| v[i]);
            acc += self.weights[i] * mid * ket.coefficients[i];
        }
        Ok(acc)
    }
}

/// The measure written as a ket.
pub fn system_ket(space: &DiscreteSpace) -> PKet {
    PKet {
        coefficients: space.weights().to_vec(),
    }
}

/// The all-ones row. Contracting it with the system ket gives 1.
pub fn system_bra(space: &DiscreteSpace) -> PBra {
    PBra::ones(space.len())
}

fn check_aligned(space: &DiscreteSpace, x: &Observable) -> Result<()> {
    if space.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            found: x.len(),
        });
    }
    Ok(())
}

/// E[X] under the space's measure.
pub fn expectation(space: &DiscreteSpace, x: &Observable) -> Result<f64> {
    expectation_fn(space, |v| v, x)
}

/// E[F(X)] for a pointwise function of the observable.
pub fn expectation_fn(space: &DiscreteSpace, f: impl Fn(f64) -> f64, x: &Observable) -> Result<f64> {
    check_aligned(space, x)?;
    let mut acc = 0.0;
    for (v, w) in x.values().iter().zip(space.weights()) {
        acc += f(*v) * w;
    }
    Ok(acc)
}

/// E[X | H]: expectation against the conditional brackets P(point|H).
pub fn conditional_expectation(space: &DiscreteSpace, x: &Observable, h: &Event) -> Result<f64> {
    conditional_expectation_fn(space, |v| v, x, h)
}

/// E[F(X) | H].
pub fn conditional_expectation_fn(
    space: &DiscreteSpace,
    f: impl Fn(f64) -> f64,
    x: &Observable,
    h: &Event,
) -> Result<f64> {
    check_aligned(space, x)?;
    let ph = space.event_prob(h)?;
    if ph == 0.0 {
        return Err(Error::ZeroConditioningEvent);
    }
    let mut acc = 0.0;
    for (i, label) in space.labels().enumerate() {
        if h.contains(label) {
            acc += f(x.values()[i]) * (space.weight_at(i) / ph);
        }
    }
    Ok(acc)
}

/// E[X restricted to B]: the observable multiplied by the indicator of
/// B. Equals P(B) E[X|B] whenever B has positive mass.
pub fn expectation_indicator(space: &DiscreteSpace, x: &Observable, b: &Event) -> Result<f64> {
    check_aligned(space, x)?;
    space.event_prob(b)?;
    let mut acc = 0.0;
    for (i, label) in space.labels().enumerate() {
        if b.contains(label) {
            acc += x.values()[i] * space.weight_at(i);
        }
    }
    Ok(acc)
}
