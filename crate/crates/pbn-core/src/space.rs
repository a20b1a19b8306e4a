//! Finite probability spaces and the bracket algebra on their events.
//!
//! A [`DiscreteSpace`] is an ordered list of labelled sample points with
//! a probability weight each. An [`Event`] is a plain set of labels and
//! carries no reference to a space; every operation validates the
//! labels it is given against the space it runs on.
//!
//! ```
//! use pbn_core::space::{DiscreteSpace, Event};
//!
//! let die = DiscreteSpace::uniform(["1", "2", "3", "4", "5", "6"]).unwrap();
//! let even = Event::new(["2", "4", "6"]);
//! let low = Event::new(["1", "2", "3"]);
//! let p = die.bracket(&even, &low).unwrap();
//! assert!((p - 1.0 / 3.0).abs() < 1e-12);
//! ```

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::fmt;

/// Tolerance for "this measure sums to one" checks.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A set of sample-point labels. Equality ignores insertion order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Event {
    members: BTreeSet<String>,
}

impl Event {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Event {
            members: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty() -> Self {
        Event::default()
    }

    pub fn singleton(label: impl Into<String>) -> Self {
        Event::new([label.into()])
    }

    pub fn intersect(&self, other: &Event) -> Event {
        Event {
            members: self.members.intersection(&other.members).cloned().collect(),
        }
    }

    pub fn union(&self, other: &Event) -> Event {
        Event {
            members: self.members.union(&other.members).cloned().collect(),
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.members.contains(label)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for Event {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Event::new(iter)
    }
}

/// A finite probability space: ordered labelled points plus a measure
/// that sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
    index: HashMap<String, usize>,
}

impl DiscreteSpace {
    /// Builds a space from `(label, weight)` pairs. Weights must be
    /// non-negative and sum to one within [`NORMALIZATION_TOL`].
    pub fn new<I, S>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self::build(points, false)
    }

    /// Same as [`DiscreteSpace::new`] but rescales the weights by their
    /// sum, so measures written with rounded decimals load cleanly.
    pub fn new_normalized<I, S>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self::build(points, true)
    }

    /// Uniform measure over the given labels.
    pub fn uniform<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let w = 1.0 / labels.len().max(1) as f64;
        Self::build(labels.into_iter().map(|l| (l, w)), true)
    }

    fn build<I, S>(points: I, normalize: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        let mut index = HashMap::new();
        for (label, weight) in points {
            let label = label.into();
            if label.is_empty() {
                return Err(Error::EmptyLabel);
            }
            if weight < 0.0 || !weight.is_finite() {
                return Err(Error::NegativeWeight { label, weight });
            }
            if index.insert(label.clone(), labels.len()).is_some() {
                return Err(Error::DuplicateLabel(label));
            }
            labels.push(label);
            weights.push(weight);
        }
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let sum: f64 = weights.iter().sum();
        if normalize {
            if sum <= 0.0 {
                return Err(Error::NotNormalized(fmt::sig15(sum)));
            }
            for w in &mut weights {
                *w /= sum;
            }
        } else if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(fmt::sig15(sum)));
        }
        Ok(DiscreteSpace {
            labels,
            weights,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false; construction rejects empty spaces.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_at(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// The sure event containing every point.
    pub fn omega(&self) -> Event {
        Event::new(self.labels.iter().cloned())
    }

    fn check_event(&self, e: &Event) -> Result<()> {
        for label in e.iter() {
            if !self.index.contains_key(label) {
                return Err(Error::UnknownLabel(label.to_string()));
            }
        }
        Ok(())
    }

    /// P(E): total weight of the event's points.
    ///
    /// Summation runs in point order, so equal sets always produce the
    /// identical float.
    pub fn event_prob(&self, e: &Event) -> Result<f64> {
        self.check_event(e)?;
        Ok(self.sum_where(|label| e.contains(label)))
    }

    fn sum_where(&self, mut keep: impl FnMut(&str) -> bool) -> f64 {
        let mut acc = 0.0;
        for (label, w) in self.labels.iter().zip(&self.weights) {
            if keep(label) {
                acc += w;
            }
        }
        acc
    }

    /// The conditional bracket P(A|B) = P(A and B) / P(B).
    ///
    /// When A covers B the ratio is exactly 1 because numerator and
    /// denominator are the same sum.
    pub fn bracket(&self, a: &Event, b: &Event) -> Result<f64> {
        self.check_event(a)?;
        self.check_event(b)?;
        let pb = self.sum_where(|l| b.contains(l));
        if pb == 0.0 {
            return Err(Error::ZeroConditioningEvent);
        }
        let pab = self.sum_where(|l| a.contains(l) && b.contains(l));
        Ok(pab / pb)
    }

    /// P(A|B) computed the other way around: P(B|A) P(A) / P(B).
    /// Requires both conditioning masses to be positive.
    pub fn bayes(&self, a: &Event, b: &Event) -> Result<f64> {
        let pa = self.event_prob(a)?;
        let pb = self.event_prob(b)?;
        if pa == 0.0 || pb == 0.0 {
            return Err(Error::ZeroConditioningEvent);
        }
        Ok(self.bracket(b, a)? * pa / pb)
    }

    /// Singleton events in point order. Against these, brackets behave
    /// like a Kronecker delta and their probabilities sum to one.
    pub fn point_basis(&self) -> Vec<Event> {
        self.labels.iter().map(Event::singleton).collect()
    }
}
