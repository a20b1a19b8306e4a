//! A small engine for probability computations written in bra-ket
//! style: finite sample spaces with conditional brackets, observables
//! and their expectations, product and occupation-number spaces,
//! Markov evolution in both the state and the observable picture, and
//! a tiny query language over all of it.
//!
//! The bracket P(A|B) is a ratio of measures, not an inner product;
//! the row vector pairing with state columns is the all-ones bra.
//! Everything downstream keeps those two facts straight.

pub mod composite;
pub mod density;
pub mod error;
pub mod fmt;
pub mod lang;
pub mod markov;
pub mod observable;
pub mod space;

pub use error::{Error, Result};
pub use observable::{Observable, PBra, PKet};
pub use space::{DiscreteSpace, Event};
