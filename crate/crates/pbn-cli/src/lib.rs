//! Library surface of the `pbn` binary, split out so integration
//! tests can call command implementations directly.

pub mod check;
pub mod commands;
pub mod model;
