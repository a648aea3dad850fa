//! Frozen percolation on the triangular lattice.
//!
//! Simulates the growth process where black clusters stop growing ("freeze")
//! once their size (diameter or volume) reaches a threshold `N`, under two
//! boundary rules: the original one, where sites next to a frozen cluster stay
//! vacant forever, and the modified one, where they may still turn black later
//! and form new clusters. Alongside the process itself, the crate carries the
//! static near-critical percolation machinery needed to probe it: crossings,
//! circuits, arm events, passage sites, nets, the characteristic length, and
//! the near-critical parameter scale.

pub mod connectivity;
pub mod error;
pub mod estimators;
pub mod field;
pub mod frozen;
pub mod harness;
pub mod lattice;

pub use error::Error;

/// Critical probability of site percolation on the triangular lattice.
pub const P_C: f64 = 0.5;

pub type Result<T> = std::result::Result<T, Error>;
