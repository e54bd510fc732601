//! Random walks induced by group actions on Schreier graphs.
//!
//! The crate covers three actions (Thompson's group F on dyadic rationals, the
//! free group on the comb graph Ψ and Z∗Z² on the plane comb Ψ′), lazily built
//! Schreier graphs with component and end labeling, group measures, exact
//! analysis of a transient birth-death counterexample chain, and a parallel
//! Monte Carlo walk engine.

pub mod actions;
pub mod chains;
pub mod dyadic;
pub mod error;
pub mod measures;
mod par;
pub mod schreier;
pub mod simulate;

pub use actions::{Action, ActionPoint, CombVertex, Letter, PlaneVertex, Word};
pub use dyadic::{DyadicPoint, DyadicRational};
pub use error::{Error, Result};
