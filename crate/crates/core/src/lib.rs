//! Front tracking, minmax and iterated minmax for the Hamilton-Jacobi
//! equation `u_t + H(u_x) = 0` in one space variable with piecewise-linear
//! data.

pub mod cli;
pub mod error;
pub mod plfun;
pub mod fronttrack;
pub mod genfam;
pub mod iterate;
pub mod minmax;
pub mod riemann;

pub use error::{Error, Result};
pub use plfun::{EnvelopeKind, ExtendedPL, PLFunction, SlopeInterval};
