//! Trimmed Poisson-Dirichlet laws `PD_α^{(r)}`: ordered stable jumps with the
//! `r` largest removed, their negative binomial point process representation,
//! size-biased and stick-breaking samplers, the associated densities, a
//! Monte-Carlo verification harness and a heuristic rank-size fitter.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod densities;
pub mod error;
pub mod fit;
pub mod levy;
pub mod nbproc;
pub mod quad;
pub mod rng;
pub mod sizebias;
pub mod stats;
pub mod verify;

pub use error::{PdError, Result};
