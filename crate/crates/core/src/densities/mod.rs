//! Densities and constants: `g_r`, `Θ`, Beta, `K_n`, and the joint laws of
//! residual totals, residual fractions and size-biased values.

mod constants;
mod gr;
mod joint;
mod mc;

pub use constants::*;
pub use gr::*;
pub use joint::*;
pub use mc::*;
