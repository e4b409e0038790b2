//! Numerical laboratory for the Weyl kernel `K_N(x, t) = Σ_{n≤N} e(t·n^d + x·n)`:
//! pointwise sums and their maxima, exact mean values `S(N, p)`, the
//! prime-rational comb decomposition of `K_N`, and level-set measurements.

pub mod error;
pub mod exp_sum;
pub mod kernel_decomp;
pub mod level_set;
pub mod mean_value;
pub mod numeric;
pub mod quad;
pub mod rational;
pub mod sampling;
pub mod weyl_bounds;

pub use error::{Error, Result};
