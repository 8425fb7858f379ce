//! Certified numerics for the lace-expansion bootstrap of nearest-neighbor
//! oriented percolation on the BCC lattice.
//!
//! The crate is `no_std` (it needs `alloc`). Pipeline:
//!
//! 1. [`rw`]: return probabilities of the BCC random walk and the truncated
//!    sums `eps1`, `eps2` with certified tail bounds.
//! 2. [`diagrams`]: closed-form bounds on the bubble, triangle and weighted
//!    bubble diagrams in terms of the bootstrap constants and the table.
//! 3. [`lace`]: per-coefficient polynomial bounds and the geometric-series
//!    totals for the expansion coefficients.
//! 4. [`bootstrap`]: improved bounds on `g1`, `g2`, `g3`, the verdict and the
//!    constant-grid search.
//!
//! [`checks`] certifies the auxiliary analytic inequalities on grids and
//! [`sim`] is a Monte Carlo simulator with exact small-instance oracles.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bootstrap;
pub mod checks;
pub mod diagrams;
mod error;
pub mod lace;
pub mod numeric;
pub mod rng;
pub mod rw;
pub mod sim;

pub use bootstrap::{verify, GBoundReport, Mode, Verdict};
pub use diagrams::BootstrapConstants;
pub use error::Error;
pub use numeric::{Interval, Policy, Scalar, UpperBound};
pub use rw::{build_table, Dimension, RwTable};

/// Truncation used for the random-walk sums unless configured otherwise.
pub const DEFAULT_TRUNCATION: u32 = 500;
