//! Exact-arithmetic simulation of interference alignment on the K-user
//! interference channel.
//!
//! Two channel models live here:
//!
//! * [`det`]: the deterministic shift-XOR model, where every link shifts the
//!   transmitted bit vector and receivers see the modulo-2 superposition. With
//!   even shifts on desired links and odd shifts on interfering links, zeroing
//!   the odd bit positions at every transmitter leaves each receiver an
//!   interference-free view of the even positions.
//! * [`gauss`]: the real Gaussian interference channel with coefficients of
//!   the form `alpha * Q^n`. Signals are written in base `Q`, information qits
//!   sit on even digit positions, and interference lands on odd positions.
//!
//! [`qfixed`] provides the exact signed base-`Q` fixed-point numbers both the
//! encoder and the receivers operate on, and [`analysis`] turns Monte Carlo
//! statistics into power, rate and degrees-of-freedom figures.

pub mod analysis;
pub mod det;
mod error;
pub mod gauss;
pub mod qfixed;

pub use error::{Error, Result};
pub use qfixed::QFixed;
