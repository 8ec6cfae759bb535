//! Mixed finite-element solver for a two-fluid interface problem on the unit
//! square: a compressible flow in the upper half `(0,1) x (1/2,1)` coupled to
//! incompressible Stokes flow in the lower half `(0,1) x (0,1/2)` across the
//! interface `y = 1/2`.
//!
//! The static resolvent system is solved by eliminating the upper-domain
//! unknowns through interface lifting solves (a dense interface Schur block),
//! then solving a Taylor-Hood (P2/P1) saddle system on the lower domain and
//! recovering the upper fields by superposition. Time evolution uses repeated
//! resolvent solves (implicit Euler / exponential formula).
//!
//! The crate is `no_std` (with `alloc`); all file formats and the CLI live in
//! the companion `twofluid-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod coupled;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod mesh;
pub mod pressure;
pub mod space;
pub mod upper;
pub mod verify;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
