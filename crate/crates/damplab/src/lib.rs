//! Numerical laboratory for the damped wave equation on the 2-torus with
//! damping that is invariant in one direction.
//!
//! The crate has three experimental pillars:
//!
//! * [`stationary`] — assembles and solves the one-dimensional stationary
//!   problem `-u'' + i q W u - E u = f` obtained by separating the invariant
//!   direction, estimates resolvent norms (per mode and as a sup over modes),
//!   and fits growth exponents in the frequency `q`.
//! * [`multiplier`] — the weight functions (`mu`, `chi`, `b`, `psi`) and the
//!   exponent ladder used in multiplier (commutator) arguments, together with
//!   numerical certification of each inequality on computed solutions.
//! * [`evolution`] — time-domain simulation of the damped wave equation by
//!   Strang splitting, energy measurement, and decay-exponent fitting.
//!
//! Everything is driven through [`config`] + [`runner`] (see the `damplab`
//! binary): experiments are JSON configs, outputs are CSV tables, JSON
//! metadata, and self-contained SVG plots.

pub mod config;
pub mod damping;
pub mod evolution;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod multiplier;
pub mod rng;
pub mod runner;
pub mod stationary;
pub mod svg;

pub use damping::{DampingProfile, Variant};
pub use fit::FitResult;
pub use grid::{CircleGrid, Scheme};
pub use stationary::{ResolventPoint, StationarySolve};
