//! Rigorous numerics for doubly warped products with twisted Hopf actions.
//!
//! The crate is organised bottom-up:
//!
//! * [`interval`] and [`huge`]: outward-rounded arithmetic, including numbers
//!   far beyond `f64` range stored as iterated exponentials.
//! * [`qz`] and [`snowflake`]: exact bookkeeping for chains of cyclic subgroups
//!   of Q/Z and the coset graph they act on.
//! * [`hopf`]: quaternions, circle actions on S³×S³ and the equivariant maps.
//! * [`curvature`]: closed-form Ricci tensors.
//! * [`profile`] and [`certify`]: piecewise warping functions with interval
//!   jets, and a bisection certifier for one-variable inequalities.
//! * [`pipelines`]: the staged constructions built from all of the above.
//! * [`config`]: run configuration and report types shared with the CLI.

pub mod certify;
pub mod config;
pub mod curvature;
pub mod hopf;
pub mod huge;
pub mod interval;
pub mod pipelines;
pub mod profile;
pub mod qz;
pub mod snowflake;

pub use interval::Interval;
