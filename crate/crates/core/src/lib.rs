//! Dynamics of two two-level atoms crossing a single-mode photonic-crystal
//! cavity.
//!
//! The crate is organised bottom-up:
//!
//! - [`units`]: physical constants and shared domain types
//!   ([`AmplitudeVector`], [`AtomParams`], [`CavityParams`]).
//! - [`coupling`]: time-dependent coupling strengths seen by moving atoms and
//!   their pulse areas.
//! - [`analytic`]: closed-form single-excitation propagator for proportional
//!   couplings.
//! - [`ode`]: adaptive Runge–Kutta integration of the interaction-picture
//!   Schrödinger equation in the 0-, 1- and 2-excitation subspaces.
//! - [`fieldgrid`]: mode volume, peak coupling and coupling traces from a
//!   sampled cavity field.
//! - [`gates`]: truth tables, fidelities, classification and velocity
//!   calibration.
//! - [`sweep`]: amplitude surfaces over (velocity, ratio) grids.
//!
//! All angular frequencies are in rad/s, times in s and lengths in m.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod coupling;
pub mod error;
pub mod export;
pub mod fieldgrid;
pub mod gates;
pub mod ode;
pub mod quadrature;
pub mod svg;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use units::{AmplitudeVector, AtomParams, BasisKet, CavityParams, PhysicalConstants};
