//! Executable checks of the analytic toolbox: Gronwall-type bounds against
//! brute-force ODE oracles, a blow-up comparison for a power-law ODE, and
//! sampled interpolation and elliptic-regularity constants.
//!
//! The inequality reports certify by sampling only: they produce empirical
//! constants and trend checks, not proofs.

pub mod blowup;
pub mod fields;
pub mod gn;
pub mod gronwall;
pub mod h2bb;
pub mod ode;
pub mod suite;
