//! Truthful two-bidder multi-unit auctions in exact arithmetic.
//!
//! The crate implements the triage auction, weighted VCG, the shifted welfare
//! maximizer and the fractions auction as taxation-principle mechanisms, and
//! checks their claimed properties by exhaustive enumeration over rational
//! valuation grids:
//!
//! - [`model`]: valuations, price schedules, outcomes, the welfare oracle.
//! - [`mechanisms`]: schedule constructors and the allocation engine.
//! - [`verify`]: truthfulness, feasibility, rationality, scalability,
//!   approximation sweeps, and the affine-maximizer refutation.
//! - [`normal_form`]: the `(p, q, f, g)` description of two-item scalable
//!   mechanisms and the probe suite for its characterization.
//! - [`induced`]: valuation extensions and the two-item mechanisms induced by
//!   an `m`-item mechanism.

pub mod error;
pub mod exec;
pub mod induced;
pub mod mechanisms;
pub mod model;
pub mod normal_form;
pub mod rat;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use rat::{rat, Rat};
