//! Objectivity-of-observables bounds for infinite-dimensional quantum
//! Darwinism, together with the truncated Fock-space machinery used to
//! check every supporting inequality numerically.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: dense operators and states on truncated Fock spaces.
//! * [`channels`]: Kraus-form channels, Choi constructions and the
//!   measure-and-prepare channel.
//! * [`bounds`]: closed-form bound expressions, evaluated in log domain.
//! * [`gaussian`]: single-mode Gaussian moments and cut-off certificates.
//! * [`optimizer`]: numeric minimisation of the bounds and power-law fits.
//! * [`verify`]: sampled norm estimators and lemma checkers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channels;
pub mod count;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod optimizer;
pub mod random;
pub mod verify;

pub use count::FragmentCount;
pub use error::{Error, Result};
