//! Simulator core for a GHZ-type argument on a single two-spin singlet.
//!
//! Everything here is `no_std` (with `alloc`): exact state algebra for two and
//! three spin-½ particles, exhaustive non-contextual hidden-variable checks,
//! a counter-based trial engine, postselection estimators, and report
//! assembly. IO, threading and the command line live in the `postsel` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod engine;
mod error;
pub mod hidden;
pub mod quantum;
pub mod rng;
pub mod select;

pub use error::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;
