//! Signalized corridor traffic simulation and signal-control laboratory.
//!
//! The crate is organised bottom-up:
//!
//! - [`net`] builds the corridor topology and holds the demand configuration.
//! - [`sim`] is the discrete-time microscopic engine (Poisson arrivals,
//!   IDM car-following, backup queues, statistics).
//! - [`signal`] holds the two-phase signal state machine and the MaxPressure
//!   baseline.
//! - [`mdp`] maps simulation state onto observations, rewards and decisions.
//! - [`nn`] is a small dense network with hand-written backprop and Adam.
//! - [`ppo`] implements GAE, the clipped surrogate loss, training and
//!   checkpoints.
//! - [`exp`] runs capacity sweeps, travel-time evaluation and the green-wave
//!   study, and backs the `corridor` command line tool.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exp;
pub mod mdp;
pub mod net;
pub mod nn;
pub mod ppo;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
