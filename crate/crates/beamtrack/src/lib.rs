//! Link-level Monte Carlo simulator for hierarchical beam tracking on a
//! terahertz uniform-linear-array downlink.
//!
//! An access point steers a multi-resolution beam codebook toward a mobile
//! user. Three initialization timeslots acquire the user by descending the
//! codebook level by level; afterwards every timeslot predicts where the user
//! moved and re-acquires it with a short refinement search, falling back to a
//! full re-initialization whenever the link is interrupted. Two reference
//! schemes — an exhaustive-style fast tracker and a single-level ablation —
//! share the same mobility, channel, and measurement models so that pilot
//! overhead and angular error are directly comparable.
//!
//! Module map:
//! - [`geometry`]: room, random-walk mobility, resampling, polar conversion
//! - [`codebook`]: steering vectors and the hierarchical codebook
//! - [`channel`]: line-of-sight channel and noisy pilot measurements
//! - [`tracker`]: the three trackers and their shared slot state machine
//! - [`sim`]: episode runner, pooled metrics, parameter sweeps, CSV output
//! - [`config`]: scenario defaults, config-file parsing, flag overrides

pub mod channel;
pub mod codebook;
pub mod config;
pub mod geometry;
pub mod sim;
pub mod tracker;

mod error;

pub use error::{Error, Result};
