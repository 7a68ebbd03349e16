//! Discrete-time railway traffic and passenger-flow simulation with a
//! hierarchical rescheduling environment and a self-contained PPO trainer.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, the command-line front end and thread-parallel
//! rollouts live in the `railsched` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agents;
pub mod env;
pub mod fixture;
pub mod harness;
pub mod ids;
pub mod math;
pub mod passenger;
pub mod ppo;
pub mod route;
pub mod sim;

pub use ids::{BlockId, Direction, JunctionId, PointId, RouteId, StationId, TrainId};
