//! Lane-change decision stack: a two-lane highway environment, dueling Q-network agents with
//! noisy exploration, and an advisor fusion pipeline that compares the policy's actions with
//! external recommendations.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the CLI live in the `lanefusion`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod action;
pub mod agents;
pub mod fusion;
pub mod qnet;
pub mod rollout;
pub mod sim;

pub use action::{Action, ActionError};
