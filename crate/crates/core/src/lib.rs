//! Event-triggered trajectory tracking for nonlinear systems.
//!
//! The crate simulates a sample-and-hold tracking loop whose control updates
//! are scheduled by a Lyapunov-based triggering condition, checks the
//! Lyapunov decrease along the way, and evaluates closed-form lower bounds on
//! the time between updates.

pub mod bounds;
pub mod cli;
pub mod comparison;
pub mod config;
pub mod error;
pub mod lyapunov;
pub mod output;
pub mod sim;
pub mod systems;
pub mod trigger;

pub use error::{Error, Result};
