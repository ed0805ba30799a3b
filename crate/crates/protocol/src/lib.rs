//! Client, server and controller logic of the store, written as deterministic
//! state machines.
//!
//! Actors never touch a clock or a socket: every handler receives the current
//! time and returns a list of [`Effect`]s (messages to send, timers to arm,
//! completed operations) that a driver such as the simulator executes.

pub mod abd;
pub mod cache;
pub mod cas;
pub mod client;
pub mod controller;
pub mod effect;
pub mod message;
pub mod reconfig;
pub mod server;

pub use client::{Client, ClientOptions, OpOutcome, OpSpec};
pub use controller::{Controller, MetadataMap};
pub use effect::{Effect, Nanos, Timer};
pub use message::{Addr, Fragment, Message, Role, Sizing};
pub use reconfig::{recost, should_reconfigure, ReconfigPlan, ReconfigReport};
pub use server::{Server, ServerOptions};
