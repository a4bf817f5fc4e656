//! Approachability-based fair online learning over finite context and action
//! spaces.
//!
//! The crate is organised bottom-up: probability primitives ([`prob`]),
//! convex target sets ([`geometry`]), small game solvers ([`game`],
//! [`condition`]), the payoff/target catalog ([`objectives`]), Player and
//! Nature strategies ([`strategy`]), online estimators ([`estimation`]) and
//! the round-by-round simulator ([`engine`], [`metrics`], [`pareto`]).

pub mod condition;
pub mod decimal;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod game;
pub mod geometry;
pub mod lp;
pub mod metrics;
pub mod objectives;
pub mod pareto;
pub mod payoff;
pub mod prob;
pub mod rng;
pub mod stats;
pub mod strategy;

pub use error::{Error, Result};
