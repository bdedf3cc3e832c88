//! Competitive search games: engines choose which pages to display, users
//! pick an engine through a selection rule, and equilibria are compared with
//! the social optimum.
//!
//! The crate covers the game model ([`game`]), selection rules and their
//! structural checks ([`rules`]), the Markovian user model ([`markov`]),
//! equilibrium computation ([`equilibrium`]), welfare analysis ([`welfare`])
//! and named instance families ([`scenarios`]).

pub mod canonical;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod instance;
pub mod markov;
pub mod report;
pub mod rules;
pub mod scenarios;
pub mod simplex;
pub mod welfare;

pub use error::{Error, Result};
pub use game::{
    engine_payoffs, is_general_position, perturb_general_position, profile_satisfaction,
    satisfaction_probability, welfare, EngineStrategy, Game, GameConfig, GeneralPosition,
    PrefixChainStrategy, SatisfactionProfile, SingletonStrategy, Strategy, TypeDistribution,
    UserType,
};
pub use instance::Instance;
pub use report::{PropertyReport, PropertyStatus, Witness};
pub use rules::{CheckOptions, RuleKind, SelectionRule, SelectionRuleSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
