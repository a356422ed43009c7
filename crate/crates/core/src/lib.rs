//! Desk-scale laboratory for learning dialog rewards and policies
//! jointly: an adversarially trained per-turn reward estimator guides a
//! clipped-surrogate policy-gradient dialog policy against an
//! agenda-based user simulator over a synthetic multi-domain world.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod dialog;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod policy;
pub mod reward;
pub mod rng;
pub mod simulator;
pub mod tracker;
pub mod trainer;

pub use domain::{
    sample_goal, synth_bundle, Bundle, DialogAct, DomainGoal, DomainSpec, EntityDb, FailedGoal,
    GoalStats, Intent, Ontology, SlotSpec, SynthParams, UserGoal, GENERAL_DOMAIN, NO_SLOT,
    VALUE_PLACEHOLDER,
};
pub use error::{GdplError, Result};

/// Command-line entry point; returns the process exit code.
pub fn run() -> i32 {
    cli::run()
}
