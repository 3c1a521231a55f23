//! Shared domain types: vectors, messages, cohort structure, and
//! deterministic randomness. All types are immutable values after
//! construction and all operations are pure, so everything here is safe for
//! concurrent use.

mod cohort;
mod rng;
mod vector;

pub use cohort::{honest_mean, max_honest_deviation, Cohort};
pub use rng::{domain, RandomStream};
pub use vector::{DecisionVector, Message, ParticipantId};
