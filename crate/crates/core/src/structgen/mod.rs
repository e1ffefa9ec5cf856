//! Split and deletion candidate generation.

mod candidate;
mod engine;
mod neural;
pub mod rules;

pub use candidate::{Candidate, CandidateSet, Origin};
pub use engine::{rule_candidates, RuleConfig};
pub use neural::{generate, neural_candidates};
pub use rules::{is_verb_like, RuleKind};
