use serde::{Deserialize, Serialize};

use super::rules::RuleKind;
use crate::error::Result;
use crate::text::{compression_ratio, TokenSeq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    RuleEngine,
    Neural,
}

/// An intermediate simplification of a source sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: TokenSeq,
    pub rules_applied: Vec<RuleKind>,
    pub split_count: usize,
    /// Compression ratio against the source.
    pub cr: f64,
    pub origin: Origin,
}

impl Candidate {
    pub fn new(tokens: TokenSeq, rules_applied: Vec<RuleKind>, origin: Origin, source: &TokenSeq) -> Self {
        Self {
            split_count: tokens.sentence_count(),
            cr: compression_ratio(&tokens, source),
            tokens,
            rules_applied,
            origin,
        }
    }

    pub fn identity(source: &TokenSeq) -> Self {
        Self::new(source.clone(), Vec::new(), Origin::RuleEngine, source)
    }

    pub fn rule_count(&self) -> usize {
        self.rules_applied.len()
    }
}

/// Candidates for one source, unique by token sequence, in insertion order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub source: TokenSeq,
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(source: TokenSeq) -> Self {
        Self { source, candidates: Vec::new() }
    }

    /// Adds `c` unless an equal token sequence is already present. Returns whether it was added.
    pub fn push(&mut self, c: Candidate) -> bool {
        if self.candidates.iter().any(|x| x.tokens == c.tokens) {
            return false;
        }
        self.candidates.push(c);
        true
    }

    pub fn extend(&mut self, other: CandidateSet) {
        for c in other.candidates {
            self.push(c);
        }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn into_candidates(self) -> Vec<Candidate> {
        self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Line-delimited dump records, one per candidate.
    pub fn dump_records(&self) -> Result<Vec<String>> {
        self.candidates
            .iter()
            .map(|c| {
                let record = serde_json::json!({
                    "source": self.source.to_string(),
                    "candidate": c.tokens.to_string(),
                    "rules": c.rules_applied.iter().map(|r| r.name()).collect::<Vec<_>>(),
                    "cr": c.cr,
                    "split_count": c.split_count,
                    "origin": c.origin,
                });
                Ok(serde_json::to_string(&record)?)
            })
            .collect()
    }
}
