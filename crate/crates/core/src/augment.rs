//! Extra paraphrase training pairs from rule-engine candidates that stay close
//! to the reference in length, wording and sentence count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranker::{length_penalized_score, Similarity};
use crate::structgen::{CandidateSet, Origin};
use crate::text::{compression_ratio, TokenSeq};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub lambda: f64,
    pub target_cr: f64,
    pub min_score: f64,
    pub similarity: Similarity,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { lambda: 2.0, target_cr: 1.0, min_score: 0.5, similarity: Similarity::SoftF1 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_score) || self.lambda < 0.0 {
            return Err(Error::InvalidConfig("augment needs min_score in [0, 1] and lambda >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedPair {
    pub input: TokenSeq,
    pub reference: TokenSeq,
    /// Filter score; `None` for the original pair.
    pub score: Option<f64>,
}

impl AugmentedPair {
    pub fn is_original(&self) -> bool {
        self.score.is_none()
    }
}

/// Score of `candidate` as a paraphrase input for `reference`; the length term
/// compares the candidate's length relative to the reference with the target.
pub fn augment_score(candidate: &TokenSeq, reference: &TokenSeq, cfg: &AugmentConfig) -> f64 {
    let phi = compression_ratio(candidate, reference);
    length_penalized_score(cfg.lambda, phi, cfg.target_cr, cfg.similarity.score(candidate, reference))
}

/// True when a pair passes the filter.
pub fn accepts(candidate: &TokenSeq, reference: &TokenSeq, cfg: &AugmentConfig) -> bool {
    candidate.sentence_count() == reference.sentence_count() && augment_score(candidate, reference, cfg) >= cfg.min_score
}

/// The original pair followed by every accepted rule-engine candidate.
pub fn build_augmented_pairs(source: &TokenSeq, reference: &TokenSeq, cset: &CandidateSet, cfg: &AugmentConfig) -> Vec<AugmentedPair> {
    let mut out = vec![AugmentedPair { input: source.clone(), reference: reference.clone(), score: None }];
    for c in cset.candidates() {
        if c.origin != Origin::RuleEngine || &c.tokens == source {
            continue;
        }
        if accepts(&c.tokens, reference, cfg) {
            let score = augment_score(&c.tokens, reference, cfg);
            out.push(AugmentedPair { input: c.tokens.clone(), reference: reference.clone(), score: Some(score) });
        }
    }
    out
}
