use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::structgen::{Candidate, Origin, RuleKind};
use crate::text::{jaccard, GaussianBinner, TokenSeq};

pub const NUM_REALS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankFeatures {
    pub words_candidate: usize,
    pub words_source: usize,
    pub cr: f64,
    pub jaccard: f64,
    pub rule_indicators: [bool; RuleKind::ALL.len()],
    pub rule_count: usize,
}

impl RankFeatures {
    /// Neural candidates carry no rule features.
    pub fn extract(candidate: &Candidate, source: &TokenSeq) -> Result<Self> {
        let mut rule_indicators = [false; RuleKind::ALL.len()];
        let mut rule_count = 0;
        if candidate.origin == Origin::RuleEngine {
            for r in &candidate.rules_applied {
                rule_indicators[r.index()] = true;
            }
            rule_count = candidate.rule_count();
        }
        Ok(Self {
            words_candidate: candidate.tokens.word_count(),
            words_source: source.word_count(),
            cr: candidate.cr,
            jaccard: jaccard(&candidate.tokens, source)?,
            rule_indicators,
            rule_count,
        })
    }

    /// Real-valued features in binning order.
    pub fn reals(&self) -> [f64; NUM_REALS] {
        [self.words_candidate as f64, self.words_source as f64, self.cr, self.jaccard, self.rule_count as f64]
    }
}

/// One binner per real-valued feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub binners: Vec<GaussianBinner>,
}

impl FeatureEncoder {
    pub fn fit(features: &[RankFeatures], bins: usize) -> Result<Self> {
        let binners = (0..NUM_REALS)
            .map(|i| GaussianBinner::fit(&features.iter().map(|f| f.reals()[i]).collect::<Vec<_>>(), bins))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { binners })
    }

    pub fn dim(&self) -> usize {
        self.binners.iter().map(GaussianBinner::dim).sum::<usize>() + RuleKind::ALL.len()
    }

    pub fn encode(&self, f: &RankFeatures) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        for (b, x) in self.binners.iter().zip(f.reals()) {
            v.extend(b.transform(x));
        }
        v.extend(f.rule_indicators.iter().map(|&on| if on { 1.0 } else { 0.0 }));
        v
    }
}
