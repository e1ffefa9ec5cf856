use super::candidate::{Candidate, CandidateSet, Origin};
use super::engine::{rule_candidates, RuleConfig};
use crate::error::{Error, Result};
use crate::paraphraser::{CopyConstraint, DecodeConfig, ModelKind, Paraphraser, SentenceConstraint};
use crate::text::{jaccard, TokenSeq};

const MIN_JACCARD: f64 = 0.5;

/// Beam outputs of the deletion-and-split model: `width` with at least one
/// split and `width` without, kept when Jaccard overlap with the source
/// exceeds 0.5 and the compression ratio is inside the rule-candidate window.
pub fn neural_candidates(source: &TokenSeq, model: &Paraphraser, width: usize, rules: &RuleConfig) -> Result<CandidateSet> {
    if model.kind() != ModelKind::DelSplit {
        return Err(Error::InvalidConfig("neural candidates need a delsplit model".into()));
    }
    if !model.is_trained() {
        return Err(Error::ModelNotReady("delsplit model is untrained".into()));
    }
    let decode = DecodeConfig { beam_width: width, cr_min: rules.cr_min, cr_max: rules.cr_max, ..DecodeConfig::default() };
    let mut set = CandidateSet::new(source.clone());
    for constraint in [SentenceConstraint::Split, SentenceConstraint::NoSplit] {
        for gen in model.generate_n_best(source, CopyConstraint::default(), constraint, &decode, width)? {
            if jaccard(&gen.tokens, source)? > MIN_JACCARD {
                set.push(Candidate::new(gen.tokens, Vec::new(), Origin::Neural, source));
            }
        }
    }
    Ok(set)
}

/// Rule candidates, plus neural candidates when a delsplit model is given.
pub fn generate(source: &TokenSeq, rules: &RuleConfig, model: Option<&Paraphraser>, width: usize) -> Result<CandidateSet> {
    let mut set = rule_candidates(source, rules)?;
    if let Some(m) = model {
        set.extend(neural_candidates(source, m, width, rules)?);
    }
    Ok(set)
}
