//! Simplification of single sentences and corpora.

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::control::Mode;
use crate::error::{Error, Result};
use crate::paraphraser::{Paraphraser, SentenceConstraint};
use crate::ranker::RankerModel;
use crate::structgen::{generate, Candidate};
use crate::text::TokenSeq;

/// Trained components; which ones are needed depends on the mode.
#[derive(Clone, Debug, Default)]
pub struct Models {
    pub ranker: Option<RankerModel>,
    pub paraphraser: Option<Paraphraser>,
    pub delsplit: Option<Paraphraser>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simplified {
    pub output: TokenSeq,
    /// The ranked candidate that was paraphrased; `None` in paraphrase-only mode.
    pub selected: Option<Candidate>,
    /// The mode's pool was empty and the overall top candidate was used.
    pub mode_fallback: bool,
    /// Decoding found nothing inside the compression window.
    pub decode_fallback: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub sentences: usize,
    pub mode_fallbacks: usize,
    pub decode_fallbacks: usize,
}

fn paraphrase(model: &Paraphraser, input: &TokenSeq, cfg: &PipelineConfig) -> Result<(TokenSeq, bool)> {
    let constraint = SentenceConstraint::Exact(input.sentence_count());
    let g = model.generate(input, cfg.control.cp, constraint, &cfg.paraphraser.decode)?;
    Ok((g.tokens, g.fallback))
}

pub fn simplify(source: &TokenSeq, models: &Models, cfg: &PipelineConfig) -> Result<Simplified> {
    let para = || models.paraphraser.as_ref().ok_or_else(|| Error::ModelNotReady("paraphraser not loaded".into()));
    if cfg.control.mode == Mode::ParaphraseOnly {
        let (output, decode_fallback) = paraphrase(para()?, source, cfg)?;
        return Ok(Simplified { output, selected: None, mode_fallback: false, decode_fallback });
    }
    let ranker = models.ranker.as_ref().ok_or_else(|| Error::ModelNotReady("ranker not loaded".into()))?;
    let cset = generate(source, &cfg.rules, models.delsplit.as_ref(), cfg.paraphraser.delsplit_width)?;
    let ranked = ranker.rank(cset.candidates(), source)?;
    let (selected, mode_fallback) = cfg.control.select(&ranked)?;
    if mode_fallback {
        log::info!("no {:?} candidate for \"{source}\"; using the overall top candidate", cfg.control.mode);
    }
    let (output, decode_fallback) =
        if cfg.control.paraphrase { paraphrase(para()?, &selected.tokens, cfg)? } else { (selected.tokens.clone(), false) };
    Ok(Simplified { output, selected: Some(selected.clone()), mode_fallback, decode_fallback })
}

/// Simplifies every source in parallel; results keep input order.
pub fn simplify_corpus(sources: &[TokenSeq], models: &Models, cfg: &PipelineConfig) -> Result<(Vec<Simplified>, RunStats)> {
    let results = sources.par_iter().map(|s| simplify(s, models, cfg)).collect::<Result<Vec<_>>>()?;
    let stats = RunStats {
        sentences: results.len(),
        mode_fallbacks: results.iter().filter(|r| r.mode_fallback).count(),
        decode_fallbacks: results.iter().filter(|r| r.decode_fallback).count(),
    };
    Ok((results, stats))
}
