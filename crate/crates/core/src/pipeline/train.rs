//! Corpus-level training and augmentation workflows.

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::corpus::{CorpusPair, Partition, TokenizedPair, AUGMENTED};
use crate::augment::build_augmented_pairs;
use crate::error::{Error, Result};
use crate::metrics::sari;
use crate::paraphraser::{vocab_for, CopyConstraint, DecodeConfig, EpochLog, ModelKind, Paraphraser, SentenceConstraint};
use crate::ranker::{RankerLog, RankerModel, RankingExample};
use crate::structgen::{generate, rule_candidates};
use crate::text::TokenSeq;

fn partition(corpus: &[TokenizedPair], part: Partition) -> Vec<&TokenizedPair> {
    corpus.iter().filter(|p| p.partition == part).collect()
}

/// Ranking examples for one partition, scored against each pair's first reference.
pub fn ranking_examples(
    corpus: &[TokenizedPair],
    part: Partition,
    cfg: &PipelineConfig,
    delsplit: Option<&Paraphraser>,
) -> Result<Vec<RankingExample>> {
    partition(corpus, part)
        .par_iter()
        .map(|p| {
            let cset = generate(&p.complex, &cfg.rules, delsplit, cfg.paraphraser.delsplit_width)?;
            Ok(RankingExample::from_reference(&cset, &p.simple[0], &cfg.ranker.gold))
        })
        .collect()
}

pub fn train_ranker(
    corpus: &[TokenizedPair],
    cfg: &PipelineConfig,
    delsplit: Option<&Paraphraser>,
) -> Result<(RankerModel, Vec<RankerLog>)> {
    let train = ranking_examples(corpus, Partition::Train, cfg, delsplit)?;
    let dev = ranking_examples(corpus, Partition::Dev, cfg, delsplit)?;
    RankerModel::train(&train, &dev, cfg.ranker.clone())
}

/// Mean SARI of `model` outputs on up to `limit` dev pairs.
fn dev_sari(model: &Paraphraser, dev: &[&TokenizedPair], limit: usize, cp: CopyConstraint, decode: &DecodeConfig, free: bool) -> Result<f64> {
    let rows: Vec<_> = dev.iter().take(limit).collect();
    if rows.is_empty() {
        return Ok(0.0);
    }
    let scores = rows
        .par_iter()
        .map(|p| {
            let constraint = if free { SentenceConstraint::Free } else { SentenceConstraint::Exact(p.complex.sentence_count()) };
            let out = model.generate(&p.complex, cp, constraint, decode)?;
            Ok(sari(&p.complex, &out.tokens, &p.simple)?.sari)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Training pairs for the paraphraser: every (complex, reference) of the
/// train partition, plus filtered rule candidates when `augment` is set.
pub fn paraphrase_pairs(corpus: &[TokenizedPair], cfg: &PipelineConfig, augment: bool) -> Result<Vec<(TokenSeq, TokenSeq)>> {
    let per_pair = partition(corpus, Partition::Train)
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            for reference in &p.simple {
                if augment {
                    let cset = rule_candidates(&p.complex, &cfg.rules)?;
                    for a in build_augmented_pairs(&p.complex, reference, &cset, &cfg.paraphraser.augment) {
                        out.push((a.input, a.reference));
                    }
                } else {
                    out.push((p.complex.clone(), reference.clone()));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_pair.into_iter().flatten().collect())
}

fn train_seq2seq(kind: ModelKind, corpus: &[TokenizedPair], cfg: &PipelineConfig, augment: bool) -> Result<(Paraphraser, Vec<EpochLog>)> {
    let pairs = paraphrase_pairs(corpus, cfg, augment)?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no training pairs in the train partition".into()));
    }
    let model_cfg = cfg.paraphraser.model.clone();
    let vocab = vocab_for(&pairs, model_cfg.min_count);
    let mut model = Paraphraser::new(kind, model_cfg.clone(), vocab)?;
    let dev = partition(corpus, Partition::Dev);
    let (decode, free) = match kind {
        ModelKind::Paraphraser => (cfg.paraphraser.decode.clone(), false),
        ModelKind::DelSplit => (
            DecodeConfig { cr_min: cfg.rules.cr_min, cr_max: cfg.rules.cr_max, ..cfg.paraphraser.decode.clone() },
            true,
        ),
    };
    let cp = cfg.control.cp;
    let mut score = |m: &Paraphraser| dev_sari(m, &dev, model_cfg.dev_limit, cp, &decode, free);
    let logs = if dev.is_empty() || model_cfg.dev_limit == 0 {
        model.fit(&pairs, None)?
    } else {
        model.fit(&pairs, Some(&mut score))?
    };
    Ok((model, logs))
}

pub fn train_paraphraser(corpus: &[TokenizedPair], cfg: &PipelineConfig, augment: bool) -> Result<(Paraphraser, Vec<EpochLog>)> {
    train_seq2seq(ModelKind::Paraphraser, corpus, cfg, augment)
}

pub fn train_delsplit(corpus: &[TokenizedPair], cfg: &PipelineConfig) -> Result<(Paraphraser, Vec<EpochLog>)> {
    train_seq2seq(ModelKind::DelSplit, corpus, cfg, false)
}

/// The corpus followed by augmented train pairs, each tagged as augmented.
pub fn augment_corpus(pairs: &[CorpusPair], cfg: &PipelineConfig) -> Result<Vec<CorpusPair>> {
    let extra = pairs
        .par_iter()
        .filter(|p| p.partition == Partition::Train)
        .map(|p| {
            let t = p.tokenized()?;
            let cset = rule_candidates(&t.complex, &cfg.rules)?;
            let mut out = Vec::new();
            for reference in &t.simple {
                for a in build_augmented_pairs(&t.complex, reference, &cset, &cfg.paraphraser.augment) {
                    if !a.is_original() {
                        out.push(CorpusPair {
                            complex: a.input.to_string(),
                            simple: vec![a.reference.to_string()],
                            partition: Partition::Train,
                            provenance: AUGMENTED.to_string(),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.iter().cloned().chain(extra.into_iter().flatten()).collect())
}
