//! Constrained beam search: trigram blocking, a compression-ratio window and
//! sentence-count constraints.

use serde::{Deserialize, Serialize};

use super::model::{CopyConstraint, Paraphraser};
use super::vocab::{BOS, EOS, UNK};
use crate::error::{Error, Result};
use crate::text::{is_punctuation, is_terminal, TokenSeq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceConstraint {
    Free,
    /// At least two sentences.
    Split,
    /// Exactly one sentence.
    NoSplit,
    Exact(usize),
}

impl SentenceConstraint {
    fn max(self) -> usize {
        match self {
            SentenceConstraint::NoSplit => 1,
            SentenceConstraint::Exact(n) => n,
            _ => usize::MAX,
        }
    }

    fn min(self) -> usize {
        match self {
            SentenceConstraint::Split => 2,
            SentenceConstraint::Exact(n) => n,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub beam_width: usize,
    /// Emission window for compression ratio against the decoder input.
    pub cr_min: f64,
    pub cr_max: f64,
    pub block_trigrams: bool,
    /// Extra tokens allowed beyond `cr_max` times the input length.
    pub length_slack: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self { beam_width: 10, cr_min: 0.9, cr_max: 1.2, block_trigrams: true, length_slack: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub tokens: TokenSeq,
    pub log_prob: f64,
    /// True when no hypothesis satisfied the compression window.
    pub fallback: bool,
}

#[derive(Clone, Debug)]
struct Hyp {
    ids: Vec<usize>,
    log_prob: f64,
    words: usize,
    sentences: usize,
    after_terminal: bool,
}

impl Hyp {
    fn repeats_trigram(&self) -> bool {
        let n = self.ids.len();
        if n < 4 {
            return false;
        }
        let last = &self.ids[n - 3..];
        self.ids[1..n - 1].windows(3).take(n - 4).any(|w| w == last)
    }
}

fn by_score(a: &Hyp, b: &Hyp) -> std::cmp::Ordering {
    b.log_prob.total_cmp(&a.log_prob).then_with(|| a.ids.cmp(&b.ids))
}

struct Search<'a> {
    model: &'a Paraphraser,
    cfg: &'a DecodeConfig,
    constraint: SentenceConstraint,
    input_words: usize,
    max_words: usize,
    max_len: usize,
}

impl Search<'_> {
    fn extend(&self, h: &Hyp, tok: usize, lp: f64) -> Option<Hyp> {
        let text = self.model.vocab().token(tok);
        let terminal = is_terminal(text);
        let first = h.ids.len() == 1;
        if first && is_punctuation(text) {
            return None;
        }
        let mut next = Hyp {
            ids: h.ids.clone(),
            log_prob: h.log_prob + lp,
            words: h.words,
            sentences: h.sentences,
            after_terminal: terminal,
        };
        next.ids.push(tok);
        if !is_punctuation(text) {
            next.words += 1;
        }
        if !terminal && h.after_terminal {
            next.sentences += 1;
        }
        if next.words > self.max_words || next.sentences > self.constraint.max() {
            return None;
        }
        if self.cfg.block_trigrams && next.repeats_trigram() {
            return None;
        }
        Some(next)
    }

    fn cr(&self, h: &Hyp) -> f64 {
        h.words as f64 / self.input_words.max(1) as f64
    }
}

impl Paraphraser {
    /// Highest-scoring output satisfying all constraints, or the fallback.
    pub fn generate(
        &self,
        input: &TokenSeq,
        cp: CopyConstraint,
        constraint: SentenceConstraint,
        cfg: &DecodeConfig,
    ) -> Result<Generation> {
        let (mut found, rejected) = self.search(input, cp, constraint, cfg, 1)?;
        if let Some(best) = found.drain(..).next() {
            return Ok(best);
        }
        log::debug!("no hypothesis within the compression window; using fallback");
        Ok(rejected.unwrap_or_else(|| Generation { tokens: input.clone(), log_prob: f64::NEG_INFINITY, fallback: true }))
    }

    /// Up to `n` constraint-satisfying outputs, best first. May be empty.
    pub fn generate_n_best(
        &self,
        input: &TokenSeq,
        cp: CopyConstraint,
        constraint: SentenceConstraint,
        cfg: &DecodeConfig,
        n: usize,
    ) -> Result<Vec<Generation>> {
        Ok(self.search(input, cp, constraint, cfg, n)?.0)
    }

    /// Returns valid completions and the best fallback candidate: the
    /// completed, sentence-valid hypothesis closest to compression ratio 1.
    fn search(
        &self,
        input: &TokenSeq,
        cp: CopyConstraint,
        constraint: SentenceConstraint,
        cfg: &DecodeConfig,
        n: usize,
    ) -> Result<(Vec<Generation>, Option<Generation>)> {
        if !self.is_trained() {
            return Err(Error::ModelNotReady(format!("{:?} model is untrained", self.kind())));
        }
        if cfg.beam_width == 0 || n == 0 {
            return Err(Error::InvalidConfig("beam width and n must be positive".into()));
        }
        let memory = self.memory_for(input, cp)?;
        let input_words = input.word_count();
        let search = Search {
            model: self,
            cfg,
            constraint,
            input_words,
            max_words: (cfg.cr_max * input_words.max(1) as f64 + 1e-9).floor() as usize,
            max_len: (cfg.cr_max.max(1.0) * input.len() as f64).ceil() as usize + cfg.length_slack,
        };
        let mut beams = vec![Hyp { ids: vec![BOS], log_prob: 0.0, words: 0, sentences: 1, after_terminal: false }];
        let mut finished: Vec<Hyp> = Vec::new();
        let mut rejected: Vec<Hyp> = Vec::new();
        for _ in 0..search.max_len {
            let mut next = Vec::new();
            for h in &beams {
                let lps = self.next_log_probs(&memory, &h.ids)?;
                for (tok, &lp) in lps.iter().enumerate() {
                    if tok == BOS || tok == UNK {
                        continue;
                    }
                    if tok == EOS {
                        if h.words == 0 || h.sentences < constraint.min() {
                            continue;
                        }
                        let mut done = h.clone();
                        done.log_prob += lp;
                        let cr = search.cr(&done);
                        if cr >= cfg.cr_min && cr <= cfg.cr_max {
                            finished.push(done);
                        } else {
                            rejected.push(done);
                        }
                        continue;
                    }
                    if let Some(x) = search.extend(h, tok, lp) {
                        next.push(x);
                    }
                }
            }
            next.sort_by(by_score);
            next.truncate(cfg.beam_width);
            beams = next;
            finished.sort_by(by_score);
            finished.truncate(n);
            // Scores only decrease as hypotheses grow, so once n finished
            // outputs beat every live beam the search is over.
            let settled = finished.len() >= n && beams.first().is_none_or(|b| finished[n - 1].log_prob >= b.log_prob);
            if beams.is_empty() || settled {
                break;
            }
        }
        let to_gen = |h: &Hyp, fallback: bool| -> Result<Generation> {
            let tokens = h.ids[1..].iter().map(|&i| self.vocab().token(i).to_string()).collect();
            Ok(Generation { tokens: TokenSeq::from_tokens(tokens)?, log_prob: h.log_prob, fallback })
        };
        let found = finished.iter().map(|h| to_gen(h, false)).collect::<Result<Vec<_>>>()?;
        let fallback = rejected
            .iter()
            .min_by(|a, b| (search.cr(a) - 1.0).abs().total_cmp(&(search.cr(b) - 1.0).abs()).then_with(|| by_score(a, b)))
            .map(|h| to_gen(h, true))
            .transpose()?;
        Ok((found, fallback))
    }
}

/// True when some trigram occurs twice in `seq`.
pub fn has_repeated_trigram(seq: &TokenSeq) -> bool {
    let t = seq.tokens();
    let mut seen = std::collections::BTreeSet::new();
    t.windows(3).any(|w| !seen.insert(w))
}
