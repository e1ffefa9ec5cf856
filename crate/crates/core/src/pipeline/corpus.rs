//! Corpus records and preparation of aligned complex-simple data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::bleu;
use crate::text::{tokenize, TokenSeq};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    #[default]
    Train,
    Dev,
    Test,
}

pub const ORIGINAL: &str = "original";
pub const AUGMENTED: &str = "augmented";

fn original() -> String {
    ORIGINAL.to_string()
}

/// One corpus line: a complex sentence with one or more simple references.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusPair {
    pub complex: String,
    pub simple: Vec<String>,
    #[serde(default)]
    pub partition: Partition,
    #[serde(default = "original")]
    pub provenance: String,
}

/// A pair after tokenization.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenizedPair {
    pub complex: TokenSeq,
    pub simple: Vec<TokenSeq>,
    pub partition: Partition,
}

impl CorpusPair {
    pub fn tokenized(&self) -> Result<TokenizedPair> {
        if self.simple.is_empty() {
            return Err(Error::MissingReference);
        }
        Ok(TokenizedPair {
            complex: tokenize(&self.complex)?,
            simple: self.simple.iter().map(|s| tokenize(s)).collect::<Result<_>>()?,
            partition: self.partition,
        })
    }
}

/// Tokenizes all pairs, reporting the 1-based position of the first bad record.
pub fn tokenize_corpus(pairs: &[CorpusPair]) -> Result<Vec<TokenizedPair>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| p.tokenized().map_err(|e| Error::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

/// An aligned sentence record before joining: several simple sentences may
/// share one `complex_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedRecord {
    pub complex_id: String,
    pub complex: String,
    pub simple: String,
    #[serde(default)]
    pub partition: Partition,
}

pub const BLEU_MAX: f64 = 90.0;
pub const BLEU_MIN: f64 = 10.0;

/// Why a pair was dropped during preparation.
#[derive(Clone, Debug, PartialEq)]
pub struct PrepStats {
    pub groups: usize,
    pub too_similar: usize,
    pub too_different: usize,
}

/// Joins simple sentences sharing a complex id (in input order), then drops
/// pairs whose BLEU against the complex side is above 90 or below 10.
pub fn prepare_corpus(records: &[AlignedRecord]) -> Result<(Vec<CorpusPair>, PrepStats)> {
    let mut groups: Vec<(String, String, Vec<String>, Partition)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| g.0 == r.complex_id) {
            Some(g) => g.2.push(r.simple.trim().to_string()),
            None => groups.push((r.complex_id.clone(), r.complex.clone(), vec![r.simple.trim().to_string()], r.partition)),
        }
    }
    let mut stats = PrepStats { groups: groups.len(), too_similar: 0, too_different: 0 };
    let mut out = Vec::new();
    for (i, (_, complex, simples, partition)) in groups.into_iter().enumerate() {
        let joined = simples.join(" ");
        let parse = |text: &str| tokenize(text).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() });
        let score = bleu(&parse(&joined)?, &[parse(&complex)?])?;
        if score > BLEU_MAX {
            stats.too_similar += 1;
        } else if score < BLEU_MIN {
            stats.too_different += 1;
        } else {
            out.push(CorpusPair { complex, simple: vec![joined], partition, provenance: original() });
        }
    }
    Ok((out, stats))
}
