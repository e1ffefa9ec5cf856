//! Similarity functions standing in for contextual-embedding scores. All
//! return values in [0, 1].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::text::{is_punctuation, TokenSeq};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    /// Unigram F1 after light suffix stripping.
    #[default]
    SoftF1,
    /// Unigram F1 on surface forms.
    ExactF1,
    /// Greedy token matching with character-trigram cosine similarity.
    EmbeddingGreedy,
}

impl Similarity {
    pub fn score(self, a: &TokenSeq, b: &TokenSeq) -> f64 {
        match self {
            Similarity::SoftF1 => unigram_f1(a, b, lemma),
            Similarity::ExactF1 => unigram_f1(a, b, str::to_string),
            Similarity::EmbeddingGreedy => greedy_cosine(a, b),
        }
    }
}

/// Strips one common inflectional suffix, keeping stems of 3+ characters.
pub fn lemma(word: &str) -> String {
    for suffix in ["ing", "ed", "es", "ly", "s"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.chars().count() >= 3 {
                return stem.to_string();
            }
        }
    }
    word.to_string()
}

fn words(seq: &TokenSeq) -> impl Iterator<Item = &str> {
    seq.tokens().iter().map(String::as_str).filter(|t| !is_punctuation(t))
}

fn unigram_f1(a: &TokenSeq, b: &TokenSeq, norm: fn(&str) -> String) -> f64 {
    let bag = |s: &TokenSeq| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for w in words(s) {
            *m.entry(norm(w)).or_insert(0) += 1;
        }
        m
    };
    let (ba, bb) = (bag(a), bag(b));
    let (na, nb) = (ba.values().sum::<usize>(), bb.values().sum::<usize>());
    if na == 0 || nb == 0 {
        return 0.0;
    }
    let overlap: usize = ba.iter().map(|(w, &c)| c.min(bb.get(w).copied().unwrap_or(0))).sum();
    if overlap == 0 {
        return 0.0;
    }
    let (p, r) = (overlap as f64 / na as f64, overlap as f64 / nb as f64);
    2.0 * p * r / (p + r)
}

fn trigrams(word: &str) -> BTreeSet<String> {
    let padded: Vec<char> = format!("#{word}#").chars().collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

/// Cosine of binary character-trigram vectors.
fn token_cosine(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count() as f64;
    inter / ((a.len() * b.len()) as f64).sqrt()
}

fn greedy_cosine(a: &TokenSeq, b: &TokenSeq) -> f64 {
    let ta: Vec<_> = words(a).map(trigrams).collect();
    let tb: Vec<_> = words(b).map(trigrams).collect();
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let best = |from: &[BTreeSet<String>], to: &[BTreeSet<String>]| {
        from.iter().map(|x| to.iter().map(|y| token_cosine(x, y)).fold(0.0, f64::max)).sum::<f64>() / from.len() as f64
    };
    let (p, r) = (best(&ta, &tb), best(&tb, &ta));
    if p + r == 0.0 {
        0.0
    } else {
        (2.0 * p * r / (p + r)).min(1.0)
    }
}
