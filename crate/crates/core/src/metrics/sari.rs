//! SARI: n-gram F1 for added and kept words, precision for deleted words.
//!
//! Conventions:
//! - every 0/0 ratio is 0, so an output identical to its source and reference
//!   scores 0 on add and del;
//! - output n-grams that are order-preserving subsequences of one source
//!   sentence are not counted as additions (deleting "very" from "is very
//!   beautiful" does not add "is beautiful"); the same filter applies to the
//!   reference-side additions used for recall;
//! - with R references, keep and del weight each source n-gram by how many
//!   references agree with it, by scaling source/output counts by R.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{ngrams, TokenSeq};

pub const MAX_ORDER: usize = 4;

/// Component scores for one n-gram order, each in [0, 1].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderScores {
    pub add_precision: f64,
    pub add_recall: f64,
    pub add_f1: f64,
    pub keep_precision: f64,
    pub keep_recall: f64,
    pub keep_f1: f64,
    pub del_precision: f64,
}

/// SARI and its components on a 0-100 scale, averaged over orders 1..=4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SariScore {
    pub sari: f64,
    pub add_f1: f64,
    pub keep_f1: f64,
    pub del_precision: f64,
    pub per_order: [OrderScores; MAX_ORDER],
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// True when `gram` appears, in order but not necessarily contiguously, inside
/// a single sentence of `source`.
pub fn is_source_subsequence(gram: &[String], source: &TokenSeq) -> bool {
    source.sentences().any(|sentence| {
        let mut want = gram.iter();
        let mut next = want.next();
        for tok in sentence {
            match next {
                Some(w) if w == tok => next = want.next(),
                Some(_) => {}
                None => break,
            }
        }
        next.is_none()
    })
}

fn order_scores(source: &TokenSeq, output: &TokenSeq, references: &[TokenSeq], n: usize) -> Result<OrderScores> {
    let num_refs = references.len();
    let s = ngrams(source, n)?;
    let c = ngrams(output, n)?;
    let mut r: BTreeMap<&[String], usize> = BTreeMap::new();
    let ref_grams = references.iter().map(|rf| ngrams(rf, n)).collect::<Result<Vec<_>>>()?;
    for rg in &ref_grams {
        for (g, &count) in rg.counts() {
            *r.entry(g.as_slice()).or_insert(0) += count;
        }
    }
    let r_count = |g: &[String]| r.get(g).copied().unwrap_or(0);

    // KEEP
    let (mut keep_p_sum, mut keep_p_n) = (0.0, 0usize);
    let (mut keep_r_sum, mut keep_r_n) = (0.0, 0usize);
    for (g, &sc) in s.counts() {
        let s_rep = sc * num_refs;
        let c_rep = c.count(g) * num_refs;
        let kept = s_rep.min(c_rep);
        let rc = r_count(g);
        let good = kept.min(rc);
        if kept > 0 {
            keep_p_sum += good as f64 / kept as f64;
            keep_p_n += 1;
        }
        let all = s_rep.min(rc);
        if all > 0 {
            keep_r_sum += good as f64 / all as f64;
            keep_r_n += 1;
        }
    }
    let keep_precision = ratio(keep_p_sum, keep_p_n as f64);
    let keep_recall = ratio(keep_r_sum, keep_r_n as f64);

    // DEL
    let (mut del_sum, mut del_n) = (0.0, 0usize);
    for (g, &sc) in s.counts() {
        let deleted = (sc * num_refs).saturating_sub(c.count(g) * num_refs);
        if deleted > 0 {
            let good = deleted.saturating_sub(r_count(g));
            del_sum += good as f64 / deleted as f64;
            del_n += 1;
        }
    }
    let del_precision = ratio(del_sum, del_n as f64);

    // ADD
    let is_new = |g: &[String]| !s.contains(g) && !is_source_subsequence(g, source);
    let added: BTreeSet<&[String]> = c.counts().keys().map(Vec::as_slice).filter(|g| is_new(g)).collect();
    let wanted: BTreeSet<&[String]> = r.keys().copied().filter(|g| is_new(g)).collect();
    let good = added.intersection(&wanted).count() as f64;
    let add_precision = ratio(good, added.len() as f64);
    let add_recall = ratio(good, wanted.len() as f64);

    Ok(OrderScores {
        add_precision,
        add_recall,
        add_f1: f1(add_precision, add_recall),
        keep_precision,
        keep_recall,
        keep_f1: f1(keep_precision, keep_recall),
        del_precision,
    })
}

pub fn sari(source: &TokenSeq, output: &TokenSeq, references: &[TokenSeq]) -> Result<SariScore> {
    if references.is_empty() {
        return Err(Error::MissingReference);
    }
    if source.is_empty() || output.is_empty() || references.iter().any(TokenSeq::is_empty) {
        return Err(Error::EmptyInput("sari operand".into()));
    }
    let mut per_order = [OrderScores::default(); MAX_ORDER];
    for (i, slot) in per_order.iter_mut().enumerate() {
        *slot = order_scores(source, output, references, i + 1)?;
    }
    let mean = |f: fn(&OrderScores) -> f64| 100.0 * per_order.iter().map(f).sum::<f64>() / MAX_ORDER as f64;
    let add_f1 = mean(|o| o.add_f1);
    let keep_f1 = mean(|o| o.keep_f1);
    let del_precision = mean(|o| o.del_precision);
    Ok(SariScore { sari: (add_f1 + keep_f1 + del_precision) / 3.0, add_f1, keep_f1, del_precision, per_order })
}
