use std::collections::BTreeMap;

use crate::text::{is_punctuation, TokenSeq};

/// Input positions matched by one longest common subsequence of `a` and `b`.
fn lcs_matches(a: &[String], b: &[String]) -> Vec<bool> {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            dp[i][j] = if a[i - 1] == b[j - 1] { dp[i - 1][j - 1] + 1 } else { dp[i - 1][j].max(dp[i][j - 1]) };
        }
    }
    let mut matched = vec![false; n];
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if a[i - 1] == b[j - 1] {
            matched[i - 1] = true;
            i -= 1;
            j -= 1;
        } else if dp[i - 1][j] >= dp[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    matched
}

/// Per-input-token copy labels: 1 when the token appears in the reference.
/// A token occurring more often in the input than in the reference is labeled
/// only as many times as the reference has it, preferring LCS-aligned
/// occurrences, then earlier ones.
pub fn derive_copy_labels(input: &TokenSeq, reference: &TokenSeq) -> Vec<u8> {
    let a = input.tokens();
    let aligned = lcs_matches(a, reference.tokens());
    let mut budget: BTreeMap<&str, usize> = BTreeMap::new();
    for t in reference.tokens() {
        *budget.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut labels = vec![0u8; a.len()];
    for (i, t) in a.iter().enumerate() {
        if aligned[i] {
            labels[i] = 1;
            *budget.get_mut(t.as_str()).expect("aligned tokens occur in the reference") -= 1;
        }
    }
    for (i, t) in a.iter().enumerate() {
        if labels[i] == 0 {
            if let Some(left) = budget.get_mut(t.as_str()).filter(|c| **c > 0) {
                *left -= 1;
                labels[i] = 1;
            }
        }
    }
    labels
}

/// Share of input word tokens (punctuation excluded) labeled as copied.
pub fn copy_fraction(input: &TokenSeq, labels: &[u8]) -> f64 {
    let words: Vec<u8> =
        input.tokens().iter().zip(labels).filter(|(t, _)| !is_punctuation(t)).map(|(_, &l)| l).collect();
    if words.is_empty() {
        return 1.0;
    }
    words.iter().map(|&l| f64::from(l)).sum::<f64>() / words.len() as f64
}

/// Fraction of the input's words that `output` copies.
pub fn copied_word_fraction(input: &TokenSeq, output: &TokenSeq) -> f64 {
    copy_fraction(input, &derive_copy_labels(input, output))
}
