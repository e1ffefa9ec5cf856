//! Deterministic text primitives: tokenization, sentence structure, n-grams,
//! overlap measures, syllables and Gaussian binning of scalar features.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PUNCTUATION: [&str; 9] = [".", ",", ";", ":", "!", "?", "\"", "(", ")"];
const TERMINALS: [&str; 3] = [".", "!", "?"];

pub fn is_punctuation(token: &str) -> bool {
    PUNCTUATION.contains(&token)
}

pub fn is_terminal(token: &str) -> bool {
    TERMINALS.contains(&token)
}

/// A lowercased token sequence with sentence boundaries.
///
/// `sentence_breaks` holds the token index where each sentence after the first
/// begins; it is strictly increasing and never contains 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenSeq {
    tokens: Vec<String>,
    sentence_breaks: Vec<usize>,
}

impl TokenSeq {
    pub fn new(tokens: Vec<String>, sentence_breaks: Vec<usize>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("token sequence".into()));
        }
        let mut prev = 0;
        for &b in &sentence_breaks {
            if b <= prev || b >= tokens.len() {
                return Err(Error::InvalidConfig(format!("invalid sentence break {b} for {} tokens", tokens.len())));
            }
            prev = b;
        }
        Ok(Self { tokens, sentence_breaks })
    }

    /// Builds a sequence whose sentence breaks come from terminal punctuation,
    /// the same rule [`tokenize`] applies.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let breaks = terminal_breaks(&tokens);
        Self::new(tokens, breaks)
    }

    /// Concatenates sentences, recording a break at the start of each one after the first.
    pub fn from_sentences<S: AsRef<[String]>>(sentences: &[S]) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut breaks = Vec::new();
        for s in sentences {
            let s = s.as_ref();
            if s.is_empty() {
                return Err(Error::EmptyInput("sentence".into()));
            }
            if !tokens.is_empty() {
                breaks.push(tokens.len());
            }
            tokens.extend(s.iter().cloned());
        }
        Self::new(tokens, breaks)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn sentence_breaks(&self) -> &[usize] {
        &self.sentence_breaks
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_breaks.len() + 1
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[String]> {
        let mut bounds = Vec::with_capacity(self.sentence_breaks.len() + 2);
        bounds.push(0);
        bounds.extend(&self.sentence_breaks);
        bounds.push(self.tokens.len());
        (0..bounds.len() - 1).map(move |i| &self.tokens[bounds[i]..bounds[i + 1]])
    }

    /// Tokens that are not punctuation.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str).filter(|t| !is_punctuation(t))
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }

    pub fn word_types(&self) -> BTreeSet<&str> {
        self.words().collect()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

fn terminal_breaks(tokens: &[String]) -> Vec<usize> {
    let mut breaks = Vec::new();
    for i in 1..tokens.len() {
        if is_terminal(&tokens[i - 1]) && !is_terminal(&tokens[i]) {
            breaks.push(i);
        }
    }
    breaks
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let inner = (c == '.' || c == ',')
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].is_alphanumeric()
            && chars[i + 1].is_alphanumeric();
        if matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"' | '(' | ')') && !inner {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
}

/// Lowercases, splits on whitespace and separates punctuation marks.
///
/// A `.` or `,` between two alphanumeric characters stays inside the token
/// (`3.5`, `1,000`). A new sentence starts after a run of terminal marks that
/// is followed by more text.
pub fn tokenize(text: &str) -> Result<TokenSeq> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lower.split_whitespace() {
        split_chunk(chunk, &mut tokens);
    }
    if tokens.is_empty() {
        return Err(Error::EmptyInput("text has no tokens".into()));
    }
    TokenSeq::from_tokens(tokens)
}

/// Multiset of n-grams of a single order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NGramMultiset {
    order: usize,
    counts: BTreeMap<Vec<String>, usize>,
}

impl NGramMultiset {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn counts(&self) -> &BTreeMap<Vec<String>, usize> {
        &self.counts
    }

    pub fn count(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn contains(&self, gram: &[String]) -> bool {
        self.counts.contains_key(gram)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Sliding-window n-grams inside each sentence; windows never cross a sentence break.
pub fn ngrams(seq: &TokenSeq, n: usize) -> Result<NGramMultiset> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidOrder(n));
    }
    let mut counts = BTreeMap::new();
    for sentence in seq.sentences() {
        for window in sentence.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    Ok(NGramMultiset { order: n, counts })
}

/// Jaccard similarity over unique token types.
pub fn jaccard(a: &TokenSeq, b: &TokenSeq) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("jaccard operand".into()));
    }
    let sa: BTreeSet<&str> = a.tokens().iter().map(String::as_str).collect();
    let sb: BTreeSet<&str> = b.tokens().iter().map(String::as_str).collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    Ok(inter as f64 / union as f64)
}

/// Word count of `candidate` over word count of `source`, punctuation excluded.
/// A source without word tokens is treated as having one word, except that two
/// punctuation-only sequences have ratio 1.
pub fn compression_ratio(candidate: &TokenSeq, source: &TokenSeq) -> f64 {
    match (candidate.word_count(), source.word_count()) {
        (0, 0) => 1.0,
        (c, s) => c as f64 / s.max(1) as f64,
    }
}

/// Vowel-group syllable heuristic: maximal runs of `aeiouy`, minus one for a
/// final silent `e` when more than one group exists, at least 1. Tokens that
/// are not purely alphabetic count as one syllable.
pub fn syllables(word: &str) -> usize {
    if word.is_empty() || !word.chars().all(char::is_alphabetic) {
        return 1;
    }
    let lower = word.to_lowercase();
    let mut groups = 0;
    let mut in_group = false;
    for c in lower.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    if groups > 1 && lower.ends_with('e') {
        groups -= 1;
    }
    groups.max(1)
}

/// Encodes a scalar as unnormalized Gaussian memberships over fixed centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBinner {
    centers: Vec<f64>,
    sigma: f64,
}

impl GaussianBinner {
    pub fn new(centers: Vec<f64>, sigma: f64) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::InvalidConfig(format!("binner needs at least 2 centers, got {}", centers.len())));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("binner sigma must be positive, got {sigma}")));
        }
        if centers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("binner centers must be strictly increasing".into()));
        }
        Ok(Self { centers, sigma })
    }

    /// `bins` evenly spaced centers spanning the observed range; sigma is half
    /// the spacing. A constant sample spreads the centers over a unit interval
    /// around its value.
    pub fn fit(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidConfig(format!("binner needs K >= 2, got {bins}")));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("binner values".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self::spanning(lo, hi, bins)
    }

    pub fn spanning(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins < 2 || !(hi > lo) {
            return Err(Error::InvalidConfig(format!("cannot span [{lo}, {hi}] with {bins} bins")));
        }
        let spacing = (hi - lo) / (bins - 1) as f64;
        let centers = (0..bins).map(|i| if i == bins - 1 { hi } else { lo + spacing * i as f64 }).collect();
        Self::new(centers, 0.5 * spacing)
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    /// Component `k` is `exp(-(x - c_k)^2 / (2 sigma^2))`. Inputs outside the
    /// center range are clamped to the nearest end center, and components are
    /// floored at the smallest positive normal float so none is exactly zero.
    pub fn transform(&self, x: f64) -> Vec<f64> {
        let first = self.centers[0];
        let last = self.centers[self.centers.len() - 1];
        let x = if x.is_nan() { first } else { x.clamp(first, last) };
        let denom = 2.0 * self.sigma * self.sigma;
        self.centers.iter().map(|c| (-(x - c).powi(2) / denom).exp().max(f64::MIN_POSITIVE)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(words: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(words.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn tokenize_single_sentence() {
        let t = tokenize("The cat sat.").unwrap();
        assert_eq!(t.tokens(), ["the", "cat", "sat", "."]);
        assert_eq!(t.sentence_count(), 1);
    }

    #[test]
    fn tokenize_two_sentences() {
        let t = tokenize("He ran. She ran.").unwrap();
        assert_eq!(t.sentence_count(), 2);
        assert_eq!(t.sentence_breaks(), [3]);
        assert_eq!(t.tokens()[3], "she");
    }

    #[test]
    fn tokenize_is_deterministic() {
        assert_eq!(tokenize("A b").unwrap(), tokenize("A b").unwrap());
    }

    #[test]
    fn tokenize_separates_marks_but_keeps_numbers() {
        let t = tokenize("John, (who paid $3.50) left!").unwrap();
        assert_eq!(t.tokens(), ["john", ",", "(", "who", "paid", "$3.50", ")", "left", "!"]);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(tokenize("   \n\t"), Err(Error::EmptyInput(_))));
        assert!(matches!(tokenize(""), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ngram_examples() {
        let s = seq(&["the", "cat", "sat"]);
        let uni = ngrams(&s, 1).unwrap();
        assert_eq!(uni.total(), 3);
        assert_eq!(uni.count(&["cat".to_string()]), 1);
        let bi = ngrams(&s, 2).unwrap();
        assert_eq!(bi.counts().len(), 2);
        assert_eq!(bi.count(&["the".into(), "cat".into()]), 1);
        let aaa = ngrams(&seq(&["a", "a", "a"]), 2).unwrap();
        assert_eq!(aaa.count(&["a".into(), "a".into()]), 2);
        assert!(matches!(ngrams(&s, 0), Err(Error::InvalidOrder(0))));
        assert!(matches!(ngrams(&s, 5), Err(Error::InvalidOrder(5))));
    }

    #[test]
    fn ngrams_stay_inside_sentences() {
        let s = tokenize("a b . c d .").unwrap();
        let bi = ngrams(&s, 2).unwrap();
        assert!(!bi.contains(&[".".into(), "c".into()]));
        assert_eq!(bi.total(), 4);
    }

    #[test]
    fn jaccard_examples() {
        let abc = seq(&["a", "b", "c"]);
        assert_eq!(jaccard(&abc, &abc).unwrap(), 1.0);
        assert_eq!(jaccard(&abc, &seq(&["b", "c", "d"])).unwrap(), 0.5);
        assert_eq!(jaccard(&abc, &seq(&["x", "y"])).unwrap(), 0.0);
    }

    #[test]
    fn compression_ratio_examples() {
        let words = |n: usize| TokenSeq::from_tokens((0..n).map(|i| format!("w{i}")).collect()).unwrap();
        assert_eq!(compression_ratio(&words(14), &words(28)), 0.5);
        assert_eq!(compression_ratio(&words(24), &words(16)), 1.5);
        let s = tokenize("the cat , sat .").unwrap();
        assert_eq!(compression_ratio(&s, &s), 1.0);
        assert_eq!(compression_ratio(&tokenize("the cat").unwrap(), &s), 2.0 / 3.0);
    }

    #[test]
    fn syllable_examples() {
        assert_eq!(syllables("cat"), 1);
        assert_eq!(syllables("beautiful"), 3);
        assert_eq!(syllables("the"), 1);
        assert_eq!(syllables("make"), 1);
        assert_eq!(syllables("rhythm"), 1);
        assert_eq!(syllables("3rd"), 1);
    }

    #[test]
    fn binner_fit_examples() {
        let values: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let b = GaussianBinner::fit(&values, 10).unwrap();
        assert_eq!(b.centers()[0], 0.0);
        assert_eq!(b.centers()[9], 1.0);
        assert!((b.centers()[1] - 1.0 / 9.0).abs() < 1e-15);
        let two = GaussianBinner::fit(&[0.0, 1.0], 2).unwrap();
        assert_eq!(two.centers(), [0.0, 1.0]);
        assert_eq!(two.sigma(), 0.5);
        let flat = GaussianBinner::fit(&[3.0, 3.0, 3.0], 4).unwrap();
        assert!(flat.sigma() > 0.0);
        assert!(flat.transform(3.0).iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(matches!(GaussianBinner::fit(&[1.0], 1), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn binner_transform_examples() {
        let b = GaussianBinner::spanning(0.0, 1.0, 5).unwrap();
        let at = b.transform(0.5);
        assert_eq!(at[2], 1.0);
        let mid = b.transform(0.375);
        assert!((mid[1] - mid[2]).abs() < 1e-15);
        let off = b.transform(0.5 + b.sigma());
        assert!((off[2] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((off[2] - 0.6065).abs() < 1e-4);
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["a", "b", "c", "the", "dog", ".", ",", "ran", "!"]).prop_map(String::from)
    }

    proptest! {
        #[test]
        fn retokenizing_joined_tokens_is_identity(text in "[a-zA-Z .,;!?()]{1,60}") {
            if let Ok(t) = tokenize(&text) {
                prop_assert_eq!(tokenize(&t.to_string()).unwrap(), t);
            }
        }

        #[test]
        fn ngram_totals_match_sentence_lengths(tokens in prop::collection::vec(word(), 1..30), n in 1usize..=4) {
            let s = TokenSeq::from_tokens(tokens).unwrap();
            let expected: usize = s.sentences().map(|sent| sent.len().saturating_sub(n - 1)).sum();
            prop_assert_eq!(ngrams(&s, n).unwrap().total(), expected);
        }

        #[test]
        fn jaccard_is_symmetric(a in prop::collection::vec(word(), 1..12), b in prop::collection::vec(word(), 1..12)) {
            let (a, b) = (TokenSeq::from_tokens(a).unwrap(), TokenSeq::from_tokens(b).unwrap());
            prop_assert_eq!(jaccard(&a, &b).unwrap(), jaccard(&b, &a).unwrap());
        }

        #[test]
        fn self_compression_ratio_is_one(a in prop::collection::vec(word(), 1..12)) {
            let a = TokenSeq::from_tokens(a).unwrap();
            prop_assert_eq!(compression_ratio(&a, &a), 1.0);
        }

        #[test]
        fn binner_argmax_is_nearest_center(lo in -10.0f64..10.0, width in 0.1f64..20.0, k in 2usize..12, x in -40.0f64..40.0) {
            let b = GaussianBinner::spanning(lo, lo + width, k).unwrap();
            let v = b.transform(x);
            prop_assert_eq!(v.len(), k);
            prop_assert!(v.iter().all(|c| *c > 0.0 && *c <= 1.0));
            let argmax = v.iter().enumerate().fold(0, |best, (i, c)| if *c > v[best] { i } else { best });
            let nearest = b.centers().iter().enumerate().fold(0, |best, (i, c)| {
                if (x - c).abs() < (x - b.centers()[best]).abs() { i } else { best }
            });
            prop_assert_eq!(argmax, nearest);
        }
    }
}
