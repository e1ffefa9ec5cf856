//! Recursive rule application and enumeration of sub-sentence selections.

use serde::{Deserialize, Serialize};

use super::candidate::{Candidate, CandidateSet, Origin};
use super::rules::RuleKind;
use crate::error::{Error, Result};
use crate::text::{is_terminal, TokenSeq};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub enabled: Vec<RuleKind>,
    pub max_depth: usize,
    pub cr_min: f64,
    pub cr_max: f64,
    /// Upper bound on alternatives kept per hierarchy node and per source.
    pub max_alternatives: usize,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self { enabled: RuleKind::ALL.to_vec(), max_depth: 3, cr_min: 0.5, cr_max: 1.5, max_alternatives: 256 }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cr_min > 0.0 && self.cr_min <= 1.0 && self.cr_max >= 1.0) {
            return Err(Error::InvalidConfig(format!("cr window [{}, {}] must contain 1", self.cr_min, self.cr_max)));
        }
        if self.max_alternatives == 0 {
            return Err(Error::InvalidConfig("max_alternatives must be positive".into()));
        }
        Ok(())
    }
}

/// One way of rewriting a span: a list of sentences and the rules used.
#[derive(Clone, Debug, PartialEq)]
struct Alternative {
    sentences: Vec<Vec<String>>,
    rules: Vec<RuleKind>,
}

fn period() -> Vec<String> {
    vec![".".to_string()]
}

fn first_match(body: &[String], cfg: &RuleConfig) -> Option<(RuleKind, Vec<Vec<String>>)> {
    RuleKind::ALL.into_iter().filter(|r| cfg.enabled.contains(r)).find_map(|r| r.apply(body).map(|p| (r, p)))
}

/// Cartesian product of per-part alternatives, capped.
fn product(groups: &[Vec<Alternative>], cap: usize) -> Vec<Alternative> {
    let mut acc = vec![Alternative { sentences: Vec::new(), rules: Vec::new() }];
    for group in groups {
        let mut next = Vec::new();
        'outer: for a in &acc {
            for b in group {
                let mut sentences = a.sentences.clone();
                sentences.extend(b.sentences.iter().cloned());
                let mut rules = a.rules.clone();
                rules.extend(&b.rules);
                next.push(Alternative { sentences, rules });
                if next.len() >= cap {
                    break 'outer;
                }
            }
        }
        acc = next;
    }
    acc
}

fn expand(body: &[String], terminal: &[String], depth: usize, cfg: &RuleConfig) -> Vec<Alternative> {
    let mut whole = body.to_vec();
    whole.extend(terminal.iter().cloned());
    let mut alts = vec![Alternative { sentences: vec![whole], rules: Vec::new() }];
    if depth >= cfg.max_depth {
        return alts;
    }
    let Some((rule, parts)) = first_match(body, cfg) else {
        return alts;
    };
    let k = parts.len();
    let part_alts: Vec<Vec<Alternative>> = parts
        .iter()
        .enumerate()
        .map(|(i, part)| {
            // A part keeps the original terminal when it stays alone in place
            // of the parent; split-off parts end with a period.
            let term = if i == 0 && (k == 1 || !terminal.is_empty()) { terminal.to_vec() } else { period() };
            expand(part, &term, depth + 1, cfg)
        })
        .collect();
    for start in 0..k {
        for end in start..k {
            let selected = &part_alts[start..=end];
            let multi = end > start;
            for mut alt in product(selected, cfg.max_alternatives) {
                if multi {
                    for s in &mut alt.sentences {
                        if !s.last().is_some_and(|t| is_terminal(t)) {
                            s.push(".".into());
                        }
                    }
                }
                alt.rules.insert(0, rule);
                if !alts.contains(&alt) {
                    alts.push(alt);
                }
                if alts.len() >= cfg.max_alternatives {
                    return alts;
                }
            }
        }
    }
    alts
}

/// Splits a source sentence's tokens into the body and its closing terminal marks.
fn split_terminal(sentence: &[String]) -> (&[String], &[String]) {
    let body_len = sentence.len() - sentence.iter().rev().take_while(|t| is_terminal(t)).count();
    sentence.split_at(body_len)
}

/// Rule-engine candidates for `source`. The identity candidate is always first.
pub fn rule_candidates(source: &TokenSeq, cfg: &RuleConfig) -> Result<CandidateSet> {
    cfg.validate()?;
    if source.is_empty() {
        return Err(Error::EmptyInput("source".into()));
    }
    let per_sentence: Vec<Vec<Alternative>> = source
        .sentences()
        .map(|s| {
            let (body, terminal) = split_terminal(s);
            if body.is_empty() {
                vec![Alternative { sentences: vec![s.to_vec()], rules: Vec::new() }]
            } else {
                expand(body, terminal, 0, cfg)
            }
        })
        .collect();
    let mut set = CandidateSet::new(source.clone());
    set.push(Candidate::identity(source));
    for alt in product(&per_sentence, cfg.max_alternatives) {
        let tokens = TokenSeq::from_sentences(&alt.sentences)?;
        let cand = Candidate::new(tokens, alt.rules, Origin::RuleEngine, source);
        if cand.cr >= cfg.cr_min && cand.cr <= cfg.cr_max {
            set.push(cand);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn texts(set: &CandidateSet) -> Vec<String> {
        set.candidates().iter().map(|c| c.tokens.to_string()).collect()
    }

    #[test]
    fn relative_clause_split() {
        let src = tokenize("john , who lives in rome , won .").unwrap();
        let set = rule_candidates(&src, &RuleConfig::default()).unwrap();
        let split = set.candidates().iter().find(|c| c.tokens.to_string() == "john won . john lives in rome .").unwrap();
        assert_eq!(split.split_count, 2);
        assert_eq!(split.rules_applied, vec![RuleKind::RelativeClause]);
        assert_eq!(set.candidates()[0].tokens, src);
    }

    #[test]
    fn plain_sentence_has_only_identity() {
        let src = tokenize("the cat sat on the mat .").unwrap();
        let set = rule_candidates(&src, &RuleConfig::default()).unwrap();
        assert_eq!(texts(&set), vec!["the cat sat on the mat ."]);
    }

    #[test]
    fn short_candidates_are_filtered() {
        // "mary died" keeps 2 of 9 words.
        let src = tokenize("mary , who worked in the old city mill , died .").unwrap();
        let set = rule_candidates(&src, &RuleConfig::default()).unwrap();
        assert!(set.candidates().iter().all(|c| c.cr >= 0.5 && c.cr <= 1.5));
        assert!(!texts(&set).contains(&"mary died .".to_string()));
    }

    #[test]
    fn nested_rules_recurse() {
        let src = tokenize("because the river , which was rising , flooded the town , the mayor left and the people stayed .")
            .unwrap();
        let set = rule_candidates(&src, &RuleConfig::default()).unwrap();
        assert!(set.candidates().iter().any(|c| c.rule_count() >= 2));
        for c in set.candidates() {
            assert_eq!(c.rule_count(), c.rules_applied.len());
            assert_eq!(c.split_count, c.tokens.sentence_breaks().len() + 1);
        }
    }

    #[test]
    fn disabled_rule_is_not_used() {
        let src = tokenize("john , who lives in rome , won .").unwrap();
        let cfg = RuleConfig { enabled: vec![RuleKind::Coordination], ..RuleConfig::default() };
        assert_eq!(rule_candidates(&src, &cfg).unwrap().len(), 1);
    }
}
