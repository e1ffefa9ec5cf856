//! A small clause-level rule engine. Each rule maps one sentence body (tokens
//! without the closing terminal marks) to one or more non-empty parts; the
//! first part is the main clause.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Parenthetical,
    RelativeClause,
    Appositive,
    Subordinate,
    Coordination,
}

impl RuleKind {
    /// All rules in matching priority order; also the order of ranker indicator features.
    pub const ALL: [RuleKind; 5] = [
        RuleKind::Parenthetical,
        RuleKind::RelativeClause,
        RuleKind::Appositive,
        RuleKind::Subordinate,
        RuleKind::Coordination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Parenthetical => "parenthetical",
            RuleKind::RelativeClause => "relative_clause",
            RuleKind::Appositive => "appositive",
            RuleKind::Subordinate => "subordinate",
            RuleKind::Coordination => "coordination",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&r| r == self).expect("listed")
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Applies this rule at its first match, if any.
    pub fn apply(self, body: &[String]) -> Option<Vec<Vec<String>>> {
        let parts = match self {
            RuleKind::Parenthetical => parenthetical(body),
            RuleKind::RelativeClause => relative_clause(body),
            RuleKind::Appositive => appositive(body),
            RuleKind::Subordinate => subordinate(body),
            RuleKind::Coordination => coordination(body),
        }?;
        parts.iter().all(|p| !p.is_empty()).then_some(parts)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "am", "has", "have", "had", "do", "does", "did", "will", "would", "can",
    "could", "shall", "should", "may", "might", "must",
];

const IRREGULAR_VERBS: &[&str] = &[
    "ate", "became", "began", "bought", "brought", "built", "came", "caught", "chose", "drove", "fell", "felt",
    "found", "gave", "goes", "got", "grew", "held", "kept", "knew", "led", "left", "lives", "live", "lost", "made",
    "makes", "meant", "met", "paid", "ran", "runs", "said", "says", "sang", "sat", "saw", "sees", "sent", "sold",
    "spoke", "stood", "swam", "taught", "thinks", "thought", "told", "took", "wants", "went", "won", "works", "wrote",
];

const DETERMINERS: &[&str] =
    &["the", "a", "an", "this", "that", "these", "those", "his", "her", "its", "their", "our", "my", "your"];

const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "of", "for", "with", "to", "from", "by", "about", "into", "over", "under", "after", "before",
    "during", "near",
];

const CONJUNCTIONS: &[&str] = &["and", "but", "or", "so"];
const RELATIVE_PRONOUNS: &[&str] = &["who", "which", "that"];
const SUBORDINATORS: &[&str] = &["because", "although", "since", "while", "after", "when"];
const COORDINATORS: &[&str] = &["and", "but", "so"];
const MAX_APPOSITIVE: usize = 8;

/// Closed-class verb lexicon plus `-ed` / `-ing` suffixes.
pub fn is_verb_like(tok: &str) -> bool {
    AUXILIARIES.contains(&tok)
        || IRREGULAR_VERBS.contains(&tok)
        || (tok.len() > 3 && tok.ends_with("ed"))
        || (tok.len() > 4 && tok.ends_with("ing"))
}

fn is(tok: &str, set: &[&str]) -> bool {
    set.contains(&tok)
}

/// The noun phrase ending just before `end`: walk left until a verb,
/// preposition, conjunction or comma. At least one token.
fn antecedent(body: &[String], end: usize) -> &[String] {
    let mut start = end;
    while start > 0 {
        let t = body[start - 1].as_str();
        if t == "," || is_verb_like(t) || is(t, PREPOSITIONS) || is(t, CONJUNCTIONS) {
            break;
        }
        start -= 1;
    }
    if start == end {
        start = end - 1;
    }
    &body[start..end]
}

fn joined(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().chain(b).cloned().collect()
}

fn parenthetical(body: &[String]) -> Option<Vec<Vec<String>>> {
    let open = body.iter().position(|t| t == "(")?;
    let close = open + 1 + body[open + 1..].iter().position(|t| t == ")")?;
    if close == open + 1 {
        return None;
    }
    Some(vec![joined(&body[..open], &body[close + 1..])])
}

fn relative_clause(body: &[String]) -> Option<Vec<Vec<String>>> {
    (1..body.len().saturating_sub(2)).find_map(|i| {
        if body[i] != "," || !is(&body[i + 1], RELATIVE_PRONOUNS) {
            return None;
        }
        let end = body[i + 2..].iter().position(|t| t == ",").map_or(body.len(), |p| i + 2 + p);
        let clause = &body[i + 2..end];
        if clause.is_empty() || !clause.iter().any(|t| is_verb_like(t)) {
            return None;
        }
        let rest = if end < body.len() { &body[end + 1..] } else { &[][..] };
        let main = joined(&body[..i], rest);
        Some(vec![main, joined(antecedent(body, i), clause)])
    })
}

fn appositive(body: &[String]) -> Option<Vec<Vec<String>>> {
    (1..body.len().saturating_sub(3)).find_map(|i| {
        if body[i] != "," || !is(&body[i + 1], DETERMINERS) {
            return None;
        }
        let close = i + 2 + body[i + 2..].iter().position(|t| t == ",")?;
        let np = &body[i + 1..close];
        let rest = &body[close + 1..];
        if np.len() > MAX_APPOSITIVE || np.iter().any(|t| is_verb_like(t)) || rest.is_empty() {
            return None;
        }
        Some(vec![joined(&body[..i], rest), joined(antecedent(body, i), np)])
    })
}

fn subordinate(body: &[String]) -> Option<Vec<Vec<String>>> {
    if !is(body.first()?, SUBORDINATORS) {
        return None;
    }
    let comma = body.iter().position(|t| t == ",")?;
    if comma < 2 || comma + 1 >= body.len() {
        return None;
    }
    Some(vec![body[comma + 1..].to_vec(), body[1..comma].to_vec()])
}

fn coordination(body: &[String]) -> Option<Vec<Vec<String>>> {
    (1..body.len().saturating_sub(2)).find_map(|i| {
        if body[i] != "," || !is(&body[i + 1], COORDINATORS) {
            return None;
        }
        let (left, right) = (&body[..i], &body[i + 2..]);
        let verbal = |s: &[String]| s.iter().any(|t| is_verb_like(t));
        (verbal(left) && verbal(right)).then(|| vec![left.to_vec(), right.to_vec()])
    })
}
