use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paraphraser::CopyConstraint;
use crate::structgen::Candidate;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Overall,
    SplitFocused,
    DeleteFocused,
    ParaphraseOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overall" => Ok(Mode::Overall),
            "split_focused" => Ok(Mode::SplitFocused),
            "delete_focused" => Ok(Mode::DeleteFocused),
            "paraphrase_only" => Ok(Mode::ParaphraseOnly),
            _ => Err(Error::InvalidConfig(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    pub mode: Mode,
    pub cp: CopyConstraint,
    pub delete_cr_max: f64,
    /// Rewrite the selected candidate with the paraphraser.
    pub paraphrase: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { mode: Mode::Overall, cp: CopyConstraint::default(), delete_cr_max: 0.7, paraphrase: true }
    }
}

impl ControlConfig {
    /// Whether `c` belongs to this mode's candidate pool.
    pub fn admits(&self, c: &Candidate) -> bool {
        match self.mode {
            Mode::Overall | Mode::ParaphraseOnly => true,
            Mode::SplitFocused => c.split_count >= 2,
            Mode::DeleteFocused => c.split_count == 1 && c.cr < self.delete_cr_max,
        }
    }

    /// First admissible candidate of a ranked list; if none qualifies, the
    /// overall top candidate with `true` marking the fallback.
    pub fn select<'a>(&self, ranked: &'a [Candidate]) -> Result<(&'a Candidate, bool)> {
        let top = ranked.first().ok_or_else(|| Error::EmptyInput("ranked candidates".into()))?;
        Ok(match ranked.iter().find(|c| self.admits(c)) {
            Some(c) => (c, false),
            None => (top, true),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structgen::{Origin, RuleKind};
    use crate::text::tokenize;

    fn cand(src: &str, text: &str) -> Candidate {
        Candidate::new(tokenize(text).unwrap(), vec![RuleKind::Coordination], Origin::RuleEngine, &tokenize(src).unwrap())
    }

    #[test]
    fn modes_filter_and_fall_back() {
        let src = "a b c d e f g h i j .";
        let ranked = vec![cand(src, "a b c d e f g h i ."), cand(src, "a b c . d e f ."), cand(src, "a b c d .")];
        let pick = |mode| ControlConfig { mode, ..ControlConfig::default() }.select(&ranked).unwrap();
        assert_eq!(pick(Mode::Overall), (&ranked[0], false));
        assert_eq!(pick(Mode::SplitFocused), (&ranked[1], false));
        assert_eq!(pick(Mode::DeleteFocused), (&ranked[2], false));
        let only_long = vec![ranked[0].clone()];
        let cfg = ControlConfig { mode: Mode::DeleteFocused, ..ControlConfig::default() };
        assert_eq!(cfg.select(&only_long).unwrap(), (&only_long[0], true));
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("split_focused".parse::<Mode>().unwrap(), Mode::SplitFocused);
        assert!("bogus".parse::<Mode>().is_err());
    }
}
