use std::path::Path;

use serde::{Deserialize, Serialize};

use super::control::ControlConfig;
use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::paraphraser::{DecodeConfig, ParaphraserConfig};
use crate::ranker::RankerConfig;
use crate::structgen::RuleConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParaphraserSection {
    pub model: ParaphraserConfig,
    pub decode: DecodeConfig,
    /// Beam outputs requested per constraint from the delsplit model.
    pub delsplit_width: usize,
    pub augment: AugmentConfig,
}

impl Default for ParaphraserSection {
    fn default() -> Self {
        Self {
            model: ParaphraserConfig::default(),
            decode: DecodeConfig::default(),
            delsplit_width: 10,
            augment: AugmentConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub rules: RuleConfig,
    pub ranker: RankerConfig,
    pub paraphraser: ParaphraserSection,
    pub control: ControlConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.rules.validate()?;
        self.paraphraser.model.validate()?;
        self.paraphraser.augment.validate()?;
        if !(self.control.delete_cr_max > 0.0) {
            return Err(Error::InvalidConfig("delete_cr_max must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_default_config_matches_code_defaults() {
        let text = include_str!("../../../../config/default.toml");
        assert_eq!(PipelineConfig::from_toml(text).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = PipelineConfig::from_toml("[control]\nmode = \"delete_focused\"\ncp = 0.8\n").unwrap();
        assert_eq!(cfg.control.mode, super::super::Mode::DeleteFocused);
        assert_eq!(cfg.control.cp.value(), 0.8);
        assert_eq!(cfg.ranker, RankerConfig::default());
    }

    #[test]
    fn bad_cp_is_rejected() {
        assert!(PipelineConfig::from_toml("[control]\ncp = 1.5\n").is_err());
    }
}
