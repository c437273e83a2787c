use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layers::LayerConfig;
use super::prompts::PromptConfig;
use super::score::ScoreConfig;
use super::synth::SynthConfig;
use super::PipelineError;
use crate::distances::CorrelationConfig;
use crate::ingredients::MatchKey;
use crate::novelty::NoveltyConfig;
use crate::quality::QualityConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngredientConfig {
    pub match_key: MatchKey,
    pub top_k: usize,
}

impl Default for IngredientConfig {
    fn default() -> Self {
        IngredientConfig {
            match_key: MatchKey::Phrase,
            top_k: 20,
        }
    }
}

/// Every tunable of a run. Missing sections and fields take their defaults;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub novelty: NoveltyConfig,
    pub score: ScoreConfig,
    pub quality: QualityConfig,
    pub correlate: CorrelationConfig,
    pub ingredients: IngredientConfig,
    pub prompts: PromptConfig,
    pub layers: LayerConfig,
    pub synth: SynthConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text)
    }
}
