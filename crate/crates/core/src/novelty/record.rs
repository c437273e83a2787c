use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Scores, Thresholds};
use crate::corpus::{Iso, Recipe, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Newness,
    Uniqueness,
    Difference,
    NewSurprise,
    DivergentSurprise,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Newness,
        Metric::Uniqueness,
        Metric::Difference,
        Metric::NewSurprise,
        Metric::DivergentSurprise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Newness => "newness",
            Metric::Uniqueness => "uniqueness",
            Metric::Difference => "difference",
            Metric::NewSurprise => "new_surprise",
            Metric::DivergentSurprise => "divergent_surprise",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Five divergence values for one scored text. Field order is the stable
/// CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub dish_id: String,
    pub recipe_id: String,
    pub variation_country: Iso,
    pub source: Source,
    pub model_name: Option<String>,
    pub keyword: Option<String>,
    pub template_id: Option<String>,
    pub newness: f64,
    pub uniqueness: f64,
    pub difference: f64,
    pub new_surprise: f64,
    pub divergent_surprise: f64,
    pub appearance: f64,
    pub disappearance: f64,
    /// The community had a single text; difference is 0 by convention.
    pub degenerate: bool,
    pub no_shared_words: bool,
}

impl MetricRecord {
    pub const COLUMNS: [&'static str; 16] = [
        "dish_id",
        "recipe_id",
        "variation_country",
        "source",
        "model_name",
        "keyword",
        "template_id",
        "newness",
        "uniqueness",
        "difference",
        "new_surprise",
        "divergent_surprise",
        "appearance",
        "disappearance",
        "degenerate",
        "no_shared_words",
    ];

    pub fn from_scores(recipe: &Recipe, th: &Thresholds, s: &Scores) -> Self {
        MetricRecord {
            dish_id: recipe.dish_id.clone(),
            recipe_id: recipe.recipe_id.clone(),
            variation_country: recipe.country.clone(),
            source: recipe.source,
            model_name: recipe.model_name.clone(),
            keyword: recipe.keyword.clone(),
            template_id: recipe.template_id.clone(),
            newness: s.newness.newness,
            uniqueness: s.uniqueness,
            difference: s.difference,
            new_surprise: s.new_surprise,
            divergent_surprise: s.divergent_surprise.value,
            appearance: s.newness.appearance,
            disappearance: s.newness.disappearance,
            degenerate: th.degenerate,
            no_shared_words: s.divergent_surprise.no_shared_words,
        }
    }

    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Newness => self.newness,
            Metric::Uniqueness => self.uniqueness,
            Metric::Difference => self.difference,
            Metric::NewSurprise => self.new_surprise,
            Metric::DivergentSurprise => self.divergent_surprise,
        }
    }

    /// `human` for human recipes, otherwise the model name.
    pub fn producer(&self) -> &str {
        match (&self.source, &self.model_name) {
            (Source::ModelGenerated, Some(m)) => m,
            (Source::ModelGenerated, None) => "unknown-model",
            _ => "human",
        }
    }
}
