//! Generation-quality statistics per producer: structural validity, length,
//! repetition, English rate and ingredient usage.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::text::{is_stopword, tokenize_lower};
use crate::corpus::{preprocess, PosTagger, Recipe};
use crate::ingredients::recipe_ingredients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    /// Instructions with fewer whitespace tokens are too short.
    pub min_tokens: usize,
    /// Run length of identical consecutive tokens that flags a sentence.
    pub repetition_run: usize,
    /// Minimum stopword ratio for a text to count as English.
    pub english_threshold: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            min_tokens: 50,
            repetition_run: 3,
            english_threshold: 0.15,
        }
    }
}

/// Decides whether a text is English.
pub trait LanguageDetector: Send + Sync {
    fn is_english(&self, text: &str) -> bool;
}

/// English iff the share of bundled English stopwords among the tokens
/// reaches a threshold.
#[derive(Debug, Clone, Copy)]
pub struct StopwordDetector {
    pub threshold: f64,
}

impl StopwordDetector {
    pub fn ratio(text: &str) -> f64 {
        let toks = tokenize_lower(text);
        if toks.is_empty() {
            return 0.0;
        }
        toks.iter().filter(|t| is_stopword(t)).count() as f64 / toks.len() as f64
    }
}

impl LanguageDetector for StopwordDetector {
    fn is_english(&self, text: &str) -> bool {
        !text.trim().is_empty() && Self::ratio(text) >= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    EmptyTitle,
    NoIngredients,
    EmptyInstructions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub valid: bool,
    pub reasons: Vec<InvalidReason>,
}

pub fn validate_recipe(r: &Recipe) -> ValidityVerdict {
    let mut reasons = Vec::new();
    if r.title.trim().is_empty() {
        reasons.push(InvalidReason::EmptyTitle);
    }
    if !r.ingredients.iter().any(|i| !i.trim().is_empty()) {
        reasons.push(InvalidReason::NoIngredients);
    }
    if r.instructions.trim().is_empty() {
        reasons.push(InvalidReason::EmptyInstructions);
    }
    ValidityVerdict {
        valid: reasons.is_empty(),
        reasons,
    }
}

/// Sentences split on `.`, `!`, `?` and newlines; blank pieces dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    text.split(['.', '!', '?', '\n'])
        .filter(|s| !s.trim().is_empty())
        .collect()
}

/// True when `sentence` holds `run` identical consecutive tokens. Tokens
/// are whitespace-split, lowercased and stripped of edge punctuation.
pub fn has_repetition(sentence: &str, run: usize) -> bool {
    let toks: Vec<String> = sentence
        .split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect();
    if run <= 1 {
        return !toks.is_empty();
    }
    toks.windows(run).any(|w| w.iter().all(|t| *t == w[0]))
}

/// Share of normalized ingredient heads whose lemma occurs in the
/// preprocessed instructions. `None` without any normalized ingredient.
pub fn ingredient_usage(r: &Recipe, tagger: &dyn PosTagger) -> Option<f64> {
    let items = recipe_ingredients(r, tagger).items;
    if items.is_empty() {
        return None;
    }
    let lemmas: BTreeSet<String> = preprocess(&r.instructions, tagger)
        .tokens
        .into_iter()
        .collect();
    let used = items
        .iter()
        .filter(|n| lemmas.contains(&n.head_lemma))
        .count();
    Some(used as f64 / items.len() as f64)
}

/// Per-recipe flags that the report aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeQuality {
    pub recipe_id: String,
    pub producer: String,
    pub valid: bool,
    pub n_tokens: usize,
    pub too_short: bool,
    pub n_sentences: usize,
    pub n_repetitive_sentences: usize,
    pub english: bool,
    pub ingredient_usage: Option<f64>,
}

pub fn recipe_quality(
    r: &Recipe,
    config: &QualityConfig,
    detector: &dyn LanguageDetector,
    tagger: &dyn PosTagger,
) -> RecipeQuality {
    let n_tokens = r.instructions.split_whitespace().count();
    let sents = sentences(&r.instructions);
    RecipeQuality {
        recipe_id: r.recipe_id.clone(),
        producer: r.producer().to_string(),
        valid: validate_recipe(r).valid,
        n_tokens,
        too_short: n_tokens < config.min_tokens,
        n_sentences: sents.len(),
        n_repetitive_sentences: sents
            .iter()
            .filter(|s| has_repetition(s, config.repetition_run))
            .count(),
        english: detector.is_english(&r.instructions),
        ingredient_usage: ingredient_usage(r, tagger),
    }
}

/// One row of the quality table. Everything but `n_total` and `n_valid`
/// is computed over valid recipes; percentages are in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub model_name: String,
    pub n_total: usize,
    pub n_valid: usize,
    pub mean_length: Option<f64>,
    pub pct_too_short: Option<f64>,
    pub pct_repetition: Option<f64>,
    pub pct_english: Option<f64>,
    pub mean_ingredient_usage: Option<f64>,
}

impl QualityReport {
    pub const COLUMNS: [&'static str; 8] = [
        "model_name",
        "n_total",
        "n_valid",
        "mean_length",
        "pct_too_short",
        "pct_repetition",
        "pct_english",
        "mean_ingredient_usage",
    ];
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Folds per-recipe flags of one producer into a report row.
pub fn aggregate(model_name: &str, rows: &[RecipeQuality]) -> QualityReport {
    let valid: Vec<&RecipeQuality> = rows.iter().filter(|r| r.valid).collect();
    let n = valid.len();
    let sentences: usize = valid.iter().map(|r| r.n_sentences).sum();
    let usage: Vec<f64> = valid.iter().filter_map(|r| r.ingredient_usage).collect();
    QualityReport {
        model_name: model_name.to_string(),
        n_total: rows.len(),
        n_valid: n,
        mean_length: (n > 0)
            .then(|| valid.iter().map(|r| r.n_tokens).sum::<usize>() as f64 / n as f64),
        pct_too_short: pct(valid.iter().filter(|r| r.too_short).count(), n),
        pct_repetition: pct(
            valid.iter().map(|r| r.n_repetitive_sentences).sum(),
            sentences,
        ),
        pct_english: pct(valid.iter().filter(|r| r.english).count(), n),
        mean_ingredient_usage: (!usage.is_empty())
            .then(|| 100.0 * usage.iter().sum::<f64>() / usage.len() as f64),
    }
}

/// One report per producer, in name order.
pub fn quality_stats(
    recipes: &[&Recipe],
    config: &QualityConfig,
    detector: &dyn LanguageDetector,
    tagger: &dyn PosTagger,
) -> Vec<QualityReport> {
    let rows: Vec<RecipeQuality> = recipes
        .par_iter()
        .map(|r| recipe_quality(r, config, detector, tagger))
        .collect();
    let mut by: BTreeMap<&str, Vec<RecipeQuality>> = BTreeMap::new();
    for r in &rows {
        by.entry(r.producer.as_str()).or_default().push(r.clone());
    }
    by.into_iter().map(|(p, rs)| aggregate(p, &rs)).collect()
}

pub fn write_quality_csv<W: Write>(reports: &[QualityReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QualityReport::COLUMNS)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.model_name.clone(),
            r.n_total.to_string(),
            r.n_valid.to_string(),
            opt(r.mean_length),
            opt(r.pct_too_short),
            opt(r.pct_repetition),
            opt(r.pct_english),
            opt(r.mean_ingredient_usage),
        ])?;
    }
    w.flush()?;
    Ok(())
}
