//! The five cultural-divergence metrics and their leave-one-out thresholds.
//!
//! A variation (one recipe, or any list of texts) is compared against the
//! [`KnowledgeSpace`] of a community:
//!
//! - **newness**: share of words whose divergence contribution marks them as
//!   appearing (weight 0.8) or disappearing (weight 0.2), above a threshold;
//! - **uniqueness**: JSD between the pooled community and the variation;
//! - **difference**: share of individual community texts at least as far
//!   from the variation as the community's mean internal distance;
//! - **new surprise**: share of the variation's positive-PMI pairs that have
//!   no positive PMI in the community;
//! - **divergent surprise**: mean JSD between PPMI rows of shared words.

mod record;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{preprocess, KnowledgeSpace, PosTagger, Recipe, TokenStream};
use crate::distrib::{
    jsd, jsd_contributions, ppmi_matrix, ppmi_row_distribution, CoocWindow, Direction,
    DistribError, PpmiMatrix, TokenDistribution,
};

pub use record::{Metric, MetricRecord};

/// Weight of appearance in newness.
pub const APPEARANCE_WEIGHT: f64 = 0.8;
/// Weight of disappearance in newness.
pub const DISAPPEARANCE_WEIGHT: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum NoveltyError {
    #[error("variation text `{recipe_id}` has no tokens after preprocessing")]
    EmptyVariation { recipe_id: String },
    #[error(transparent)]
    Distrib(#[from] DistribError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    LeaveOneOut,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum per-word JSD contribution for a word to count in newness.
    pub newness_eps: f64,
    /// Minimum JSD for a community text to count in difference.
    pub difference_eps: f64,
    pub provenance: Provenance,
    /// Set when the community has a single text: `difference_eps` is
    /// infinite and difference is reported as 0.
    pub degenerate: bool,
}

impl Thresholds {
    pub fn manual(newness_eps: f64, difference_eps: f64) -> Self {
        Thresholds {
            newness_eps,
            difference_eps,
            provenance: Provenance::Manual,
            degenerate: false,
        }
    }
}

/// Normalizer for the disappearance count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisappearanceNorm {
    /// Divide by the variation's support size.
    #[default]
    Variation,
    /// Divide by the community's support size.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoveltyConfig {
    pub window: CoocWindow,
    pub disappearance_norm: DisappearanceNorm,
    /// `(newness_eps, difference_eps)` overriding leave-one-out estimation.
    pub manual_thresholds: Option<(f64, f64)>,
}

impl NoveltyConfig {
    pub fn thresholds(&self, ks: &KnowledgeSpace) -> Thresholds {
        match self.manual_thresholds {
            Some((n, d)) => Thresholds::manual(n, d),
            None => loo_thresholds(ks),
        }
    }
}

/// Leave-one-out thresholds for a community.
///
/// `newness_eps` averages, over held-out texts, the mean positive per-word
/// contribution of the JSD between the remaining texts and the held-out one.
/// `difference_eps` is the mean pairwise JSD between community texts.
pub fn loo_thresholds(ks: &KnowledgeSpace) -> Thresholds {
    let n = ks.n_texts();
    if n < 2 {
        return Thresholds {
            newness_eps: 0.0,
            difference_eps: f64::INFINITY,
            provenance: Provenance::LeaveOneOut,
            degenerate: true,
        };
    }

    let mut pooled_counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in ks.texts.iter().flat_map(|s| s.tokens.iter()) {
        *pooled_counts.entry(t.as_str()).or_insert(0) += 1;
    }

    let mut newness_sum = 0.0;
    for (i, held) in ks.texts.iter().enumerate() {
        let mut rest = pooled_counts.clone();
        for t in &held.tokens {
            if let Some(c) = rest.get_mut(t.as_str()) {
                *c -= 1;
            }
        }
        let rest = TokenDistribution::from_weights(
            rest.into_iter().map(|(k, c)| (k.to_string(), c as f64)),
        )
        .unwrap_or_default();
        let contributions = jsd_contributions(&rest, &ks.per_text[i]).unwrap_or_default();
        let positive: Vec<f64> = contributions
            .values()
            .map(|c| c.value)
            .filter(|&v| v > 0.0)
            .collect();
        if !positive.is_empty() {
            newness_sum += positive.iter().sum::<f64>() / positive.len() as f64;
        }
    }

    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            pair_sum += jsd(&ks.per_text[i], &ks.per_text[j]).unwrap_or(0.0);
            pairs += 1;
        }
    }

    Thresholds {
        newness_eps: newness_sum / n as f64,
        difference_eps: pair_sum / pairs as f64,
        provenance: Provenance::LeaveOneOut,
        degenerate: false,
    }
}

/// A variation prepared for scoring: its texts, pooled distribution and
/// PPMI matrix under the community's window.
#[derive(Debug, Clone)]
pub struct VariationText {
    pub streams: Vec<TokenStream>,
    pub distribution: TokenDistribution,
    pub ppmi: PpmiMatrix,
}

impl VariationText {
    pub fn new(streams: Vec<TokenStream>, window: CoocWindow) -> Result<Self, NoveltyError> {
        let streams: Vec<TokenStream> = streams.into_iter().filter(|s| !s.is_empty()).collect();
        let distribution = TokenDistribution::from_tokens(
            streams.iter().flat_map(|s| s.tokens.iter()),
        )
        .map_err(|_| NoveltyError::EmptyVariation {
            recipe_id: String::new(),
        })?;
        let ppmi = ppmi_matrix(&streams, window);
        Ok(VariationText {
            streams,
            distribution,
            ppmi,
        })
    }

    pub fn single(stream: TokenStream, window: CoocWindow) -> Result<Self, NoveltyError> {
        let id = stream.source_recipe.clone();
        Self::new(vec![stream], window).map_err(|e| match e {
            NoveltyError::EmptyVariation { .. } => NoveltyError::EmptyVariation { recipe_id: id },
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewnessScore {
    pub newness: f64,
    pub appearance: f64,
    pub disappearance: f64,
}

pub fn newness(
    ks: &KnowledgeSpace,
    nt: &TokenDistribution,
    th: &Thresholds,
    norm: DisappearanceNorm,
) -> Result<NewnessScore, NoveltyError> {
    if nt.is_empty() {
        return Err(NoveltyError::EmptyVariation {
            recipe_id: String::new(),
        });
    }
    let contributions = jsd_contributions(&ks.pooled, nt)?;
    let count = |dir: Direction| {
        contributions
            .values()
            .filter(|c| c.direction == dir && c.value >= th.newness_eps)
            .count() as f64
    };
    let appearance = count(Direction::Appearing) / nt.support_size() as f64;
    let disappearance_norm = match norm {
        DisappearanceNorm::Variation => nt.support_size(),
        DisappearanceNorm::Reference => ks.pooled.support_size(),
    } as f64;
    let disappearance = count(Direction::Disappearing) / disappearance_norm;
    Ok(NewnessScore {
        newness: APPEARANCE_WEIGHT * appearance + DISAPPEARANCE_WEIGHT * disappearance,
        appearance,
        disappearance,
    })
}

pub fn uniqueness(ks: &KnowledgeSpace, nt: &TokenDistribution) -> Result<f64, NoveltyError> {
    Ok(jsd(&ks.pooled, nt)?)
}

pub fn difference(
    ks: &KnowledgeSpace,
    nt: &TokenDistribution,
    th: &Thresholds,
) -> Result<f64, NoveltyError> {
    if nt.is_empty() {
        return Err(NoveltyError::EmptyVariation {
            recipe_id: String::new(),
        });
    }
    if th.degenerate || ks.per_text.is_empty() {
        return Ok(0.0);
    }
    let mut far = 0usize;
    for p in &ks.per_text {
        if jsd(p, nt)? >= th.difference_eps {
            far += 1;
        }
    }
    Ok(far as f64 / ks.per_text.len() as f64)
}

/// Share of the variation's positive-PMI pairs absent from the community
/// matrix; 0 when the variation has no positive pair.
pub fn new_surprise(ks: &KnowledgeSpace, var: &VariationText) -> f64 {
    let mut total = 0usize;
    let mut novel = 0usize;
    for (a, b, _) in var.ppmi.entries() {
        total += 1;
        if ks.ppmi.get(a, b) <= 0.0 {
            novel += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        novel as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergentSurprise {
    pub value: f64,
    /// Words whose rows were non-empty on both sides.
    pub words_used: usize,
    pub no_shared_words: bool,
}

/// Mean JSD between community and variation PPMI rows of shared words,
/// each restricted to the shared vocabulary.
pub fn divergent_surprise(ks: &KnowledgeSpace, var: &VariationText) -> DivergentSurprise {
    let shared: BTreeSet<String> = ks
        .ppmi
        .vocabulary()
        .intersection(var.ppmi.vocabulary())
        .cloned()
        .collect();
    let mut sum = 0.0;
    let mut used = 0usize;
    for w in &shared {
        let rp = ppmi_row_distribution(&ks.ppmi, w, &shared);
        let rq = ppmi_row_distribution(&var.ppmi, w, &shared);
        if let (Some(p), Some(q)) = (&rp.distribution, &rq.distribution) {
            if let Ok(d) = jsd(p, q) {
                sum += d;
                used += 1;
            }
        }
    }
    DivergentSurprise {
        value: if used == 0 { 0.0 } else { sum / used as f64 },
        words_used: used,
        no_shared_words: shared.is_empty(),
    }
}

/// All five metrics for one prepared variation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub newness: NewnessScore,
    pub uniqueness: f64,
    pub difference: f64,
    pub new_surprise: f64,
    pub divergent_surprise: DivergentSurprise,
}

impl Scores {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Newness => self.newness.newness,
            Metric::Uniqueness => self.uniqueness,
            Metric::Difference => self.difference,
            Metric::NewSurprise => self.new_surprise,
            Metric::DivergentSurprise => self.divergent_surprise.value,
        }
    }
}

pub fn score_text(
    ks: &KnowledgeSpace,
    var: &VariationText,
    th: &Thresholds,
    norm: DisappearanceNorm,
) -> Result<Scores, NoveltyError> {
    Ok(Scores {
        newness: newness(ks, &var.distribution, th, norm)?,
        uniqueness: uniqueness(ks, &var.distribution)?,
        difference: difference(ks, &var.distribution, th)?,
        new_surprise: new_surprise(ks, var),
        divergent_surprise: divergent_surprise(ks, var),
    })
}

/// Preprocesses a recipe's instructions and scores it against `ks`.
pub fn score_variation(
    ks: &KnowledgeSpace,
    th: &Thresholds,
    recipe: &Recipe,
    tagger: &dyn PosTagger,
    config: &NoveltyConfig,
) -> Result<MetricRecord, NoveltyError> {
    let stream = preprocess(&recipe.instructions, tagger).with_source(recipe.recipe_id.clone());
    let var = VariationText::single(stream, ks.window)?;
    let scores = score_text(ks, &var, th, config.disappearance_norm)?;
    Ok(MetricRecord::from_scores(recipe, th, &scores))
}
