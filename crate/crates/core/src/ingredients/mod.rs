//! Ingredient normalization and the grounding analyses built on it:
//! overlap with the reference pool, TF-IDF country attribution, top
//! ingredients and country mentions in titles.

mod mismatch;
mod tfidf;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::text::{is_stopword, tokenize};
use crate::corpus::{CountryLexicon, Dish, Pos, PosTagger, Recipe, Region};

pub use mismatch::{
    detect_title_country, mismatch_report, MismatchRecord, MismatchReport, MismatchSummary,
};
pub use tfidf::{
    attribute, attribution_summary, cosine, country_profiles, AttributionRecord,
    AttributionSummary, CountryProfile, MatchClass, ProfileSet,
};

const UNITS: &str = include_str!("../../data/ingredient_units.txt");

fn units() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        UNITS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_unit(token: &str) -> bool {
    units().contains(token)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NormalizedIngredient {
    /// Lemmatized content words joined by single spaces.
    pub phrase: String,
    pub head_lemma: String,
}

fn strip_brackets(s: &str) -> String {
    let mut depth = 0usize;
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                out.push(' ');
            }
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

/// Normalizes one raw ingredient line. `None` when nothing survives.
pub fn normalize_ingredient(raw: &str, tagger: &dyn PosTagger) -> Option<NormalizedIngredient> {
    let lower = strip_brackets(&raw.to_lowercase());
    let toks: Vec<&str> = tokenize(&lower)
        .into_iter()
        .filter(|t| !t.chars().any(|c| c.is_numeric()) && !is_unit(t) && !is_stopword(t))
        .collect();
    let tags = tagger.tag(&toks);
    let kept: Vec<_> = tags
        .into_iter()
        .filter(|t| t.pos != Pos::Number && !t.lemma.is_empty() && !is_stopword(&t.lemma))
        .collect();
    let last = kept.last()?;
    let head = kept
        .iter()
        .rev()
        .find(|t| t.pos == Pos::Noun)
        .unwrap_or(last)
        .lemma
        .clone();
    Some(NormalizedIngredient {
        phrase: kept
            .iter()
            .map(|t| t.lemma.as_str())
            .collect::<Vec<_>>()
            .join(" "),
        head_lemma: head,
    })
}

/// Normalized ingredient lines of a recipe plus the raw lines that
/// normalized to nothing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecipeIngredients {
    pub items: Vec<NormalizedIngredient>,
    pub dropped: Vec<String>,
}

pub fn recipe_ingredients(recipe: &Recipe, tagger: &dyn PosTagger) -> RecipeIngredients {
    let mut out = RecipeIngredients::default();
    for raw in &recipe.ingredients {
        match normalize_ingredient(raw, tagger) {
            Some(n) => out.items.push(n),
            None => out.dropped.push(raw.clone()),
        }
    }
    out
}

/// Which part of a normalized ingredient identifies it when matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKey {
    #[default]
    Phrase,
    Head,
}

impl std::str::FromStr for MatchKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phrase" => Ok(MatchKey::Phrase),
            "head" => Ok(MatchKey::Head),
            _ => Err(format!("unknown match key `{s}`")),
        }
    }
}

fn key_set(recipe: &Recipe, tagger: &dyn PosTagger, key: MatchKey) -> BTreeSet<String> {
    recipe_ingredients(recipe, tagger)
        .items
        .into_iter()
        .map(|n| match key {
            MatchKey::Phrase => n.phrase,
            MatchKey::Head => n.head_lemma,
        })
        .collect()
}

/// Union of the normalized ingredients of a dish's reference recipes.
pub fn reference_pool(dish: &Dish, tagger: &dyn PosTagger, key: MatchKey) -> BTreeSet<String> {
    dish.references
        .iter()
        .flat_map(|r| key_set(r, tagger, key))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    /// Share of the recipe's ingredients found in the pool; `None` when the
    /// recipe has no normalized ingredient.
    pub overlap: Option<f64>,
    /// Share of the pool found in the recipe; `None` for an empty pool.
    pub preservation: Option<f64>,
}

pub fn overlap_with_pool(pool: &BTreeSet<String>, ingr: &BTreeSet<String>) -> Overlap {
    let common = ingr.intersection(pool).count() as f64;
    Overlap {
        overlap: (!ingr.is_empty()).then(|| common / ingr.len() as f64),
        preservation: (!pool.is_empty()).then(|| common / pool.len() as f64),
    }
}

pub fn overlap_and_preservation(
    dish: &Dish,
    recipe: &Recipe,
    tagger: &dyn PosTagger,
    key: MatchKey,
) -> Overlap {
    overlap_with_pool(
        &reference_pool(dish, tagger, key),
        &key_set(recipe, tagger, key),
    )
}

/// Mean overlap and preservation for one (producer, region) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub producer: String,
    pub region: String,
    pub n_recipes: usize,
    pub n_undefined: usize,
    pub mean_overlap: Option<f64>,
    pub mean_preservation: Option<f64>,
}

/// Overlap and preservation of every non-reference recipe, averaged per
/// producer and region of the recipe's country.
pub fn overlap_report<'a>(
    dishes: impl IntoIterator<Item = &'a Dish>,
    lexicon: &CountryLexicon,
    tagger: &dyn PosTagger,
    key: MatchKey,
) -> Vec<OverlapRow> {
    #[derive(Default)]
    struct Acc {
        n: usize,
        undefined: usize,
        ov: Vec<f64>,
        pr: Vec<f64>,
    }
    let mut cells: BTreeMap<(String, String), Acc> = BTreeMap::new();
    for dish in dishes {
        let pool = reference_pool(dish, tagger, key);
        for r in dish.non_reference() {
            let o = overlap_with_pool(&pool, &key_set(r, tagger, key));
            let region = lexicon
                .region_of(&r.country)
                .map(Region::label)
                .unwrap_or("Unknown")
                .to_string();
            let acc = cells.entry((r.producer().to_string(), region)).or_default();
            acc.n += 1;
            match o.overlap {
                Some(v) => acc.ov.push(v),
                None => acc.undefined += 1,
            }
            if let Some(v) = o.preservation {
                acc.pr.push(v);
            }
        }
    }
    let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    cells
        .into_iter()
        .map(|((producer, region), a)| OverlapRow {
            producer,
            region,
            n_recipes: a.n,
            n_undefined: a.undefined,
            mean_overlap: avg(&a.ov),
            mean_preservation: avg(&a.pr),
        })
        .collect()
}

/// Normalized phrases ranked by the number of recipes containing them;
/// ties in phrase order.
pub fn top_ingredients<'a>(
    recipes: impl IntoIterator<Item = &'a Recipe>,
    k: usize,
    tagger: &dyn PosTagger,
) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in recipes {
        for p in key_set(r, tagger, MatchKey::Phrase) {
            *counts.entry(p).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_overlap_csv<W: Write>(rows: &[OverlapRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "producer",
        "region",
        "n_recipes",
        "n_undefined",
        "overlap",
        "preservation",
    ])?;
    for r in rows {
        w.write_record([
            r.producer.as_str(),
            r.region.as_str(),
            &r.n_recipes.to_string(),
            &r.n_undefined.to_string(),
            &opt(r.mean_overlap),
            &opt(r.mean_preservation),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes ranked ingredients, one block per producer.
pub fn write_top_csv<W: Write>(rows: &[(String, Vec<(String, usize)>)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["producer", "rank", "phrase", "recipes"])?;
    for (producer, top) in rows {
        for (i, (p, c)) in top.iter().enumerate() {
            w.write_record([producer, &(i + 1).to_string(), p, &c.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
