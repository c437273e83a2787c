use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{detect_title_country, recipe_ingredients};
use crate::corpus::{CountryLexicon, Dish, Iso, PosTagger, Recipe};

/// Sparse non-negative vector keyed by ingredient phrase.
pub type SparseVec = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub country: Iso,
    /// Unit L2 norm, or empty when every phrase has idf 0.
    pub tfidf: SparseVec,
}

/// Profiles of every country with human recipes, and the idf they share.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfileSet {
    pub profiles: BTreeMap<Iso, CountryProfile>,
    pub idf: BTreeMap<String, f64>,
}

impl ProfileSet {
    /// tf-idf vector of a bag of phrases under this set's idf. Unknown
    /// phrases carry no weight.
    pub fn vectorize<'a>(&self, phrases: impl IntoIterator<Item = &'a str>) -> SparseVec {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for p in phrases {
            *tf.entry(p).or_insert(0.0) += 1.0;
        }
        let v = tf
            .into_iter()
            .filter_map(|(p, c)| {
                let w = c * self.idf.get(p).copied().unwrap_or(0.0);
                (w > 0.0).then(|| (p.to_string(), w))
            })
            .collect();
        l2_normalize(v)
    }
}

fn l2_normalize(mut v: SparseVec) -> SparseVec {
    let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.values_mut().for_each(|x| *x /= norm);
    }
    v
}

fn norm(v: &SparseVec) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(k, x)| large.get(k).map(|y| x * y))
        .sum();
    let n = norm(a) * norm(b);
    if n == 0.0 {
        0.0
    } else {
        (dot / n).clamp(0.0, 1.0)
    }
}

/// One document per country: the normalized ingredient phrases of all its
/// human recipes. idf is `log2(countries / df)` without smoothing.
pub fn country_profiles<'a>(
    recipes: impl IntoIterator<Item = &'a Recipe>,
    tagger: &dyn PosTagger,
) -> ProfileSet {
    let mut by_country: BTreeMap<&str, Vec<&Recipe>> = BTreeMap::new();
    for r in recipes.into_iter().filter(|r| r.source.is_human()) {
        by_country.entry(r.country.as_str()).or_default().push(r);
    }
    let docs: Vec<(Iso, BTreeMap<String, f64>)> = by_country
        .into_par_iter()
        .map(|(c, rs)| {
            let mut tf: BTreeMap<String, f64> = BTreeMap::new();
            for r in rs {
                for n in recipe_ingredients(r, tagger).items {
                    *tf.entry(n.phrase).or_insert(0.0) += 1.0;
                }
            }
            (c.to_string(), tf)
        })
        .collect();

    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for (_, tf) in &docs {
        for p in tf.keys() {
            *df.entry(p.as_str()).or_insert(0.0) += 1.0;
        }
    }
    let idf: BTreeMap<String, f64> = df
        .into_iter()
        .map(|(p, d)| (p.to_string(), (n / d).log2()))
        .collect();
    let profiles = docs
        .into_iter()
        .map(|(c, tf)| {
            let v = tf
                .into_iter()
                .filter_map(|(p, t)| {
                    let w = t * idf[&p];
                    (w > 0.0).then_some((p, w))
                })
                .collect();
            (
                c.clone(),
                CountryProfile {
                    country: c,
                    tfidf: l2_normalize(v),
                },
            )
        })
        .collect();
    ProfileSet { profiles, idf }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchClass {
    Origin,
    Variation,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub recipe_id: String,
    pub producer: String,
    pub declared_country: Iso,
    pub detected_country: Option<Iso>,
    pub best_match_country: Option<Iso>,
    pub similarity: f64,
    pub match_class: MatchClass,
    /// No profile had positive similarity (includes all-zero recipe vectors).
    pub zero_similarity: bool,
}

/// Country whose profile is most cosine-similar to the recipe's
/// ingredients. Ties go to the smallest iso code.
pub fn attribute(
    recipe: &Recipe,
    profiles: &ProfileSet,
    dish: &Dish,
    lexicon: &CountryLexicon,
    tagger: &dyn PosTagger,
) -> AttributionRecord {
    let items = recipe_ingredients(recipe, tagger).items;
    let v = profiles.vectorize(items.iter().map(|n| n.phrase.as_str()));
    let mut best: Option<(&Iso, f64)> = None;
    for (iso, p) in &profiles.profiles {
        let s = cosine(&v, &p.tfidf);
        if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
            best = Some((iso, s));
        }
    }
    let match_class = match best {
        Some((iso, _)) if *iso == dish.origin_country => MatchClass::Origin,
        Some((iso, _)) if *iso == recipe.country => MatchClass::Variation,
        _ => MatchClass::Neither,
    };
    AttributionRecord {
        recipe_id: recipe.recipe_id.clone(),
        producer: recipe.producer().to_string(),
        declared_country: recipe.country.clone(),
        detected_country: detect_title_country(&recipe.title, lexicon),
        best_match_country: best.map(|(i, _)| i.clone()),
        similarity: best.map_or(0.0, |(_, s)| s),
        match_class,
        zero_similarity: best.is_none(),
    }
}

/// Share of each match class per producer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub producer: String,
    pub n: usize,
    pub pct_origin: f64,
    pub pct_variation: f64,
    pub pct_neither: f64,
    pub n_zero_similarity: usize,
}

pub fn attribution_summary(records: &[AttributionRecord]) -> Vec<AttributionSummary> {
    let mut acc: BTreeMap<&str, [usize; 4]> = BTreeMap::new();
    for r in records {
        let a = acc.entry(r.producer.as_str()).or_default();
        a[match r.match_class {
            MatchClass::Origin => 0,
            MatchClass::Variation => 1,
            MatchClass::Neither => 2,
        }] += 1;
        a[3] += usize::from(r.zero_similarity);
    }
    acc.into_iter()
        .map(|(p, [o, v, n, z])| {
            let t = (o + v + n) as f64;
            AttributionSummary {
                producer: p.to_string(),
                n: o + v + n,
                pct_origin: 100.0 * o as f64 / t,
                pct_variation: 100.0 * v as f64 / t,
                pct_neither: 100.0 * n as f64 / t,
                n_zero_similarity: z,
            }
        })
        .collect()
}

impl AttributionSummary {
    pub fn write_csv<W: Write>(rows: &[AttributionSummary], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
