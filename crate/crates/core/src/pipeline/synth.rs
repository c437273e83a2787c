//! Seeded synthetic corpora with planted cultural distance.
//!
//! Every country gets a position on a line; the distance between two
//! countries is the gap between their positions. A variation draws each
//! token from its country's own vocabulary with a probability that grows
//! linearly with that distance, otherwise from the dish vocabulary.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prompts::{Template, KEYWORDS};
use crate::corpus::{Corpus, CountryLexicon, Dish, Iso, Recipe, Source};
use crate::distances::{Dimension, DistanceTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_dishes: usize,
    pub refs_per_dish: usize,
    pub variation_countries: usize,
    pub humans_per_country: usize,
    pub models: Vec<String>,
    /// Model recipes per model and country, origin included.
    pub model_recipes_per_country: usize,
    pub tokens_per_text: usize,
    /// Share of foreign tokens at distance 1.
    pub slope: f64,
    /// Extra foreign share for model recipes.
    pub model_shift: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_dishes: 500,
            refs_per_dish: 5,
            variation_countries: 3,
            humans_per_country: 1,
            models: vec!["synth-a".into(), "synth-b".into()],
            model_recipes_per_country: 4,
            tokens_per_text: 40,
            slope: 0.8,
            model_shift: 0.1,
        }
    }
}

const CONSONANTS: [char; 12] = ['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 't', 'z'];
const VOWELS: [char; 4] = ['a', 'i', 'o', 'u'];

fn word(rng: &mut ChaCha8Rng) -> String {
    (0..3)
        .flat_map(|_| {
            [
                *CONSONANTS.choose(rng).unwrap(),
                *VOWELS.choose(rng).unwrap(),
            ]
        })
        .collect()
}

fn vocab(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| word(rng)).collect()
}

/// Zipf-like pick: low indices are frequent.
fn pick<'a>(rng: &mut ChaCha8Rng, v: &'a [String]) -> &'a str {
    let u: f64 = rng.gen();
    &v[((u * u) * v.len() as f64) as usize % v.len()]
}

fn text(
    rng: &mut ChaCha8Rng,
    base: &[String],
    foreign: &[String],
    p_foreign: f64,
    n: usize,
) -> String {
    let mut out = String::new();
    for i in 0..n {
        let w = if rng.gen::<f64>() < p_foreign {
            pick(rng, foreign)
        } else {
            pick(rng, base)
        };
        if i % 8 == 0 {
            if i > 0 {
                out.push_str(". ");
            }
            let mut c = w.chars();
            out.extend(c.next().map(|f| f.to_ascii_uppercase()));
            out.push_str(c.as_str());
        } else {
            out.push(' ');
            out.push_str(w);
        }
    }
    out.push('.');
    out
}

/// A synthetic corpus and the distance table its divergences follow.
pub struct Synthetic {
    pub corpus: Corpus,
    pub distances: DistanceTable,
    /// Country position on the unit line.
    pub positions: BTreeMap<Iso, f64>,
}

pub fn synthesize(config: &SynthConfig, lexicon: &CountryLexicon) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let isos: Vec<Iso> = lexicon.countries().map(|c| c.iso_code.clone()).collect();
    let positions: BTreeMap<Iso, f64> =
        isos.iter().map(|i| (i.clone(), rng.gen::<f64>())).collect();
    let country_vocab: BTreeMap<Iso, Vec<String>> = isos
        .iter()
        .map(|i| (i.clone(), vocab(&mut rng, 30)))
        .collect();
    let mut slots: Vec<Option<&str>> = KEYWORDS.iter().map(|k| Some(*k)).collect();
    slots.push(None);

    let mut dishes = Vec::with_capacity(config.n_dishes);
    for d in 0..config.n_dishes {
        let dish_id = format!("dish{d:04}");
        let name = {
            let mut w = word(&mut rng);
            w[..1].make_ascii_uppercase();
            w
        };
        let chosen: Vec<&Iso> = isos
            .choose_multiple(&mut rng, config.variation_countries + 1)
            .collect();
        let origin = chosen[0].clone();
        let dish_vocab = vocab(&mut rng, 40);
        let mut n = 0usize;
        let recipe = |rng: &mut ChaCha8Rng,
                      country: &Iso,
                      source: Source,
                      model: Option<&str>,
                      p_foreign: f64,
                      n: &mut usize| {
            *n += 1;
            let foreign = &country_vocab[country];
            let slot = *n % slots.len();
            let template = Template::ALL[*n % Template::ALL.len()];
            let demonym = lexicon
                .get(country)
                .map(|c| c.demonym().to_string())
                .unwrap_or_default();
            Recipe {
                recipe_id: format!("{dish_id}-{n:03}"),
                dish_id: dish_id.clone(),
                country: country.clone(),
                source,
                model_name: model.map(str::to_string),
                keyword: model.map(|_| slots[slot].unwrap_or("").to_string()),
                template_id: model.map(|_| template.name().to_string()),
                title: format!("{demonym} {name}"),
                ingredients: (0..5)
                    .map(|i| format!("{} cups {}", i + 1, pick(rng, &dish_vocab)))
                    .collect(),
                instructions: text(rng, &dish_vocab, foreign, p_foreign, config.tokens_per_text),
            }
        };
        let references: Vec<Recipe> = (0..config.refs_per_dish)
            .map(|_| recipe(&mut rng, &origin, Source::HumanReference, None, 0.0, &mut n))
            .collect();
        let mut variations: BTreeMap<Iso, Vec<Recipe>> = BTreeMap::new();
        for (ci, country) in chosen.iter().enumerate() {
            let dist = (positions[*country] - positions[&origin]).abs();
            let p = (config.slope * dist).min(1.0);
            let mut list = Vec::new();
            if ci > 0 {
                for _ in 0..config.humans_per_country {
                    list.push(recipe(
                        &mut rng,
                        country,
                        Source::HumanVariation,
                        None,
                        p,
                        &mut n,
                    ));
                }
            }
            for m in &config.models {
                for _ in 0..config.model_recipes_per_country {
                    let pm = (p + config.model_shift).min(1.0);
                    list.push(recipe(
                        &mut rng,
                        country,
                        Source::ModelGenerated,
                        Some(m),
                        pm,
                        &mut n,
                    ));
                }
            }
            if !list.is_empty() {
                variations.insert((*country).clone(), list);
            }
        }
        dishes.push(Dish {
            dish_id,
            name,
            origin_country: origin,
            references,
            variations,
        });
    }

    let pairs: Vec<(String, String, f64)> = isos
        .iter()
        .enumerate()
        .flat_map(|(i, a)| isos[i + 1..].iter().map(move |b| (a, b)))
        .map(|(a, b)| (a.clone(), b.clone(), (positions[a] - positions[b]).abs()))
        .collect();
    Synthetic {
        corpus: Corpus::from_dishes(dishes),
        distances: DistanceTable::from_pairs(Dimension::Cultural, pairs)
            .expect("positions give a valid table"),
        positions,
    }
}
