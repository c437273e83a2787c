use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{
    preprocess, Corpus, KnowledgeSpace, PosTagger, Recipe, Source, Stage, TokenStream,
};
use crate::distances::stats::mean;
use crate::novelty::{score_text, Metric, NoveltyConfig, VariationText};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerTag {
    Embedding,
    Middle,
    Lm3,
    Lm2,
    Lm1,
}

impl LayerTag {
    pub const ALL: [LayerTag; 5] = [
        LayerTag::Embedding,
        LayerTag::Middle,
        LayerTag::Lm3,
        LayerTag::Lm2,
        LayerTag::Lm1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerTag::Embedding => "embedding",
            LayerTag::Middle => "middle",
            LayerTag::Lm3 => "lm3",
            LayerTag::Lm2 => "lm2",
            LayerTag::Lm1 => "lm1",
        }
    }
}

impl fmt::Display for LayerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Decoded tokens of one recipe at one depth of one model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub model_name: String,
    pub recipe_id: String,
    pub layer_tag: LayerTag,
    pub tokens: Vec<String>,
}

/// Parses and validates line-delimited layer records. Blank lines are
/// skipped; any malformed line is an error naming it.
pub fn read_layer_records<R: BufRead>(input: R) -> Result<Vec<LayerRecord>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io("<layers>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LayerRecord = serde_json::from_str(&line).map_err(|e| PipelineError::Layer {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.model_name.trim().is_empty() || rec.recipe_id.trim().is_empty() {
            return Err(PipelineError::Layer {
                line: i + 1,
                message: "model_name and recipe_id must be non-empty".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerConfig {
    /// Run the tagger and content filter over layer tokens. Off by default
    /// because subword tokens defeat the lemmatizer.
    pub preprocess: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamSide {
    Human,
    Model,
}

/// Mean divergence of origin recipes minus that of variation recipes for
/// one (lens model, layer, side, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGap {
    pub model_name: String,
    pub layer_tag: LayerTag,
    pub side: StreamSide,
    pub metric: Metric,
    pub n_origin: usize,
    pub n_variation: usize,
    pub mean_origin: Option<f64>,
    pub mean_variation: Option<f64>,
    pub gap: Option<f64>,
    /// Some dish lacked reference streams at this layer.
    pub incomplete: bool,
}

fn layer_stream(rec: &LayerRecord, config: &LayerConfig, tagger: &dyn PosTagger) -> TokenStream {
    let s = if config.preprocess {
        preprocess(&rec.tokens.join(" "), tagger)
    } else {
        let toks = rec
            .tokens
            .iter()
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect();
        TokenStream::new(toks, "", Stage::RawText)
    };
    s.with_source(rec.recipe_id.clone())
}

/// Layer-wise origin/variation gaps. Each layer stream is scored against the
/// same model's same-layer streams of its dish's reference recipes; a
/// reference itself is scored against the other references.
pub fn layer_gap_report(
    layers: &[LayerRecord],
    corpus: &Corpus,
    novelty: &NoveltyConfig,
    config: &LayerConfig,
    tagger: &dyn PosTagger,
) -> Result<Vec<LayerGap>, PipelineError> {
    let recipes: BTreeMap<&str, &Recipe> = corpus
        .recipes()
        .map(|r| (r.recipe_id.as_str(), r))
        .collect();
    let unknown: BTreeSet<&str> = layers
        .iter()
        .map(|l| l.recipe_id.as_str())
        .filter(|id| !recipes.contains_key(id))
        .collect();
    if !unknown.is_empty() {
        return Err(PipelineError::Layer {
            line: 0,
            message: format!("layer records name recipes missing from the corpus: {unknown:?}"),
        });
    }

    // (model, layer, dish) -> streams of references / other recipes.
    type Key<'a> = (&'a str, LayerTag, &'a str);
    let mut refs: BTreeMap<Key, Vec<TokenStream>> = BTreeMap::new();
    let mut others: BTreeMap<Key, Vec<(&Recipe, TokenStream)>> = BTreeMap::new();
    for l in layers {
        let r = recipes[l.recipe_id.as_str()];
        let key = (l.model_name.as_str(), l.layer_tag, r.dish_id.as_str());
        let s = layer_stream(l, config, tagger);
        if r.source == Source::HumanReference {
            refs.entry(key).or_default().push(s);
        } else {
            others.entry(key).or_default().push((r, s));
        }
    }

    // (model, layer, side) -> per metric (origin values, variation values), incomplete
    type Acc = (BTreeMap<Metric, (Vec<f64>, Vec<f64>)>, bool);
    let mut acc: BTreeMap<(&str, LayerTag, StreamSide), Acc> = BTreeMap::new();
    let mut push = |key, origin: bool, scores: &crate::novelty::Scores| {
        let e: &mut Acc = acc.entry(key).or_default();
        for m in Metric::ALL {
            let v = e.0.entry(m).or_default();
            if origin { &mut v.0 } else { &mut v.1 }.push(scores.metric(m));
        }
    };
    let mut incomplete: BTreeSet<(&str, LayerTag)> = BTreeSet::new();

    let keys: BTreeSet<Key> = refs.keys().chain(others.keys()).copied().collect();
    for key in keys {
        let (model, layer, dish_id) = key;
        let origin = &corpus
            .dish(dish_id)
            .expect("recipe dish exists")
            .origin_country;
        let ref_streams: Vec<TokenStream> = refs.get(&key).cloned().unwrap_or_default();
        let ks = KnowledgeSpace::from_streams(
            dish_id,
            origin,
            Source::HumanReference,
            ref_streams.clone(),
            novelty.window,
        );
        let Ok(ks) = ks else {
            incomplete.insert((model, layer));
            continue;
        };
        let th = novelty.thresholds(&ks);
        for (r, s) in others.get(&key).into_iter().flatten() {
            let side = if r.source == Source::ModelGenerated {
                StreamSide::Model
            } else {
                StreamSide::Human
            };
            if let Ok(sc) = VariationText::single(s.clone(), ks.window)
                .and_then(|v| score_text(&ks, &v, &th, novelty.disappearance_norm))
            {
                push((model, layer, side), r.country == *origin, &sc);
            }
        }
        let nonempty: Vec<&TokenStream> = ref_streams.iter().filter(|s| !s.is_empty()).collect();
        if nonempty.len() > 1 {
            for i in 0..nonempty.len() {
                let rest: Vec<TokenStream> = nonempty
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, s)| (*s).clone())
                    .collect();
                let Ok(held) = KnowledgeSpace::from_streams(
                    dish_id,
                    origin,
                    Source::HumanReference,
                    rest,
                    novelty.window,
                ) else {
                    continue;
                };
                let th = novelty.thresholds(&held);
                if let Ok(sc) = VariationText::single(nonempty[i].clone(), held.window)
                    .and_then(|v| score_text(&held, &v, &th, novelty.disappearance_norm))
                {
                    push((model, layer, StreamSide::Human), true, &sc);
                }
            }
        }
    }

    let mut cells: BTreeSet<(&str, LayerTag, StreamSide)> = acc.keys().copied().collect();
    for (m, l) in &incomplete {
        for side in [StreamSide::Human, StreamSide::Model] {
            cells.insert((m, *l, side));
        }
    }
    let mut out = Vec::new();
    for (model, layer, side) in cells {
        let entry = acc.get(&(model, layer, side));
        for metric in Metric::ALL {
            let (o, v) = entry
                .and_then(|e| e.0.get(&metric))
                .cloned()
                .unwrap_or_default();
            let mo = (!o.is_empty()).then(|| mean(&o));
            let mv = (!v.is_empty()).then(|| mean(&v));
            out.push(LayerGap {
                model_name: model.to_string(),
                layer_tag: layer,
                side,
                metric,
                n_origin: o.len(),
                n_variation: v.len(),
                mean_origin: mo,
                mean_variation: mv,
                gap: mo.zip(mv).map(|(a, b)| a - b),
                incomplete: incomplete.contains(&(model, layer)),
            });
        }
    }
    Ok(out)
}
