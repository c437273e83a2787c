use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::prompts::{KEYWORDS, TRADITIONAL_KEYWORDS};
use crate::corpus::{Corpus, Iso, Source};
use crate::distances::stats::{mean, welch_t_test};
use crate::novelty::{Metric, MetricRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncreaseMode {
    /// Cells whose country is the dish origin.
    Origin,
    /// Cells of variation countries.
    PairedVariation,
}

impl FromStr for IncreaseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "origin" => Ok(IncreaseMode::Origin),
            "paired-variation" | "paired_variation" | "variation" => {
                Ok(IncreaseMode::PairedVariation)
            }
            _ => Err(format!("unknown increase mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreaseRate {
    pub model_name: String,
    pub metric: Metric,
    /// Mean relative increase over matched cells; `None` when no cell is
    /// usable.
    pub rate: Option<f64>,
    pub n_cells: usize,
    /// Matched cells left out because the human value is 0.
    pub n_zero_human: usize,
}

type Cell = (String, Iso);

fn cell_means<'a>(
    records: impl Iterator<Item = &'a MetricRecord>,
    metric: Metric,
) -> BTreeMap<Cell, f64> {
    let mut acc: BTreeMap<Cell, Vec<f64>> = BTreeMap::new();
    for r in records {
        acc.entry((r.dish_id.clone(), r.variation_country.clone()))
            .or_default()
            .push(r.metric(metric));
    }
    acc.into_iter().map(|(k, v)| (k, mean(&v))).collect()
}

/// Relative excess of each model over humans, matched on (dish, country)
/// cells: mean of `(model - human) / human`. Degenerate records are left
/// out on both sides.
pub fn increase_rates(
    human: &[MetricRecord],
    model: &[MetricRecord],
    corpus: &Corpus,
    mode: IncreaseMode,
) -> Vec<IncreaseRate> {
    let keep = |r: &&MetricRecord| {
        let origin = corpus.dish(&r.dish_id).map(|d| d.origin_country.as_str());
        let is_origin = origin == Some(r.variation_country.as_str());
        !r.degenerate
            && origin.is_some()
            && match mode {
                IncreaseMode::Origin => is_origin,
                IncreaseMode::PairedVariation => !is_origin,
            }
    };
    let mut by_model: BTreeMap<&str, Vec<&MetricRecord>> = BTreeMap::new();
    for r in model.iter().filter(keep) {
        by_model.entry(r.producer()).or_default().push(r);
    }
    let mut out = Vec::new();
    for metric in Metric::ALL {
        let h = cell_means(human.iter().filter(keep), metric);
        for (name, recs) in &by_model {
            let m = cell_means(recs.iter().copied(), metric);
            let mut ratios = Vec::new();
            let mut zero = 0;
            for (cell, mv) in &m {
                match h.get(cell) {
                    Some(&0.0) => zero += 1,
                    Some(&hv) => ratios.push((mv - hv) / hv),
                    None => {}
                }
            }
            out.push(IncreaseRate {
                model_name: name.to_string(),
                metric,
                rate: (!ratios.is_empty()).then(|| mean(&ratios)),
                n_cells: ratios.len(),
                n_zero_human: zero,
            });
        }
    }
    out.sort_by(|a, b| {
        a.model_name
            .cmp(&b.model_name)
            .then(a.metric.cmp(&b.metric))
    });
    out
}

/// Splits records into human and model-generated.
pub fn split_by_source(records: &[MetricRecord]) -> (Vec<MetricRecord>, Vec<MetricRecord>) {
    records
        .iter()
        .cloned()
        .partition(|r| r.source != Source::ModelGenerated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordGrouping {
    /// Creative keywords against traditional ones.
    TraditionalVsCreative,
    /// Mean per keyword.
    PerKeyword,
}

impl FromStr for KeywordGrouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "groups" | "traditional-vs-creative" => Ok(KeywordGrouping::TraditionalVsCreative),
            "per-keyword" | "keyword" => Ok(KeywordGrouping::PerKeyword),
            _ => Err(format!("unknown keyword grouping `{s}`")),
        }
    }
}

/// Gap between two keyword groups for one model and metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordGap {
    pub model_name: String,
    pub metric: Metric,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    /// `mean_a - mean_b`.
    pub gap: Option<f64>,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn creative_keywords() -> Vec<&'static str> {
    KEYWORDS
        .into_iter()
        .filter(|k| !TRADITIONAL_KEYWORDS.contains(k))
        .collect()
}

fn norm_kw(k: &str) -> String {
    k.trim().to_lowercase()
}

/// Welch gap `group_a - group_b` per model and metric over model-generated
/// records whose keyword falls in either group.
pub fn keyword_gaps(
    records: &[MetricRecord],
    group_a: &[&str],
    group_b: &[&str],
) -> Vec<KeywordGap> {
    let a: Vec<String> = group_a.iter().map(|k| norm_kw(k)).collect();
    let b: Vec<String> = group_b.iter().map(|k| norm_kw(k)).collect();
    let mut by_model: BTreeMap<&str, (Vec<&MetricRecord>, Vec<&MetricRecord>)> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.source == Source::ModelGenerated && !r.degenerate)
    {
        let Some(k) = r.keyword.as_deref().map(norm_kw) else {
            continue;
        };
        let e = by_model.entry(r.producer()).or_default();
        if a.contains(&k) {
            e.0.push(r);
        } else if b.contains(&k) {
            e.1.push(r);
        }
    }
    let mut out = Vec::new();
    for (model, (ra, rb)) in by_model {
        for metric in Metric::ALL {
            let xa: Vec<f64> = ra.iter().map(|r| r.metric(metric)).collect();
            let xb: Vec<f64> = rb.iter().map(|r| r.metric(metric)).collect();
            let w = welch_t_test(&xa, &xb);
            let ma = (!xa.is_empty()).then(|| mean(&xa));
            let mb = (!xb.is_empty()).then(|| mean(&xb));
            out.push(KeywordGap {
                model_name: model.to_string(),
                metric,
                n_a: xa.len(),
                n_b: xb.len(),
                mean_a: ma,
                mean_b: mb,
                gap: ma.zip(mb).map(|(x, y)| x - y),
                t: w.map(|w| w.t),
                df: w.map(|w| w.df),
                p_value: w.map(|w| w.p_value),
            });
        }
    }
    out
}

/// Mean metric per (model, keyword).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordMean {
    pub model_name: String,
    pub keyword: String,
    pub n: usize,
    pub newness: f64,
    pub uniqueness: f64,
    pub difference: f64,
    pub new_surprise: f64,
    pub divergent_surprise: f64,
}

pub fn per_keyword_means(records: &[MetricRecord]) -> Vec<KeywordMean> {
    let mut acc: BTreeMap<(&str, String), Vec<&MetricRecord>> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.source == Source::ModelGenerated && !r.degenerate)
    {
        if let Some(k) = r.keyword.as_deref() {
            acc.entry((r.producer(), norm_kw(k))).or_default().push(r);
        }
    }
    acc.into_iter()
        .map(|((m, k), rs)| {
            let avg =
                |metric: Metric| mean(&rs.iter().map(|r| r.metric(metric)).collect::<Vec<_>>());
            KeywordMean {
                model_name: m.to_string(),
                keyword: k,
                n: rs.len(),
                newness: avg(Metric::Newness),
                uniqueness: avg(Metric::Uniqueness),
                difference: avg(Metric::Difference),
                new_surprise: avg(Metric::NewSurprise),
                divergent_surprise: avg(Metric::DivergentSurprise),
            }
        })
        .collect()
}

pub fn write_csv_rows<W: Write, T: Serialize>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
