use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, median, pearson, CorrelationFlag};
use super::{Dimension, DistanceTable};
use crate::corpus::{Corpus, Iso};
use crate::novelty::{Metric, MetricRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            _ => Err(format!("unknown aggregation `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// One correlation per producer (`human` or a model name).
    #[default]
    Model,
    Pooled,
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model" => Ok(GroupBy::Model),
            "pooled" => Ok(GroupBy::Pooled),
            _ => Err(format!("unknown grouping `{s}`")),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Model => "model",
            GroupBy::Pooled => "pooled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelationConfig {
    pub aggregation: Aggregation,
    pub group_by: GroupBy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub group: String,
    pub metric: Metric,
    pub dimension: Dimension,
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub flag: Option<CorrelationFlag>,
}

/// What was left out of a correlation and why.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub records_total: usize,
    pub records_used: usize,
    pub degenerate_excluded: usize,
    pub unknown_dish: usize,
    /// (origin, variation) pairs absent from the table.
    pub missing_pairs: BTreeSet<(Iso, Iso)>,
    pub records_missing_pair: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub results: Vec<CorrelationResult>,
    pub coverage: Coverage,
}

impl CorrelationReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_results_csv(&self.results, out)
    }
}

pub fn write_results_csv<W: Write>(results: &[CorrelationResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "metric", "dimension", "r", "p_value", "n", "flag"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        let flag = match r.flag {
            Some(CorrelationFlag::TooFewPairs) => "too_few_pairs",
            Some(CorrelationFlag::ZeroVariance) => "zero_variance",
            None => "",
        };
        w.write_record([
            r.group.as_str(),
            r.metric.name(),
            r.dimension.name(),
            &opt(r.r),
            &opt(r.p_value),
            &r.n.to_string(),
            flag,
        ])?;
    }
    w.flush()?;
    Ok(())
}

type Cell = (String, Iso);
type CellMap<'a> = BTreeMap<Cell, (f64, Vec<&'a MetricRecord>)>;

/// Pearson correlation between each metric and the (origin, variation)
/// distance, one value per (dish, variation country) cell.
pub fn correlate(
    records: &[MetricRecord],
    corpus: &Corpus,
    table: &DistanceTable,
    config: &CorrelationConfig,
) -> CorrelationReport {
    let mut coverage = Coverage {
        records_total: records.len(),
        ..Coverage::default()
    };
    // group -> cell -> (distance, records)
    let mut groups: BTreeMap<String, BTreeMap<Cell, (f64, Vec<&MetricRecord>)>> = BTreeMap::new();
    for rec in records {
        if rec.degenerate {
            coverage.degenerate_excluded += 1;
            continue;
        }
        let Some(dish) = corpus.dish(&rec.dish_id) else {
            coverage.unknown_dish += 1;
            continue;
        };
        let Some(d) = table.get(&dish.origin_country, &rec.variation_country) else {
            coverage
                .missing_pairs
                .insert((dish.origin_country.clone(), rec.variation_country.clone()));
            coverage.records_missing_pair += 1;
            continue;
        };
        coverage.records_used += 1;
        let group = match config.group_by {
            GroupBy::Model => rec.producer().to_string(),
            GroupBy::Pooled => "pooled".to_string(),
        };
        groups
            .entry(group)
            .or_default()
            .entry((rec.dish_id.clone(), rec.variation_country.clone()))
            .or_insert_with(|| (d, Vec::new()))
            .1
            .push(rec);
    }

    let jobs: Vec<(&String, &CellMap, Metric)> = groups
        .iter()
        .flat_map(|(g, cells)| Metric::ALL.into_iter().map(move |m| (g, cells, m)))
        .collect();
    let results = jobs
        .into_par_iter()
        .map(|(group, cells, metric)| {
            let mut x = Vec::with_capacity(cells.len());
            let mut y = Vec::with_capacity(cells.len());
            for (d, recs) in cells.values() {
                let vals: Vec<f64> = recs.iter().map(|r| r.metric(metric)).collect();
                x.push(*d);
                y.push(match config.aggregation {
                    Aggregation::Mean => mean(&vals),
                    Aggregation::Median => median(&vals),
                });
            }
            let p = pearson(&x, &y);
            CorrelationResult {
                group: group.clone(),
                metric,
                dimension: table.dimension(),
                r: p.r,
                p_value: p.p_value,
                n: p.n,
                flag: p.flag,
            }
        })
        .collect();
    CorrelationReport { results, coverage }
}
