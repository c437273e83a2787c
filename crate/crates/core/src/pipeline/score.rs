use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{preprocess, Corpus, Dish, KnowledgeSpace, PosTagger, Source, TokenStream};
use crate::novelty::{score_text, MetricRecord, NoveltyConfig, VariationText};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Also score each reference recipe against the other references of
    /// its dish, giving a human baseline for the origin country.
    pub score_references: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            score_references: true,
        }
    }
}

/// A recipe or dish that could not be scored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreIssue {
    pub dish_id: String,
    pub recipe_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DishScores {
    pub records: Vec<MetricRecord>,
    pub issues: Vec<ScoreIssue>,
}

/// Scores every non-reference recipe of a dish against its origin
/// community, plus leave-one-out scores of the references when enabled.
pub fn score_dish(
    dish: &Dish,
    novelty: &NoveltyConfig,
    config: &ScoreConfig,
    tagger: &dyn PosTagger,
) -> DishScores {
    let mut out = DishScores::default();
    let issue = |recipe_id: Option<&str>, message: String| ScoreIssue {
        dish_id: dish.dish_id.clone(),
        recipe_id: recipe_id.map(str::to_string),
        message,
    };
    let refs: Vec<TokenStream> = dish
        .references
        .iter()
        .map(|r| preprocess(&r.instructions, tagger).with_source(r.recipe_id.clone()))
        .collect();
    let ks = match KnowledgeSpace::from_streams(
        &dish.dish_id,
        &dish.origin_country,
        Source::HumanReference,
        refs.clone(),
        novelty.window,
    ) {
        Ok(ks) => ks,
        Err(e) => {
            out.issues.push(issue(None, e.to_string()));
            return out;
        }
    };
    let th = novelty.thresholds(&ks);

    for r in dish.non_reference() {
        let stream = preprocess(&r.instructions, tagger).with_source(r.recipe_id.clone());
        let scored = VariationText::single(stream, ks.window)
            .and_then(|v| score_text(&ks, &v, &th, novelty.disappearance_norm));
        match scored {
            Ok(s) => out.records.push(MetricRecord::from_scores(r, &th, &s)),
            Err(e) => out.issues.push(issue(Some(&r.recipe_id), e.to_string())),
        }
    }

    if config.score_references && refs.iter().filter(|s| !s.is_empty()).count() > 1 {
        for (i, r) in dish.references.iter().enumerate() {
            if refs[i].is_empty() {
                out.issues
                    .push(issue(Some(&r.recipe_id), "reference has no tokens".into()));
                continue;
            }
            let rest: Vec<TokenStream> = refs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, s)| s.clone())
                .collect();
            let held = KnowledgeSpace::from_streams(
                &dish.dish_id,
                &dish.origin_country,
                Source::HumanReference,
                rest,
                novelty.window,
            );
            let scored = held.map_err(|e| e.to_string()).and_then(|ks| {
                let th = novelty.thresholds(&ks);
                VariationText::single(refs[i].clone(), ks.window)
                    .and_then(|v| score_text(&ks, &v, &th, novelty.disappearance_norm))
                    .map(|s| MetricRecord::from_scores(r, &th, &s))
                    .map_err(|e| e.to_string())
            });
            match scored {
                Ok(rec) => out.records.push(rec),
                Err(m) => out.issues.push(issue(Some(&r.recipe_id), m)),
            }
        }
    }
    out
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))
}

/// Scores the whole corpus in memory. Output order is dish order, then
/// recipe order within the dish, whatever `jobs` is.
pub fn score_corpus(
    corpus: &Corpus,
    novelty: &NoveltyConfig,
    config: &ScoreConfig,
    tagger: &dyn PosTagger,
    jobs: usize,
) -> Result<DishScores, PipelineError> {
    let dishes: Vec<&Dish> = corpus.dishes().collect();
    let per_dish: Vec<DishScores> = pool(jobs)?.install(|| {
        dishes
            .par_iter()
            .map(|d| score_dish(d, novelty, config, tagger))
            .collect()
    });
    let mut out = DishScores::default();
    for d in per_dish {
        out.records.extend(d.records);
        out.issues.extend(d.issues);
    }
    Ok(out)
}

/// Summary of a streamed scoring run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreRun {
    pub dishes_scored: usize,
    pub dishes_skipped: usize,
    pub records_written: usize,
    pub issues: Vec<ScoreIssue>,
}

fn read_manifest(path: &Path) -> Result<Vec<(String, u64)>, PipelineError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(PipelineError::io(path, e)),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        // A torn last line from an interrupted run is ignored.
        let Some((dish, off)) = line.split_once('\t') else {
            break;
        };
        let Ok(off) = off.trim().parse::<u64>() else {
            break;
        };
        out.push((dish.to_string(), off));
    }
    Ok(out)
}

/// Streams metric records as CSV to `out_path`, dish by dish in dish order.
/// After each dish the manifest gets a `dish_id<TAB>byte_offset` line.
/// With `resume`, dishes already in the manifest are skipped and the output
/// is truncated to the last recorded offset before appending.
#[allow(clippy::too_many_arguments)]
pub fn score_corpus_to_csv(
    corpus: &Corpus,
    novelty: &NoveltyConfig,
    config: &ScoreConfig,
    tagger: &dyn PosTagger,
    jobs: usize,
    out_path: &Path,
    manifest_path: &Path,
    resume: bool,
) -> Result<ScoreRun, PipelineError> {
    let done = if resume {
        read_manifest(manifest_path)?
    } else {
        Vec::new()
    };
    let done_ids: BTreeSet<&str> = done.iter().map(|(d, _)| d.as_str()).collect();
    let start = done.last().map_or(0, |(_, o)| *o);

    let mut out = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(false)
        .open(out_path)
        .map_err(|e| PipelineError::io(out_path, e))?;
    let len = out
        .metadata()
        .map_err(|e| PipelineError::io(out_path, e))?
        .len();
    if len < start {
        return Err(PipelineError::Manifest(format!(
            "output is {len} bytes but the manifest expects at least {start}"
        )));
    }
    out.set_len(start)
        .map_err(|e| PipelineError::io(out_path, e))?;
    out.seek(SeekFrom::Start(start))
        .map_err(|e| PipelineError::io(out_path, e))?;
    let mut manifest =
        File::create(manifest_path).map_err(|e| PipelineError::io(manifest_path, e))?;
    // Rewritten without a possibly torn tail.
    for (d, o) in &done {
        writeln!(manifest, "{d}\t{o}").map_err(|e| PipelineError::io(manifest_path, e))?;
    }
    let mut offset = start;
    if start == 0 {
        let mut header = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut header);
            w.write_record(MetricRecord::COLUMNS)?;
            w.flush().map_err(|e| PipelineError::io(out_path, e))?;
        }
        out.write_all(&header)
            .map_err(|e| PipelineError::io(out_path, e))?;
        offset += header.len() as u64;
    }

    let todo: Vec<&Dish> = corpus
        .dishes()
        .filter(|d| !done_ids.contains(d.dish_id.as_str()))
        .collect();
    let mut run = ScoreRun {
        dishes_skipped: corpus.len() - todo.len(),
        ..ScoreRun::default()
    };
    let pool = pool(jobs)?;
    let chunk = (jobs.max(1) * 8).max(16);
    for batch in todo.chunks(chunk) {
        let scored: Vec<DishScores> = pool.install(|| {
            batch
                .par_iter()
                .map(|d| score_dish(d, novelty, config, tagger))
                .collect()
        });
        for (dish, s) in batch.iter().zip(scored) {
            let mut buf = Vec::new();
            {
                let mut w = csv::WriterBuilder::new()
                    .has_headers(false)
                    .from_writer(&mut buf);
                for r in &s.records {
                    w.serialize(r)?;
                }
                w.flush().map_err(|e| PipelineError::io(out_path, e))?;
            }
            out.write_all(&buf)
                .map_err(|e| PipelineError::io(out_path, e))?;
            out.flush().map_err(|e| PipelineError::io(out_path, e))?;
            offset += buf.len() as u64;
            writeln!(manifest, "{}\t{offset}", dish.dish_id)
                .map_err(|e| PipelineError::io(manifest_path, e))?;
            run.dishes_scored += 1;
            run.records_written += s.records.len();
            run.issues.extend(s.issues);
        }
    }
    manifest
        .flush()
        .map_err(|e| PipelineError::io(manifest_path, e))?;
    Ok(run)
}

/// Reads metric records written by [`score_corpus_to_csv`] or
/// [`write_records_csv`].
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<MetricRecord>, PipelineError> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .collect::<Result<Vec<MetricRecord>, _>>()
        .map_err(PipelineError::from)
}

pub fn load_records(path: &Path) -> Result<Vec<MetricRecord>, PipelineError> {
    read_records_csv(File::open(path).map_err(|e| PipelineError::io(path, e))?)
}

pub fn write_records_csv<W: Write>(records: &[MetricRecord], out: W) -> Result<(), PipelineError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(MetricRecord::COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| PipelineError::Io {
        path: "<output>".into(),
        source: e,
    })
}
