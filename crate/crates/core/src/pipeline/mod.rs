//! End-to-end stages: prompt emission, corpus scoring, comparative reports
//! and the layer-wise analysis.

use std::path::Path;

use thiserror::Error;

use crate::corpus::CorpusError;

pub mod config;
pub mod layers;
pub mod prompts;
pub mod reports;
pub mod score;
pub mod synth;

pub use config::{Config, IngredientConfig};
pub use layers::{
    layer_gap_report, read_layer_records, LayerConfig, LayerGap, LayerRecord, LayerTag, StreamSide,
};
pub use prompts::{
    emit_prompts, render, write_prompts_jsonl, CountryMode, PromptConfig, PromptSpec, Template,
    KEYWORDS, TRADITIONAL_KEYWORDS,
};
pub use reports::{
    creative_keywords, increase_rates, keyword_gaps, per_keyword_means, split_by_source,
    write_csv_rows, IncreaseMode, IncreaseRate, KeywordGap, KeywordGrouping, KeywordMean,
};
pub use score::{
    load_records, read_records_csv, score_corpus, score_corpus_to_csv, score_dish,
    write_records_csv, DishScores, ScoreConfig, ScoreIssue, ScoreRun,
};
pub use synth::{synthesize, SynthConfig, Synthetic};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("config: {0}")]
    Config(String),
    #[error("layer records, line {line}: {message}")]
    Layer { line: usize, message: String },
}

impl PipelineError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
