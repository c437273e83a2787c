use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cultnov::corpus::{load_corpus, Corpus, CountryLexicon, Recipe, RuleTagger, Source};
use cultnov::distances::{
    correlate, cultural_distance, geographic_distance, load_coordinates, load_distance_table,
    Aggregation, CoordinateKind, Dimension, DistanceTable, GroupBy,
};
use cultnov::ingredients::{
    attribute, attribution_summary, country_profiles, mismatch_report, overlap_report,
    top_ingredients, write_overlap_csv, write_top_csv, AttributionSummary, MatchKey,
};
use cultnov::novelty::MetricRecord;
use cultnov::pipeline::{
    creative_keywords, emit_prompts, increase_rates, keyword_gaps, layer_gap_report, load_records,
    per_keyword_means, read_layer_records, score_corpus_to_csv, split_by_source, synthesize,
    write_csv_rows, write_prompts_jsonl, Config, IncreaseMode, KeywordGrouping,
    TRADITIONAL_KEYWORDS,
};
use cultnov::quality::{quality_stats, write_quality_csv, StopwordDetector};

/// Cultural novelty analytics for paired human and model recipe corpora.
#[derive(Parser)]
#[command(name = "cultnov", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for synthetic fixtures. The analysis itself is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Country lexicon CSV (iso,name,region,demonyms) replacing the bundled one.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusIn {
    /// Corpus file, one recipe per line as JSON.
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Args)]
struct Out {
    /// Output file; `-` writes to stdout.
    #[arg(long, short, default_value = "-")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and write it back in canonical form.
    Ingest {
        #[command(flatten)]
        input: CorpusIn,
        #[command(flatten)]
        out: Out,
        /// Where to write the load report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a seeded synthetic corpus and its distance table.
    Synth {
        #[command(flatten)]
        out: Out,
        /// Distance table output (CSV).
        #[arg(long)]
        distances: Option<PathBuf>,
        #[arg(long)]
        dishes: Option<usize>,
    },
    /// Emit generation prompts for every (dish, country) cell.
    Prompts {
        #[command(flatten)]
        input: CorpusIn,
        #[command(flatten)]
        out: Out,
    },
    /// Score every recipe against its dish's reference community.
    Score {
        #[command(flatten)]
        input: CorpusIn,
        /// Metric CSV output.
        #[arg(long, short)]
        out: PathBuf,
        /// Progress manifest (default: <out>.manifest).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Continue an interrupted run.
        #[arg(long)]
        resume: bool,
    },
    /// Generation quality table per producer.
    Quality {
        #[command(flatten)]
        input: CorpusIn,
        #[command(flatten)]
        out: Out,
    },
    /// Correlate metrics with a country distance.
    Correlate {
        #[command(flatten)]
        input: CorpusIn,
        /// Metric CSV written by `score`.
        #[arg(long)]
        scores: PathBuf,
        #[command(flatten)]
        distance: DistanceIn,
        #[arg(long)]
        aggregation: Option<Aggregation>,
        #[arg(long)]
        group_by: Option<GroupBy>,
        #[command(flatten)]
        out: Out,
    },
    /// Ingredient overlap and preservation per producer and region.
    Ingredients {
        #[command(flatten)]
        input: CorpusIn,
        #[command(flatten)]
        out: Out,
        /// Also write the most frequent ingredients per producer here.
        #[arg(long)]
        top: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        match_key: Option<MatchKey>,
    },
    /// TF-IDF country attribution of recipe ingredients.
    Attribution {
        #[command(flatten)]
        input: CorpusIn,
        #[command(flatten)]
        out: Out,
        /// Per-recipe records (JSON lines).
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Countries named in titles against the requested country.
    Mismatch {
        #[command(flatten)]
        input: CorpusIn,
        #[command(flatten)]
        out: Out,
        /// Region confusion counts (CSV).
        #[arg(long)]
        region_pairs: Option<PathBuf>,
    },
    /// Relative divergence increase of each model over humans.
    Increase {
        #[command(flatten)]
        input: CorpusIn,
        /// Metric CSV written by `score`.
        #[arg(long)]
        scores: PathBuf,
        /// origin or paired-variation
        #[arg(long, default_value = "paired-variation")]
        mode: IncreaseMode,
        #[command(flatten)]
        out: Out,
    },
    /// Creative against traditional keyword gaps, or per-keyword means.
    Keywords {
        /// Metric CSV written by `score`.
        #[arg(long)]
        scores: PathBuf,
        /// groups or per-keyword
        #[arg(long, default_value = "groups")]
        grouping: KeywordGrouping,
        #[command(flatten)]
        out: Out,
    },
    /// Origin/variation gaps over exported layer streams.
    Layers {
        #[command(flatten)]
        input: CorpusIn,
        /// Layer records, one JSON object per line.
        #[arg(long)]
        layers: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Every report table from a corpus and its scores, into one directory.
    Report {
        #[command(flatten)]
        input: CorpusIn,
        /// Metric CSV written by `score`.
        #[arg(long)]
        scores: PathBuf,
        #[command(flatten)]
        distance: DistanceIn,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct DistanceIn {
    /// Distance table CSV (iso_a,iso_b,distance; header optional).
    #[arg(long)]
    distances: Option<PathBuf>,
    /// Country coordinates CSV; map coordinates give cultural distance,
    /// lat/lon give geographic distance.
    #[arg(long, conflicts_with = "distances")]
    coordinates: Option<PathBuf>,
    #[arg(long, default_value = "cultural")]
    dimension: Dimension,
}

impl DistanceIn {
    fn given(&self) -> bool {
        self.distances.is_some() || self.coordinates.is_some()
    }

    fn load(&self) -> Result<DistanceTable> {
        if let Some(p) = &self.distances {
            return load_distance_table(p, self.dimension)
                .with_context(|| format!("loading {}", p.display()));
        }
        let Some(p) = &self.coordinates else {
            bail!("one of --distances or --coordinates is required");
        };
        let default = if self.dimension == Dimension::Geographic {
            CoordinateKind::LatLon
        } else {
            CoordinateKind::Map
        };
        let coords =
            load_coordinates(p, default).with_context(|| format!("loading {}", p.display()))?;
        Ok(match coords.kind {
            CoordinateKind::Map => cultural_distance(&coords),
            CoordinateKind::LatLon => geographic_distance(&coords),
        })
    }
}

fn writer(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}

struct Ctx {
    config: Config,
    jobs: usize,
    lexicon: CountryLexicon,
    tagger: RuleTagger,
}

impl Ctx {
    fn corpus(&self, input: &CorpusIn) -> Result<Corpus> {
        let corpus = load_corpus(&input.corpus, &self.lexicon)
            .with_context(|| format!("loading {}", input.corpus.display()))?;
        if !corpus.report.issues.is_empty() {
            eprintln!(
                "{}: skipped {} of {} records (run `ingest --report` for details)",
                input.corpus.display(),
                corpus.report.issues.len(),
                corpus.report.lines_read
            );
        }
        Ok(corpus)
    }

    fn records(&self, path: &Path) -> Result<Vec<MetricRecord>> {
        load_records(path).with_context(|| format!("loading {}", path.display()))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.synth.seed = s;
    }
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let lexicon = match &cli.lexicon {
        Some(p) => CountryLexicon::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => CountryLexicon::bundled(),
    };
    let ctx = Ctx {
        config,
        jobs,
        lexicon,
        tagger: RuleTagger::new(),
    };
    rayon_threads(jobs);
    match run(cli.command, &ctx) {
        // A closed stdout (`| head`) is not a failure.
        Err(e) if is_broken_pipe(&e) => Ok(()),
        r => r,
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<io::Error>())
        .any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

// Stages without their own pool use the global one.
fn rayon_threads(jobs: usize) {
    std::env::set_var("RAYON_NUM_THREADS", jobs.to_string());
}

fn run(command: Command, ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.config;
    match command {
        Command::Ingest { input, out, report } => {
            let corpus = ctx.corpus(&input)?;
            corpus.write_jsonl(writer(&out.out)?)?;
            if let Some(p) = report {
                let mut w = writer(&p)?;
                serde_json::to_writer_pretty(&mut w, &corpus.report)?;
                writeln!(w)?;
            }
            eprintln!(
                "{} dishes, {} recipes, {} records skipped",
                corpus.len(),
                corpus.n_recipes(),
                corpus.report.issues.len()
            );
        }
        Command::Synth {
            out,
            distances,
            dishes,
        } => {
            let mut sc = cfg.synth.clone();
            if let Some(n) = dishes {
                sc.n_dishes = n;
            }
            let syn = synthesize(&sc, &ctx.lexicon);
            syn.corpus.write_jsonl(writer(&out.out)?)?;
            if let Some(p) = distances {
                syn.distances.write_csv(writer(&p)?)?;
            }
        }
        Command::Prompts { input, out } => {
            let corpus = ctx.corpus(&input)?;
            let prompts = emit_prompts(&corpus, &ctx.lexicon, &cfg.prompts);
            write_prompts_jsonl(&prompts, writer(&out.out)?)?;
        }
        Command::Score {
            input,
            out,
            manifest,
            resume,
        } => {
            let corpus = ctx.corpus(&input)?;
            let manifest = manifest.unwrap_or_else(|| {
                let mut s = out.clone().into_os_string();
                s.push(".manifest");
                s.into()
            });
            let run = score_corpus_to_csv(
                &corpus,
                &cfg.novelty,
                &cfg.score,
                &ctx.tagger,
                ctx.jobs,
                &out,
                &manifest,
                resume,
            )?;
            for i in &run.issues {
                eprintln!(
                    "{} {}: {}",
                    i.dish_id,
                    i.recipe_id.as_deref().unwrap_or("-"),
                    i.message
                );
            }
            eprintln!(
                "scored {} dishes ({} skipped), {} records, {} issues",
                run.dishes_scored,
                run.dishes_skipped,
                run.records_written,
                run.issues.len()
            );
        }
        Command::Quality { input, out } => {
            let corpus = ctx.corpus(&input)?;
            write_quality_csv(&quality(&corpus, ctx), writer(&out.out)?)?;
        }
        Command::Correlate {
            input,
            scores,
            distance,
            aggregation,
            group_by,
            out,
        } => {
            let corpus = ctx.corpus(&input)?;
            let mut cc = cfg.correlate;
            cc.aggregation = aggregation.unwrap_or(cc.aggregation);
            cc.group_by = group_by.unwrap_or(cc.group_by);
            let report = correlate(&ctx.records(&scores)?, &corpus, &distance.load()?, &cc);
            report.write_csv(writer(&out.out)?)?;
            eprintln!("{}", serde_json::to_string(&report.coverage)?);
        }
        Command::Ingredients {
            input,
            out,
            top,
            top_k,
            match_key,
        } => {
            let corpus = ctx.corpus(&input)?;
            let key = match_key.unwrap_or(cfg.ingredients.match_key);
            let rows = overlap_report(corpus.dishes(), &ctx.lexicon, &ctx.tagger, key);
            write_overlap_csv(&rows, writer(&out.out)?)?;
            if let Some(p) = top {
                write_top(&corpus, top_k.unwrap_or(cfg.ingredients.top_k), ctx, &p)?;
            }
        }
        Command::Attribution {
            input,
            out,
            records,
        } => {
            let corpus = ctx.corpus(&input)?;
            let (summary, recs) = attribution(&corpus, ctx);
            AttributionSummary::write_csv(&summary, writer(&out.out)?)?;
            if let Some(p) = records {
                let mut w = writer(&p)?;
                for r in &recs {
                    serde_json::to_writer(&mut w, r)?;
                    writeln!(w)?;
                }
            }
        }
        Command::Mismatch {
            input,
            out,
            region_pairs,
        } => {
            let corpus = ctx.corpus(&input)?;
            let report = mismatch_report(non_reference(&corpus), &corpus, &ctx.lexicon);
            report.write_summary_csv(writer(&out.out)?)?;
            if let Some(p) = region_pairs {
                report.write_region_pairs_csv(writer(&p)?)?;
            }
        }
        Command::Increase {
            input,
            scores,
            mode,
            out,
        } => {
            let corpus = ctx.corpus(&input)?;
            let (human, model) = split_by_source(&ctx.records(&scores)?);
            write_csv_rows(
                &increase_rates(&human, &model, &corpus, mode),
                writer(&out.out)?,
            )?;
        }
        Command::Keywords {
            scores,
            grouping,
            out,
        } => {
            let records = ctx.records(&scores)?;
            keywords(&records, grouping, writer(&out.out)?)?;
        }
        Command::Layers { input, layers, out } => {
            let corpus = ctx.corpus(&input)?;
            let f = File::open(&layers).with_context(|| format!("opening {}", layers.display()))?;
            let recs = read_layer_records(BufReader::new(f))?;
            let gaps = layer_gap_report(&recs, &corpus, &cfg.novelty, &cfg.layers, &ctx.tagger)?;
            write_csv_rows(&gaps, writer(&out.out)?)?;
        }
        Command::Report {
            input,
            scores,
            distance,
            out_dir,
        } => {
            let corpus = ctx.corpus(&input)?;
            let records = ctx.records(&scores)?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let at = |name: &str| out_dir.join(name);
            write_quality_csv(&quality(&corpus, ctx), writer(&at("quality.csv"))?)?;
            let rows = overlap_report(
                corpus.dishes(),
                &ctx.lexicon,
                &ctx.tagger,
                cfg.ingredients.match_key,
            );
            write_overlap_csv(&rows, writer(&at("ingredient_overlap.csv"))?)?;
            write_top(
                &corpus,
                cfg.ingredients.top_k,
                ctx,
                &at("top_ingredients.csv"),
            )?;
            let (summary, _) = attribution(&corpus, ctx);
            AttributionSummary::write_csv(&summary, writer(&at("attribution.csv"))?)?;
            let mm = mismatch_report(non_reference(&corpus), &corpus, &ctx.lexicon);
            mm.write_summary_csv(writer(&at("title_mismatch.csv"))?)?;
            mm.write_region_pairs_csv(writer(&at("title_mismatch_regions.csv"))?)?;
            let (human, model) = split_by_source(&records);
            for (mode, name) in [
                (IncreaseMode::Origin, "increase_origin.csv"),
                (IncreaseMode::PairedVariation, "increase_variation.csv"),
            ] {
                write_csv_rows(
                    &increase_rates(&human, &model, &corpus, mode),
                    writer(&at(name))?,
                )?;
            }
            keywords(
                &records,
                KeywordGrouping::TraditionalVsCreative,
                writer(&at("keyword_gaps.csv"))?,
            )?;
            keywords(
                &records,
                KeywordGrouping::PerKeyword,
                writer(&at("keyword_means.csv"))?,
            )?;
            if distance.given() {
                let report = correlate(&records, &corpus, &distance.load()?, &cfg.correlate);
                report.write_csv(writer(&at("correlations.csv"))?)?;
            }
        }
    }
    Ok(())
}

fn non_reference(corpus: &Corpus) -> impl Iterator<Item = &Recipe> {
    corpus
        .recipes()
        .filter(|r| r.source != Source::HumanReference)
}

fn quality(corpus: &Corpus, ctx: &Ctx) -> Vec<cultnov::quality::QualityReport> {
    let recipes: Vec<&Recipe> = corpus.recipes().collect();
    let detector = StopwordDetector {
        threshold: ctx.config.quality.english_threshold,
    };
    quality_stats(&recipes, &ctx.config.quality, &detector, &ctx.tagger)
}

fn attribution(
    corpus: &Corpus,
    ctx: &Ctx,
) -> (
    Vec<AttributionSummary>,
    Vec<cultnov::ingredients::AttributionRecord>,
) {
    let profiles = country_profiles(corpus.recipes(), &ctx.tagger);
    let recs: Vec<_> = corpus
        .dishes()
        .flat_map(|d| d.non_reference().map(move |r| (d, r)))
        .map(|(d, r)| attribute(r, &profiles, d, &ctx.lexicon, &ctx.tagger))
        .collect();
    (attribution_summary(&recs), recs)
}

fn write_top(corpus: &Corpus, k: usize, ctx: &Ctx, path: &Path) -> Result<()> {
    let mut producers: Vec<&str> = corpus.recipes().map(|r| r.producer()).collect();
    producers.sort_unstable();
    producers.dedup();
    let rows: Vec<(String, Vec<(String, usize)>)> = producers
        .into_iter()
        .map(|p| {
            (
                p.to_string(),
                top_ingredients(
                    corpus.recipes().filter(|r| r.producer() == p),
                    k,
                    &ctx.tagger,
                ),
            )
        })
        .collect();
    write_top_csv(&rows, writer(path)?)?;
    Ok(())
}

fn keywords(
    records: &[MetricRecord],
    grouping: KeywordGrouping,
    out: Box<dyn Write>,
) -> Result<()> {
    match grouping {
        KeywordGrouping::TraditionalVsCreative => write_csv_rows(
            &keyword_gaps(records, &creative_keywords(), &TRADITIONAL_KEYWORDS),
            out,
        )?,
        KeywordGrouping::PerKeyword => write_csv_rows(&per_keyword_means(records), out)?,
    }
    Ok(())
}
