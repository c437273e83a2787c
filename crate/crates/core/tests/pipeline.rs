#![allow(clippy::excessive_precision)]

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use cultnov::corpus::{load_corpus, CountryLexicon, RuleTagger, Source};
use cultnov::novelty::{Metric, MetricRecord, NoveltyConfig};
use cultnov::pipeline::*;
use proptest::prelude::*;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn small_synth(n: usize) -> Synthetic {
    let cfg = SynthConfig {
        n_dishes: n,
        ..SynthConfig::default()
    };
    synthesize(&cfg, &CountryLexicon::bundled())
}

fn rec(
    dish: &str,
    country: &str,
    source: Source,
    model: Option<&str>,
    kw: Option<&str>,
    v: f64,
) -> MetricRecord {
    MetricRecord {
        dish_id: dish.into(),
        recipe_id: format!("{dish}-{country}-{v}"),
        variation_country: country.into(),
        source,
        model_name: model.map(str::to_string),
        keyword: kw.map(str::to_string),
        template_id: model.map(|_| "basic".to_string()),
        newness: v,
        uniqueness: v,
        difference: v,
        new_surprise: v,
        divergent_surprise: v,
        appearance: v,
        disappearance: v,
        degenerate: false,
        no_shared_words: false,
    }
}

// prompts

#[test]
fn forty_four_prompts_per_cell() {
    let lex = CountryLexicon::bundled();
    let syn = small_synth(3);
    let prompts = emit_prompts(&syn.corpus, &lex, &PromptConfig::default());
    let mut cells = std::collections::BTreeMap::new();
    for p in &prompts {
        *cells
            .entry((p.dish_id.clone(), p.country.clone()))
            .or_insert(0) += 1;
    }
    assert_eq!(cells.len(), 3 * 4);
    assert!(cells.values().all(|&n| n == 44));
    assert_eq!(PromptConfig::default().prompts_per_cell(), 44);
}

#[test]
fn prompts_deterministic_and_injective() {
    let lex = CountryLexicon::bundled();
    let syn = small_synth(4);
    let a = emit_prompts(&syn.corpus, &lex, &PromptConfig::default());
    let b = emit_prompts(&syn.corpus, &lex, &PromptConfig::default());
    assert_eq!(a, b);
    let keys: BTreeSet<_> = a
        .iter()
        .map(|p| {
            (
                p.dish_id.clone(),
                p.country.clone(),
                p.keyword.clone(),
                p.template_id,
            )
        })
        .collect();
    assert_eq!(keys.len(), a.len());
    let ids: BTreeSet<_> = a.iter().map(|p| p.prompt_id.clone()).collect();
    assert_eq!(ids.len(), a.len());
    assert!(a.iter().all(|p| p.rendered_text.ends_with("Title:")));
}

#[test]
fn persona_names_country_first() {
    let t = render(
        Template::Persona,
        Some("novel"),
        "Tagine",
        "Morocco",
        "Moroccan",
    );
    assert!(t.starts_with("You are knowledgeable about Morocco"));
    let b = render(
        Template::Basic,
        Some("novel"),
        "Tagine",
        "Morocco",
        "Moroccan",
    );
    assert!(b.starts_with("Create a novel Moroccan version of this recipe: Tagine."));
    let e = render(Template::Basic, None, "Tagine", "Morocco", "Moroccan");
    assert!(e.starts_with("Create a Moroccan version"));
}

#[test]
fn blend_names_no_country() {
    let lex = CountryLexicon::bundled();
    let syn = small_synth(5);
    let prompts = emit_prompts(&syn.corpus, &lex, &PromptConfig::default());
    let mut names: BTreeSet<String> = BTreeSet::new();
    for c in lex.countries() {
        names.insert(c.name.to_lowercase());
        names.extend(c.demonyms.iter().map(|d| d.to_lowercase()));
    }
    let blends: Vec<_> = prompts
        .iter()
        .filter(|p| p.template_id == Template::Blend)
        .collect();
    assert_eq!(blends.len(), prompts.len() / 4);
    for p in blends {
        assert_eq!(p.country_mode, CountryMode::Blank);
        // the shared format request mentions the English language, not a country
        let body = p.rendered_text.split("\n\n").next().unwrap();
        let text = body.to_lowercase();
        let words: BTreeSet<&str> = text.split(|c: char| !c.is_alphanumeric()).collect();
        for n in &names {
            if n.contains(' ') {
                assert!(!text.contains(n.as_str()), "{n} in {}", p.rendered_text);
            } else {
                assert!(!words.contains(n.as_str()), "{n} in {}", p.rendered_text);
            }
        }
    }
}

#[test]
fn prompt_jsonl_round_trip() {
    let lex = CountryLexicon::bundled();
    let syn = small_synth(1);
    let prompts = emit_prompts(&syn.corpus, &lex, &PromptConfig::default());
    let mut buf = Vec::new();
    write_prompts_jsonl(&prompts, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let back: Vec<PromptSpec> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(back, prompts);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["country_mode"]["mode"], "origin");
    let extra = text
        .lines()
        .next()
        .unwrap()
        .replacen('{', "{\"bogus\":1,", 1);
    assert!(serde_json::from_str::<PromptSpec>(&extra).is_err());
}

// increase rates

fn cell_fixture() -> (
    Vec<MetricRecord>,
    Vec<MetricRecord>,
    cultnov::corpus::Corpus,
) {
    let syn = small_synth(12);
    let cells: [(u32, u32); 12] = [
        (10, 12),
        (20, 25),
        (30, 27),
        (40, 40),
        (50, 65),
        (0, 10),
        (15, 15),
        (25, 20),
        (35, 49),
        (45, 36),
        (55, 66),
        (5, 8),
    ];
    let mut human = Vec::new();
    let mut model = Vec::new();
    for (dish, (h, m)) in syn.corpus.dishes().zip(cells) {
        let c = dish
            .variations
            .keys()
            .find(|c| **c != dish.origin_country)
            .unwrap();
        human.push(rec(
            &dish.dish_id,
            c,
            Source::HumanVariation,
            None,
            None,
            h as f64 / 100.0,
        ));
        // two model records averaging to m
        model.push(rec(
            &dish.dish_id,
            c,
            Source::ModelGenerated,
            Some("m"),
            None,
            (m as f64 - 1.0) / 100.0,
        ));
        model.push(rec(
            &dish.dish_id,
            c,
            Source::ModelGenerated,
            Some("m"),
            None,
            (m as f64 + 1.0) / 100.0,
        ));
    }
    (human, model, syn.corpus)
}

#[test]
fn increase_rate_matches_cell_oracle() {
    let (human, model, corpus) = cell_fixture();
    let rates = increase_rates(&human, &model, &corpus, IncreaseMode::PairedVariation);
    assert_eq!(rates.len(), 5);
    for r in &rates {
        assert_eq!(r.n_cells, 11);
        assert_eq!(r.n_zero_human, 1);
        assert!((r.rate.unwrap() - 29.0 / 220.0).abs() < 1e-12, "{r:?}");
    }
    // no origin cells in the fixture
    let origin = increase_rates(&human, &model, &corpus, IncreaseMode::Origin);
    assert!(origin.iter().all(|r| r.rate.is_none() && r.n_cells == 0));
}

#[test]
fn increase_rate_trivial_cases() {
    let (human, _, corpus) = cell_fixture();
    let as_model = |k: f64| -> Vec<MetricRecord> {
        human
            .iter()
            .map(|r| MetricRecord {
                source: Source::ModelGenerated,
                model_name: Some("m".into()),
                newness: r.newness * k,
                uniqueness: r.uniqueness * k,
                difference: r.difference * k,
                new_surprise: r.new_surprise * k,
                divergent_surprise: r.divergent_surprise * k,
                ..r.clone()
            })
            .collect()
    };
    for r in increase_rates(
        &human,
        &as_model(1.0),
        &corpus,
        IncreaseMode::PairedVariation,
    ) {
        assert_eq!(r.rate, Some(0.0));
    }
    for r in increase_rates(
        &human,
        &as_model(2.0),
        &corpus,
        IncreaseMode::PairedVariation,
    ) {
        assert!((r.rate.unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn degenerate_records_are_left_out() {
    let (mut human, model, corpus) = cell_fixture();
    human[0].degenerate = true;
    let rates = increase_rates(&human, &model, &corpus, IncreaseMode::PairedVariation);
    assert!(rates.iter().all(|r| r.n_cells == 10));
}

// keyword gaps

fn kw_records(a: &[f64], b: &[f64], ka: &str, kb: &str) -> Vec<MetricRecord> {
    let mut out = Vec::new();
    for (i, v) in a.iter().enumerate() {
        out.push(rec(
            &format!("d{i}"),
            "JP",
            Source::ModelGenerated,
            Some("m"),
            Some(ka),
            *v,
        ));
    }
    for (i, v) in b.iter().enumerate() {
        out.push(rec(
            &format!("e{i}"),
            "JP",
            Source::ModelGenerated,
            Some("m"),
            Some(kb),
            *v,
        ));
    }
    out
}

fn creative() -> Vec<&'static str> {
    creative_keywords()
}

#[test]
fn creative_set_is_the_other_seven() {
    assert_eq!(creative().len(), 7);
    assert!(!creative().contains(&"authentic"));
}

#[test]
fn shifted_group_gives_constant_gap() {
    let base: Vec<f64> = (0..20).map(|i| 0.2 + 0.01 * (i % 7) as f64).collect();
    let shifted: Vec<f64> = base.iter().map(|v| v + 0.1).collect();
    let recs = kw_records(&shifted, &base, "novel", "traditional");
    let gaps = keyword_gaps(&recs, &creative(), &TRADITIONAL_KEYWORDS);
    assert_eq!(gaps.len(), 5);
    for g in &gaps {
        assert!((g.gap.unwrap() - 0.1).abs() < 1e-12);
    }
    let swapped = keyword_gaps(&recs, &TRADITIONAL_KEYWORDS, &creative());
    for (g, s) in gaps.iter().zip(&swapped) {
        assert!((g.gap.unwrap() + s.gap.unwrap()).abs() < 1e-12);
        assert!((g.t.unwrap() + s.t.unwrap()).abs() < 1e-9);
        assert!((g.p_value.unwrap() - s.p_value.unwrap()).abs() < 1e-12);
    }
}

#[test]
fn identical_groups_give_zero_gap() {
    let base: Vec<f64> = (0..20).map(|i| 0.2 + 0.01 * (i % 7) as f64).collect();
    let recs = kw_records(&base, &base, "unique", "authentic");
    for g in keyword_gaps(&recs, &creative(), &TRADITIONAL_KEYWORDS) {
        assert_eq!(g.gap, Some(0.0));
        assert!((g.p_value.unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn welch_matches_numeric_oracle() {
    let a: Vec<f64> = (0..30)
        .map(|i| 0.30 + 0.01 * ((i * 7) % 13) as f64)
        .collect();
    let b: Vec<f64> = (0..30)
        .map(|i| 0.25 + 0.013 * ((i * 5) % 11) as f64)
        .collect();
    let recs = kw_records(&a, &b, "original", "prototypical");
    let g = &keyword_gaps(&recs, &creative(), &TRADITIONAL_KEYWORDS)[0];
    assert_eq!((g.n_a, g.n_b), (30, 30));
    assert!((g.gap.unwrap() - 0.0419).abs() < 1e-12);
    assert!((g.t.unwrap() - 4.0096567767453391728).abs() < 1e-9);
    assert!((g.df.unwrap() - 57.434270348106295829).abs() < 1e-9);
    assert!((g.p_value.unwrap() - 0.00017758029087195409405).abs() < 1e-9);
}

#[test]
fn per_keyword_layout() {
    let recs = kw_records(&[0.1, 0.3], &[0.5], "Novel", "traditional");
    let m = per_keyword_means(&recs);
    assert_eq!(m.len(), 2);
    assert_eq!(m[0].keyword, "novel");
    assert!((m[0].difference - 0.2).abs() < 1e-12);
    assert_eq!(m[1].n, 1);
}

// scoring

#[test]
fn scoring_covers_every_recipe() {
    let syn = small_synth(3);
    let out = score_corpus(
        &syn.corpus,
        &NoveltyConfig::default(),
        &ScoreConfig::default(),
        &RuleTagger::new(),
        2,
    )
    .unwrap();
    assert!(out.issues.is_empty(), "{:?}", out.issues);
    assert_eq!(out.records.len(), syn.corpus.n_recipes());
    let no_refs = score_corpus(
        &syn.corpus,
        &NoveltyConfig::default(),
        &ScoreConfig {
            score_references: false,
        },
        &RuleTagger::new(),
        1,
    )
    .unwrap();
    assert!(no_refs
        .records
        .iter()
        .all(|r| r.source != Source::HumanReference));
    assert_eq!(no_refs.records.len(), syn.corpus.n_recipes() - 15);
}

fn run_to(
    dir: &Path,
    corpus: &cultnov::corpus::Corpus,
    jobs: usize,
    resume: bool,
) -> (Vec<u8>, ScoreRun) {
    let out = dir.join("scores.csv");
    let manifest = dir.join("scores.manifest");
    let run = score_corpus_to_csv(
        corpus,
        &NoveltyConfig::default(),
        &ScoreConfig::default(),
        &RuleTagger::new(),
        jobs,
        &out,
        &manifest,
        resume,
    )
    .unwrap();
    (fs::read(&out).unwrap(), run)
}

#[test]
fn streamed_output_independent_of_jobs() {
    let syn = small_synth(20);
    let d1 = tempfile::tempdir().unwrap();
    let d4 = tempfile::tempdir().unwrap();
    let (a, _) = run_to(d1.path(), &syn.corpus, 1, false);
    let (b, run) = run_to(d4.path(), &syn.corpus, 4, false);
    assert_eq!(a, b);
    assert_eq!(run.dishes_scored, 20);
    let records = read_records_csv(&a[..]).unwrap();
    assert_eq!(records.len(), run.records_written);
    let mem = score_corpus(
        &syn.corpus,
        &NoveltyConfig::default(),
        &ScoreConfig::default(),
        &RuleTagger::new(),
        3,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_records_csv(&mem.records, &mut buf).unwrap();
    assert_eq!(buf, a);
}

#[test]
fn resume_after_interruption_is_identical() {
    let syn = small_synth(20);
    let full_dir = tempfile::tempdir().unwrap();
    let (full, _) = run_to(full_dir.path(), &syn.corpus, 2, false);

    let dir = tempfile::tempdir().unwrap();
    run_to(dir.path(), &syn.corpus, 2, false);
    // Simulate a crash after 7 dishes: half-written rows and a torn manifest line.
    let manifest = dir.path().join("scores.manifest");
    let lines: Vec<String> = fs::read_to_string(&manifest)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    let (_, off) = lines[6].split_once('\t').unwrap();
    let off: usize = off.parse().unwrap();
    let torn = format!("{}\n{}", lines[..7].join("\n"), &lines[7][..4]);
    fs::write(&manifest, torn).unwrap();
    let mut partial = full[..off].to_vec();
    partial.extend_from_slice(b"dish0007,garbage,half");
    fs::write(dir.path().join("scores.csv"), partial).unwrap();

    let (resumed, run) = run_to(dir.path(), &syn.corpus, 3, true);
    assert_eq!(run.dishes_skipped, 7);
    assert_eq!(run.dishes_scored, 13);
    assert_eq!(resumed, full);
    // Resuming a finished run is a no-op.
    let (again, run) = run_to(dir.path(), &syn.corpus, 1, true);
    assert_eq!(run.dishes_scored, 0);
    assert_eq!(again, full);
}

#[test]
fn resume_rejects_short_output() {
    let syn = small_synth(3);
    let dir = tempfile::tempdir().unwrap();
    run_to(dir.path(), &syn.corpus, 1, false);
    fs::write(dir.path().join("scores.csv"), b"x").unwrap();
    let err = score_corpus_to_csv(
        &syn.corpus,
        &NoveltyConfig::default(),
        &ScoreConfig::default(),
        &RuleTagger::new(),
        1,
        &dir.path().join("scores.csv"),
        &dir.path().join("scores.manifest"),
        true,
    )
    .unwrap_err();
    assert!(matches!(err, PipelineError::Manifest(_)));
}

// synthetic corpus

#[test]
fn synth_is_seeded() {
    let lex = CountryLexicon::bundled();
    let cfg = SynthConfig {
        n_dishes: 5,
        ..SynthConfig::default()
    };
    let a = synthesize(&cfg, &lex);
    let b = synthesize(&cfg, &lex);
    let dishes = |s: &cultnov::corpus::Corpus| s.dishes().cloned().collect::<Vec<_>>();
    assert_eq!(dishes(&a.corpus), dishes(&b.corpus));
    let c = synthesize(
        &SynthConfig {
            seed: 8,
            ..cfg.clone()
        },
        &lex,
    );
    assert_ne!(dishes(&a.corpus), dishes(&c.corpus));
    // 5 refs + 3 countries x (1 human + 8 model) + 8 origin model
    assert_eq!(a.corpus.n_recipes(), 5 * 40);
    // round trip through the corpus file format
    let mut buf = Vec::new();
    a.corpus.write_jsonl(&mut buf).unwrap();
    let back = cultnov::corpus::read_corpus(&buf[..], &lex).unwrap();
    assert_eq!(dishes(&back), dishes(&a.corpus));
}

// layers

fn layer_inputs() -> (Vec<LayerRecord>, cultnov::corpus::Corpus) {
    let lex = CountryLexicon::bundled();
    let corpus = load_corpus(&fixture("layer_corpus.jsonl"), &lex).unwrap();
    let f = fs::File::open(fixture("layers.jsonl")).unwrap();
    (read_layer_records(BufReader::new(f)).unwrap(), corpus)
}

#[test]
fn layer_fixture_round_trips() {
    let (layers, _) = layer_inputs();
    assert_eq!(layers.len(), 32);
    let tags: BTreeSet<LayerTag> = layers.iter().map(|l| l.layer_tag).collect();
    assert_eq!(tags.len(), 5);
    let mut buf = Vec::new();
    for l in &layers {
        serde_json::to_writer(&mut buf, l).unwrap();
        buf.push(b'\n');
    }
    assert_eq!(read_layer_records(&buf[..]).unwrap(), layers);
}

#[test]
fn layer_records_are_validated() {
    let bad_tag = r#"{"model_name":"m","recipe_id":"r","layer_tag":"lm4","tokens":[]}"#;
    let extra = r#"{"model_name":"m","recipe_id":"r","layer_tag":"lm1","tokens":[],"x":1}"#;
    let empty = r#"{"model_name":"","recipe_id":"r","layer_tag":"lm1","tokens":[]}"#;
    for (i, l) in [bad_tag, extra, empty].iter().enumerate() {
        let text = format!("\n{l}\n");
        match read_layer_records(text.as_bytes()) {
            Err(PipelineError::Layer { line, .. }) => assert_eq!(line, 2, "case {i}"),
            other => panic!("case {i}: {other:?}"),
        }
    }
}

#[test]
fn layer_gaps_from_fixture() {
    let (layers, corpus) = layer_inputs();
    let gaps = layer_gap_report(
        &layers,
        &corpus,
        &NoveltyConfig::default(),
        &LayerConfig::default(),
        &RuleTagger::new(),
    )
    .unwrap();
    let lens: Vec<_> = gaps.iter().filter(|g| g.model_name == "lens").collect();
    // 5 layers x 2 sides x 5 metrics
    assert_eq!(lens.len(), 50);
    assert!(lens.iter().all(|g| !g.incomplete));
    let lm1_model = lens
        .iter()
        .find(|g| {
            g.layer_tag == LayerTag::Lm1
                && g.side == StreamSide::Model
                && g.metric == Metric::Uniqueness
        })
        .unwrap();
    assert_eq!((lm1_model.n_origin, lm1_model.n_variation), (1, 1));
    // the Moroccan generation shares most words, the Japanese one almost none
    assert!(lm1_model.gap.unwrap() < 0.0);
    let human = lens
        .iter()
        .find(|g| {
            g.layer_tag == LayerTag::Lm1
                && g.side == StreamSide::Human
                && g.metric == Metric::Difference
        })
        .unwrap();
    assert_eq!((human.n_origin, human.n_variation), (3, 1));

    // the second lens model exported no reference streams
    let b: Vec<_> = gaps.iter().filter(|g| g.model_name == "lens-b").collect();
    assert!(!b.is_empty());
    assert!(b.iter().all(|g| g.incomplete && g.gap.is_none()));
}

#[test]
fn layer_gaps_reject_unknown_recipes() {
    let (mut layers, corpus) = layer_inputs();
    layers[0].recipe_id = "nope".into();
    let err = layer_gap_report(
        &layers,
        &corpus,
        &NoveltyConfig::default(),
        &LayerConfig::default(),
        &RuleTagger::new(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("nope"));
}

// config

#[test]
fn config_defaults_and_overrides() {
    let c = Config::from_toml("").unwrap();
    assert_eq!(c, Config::default());
    let c = Config::from_toml(
        "[novelty]\nwindow = \"document\"\ndisappearance_norm = \"reference\"\n[ingredients]\ntop_k = 5\n",
    )
    .unwrap();
    assert_eq!(c.ingredients.top_k, 5);
    assert_eq!(c.novelty.window.to_string(), "document");
    assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    assert!(Config::from_toml("[novelty]\nwindo = 3\n").is_err());
    assert!(Config::from_toml("[nope]\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn increase_of_self_is_zero(vals in prop::collection::vec(0.01f64..1.0, 12)) {
        let (human, _, corpus) = cell_fixture();
        let human: Vec<MetricRecord> = human.into_iter().zip(&vals).map(|(r, v)| rec(&r.dish_id, &r.variation_country, Source::HumanVariation, None, None, *v)).collect();
        let model: Vec<MetricRecord> = human.iter().map(|r| MetricRecord { source: Source::ModelGenerated, model_name: Some("m".into()), ..r.clone() }).collect();
        for r in increase_rates(&human, &model, &corpus, IncreaseMode::PairedVariation) {
            prop_assert_eq!(r.rate, Some(0.0));
        }
    }

    #[test]
    fn gap_sign_flips(a in prop::collection::vec(0.0f64..1.0, 3..15), b in prop::collection::vec(0.0f64..1.0, 3..15)) {
        let recs = kw_records(&a, &b, "new", "authentic");
        let g = keyword_gaps(&recs, &creative(), &TRADITIONAL_KEYWORDS);
        let s = keyword_gaps(&recs, &TRADITIONAL_KEYWORDS, &creative());
        for (g, s) in g.iter().zip(&s) {
            prop_assert!((g.gap.unwrap() + s.gap.unwrap()).abs() < 1e-12);
        }
    }
}
