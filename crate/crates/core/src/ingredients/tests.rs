use super::*;
use crate::corpus::RuleTagger;

const GOLD: &str = include_str!("../../tests/fixtures/ingredients_gold.tsv");

#[test]
fn gold_file_normalizes_exactly() {
    let tagger = RuleTagger::new();
    let mut bad = Vec::new();
    let mut n = 0;
    for line in GOLD
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let (raw, want) = line.split_once('\t').unwrap();
        n += 1;
        let got = normalize_ingredient(raw, &tagger).map(|x| x.phrase);
        if got.as_deref() != Some(want) {
            bad.push(format!("{raw:?}: got {got:?}, want {want:?}"));
        }
    }
    assert_eq!(n, 30);
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

use std::collections::BTreeMap;

use crate::corpus::{Corpus, Source};

fn recipe(id: &str, country: &str, source: Source, ingredients: &[&str]) -> Recipe {
    Recipe {
        recipe_id: id.into(),
        dish_id: "d".into(),
        country: country.into(),
        source,
        model_name: (source == Source::ModelGenerated).then(|| "m1".to_string()),
        keyword: None,
        template_id: None,
        title: "Stew".into(),
        ingredients: ingredients.iter().map(|s| s.to_string()).collect(),
        instructions: "Cook.".into(),
    }
}

fn dish(refs: Vec<Recipe>, vars: Vec<Recipe>) -> Dish {
    let mut variations: BTreeMap<String, Vec<Recipe>> = BTreeMap::new();
    for v in vars {
        variations.entry(v.country.clone()).or_default().push(v);
    }
    Dish {
        dish_id: "d".into(),
        name: "Couscous".into(),
        origin_country: "MA".into(),
        references: refs,
        variations,
    }
}

#[test]
fn salt_to_taste() {
    let n = normalize_ingredient("2 tsp salt, to taste", &RuleTagger::new()).unwrap();
    assert_eq!(n.phrase, "salt taste");
    assert_eq!(
        normalize_ingredient("Salt", &RuleTagger::new())
            .unwrap()
            .phrase,
        "salt"
    );
}

#[test]
fn head_is_last_noun() {
    let t = RuleTagger::new();
    assert_eq!(
        normalize_ingredient("2 carrots, peeled and sliced", &t)
            .unwrap()
            .head_lemma,
        "carrot"
    );
    assert_eq!(
        normalize_ingredient("1 cup chicken stock", &t)
            .unwrap()
            .head_lemma,
        "stock"
    );
}

#[test]
fn nothing_left_is_none() {
    let t = RuleTagger::new();
    assert_eq!(normalize_ingredient("2 cups", &t), None);
    assert_eq!(normalize_ingredient("(optional)", &t), None);
    assert_eq!(normalize_ingredient("", &t), None);
}

#[test]
fn normalized_phrases_are_clean() {
    let t = RuleTagger::new();
    for line in GOLD.lines().filter(|l| !l.starts_with('#')) {
        let raw = line.split('\t').next().unwrap();
        let n = normalize_ingredient(raw, &t).unwrap();
        assert!(!n.phrase.is_empty());
        assert!(
            n.phrase.chars().all(|c| c.is_alphabetic() || c == ' '),
            "{}",
            n.phrase
        );
        assert!(n
            .phrase
            .split(' ')
            .all(|w| !is_unit(w) && !crate::corpus::text::is_stopword(w)));
    }
}

const POOL: [&str; 8] = [
    "salt", "pepper", "onion", "garlic", "lamb", "carrot", "butter", "couscous",
];

#[test]
fn overlap_fixture() {
    let t = RuleTagger::new();
    let d = dish(
        vec![
            recipe("r1", "MA", Source::HumanReference, &POOL[..5]),
            recipe("r2", "MA", Source::HumanReference, &POOL[3..]),
        ],
        vec![],
    );
    assert_eq!(reference_pool(&d, &t, MatchKey::Phrase).len(), 8);
    let r = recipe(
        "v",
        "JM",
        Source::ModelGenerated,
        &["salt", "onion", "garlic", "lamb", "chicken"],
    );
    let o = overlap_and_preservation(&d, &r, &t, MatchKey::Phrase);
    assert_eq!((o.overlap, o.preservation), (Some(0.8), Some(0.5)));

    let same = recipe("s", "JM", Source::ModelGenerated, &POOL);
    let o = overlap_and_preservation(&d, &same, &t, MatchKey::Phrase);
    assert_eq!((o.overlap, o.preservation), (Some(1.0), Some(1.0)));
    let other = recipe("o", "JM", Source::ModelGenerated, &["rice", "beans"]);
    let o = overlap_and_preservation(&d, &other, &t, MatchKey::Phrase);
    assert_eq!((o.overlap, o.preservation), (Some(0.0), Some(0.0)));
    let empty = recipe("e", "JM", Source::ModelGenerated, &["2 cups"]);
    assert_eq!(
        overlap_and_preservation(&d, &empty, &t, MatchKey::Phrase).overlap,
        None
    );
}

#[test]
fn head_matching_is_looser() {
    let t = RuleTagger::new();
    let d = dish(
        vec![recipe(
            "r1",
            "MA",
            Source::HumanReference,
            &["chicken stock"],
        )],
        vec![],
    );
    let r = recipe("v", "JM", Source::ModelGenerated, &["beef stock"]);
    assert_eq!(
        overlap_and_preservation(&d, &r, &t, MatchKey::Phrase).overlap,
        Some(0.0)
    );
    assert_eq!(
        overlap_and_preservation(&d, &r, &t, MatchKey::Head).overlap,
        Some(1.0)
    );
}

#[test]
fn duplicated_references_change_nothing() {
    let t = RuleTagger::new();
    let refs = vec![
        recipe("r1", "MA", Source::HumanReference, &POOL[..5]),
        recipe("r2", "MA", Source::HumanReference, &POOL[3..]),
    ];
    let r = recipe(
        "v",
        "JM",
        Source::ModelGenerated,
        &["salt", "onion", "rice"],
    );
    let once = overlap_and_preservation(&dish(refs.clone(), vec![]), &r, &t, MatchKey::Phrase);
    let twice = overlap_and_preservation(
        &dish([refs.clone(), refs].concat(), vec![]),
        &r,
        &t,
        MatchKey::Phrase,
    );
    assert_eq!(once, twice);
}

#[test]
fn top_ingredients_ranks_by_recipe_count() {
    let t = RuleTagger::new();
    let rs = [
        recipe(
            "a",
            "MA",
            Source::HumanReference,
            &["salt", "1 tsp salt", "onion"],
        ),
        recipe("b", "MA", Source::HumanReference, &["Salt", "garlic"]),
        recipe(
            "c",
            "MA",
            Source::HumanReference,
            &["salt", "garlic", "butter"],
        ),
    ];
    let top = top_ingredients(&rs, 2, &t);
    assert_eq!(
        top,
        vec![("salt".to_string(), 3), ("garlic".to_string(), 2)]
    );
    let all = top_ingredients(&rs, 100, &t);
    assert_eq!(all.len(), 4);
    assert_eq!(all[2], ("butter".to_string(), 1));
}

fn three_country_corpus() -> Vec<Recipe> {
    vec![
        recipe(
            "a1",
            "MA",
            Source::HumanReference,
            &["couscous", "lamb", "salt", "raisin"],
        ),
        recipe(
            "a2",
            "MA",
            Source::HumanReference,
            &["couscous", "carrot", "salt"],
        ),
        recipe(
            "b1",
            "JM",
            Source::HumanVariation,
            &["rice", "chicken", "salt", "scotch bonnet pepper"],
        ),
        recipe(
            "b2",
            "JM",
            Source::HumanVariation,
            &["rice", "allspice", "salt"],
        ),
        recipe(
            "c1",
            "FR",
            Source::HumanVariation,
            &["butter", "carrot", "salt", "lamb"],
        ),
        recipe(
            "m1",
            "FR",
            Source::ModelGenerated,
            &["truffle", "truffle", "truffle"],
        ),
    ]
}

#[test]
fn profiles_use_human_recipes_and_log2_idf() {
    let t = RuleTagger::new();
    let set = country_profiles(&three_country_corpus(), &t);
    assert_eq!(set.profiles.len(), 3);
    assert_eq!(set.idf["salt"], 0.0);
    assert!((set.idf["couscous"] - 3f64.log2()).abs() < 1e-15);
    assert!((set.idf["lamb"] - 1.5f64.log2()).abs() < 1e-15);
    assert!(!set.idf.contains_key("truffle"));
    for p in set.profiles.values() {
        let n: f64 = p.tfidf.values().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(!p.tfidf.contains_key("salt"));
    }
}

/// Dense recomputation of the attribution argmax.
fn brute_best(recipes: &[Recipe], query: &[&str]) -> String {
    let t = RuleTagger::new();
    let mut docs: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in recipes
        .iter()
        .filter(|r| r.source != Source::ModelGenerated)
    {
        for i in &r.ingredients {
            docs.entry(r.country.clone())
                .or_default()
                .push(normalize_ingredient(i, &t).unwrap().phrase);
        }
    }
    let vocab: Vec<String> = {
        let mut v: Vec<String> = docs.values().flatten().cloned().collect();
        v.sort();
        v.dedup();
        v
    };
    let n = docs.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|w| (n / docs.values().filter(|d| d.contains(w)).count() as f64).log2())
        .collect();
    let vec_of = |words: &[String]| -> Vec<f64> {
        vocab
            .iter()
            .zip(&idf)
            .map(|(w, f)| words.iter().filter(|x| *x == w).count() as f64 * f)
            .collect()
    };
    let q = vec_of(&query.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt()
            * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let mut best = (String::new(), -1.0);
    for (c, d) in &docs {
        let s = cos(&q, &vec_of(d));
        if s > best.1 {
            best = (c.clone(), s);
        }
    }
    best.0
}

#[test]
fn attribution_matches_dense_oracle() {
    let t = RuleTagger::new();
    let lex = CountryLexicon::bundled();
    let rs = three_country_corpus();
    let set = country_profiles(&rs, &t);
    let d = dish(vec![], vec![]);
    for q in [
        &["couscous", "raisin"][..],
        &["rice", "lamb"],
        &["butter", "lamb", "carrot"],
        &["chicken", "couscous", "lamb", "carrot"],
        &["allspice", "butter"],
    ] {
        let r = recipe("q", "JM", Source::ModelGenerated, q);
        let a = attribute(&r, &set, &d, &lex, &t);
        assert_eq!(
            a.best_match_country.as_deref(),
            Some(brute_best(&rs, q).as_str()),
            "{q:?}"
        );
    }
}

#[test]
fn replica_recipe_finds_its_country() {
    let t = RuleTagger::new();
    let lex = CountryLexicon::bundled();
    let rs = three_country_corpus();
    let set = country_profiles(&rs, &t);
    let d = dish(vec![], vec![]);
    let replica = recipe(
        "q",
        "JM",
        Source::ModelGenerated,
        &[
            "couscous", "lamb", "salt", "raisin", "couscous", "carrot", "salt",
        ],
    );
    let a = attribute(&replica, &set, &d, &lex, &t);
    assert_eq!(a.best_match_country.as_deref(), Some("MA"));
    assert!((a.similarity - 1.0).abs() < 1e-12);
    assert_eq!(a.match_class, MatchClass::Origin);

    let jm = recipe(
        "q",
        "JM",
        Source::ModelGenerated,
        &[
            "rice",
            "chicken",
            "scotch bonnet pepper",
            "rice",
            "allspice",
        ],
    );
    assert_eq!(
        attribute(&jm, &set, &d, &lex, &t).match_class,
        MatchClass::Variation
    );

    let zero = recipe("z", "JM", Source::ModelGenerated, &["salt", "truffle"]);
    let a = attribute(&zero, &set, &d, &lex, &t);
    assert_eq!(
        (a.match_class, a.zero_similarity, a.best_match_country),
        (MatchClass::Neither, true, None)
    );
}

#[test]
fn attribution_ties_go_to_smallest_iso() {
    let t = RuleTagger::new();
    let lex = CountryLexicon::bundled();
    let rs = vec![
        recipe("a", "MA", Source::HumanReference, &["couscous"]),
        recipe("b", "JM", Source::HumanVariation, &["couscous"]),
        recipe("c", "FR", Source::HumanVariation, &["butter"]),
    ];
    let set = country_profiles(&rs, &t);
    let r = recipe("q", "MA", Source::ModelGenerated, &["couscous"]);
    let a = attribute(&r, &set, &dish(vec![], vec![]), &lex, &t);
    assert_eq!(a.best_match_country.as_deref(), Some("JM"));
}

#[test]
fn cosine_bounds() {
    let a: BTreeMap<String, f64> = [("x".to_string(), 1.0), ("y".to_string(), 2.0)].into();
    let b: BTreeMap<String, f64> = [("y".to_string(), 3.0)].into();
    assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
    assert_eq!(cosine(&a, &b), cosine(&b, &a));
    assert_eq!(cosine(&a, &BTreeMap::new()), 0.0);
}

#[test]
fn title_detection() {
    let lex = CountryLexicon::bundled();
    assert_eq!(
        detect_title_country("Moroccan Couscous", &lex).as_deref(),
        Some("MA")
    );
    assert_eq!(detect_title_country("Couscous Salad", &lex), None);
    assert_eq!(
        detect_title_country("Trinidad and Tobago Stew", &lex).as_deref(),
        Some("TT")
    );
    assert_eq!(
        detect_title_country("Trinbagonian Pelau", &lex).as_deref(),
        Some("TT")
    );
}

#[test]
fn title_detection_respects_word_boundaries() {
    let lex = CountryLexicon::bundled();
    // "romanian" contains "oman", "germanic" contains "german".
    assert_eq!(
        detect_title_country("Romanian Sarmale", &lex).as_deref(),
        Some("RO")
    );
    assert_eq!(detect_title_country("Germanic Rye Loaf", &lex), None);
    assert_eq!(detect_title_country("Indiana Corn Pudding", &lex), None);
    assert_eq!(
        detect_title_country("Romanians' Favourite Stew", &lex),
        None
    );
    assert_eq!(
        detect_title_country("Stew, Italian-Style", &lex).as_deref(),
        Some("IT")
    );
}

#[test]
fn mismatch_rules() {
    let lex = CountryLexicon::bundled();
    let titled = |id: &str, country: &str, template: &str, title: &str| {
        let mut r = recipe(id, country, Source::ModelGenerated, &["salt"]);
        r.template_id = Some(template.into());
        r.title = title.into();
        r
    };
    let rs = vec![
        titled("1", "JM", "basic", "Jamaican Couscous"),
        titled("2", "JM", "basic", "Moroccan Couscous"),
        titled("3", "MA", "blend", "Moroccan Couscous"),
        titled("4", "MA", "blend", "Italian Couscous"),
        titled("5", "JM", "persona", "Couscous Bowl"),
    ];
    let base = recipe("r", "MA", Source::HumanReference, &["salt"]);
    let corpus = Corpus::from_dishes([dish(vec![base], rs.clone())]);
    let rep = mismatch_report(&rs, &corpus, &lex);
    let flags: Vec<bool> = rep.records.iter().map(|r| r.mismatch).collect();
    assert_eq!(flags, [false, true, false, true, false]);
    let s = &rep.summary[0];
    assert_eq!((s.n_recipes, s.n_undetected, s.n_mismatch), (5, 1, 2));
    assert_eq!(s.pct_mismatch, Some(50.0));
    assert_eq!(
        rep.top_countries["m1"],
        vec![("IT".to_string(), 1), ("MA".to_string(), 1)]
    );
    assert_eq!(
        rep.region_pairs[&(
            "m1".to_string(),
            "Caribbean".to_string(),
            "Africa".to_string()
        )],
        1
    );
    assert_eq!(
        rep.region_pairs[&("m1".to_string(), "Africa".to_string(), "Europe".to_string())],
        1
    );
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn normalization_never_leaks_digits_or_units(raw in "[0-9a-zA-Z ,()/½-]{0,40}") {
            if let Some(n) = normalize_ingredient(&raw, &RuleTagger::new()) {
                prop_assert!(!n.phrase.is_empty());
                prop_assert!(!n.phrase.chars().any(|c| c.is_numeric()));
                prop_assert!(n.phrase.split(' ').all(|w| !w.is_empty() && !is_unit(w)));
                prop_assert!(n.phrase.split(' ').any(|w| w == n.head_lemma));
            }
        }

        #[test]
        fn attribution_ignores_input_order(perm in Just(three_country_corpus()).prop_shuffle()) {
            let t = RuleTagger::new();
            let lex = CountryLexicon::bundled();
            let set = country_profiles(&perm, &t);
            prop_assert_eq!(&set, &country_profiles(&three_country_corpus(), &t));
            let r = recipe("q", "JM", Source::ModelGenerated, &["couscous", "lamb"]);
            let a = attribute(&r, &set, &dish(vec![], vec![]), &lex, &t);
            prop_assert_eq!(a.best_match_country.as_deref(), Some("MA"));
        }
    }
}
