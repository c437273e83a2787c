use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::text::tokenize_lower;
use crate::corpus::{Corpus, CountryLexicon, Iso, Recipe, Region};

/// First country named in a title, by name or demonym. Multiword names win
/// over their prefixes and matches never cross token boundaries.
pub fn detect_title_country(title: &str, lexicon: &CountryLexicon) -> Option<Iso> {
    lexicon
        .scan_tokens(&tokenize_lower(title))
        .map(|c| c.iso_code.clone())
}

/// Templates whose prompt names no country. Their titles are checked
/// against the dish origin.
pub const COUNTRYLESS_TEMPLATES: [&str; 1] = ["blend"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchRecord {
    pub recipe_id: String,
    pub producer: String,
    pub expected_country: Iso,
    pub detected_country: Option<Iso>,
    pub mismatch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchSummary {
    pub producer: String,
    pub n_recipes: usize,
    /// Titles naming no known country; never counted as mismatches.
    pub n_undetected: usize,
    pub n_mismatch: usize,
    /// Mismatches over titles with a detected country, in percent.
    pub pct_mismatch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MismatchReport {
    pub records: Vec<MismatchRecord>,
    pub summary: Vec<MismatchSummary>,
    /// Per producer, detected countries of mismatched titles by count.
    pub top_countries: BTreeMap<String, Vec<(Iso, usize)>>,
    /// (producer, expected region, detected region) -> mismatches.
    pub region_pairs: BTreeMap<(String, String, String), usize>,
}

pub fn mismatch_report<'a>(
    recipes: impl IntoIterator<Item = &'a Recipe>,
    corpus: &Corpus,
    lexicon: &CountryLexicon,
) -> MismatchReport {
    let mut report = MismatchReport::default();
    let mut tallies: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut countries: BTreeMap<String, BTreeMap<Iso, usize>> = BTreeMap::new();
    let region = |iso: &str| {
        lexicon
            .region_of(iso)
            .map(Region::label)
            .unwrap_or("Unknown")
            .to_string()
    };
    for r in recipes {
        let countryless = r
            .template_id
            .as_deref()
            .is_some_and(|t| COUNTRYLESS_TEMPLATES.contains(&t.to_ascii_lowercase().as_str()));
        let expected = match corpus.dish(&r.dish_id) {
            Some(d) if countryless => d.origin_country.clone(),
            _ => r.country.clone(),
        };
        let detected = detect_title_country(&r.title, lexicon);
        let mismatch = detected.as_ref().is_some_and(|d| *d != expected);
        let producer = r.producer().to_string();
        let t = tallies.entry(producer.clone()).or_default();
        t.0 += 1;
        t.1 += usize::from(detected.is_none());
        t.2 += usize::from(mismatch);
        if mismatch {
            let d = detected.clone().expect("mismatch implies detection");
            *report
                .region_pairs
                .entry((producer.clone(), region(&expected), region(&d)))
                .or_insert(0) += 1;
            *countries
                .entry(producer.clone())
                .or_default()
                .entry(d)
                .or_insert(0) += 1;
        }
        report.records.push(MismatchRecord {
            recipe_id: r.recipe_id.clone(),
            producer,
            expected_country: expected,
            detected_country: detected,
            mismatch,
        });
    }
    report.summary = tallies
        .into_iter()
        .map(|(producer, (n, undetected, mism))| MismatchSummary {
            producer,
            n_recipes: n,
            n_undetected: undetected,
            n_mismatch: mism,
            pct_mismatch: (n > undetected).then(|| 100.0 * mism as f64 / (n - undetected) as f64),
        })
        .collect();
    report.top_countries = countries
        .into_iter()
        .map(|(p, m)| {
            let mut v: Vec<(Iso, usize)> = m.into_iter().collect();
            v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            (p, v)
        })
        .collect();
    report
}

impl MismatchReport {
    pub fn write_summary_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "producer",
            "n_recipes",
            "n_undetected",
            "n_mismatch",
            "pct_mismatch",
            "top_countries",
        ])?;
        for s in &self.summary {
            let top = self
                .top_countries
                .get(&s.producer)
                .map(|v| {
                    v.iter()
                        .take(5)
                        .map(|(c, n)| format!("{c}:{n}"))
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .unwrap_or_default();
            w.write_record([
                s.producer.as_str(),
                &s.n_recipes.to_string(),
                &s.n_undetected.to_string(),
                &s.n_mismatch.to_string(),
                &s.pct_mismatch.map(|x| x.to_string()).unwrap_or_default(),
                &top,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_region_pairs_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["producer", "expected_region", "detected_region", "count"])?;
        for ((p, a, b), n) in &self.region_pairs {
            w.write_record([p, a, b, &n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
