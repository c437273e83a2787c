use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::text::tokenize_lower;
use super::CorpusError;

/// Two-letter country code, stored uppercase.
pub type Iso = String;

/// The eight world regions used for regional breakdowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Asia,
    Europe,
    NorthAmerica,
    Oceania,
    SouthAmerica,
    Caribbean,
    MiddleEast,
    Africa,
}

impl Region {
    pub const ALL: [Region; 8] = [
        Region::Asia,
        Region::Europe,
        Region::NorthAmerica,
        Region::Oceania,
        Region::SouthAmerica,
        Region::Caribbean,
        Region::MiddleEast,
        Region::Africa,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Region::Asia => "Asia",
            Region::Europe => "Europe",
            Region::NorthAmerica => "North America",
            Region::Oceania => "Oceania",
            Region::SouthAmerica => "South America",
            Region::Caribbean => "Caribbean",
            Region::MiddleEast => "Middle East",
            Region::Africa => "Africa",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        Region::ALL
            .into_iter()
            .find(|r| {
                r.label()
                    .chars()
                    .filter(|c| c.is_alphanumeric())
                    .collect::<String>()
                    .to_lowercase()
                    == key
            })
            .ok_or_else(|| format!("unknown region `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Country {
    pub iso_code: Iso,
    pub name: String,
    pub region: Region,
    /// Nationality adjectives, e.g. "Moroccan". Never empty.
    pub demonyms: Vec<String>,
}

impl Country {
    /// The adjective used to render prompts.
    pub fn demonym(&self) -> &str {
        &self.demonyms[0]
    }
}

/// Country table with name/demonym resolution.
#[derive(Debug, Clone)]
pub struct CountryLexicon {
    countries: BTreeMap<Iso, Country>,
    // lowercase name, demonym or code -> iso
    aliases: HashMap<String, Iso>,
    // token sequences of names and demonyms -> iso, for title scanning
    phrases: HashMap<Vec<String>, Iso>,
    max_phrase_len: usize,
}

const BUNDLED: &str = include_str!("../../data/countries.csv");

impl CountryLexicon {
    /// The bundled 130-country lexicon.
    pub fn bundled() -> Self {
        Self::from_csv_str(BUNDLED).expect("bundled lexicon is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let mut s = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut s))
            .map_err(|e| CorpusError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        Self::from_csv_str(&s)
    }

    /// Parses `iso,name,region,demonym1|demonym2|...` lines. A header line
    /// starting with `iso,` is skipped.
    pub fn from_csv_str(s: &str) -> Result<Self, CorpusError> {
        let mut countries = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("iso,")) {
                continue;
            }
            let bad = |msg: String| CorpusError::Lexicon {
                line: i + 1,
                message: msg,
            };
            let fields: Vec<&str> = line.splitn(4, ',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", fields.len())));
            }
            let iso = fields[0].to_uppercase();
            if iso.len() != 2 || !iso.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(bad(format!("invalid iso code `{}`", fields[0])));
            }
            let region = fields[2].parse::<Region>().map_err(bad)?;
            let demonyms: Vec<String> = fields[3]
                .split('|')
                .map(str::trim)
                .filter(|d| !d.is_empty())
                .map(str::to_string)
                .collect();
            if demonyms.is_empty() {
                return Err(bad(format!("country {iso} has no demonyms")));
            }
            countries.push(Country {
                iso_code: iso,
                name: fields[1].to_string(),
                region,
                demonyms,
            });
        }
        Self::from_countries(countries)
    }

    pub fn from_countries(list: Vec<Country>) -> Result<Self, CorpusError> {
        let mut countries = BTreeMap::new();
        for c in list {
            if c.demonyms.is_empty() {
                return Err(CorpusError::Lexicon {
                    line: 0,
                    message: format!("country {} has no demonyms", c.iso_code),
                });
            }
            let iso = c.iso_code.clone();
            if countries.insert(iso.clone(), c).is_some() {
                return Err(CorpusError::Lexicon {
                    line: 0,
                    message: format!("duplicate iso code {iso}"),
                });
            }
        }
        let mut aliases = HashMap::new();
        let mut phrases = HashMap::new();
        // BTreeMap order makes ambiguous aliases resolve to the smallest code.
        for (iso, c) in &countries {
            aliases
                .entry(iso.to_lowercase())
                .or_insert_with(|| iso.clone());
            for label in std::iter::once(&c.name).chain(c.demonyms.iter()) {
                aliases
                    .entry(label.to_lowercase())
                    .or_insert_with(|| iso.clone());
                let toks = tokenize_lower(label);
                if !toks.is_empty() {
                    phrases.entry(toks).or_insert_with(|| iso.clone());
                }
            }
        }
        let max_phrase_len = phrases.keys().map(Vec::len).max().unwrap_or(0);
        Ok(CountryLexicon {
            countries,
            aliases,
            phrases,
            max_phrase_len,
        })
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn get(&self, iso: &str) -> Option<&Country> {
        self.countries.get(&iso.to_uppercase())
    }

    pub fn countries(&self) -> impl Iterator<Item = &Country> {
        self.countries.values()
    }

    pub fn region_of(&self, iso: &str) -> Option<Region> {
        self.get(iso).map(|c| c.region)
    }

    /// Resolves an iso code, country name or demonym (case-insensitive).
    pub fn resolve(&self, s: &str) -> Option<&Country> {
        let key = s.trim().to_lowercase();
        self.aliases
            .get(&key)
            .and_then(|iso| self.countries.get(iso))
    }

    /// Leftmost-longest scan of a token sequence for country names and
    /// demonyms. Matching is whole-token only.
    pub fn scan_tokens(&self, tokens: &[String]) -> Option<&Country> {
        for start in 0..tokens.len() {
            let longest = self.max_phrase_len.min(tokens.len() - start);
            for len in (1..=longest).rev() {
                if let Some(iso) = self.phrases.get(&tokens[start..start + len]) {
                    return self.countries.get(iso);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lexicon_has_130_countries() {
        let lex = CountryLexicon::bundled();
        assert_eq!(lex.len(), 130);
        assert!(lex.countries().all(|c| !c.demonyms.is_empty()));
        for region in Region::ALL {
            assert!(
                lex.countries().any(|c| c.region == region),
                "{region} unused"
            );
        }
    }

    #[test]
    fn resolves_codes_names_and_demonyms() {
        let lex = CountryLexicon::bundled();
        assert_eq!(lex.resolve("MA").unwrap().name, "Morocco");
        assert_eq!(lex.resolve("morocco").unwrap().iso_code, "MA");
        assert_eq!(lex.resolve("Moroccan").unwrap().iso_code, "MA");
        assert!(lex.resolve("Moroccoo").is_none());
    }

    #[test]
    fn region_parsing_ignores_spacing_and_case() {
        assert_eq!("middle east".parse::<Region>().unwrap(), Region::MiddleEast);
        assert_eq!(
            "NorthAmerica".parse::<Region>().unwrap(),
            Region::NorthAmerica
        );
        assert!("Antarctica".parse::<Region>().is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(CountryLexicon::from_csv_str("MA,Morocco,Africa,").is_err());
        assert!(CountryLexicon::from_csv_str("MAR,Morocco,Africa,Moroccan").is_err());
        assert!(CountryLexicon::from_csv_str("MA,Morocco,Atlantis,Moroccan").is_err());
        assert!(CountryLexicon::from_csv_str(
            "MA,Morocco,Africa,Moroccan\nMA,Morocco,Africa,Moroccan"
        )
        .is_err());
    }
}
