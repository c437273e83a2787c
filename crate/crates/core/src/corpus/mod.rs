//! Recipe corpus model, line-delimited JSON ingestion and the shared text
//! pipeline (tokenize, tag, filter, lemmatize).

mod lexicon;
mod space;
mod tagger;
pub mod text;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{Country, CountryLexicon, Iso, Region};
pub use space::{knowledge_space, KnowledgeSpace};
pub use tagger::{Pos, PosTagger, RuleTagger, TaggedToken};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("dish `{dish_id}` has no reference recipes")]
    NoReferences { dish_id: String },
    #[error("dish `{dish_id}` has reference recipes from several countries: {countries:?}")]
    InconsistentOrigin {
        dish_id: String,
        countries: Vec<Iso>,
    },
    #[error("no {kind:?} recipes for dish `{dish_id}` in country {country}")]
    EmptyCommunity {
        dish_id: String,
        country: Iso,
        kind: Source,
    },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
}

/// Where a recipe comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[serde(alias = "reference")]
    HumanReference,
    #[serde(alias = "variation")]
    HumanVariation,
    #[serde(alias = "model")]
    ModelGenerated,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::HumanReference => "human_reference",
            Source::HumanVariation => "human_variation",
            Source::ModelGenerated => "model_generated",
        }
    }

    pub fn is_human(self) -> bool {
        !matches!(self, Source::ModelGenerated)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub recipe_id: String,
    pub dish_id: String,
    pub country: Iso,
    pub source: Source,
    pub model_name: Option<String>,
    pub keyword: Option<String>,
    pub template_id: Option<String>,
    pub title: String,
    pub ingredients: Vec<String>,
    pub instructions: String,
}

impl Recipe {
    /// Grouping label: the model name, or `human` for human recipes.
    pub fn producer(&self) -> &str {
        match (&self.source, &self.model_name) {
            (Source::ModelGenerated, Some(m)) => m,
            (Source::ModelGenerated, None) => "unknown-model",
            _ => "human",
        }
    }
}

/// One line of the corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeRecord {
    pub recipe_id: String,
    pub dish_id: String,
    pub dish_name: String,
    pub country: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    pub title: String,
    pub ingredients: Vec<String>,
    pub instructions: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dish {
    pub dish_id: String,
    pub name: String,
    pub origin_country: Iso,
    pub references: Vec<Recipe>,
    /// Non-reference recipes (human variations and model generations) by country.
    pub variations: BTreeMap<Iso, Vec<Recipe>>,
}

impl Dish {
    /// Origin plus every variation country.
    pub fn countries(&self) -> BTreeSet<Iso> {
        let mut set: BTreeSet<Iso> = self.variations.keys().cloned().collect();
        set.insert(self.origin_country.clone());
        set
    }

    pub fn recipes(&self) -> impl Iterator<Item = &Recipe> {
        self.references
            .iter()
            .chain(self.variations.values().flatten())
    }

    pub fn non_reference(&self) -> impl Iterator<Item = &Recipe> {
        self.variations.values().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadIssueKind {
    UnresolvedCountry { country: String },
    MissingModelMetadata,
    EmptyIngredients,
    DuplicateRecipeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadIssue {
    pub line: usize,
    pub recipe_id: String,
    #[serde(flatten)]
    pub kind: LoadIssueKind,
}

/// Records excluded during loading.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines_read: usize,
    pub recipes_loaded: usize,
    pub issues: Vec<LoadIssue>,
}

/// Immutable set of dishes.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    dishes: BTreeMap<String, Dish>,
    pub report: LoadReport,
}

impl Corpus {
    pub fn from_dishes(dishes: impl IntoIterator<Item = Dish>) -> Self {
        Corpus {
            dishes: dishes.into_iter().map(|d| (d.dish_id.clone(), d)).collect(),
            report: LoadReport::default(),
        }
    }

    pub fn dishes(&self) -> impl Iterator<Item = &Dish> {
        self.dishes.values()
    }

    pub fn dish(&self, dish_id: &str) -> Option<&Dish> {
        self.dishes.get(dish_id)
    }

    pub fn len(&self) -> usize {
        self.dishes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dishes.is_empty()
    }

    pub fn recipes(&self) -> impl Iterator<Item = &Recipe> {
        self.dishes.values().flat_map(Dish::recipes)
    }

    pub fn n_recipes(&self) -> usize {
        self.recipes().count()
    }

    /// Writes the corpus back in the line-delimited JSON format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for dish in self.dishes() {
            for r in dish.recipes() {
                let rec = RecipeRecord {
                    recipe_id: r.recipe_id.clone(),
                    dish_id: r.dish_id.clone(),
                    dish_name: dish.name.clone(),
                    country: r.country.clone(),
                    source: r.source,
                    model_name: r.model_name.clone(),
                    keyword: r.keyword.clone(),
                    template_id: r.template_id.clone(),
                    title: r.title.clone(),
                    ingredients: r.ingredients.clone(),
                    instructions: r.instructions.clone(),
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

/// Loads a corpus file.
pub fn load_corpus(path: &Path, lexicon: &CountryLexicon) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_corpus(BufReader::new(file), lexicon).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Parses line-delimited JSON recipes. Blank lines are ignored.
pub fn read_corpus<R: BufRead>(reader: R, lexicon: &CountryLexicon) -> Result<Corpus, CorpusError> {
    let mut report = LoadReport::default();
    let mut seen_ids = HashSet::new();
    // dish_id -> (name, recipes in file order)
    let mut grouped: BTreeMap<String, (String, Vec<Recipe>)> = BTreeMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CorpusError::Io {
            path: String::new(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines_read += 1;
        let rec: RecipeRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let issue = |kind| LoadIssue {
            line: lineno,
            recipe_id: rec.recipe_id.clone(),
            kind,
        };

        let Some(country) = lexicon.resolve(&rec.country) else {
            report.issues.push(issue(LoadIssueKind::UnresolvedCountry {
                country: rec.country.clone(),
            }));
            continue;
        };
        if rec.source == Source::ModelGenerated
            && (rec.model_name.is_none() || rec.template_id.is_none())
        {
            report
                .issues
                .push(issue(LoadIssueKind::MissingModelMetadata));
            continue;
        }
        if rec.source != Source::ModelGenerated && rec.ingredients.is_empty() {
            report.issues.push(issue(LoadIssueKind::EmptyIngredients));
            continue;
        }
        if !seen_ids.insert(rec.recipe_id.clone()) {
            report.issues.push(issue(LoadIssueKind::DuplicateRecipeId));
            continue;
        }

        let entry = grouped
            .entry(rec.dish_id.clone())
            .or_insert_with(|| (rec.dish_name.clone(), Vec::new()));
        entry.1.push(Recipe {
            recipe_id: rec.recipe_id,
            dish_id: rec.dish_id,
            country: country.iso_code.clone(),
            source: rec.source,
            model_name: rec.model_name,
            keyword: rec.keyword,
            template_id: rec.template_id,
            title: rec.title,
            ingredients: rec.ingredients,
            instructions: rec.instructions,
        });
        report.recipes_loaded += 1;
    }

    let mut dishes = BTreeMap::new();
    for (dish_id, (name, recipes)) in grouped {
        let (references, others): (Vec<_>, Vec<_>) = recipes
            .into_iter()
            .partition(|r| r.source == Source::HumanReference);
        let origins: BTreeSet<Iso> = references.iter().map(|r| r.country.clone()).collect();
        let origin_country = match origins.len() {
            0 => return Err(CorpusError::NoReferences { dish_id }),
            1 => origins.into_iter().next().unwrap_or_default(),
            _ => {
                return Err(CorpusError::InconsistentOrigin {
                    dish_id,
                    countries: origins.into_iter().collect(),
                })
            }
        };
        let mut variations: BTreeMap<Iso, Vec<Recipe>> = BTreeMap::new();
        for r in others {
            variations.entry(r.country.clone()).or_default().push(r);
        }
        dishes.insert(
            dish_id.clone(),
            Dish {
                dish_id,
                name,
                origin_country,
                references,
                variations,
            },
        );
    }
    Ok(Corpus { dishes, report })
}

/// Processing stage of a token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    RawText,
    Filtered,
}

/// Ordered lowercase tokens for one text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub source_recipe: String,
    pub stage: Stage,
}

impl TokenStream {
    pub fn new(tokens: Vec<String>, source_recipe: impl Into<String>, stage: Stage) -> Self {
        TokenStream {
            tokens,
            source_recipe: source_recipe.into(),
            stage,
        }
    }

    pub fn with_source(mut self, recipe_id: impl Into<String>) -> Self {
        self.source_recipe = recipe_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined tokens.
    pub fn detokenize(&self) -> String {
        self.tokens.join(" ")
    }
}

impl AsRef<[String]> for TokenStream {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

/// Lowercases, tags and lemmatizes `text`, keeping nouns, verbs,
/// adjectives, adverbs and numbers in their original order.
pub fn preprocess(text: &str, tagger: &dyn PosTagger) -> TokenStream {
    let lower = text.to_lowercase();
    let toks = text::tokenize(&lower);
    let tags = tagger.tag(&toks);
    let tokens = tags
        .into_iter()
        .filter(|t| t.pos.is_content() && !t.lemma.is_empty())
        .map(|t| t.lemma)
        .collect();
    TokenStream::new(tokens, "", Stage::Filtered)
}

/// Lowercased tokens without tagging or filtering.
pub fn raw_stream(text: &str) -> TokenStream {
    TokenStream::new(text::tokenize_lower(text), "", Stage::RawText)
}
