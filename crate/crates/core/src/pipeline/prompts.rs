use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CountryLexicon, Iso};

/// The ten prompt keywords, in emission order.
pub const KEYWORDS: [&str; 10] = [
    "novel",
    "unique",
    "new",
    "different",
    "surprising",
    "creative, desirable and useful",
    "original",
    "authentic",
    "traditional",
    "prototypical",
];

/// Keywords of the traditional group; every other keyword is creative.
pub const TRADITIONAL_KEYWORDS: [&str; 3] = ["authentic", "traditional", "prototypical"];

const FORMAT_REQUEST: &str = "Please return, in English only, the following:\n\
1. A recipe title.\n\
2. A list of ingredients.\n\
3. A set of cooking instructions.\n\n\
The instructions must use only the ingredients listed above, be clear and concise, \
and maintain the structure and order described. Title:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Basic,
    Persona,
    Blend,
    Definition,
}

impl Template {
    pub const ALL: [Template; 4] = [
        Template::Basic,
        Template::Persona,
        Template::Blend,
        Template::Definition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::Basic => "basic",
            Template::Persona => "persona",
            Template::Blend => "blend",
            Template::Definition => "definition",
        }
    }

    /// Whether the rendered prompt names a country.
    pub fn has_country(self) -> bool {
        self != Template::Blend
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s.trim().to_lowercase())
            .ok_or_else(|| format!("unknown template `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "country", rename_all = "snake_case")]
pub enum CountryMode {
    Origin,
    Variation(Iso),
    /// The template names no country.
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptSpec {
    pub prompt_id: String,
    pub dish_id: String,
    pub dish_name: String,
    /// The (dish, country) cell the prompt belongs to.
    pub country: Iso,
    pub country_mode: CountryMode,
    /// `None` for the empty keyword slot.
    pub keyword: Option<String>,
    pub template_id: Template,
    pub rendered_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub keywords: Vec<String>,
    /// Adds a slot without keyword after the listed ones.
    pub include_empty: bool,
    pub templates: Vec<Template>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            keywords: KEYWORDS.iter().map(|k| k.to_string()).collect(),
            include_empty: true,
            templates: Template::ALL.to_vec(),
        }
    }
}

impl PromptConfig {
    pub fn prompts_per_cell(&self) -> usize {
        (self.keywords.len() + usize::from(self.include_empty)) * self.templates.len()
    }
}

fn definition(keyword: &str) -> &'static str {
    match keyword {
        "novel" => {
            "A novel recipe introduces ingredients or techniques not usually found in the dish."
        }
        "unique" => "A unique recipe is unlike any other version of the dish.",
        "new" => "A new recipe has not been cooked or written before.",
        "different" => "A different recipe departs clearly from the usual version of the dish.",
        "surprising" => "A surprising recipe contains combinations a cook would not expect.",
        "creative, desirable and useful" => {
            "A creative recipe is new, while still being desirable to eat and useful to cook."
        }
        "original" => "An original recipe is a first-hand creation rather than a copy.",
        "authentic" => "An authentic recipe is faithful to how the dish is really cooked at home.",
        "traditional" => {
            "A traditional recipe follows the way the dish has been cooked for generations."
        }
        "prototypical" => {
            "A prototypical recipe is the most typical, reference version of the dish."
        }
        _ => "",
    }
}

fn sentence(parts: &[&str]) -> String {
    parts
        .iter()
        .filter(|p| !p.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Prompt text for one (keyword, template). `country` is the country name
/// and `nationality` its demonym.
pub fn render(
    template: Template,
    keyword: Option<&str>,
    dish_name: &str,
    country: &str,
    nationality: &str,
) -> String {
    let kw = keyword.unwrap_or("");
    let body = match template {
        Template::Basic => sentence(&["Create a", kw, nationality, "version of this recipe:", &format!("{dish_name}.")]),
        Template::Persona => format!(
            "You are knowledgeable about {country}, including its culture, history, and nuances, providing insightful and context-aware responses. {}",
            sentence(&["Create a", kw, "version of this recipe:", &format!("{dish_name}.")])
        ),
        Template::Blend => sentence(&["Create a", kw, "version of this recipe:", &format!("{dish_name}.")]),
        Template::Definition => sentence(&[
            "Create a",
            kw,
            nationality,
            "version of this recipe:",
            &format!("{dish_name}."),
            definition(kw),
            &format!("A {nationality} recipe uses the ingredients, techniques and traditions of {country}."),
        ]),
    };
    format!("{body}\n\n{FORMAT_REQUEST}")
}

/// Every prompt of every (dish, country) cell: origin first, then
/// variation countries in code order; keyword slots then templates.
pub fn emit_prompts(
    corpus: &Corpus,
    lexicon: &CountryLexicon,
    config: &PromptConfig,
) -> Vec<PromptSpec> {
    let mut slots: Vec<Option<&str>> = config.keywords.iter().map(|k| Some(k.as_str())).collect();
    if config.include_empty {
        slots.push(None);
    }
    let mut out = Vec::new();
    for dish in corpus.dishes() {
        let mut countries = vec![dish.origin_country.clone()];
        countries.extend(
            dish.variations
                .keys()
                .filter(|c| **c != dish.origin_country)
                .cloned(),
        );
        for iso in countries {
            let (name, demonym) = match lexicon.get(&iso) {
                Some(c) => (c.name.clone(), c.demonym().to_string()),
                None => (iso.clone(), iso.clone()),
            };
            for (si, kw) in slots.iter().enumerate() {
                for &t in &config.templates {
                    let country_mode = if !t.has_country() {
                        CountryMode::Blank
                    } else if iso == dish.origin_country {
                        CountryMode::Origin
                    } else {
                        CountryMode::Variation(iso.clone())
                    };
                    out.push(PromptSpec {
                        prompt_id: format!("{}:{}:{:02}:{}", dish.dish_id, iso, si, t.name()),
                        dish_id: dish.dish_id.clone(),
                        dish_name: dish.name.clone(),
                        country: iso.clone(),
                        country_mode,
                        keyword: kw.map(str::to_string),
                        template_id: t,
                        rendered_text: render(t, *kw, &dish.name, &name, &demonym),
                    });
                }
            }
        }
    }
    out
}

pub fn write_prompts_jsonl<W: Write>(prompts: &[PromptSpec], mut out: W) -> std::io::Result<()> {
    for p in prompts {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
