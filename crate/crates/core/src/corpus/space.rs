use crate::distrib::{ppmi_matrix, CoocWindow, PpmiMatrix, TokenDistribution};

use super::{preprocess, CorpusError, Dish, Iso, PosTagger, Source, TokenStream};

/// Pooled reference texts of one (dish, country) community.
#[derive(Debug, Clone)]
pub struct KnowledgeSpace {
    pub dish_id: String,
    pub country: Iso,
    /// One non-empty stream per reference text.
    pub texts: Vec<TokenStream>,
    pub pooled: TokenDistribution,
    pub per_text: Vec<TokenDistribution>,
    pub ppmi: PpmiMatrix,
    pub window: CoocWindow,
}

impl KnowledgeSpace {
    /// Builds a space from already-processed streams. Empty streams are
    /// dropped; at least one non-empty stream is required.
    pub fn from_streams(
        dish_id: &str,
        country: &str,
        source: Source,
        streams: Vec<TokenStream>,
        window: CoocWindow,
    ) -> Result<Self, CorpusError> {
        let texts: Vec<TokenStream> = streams.into_iter().filter(|s| !s.is_empty()).collect();
        let empty = || CorpusError::EmptyCommunity {
            dish_id: dish_id.to_string(),
            country: country.to_string(),
            kind: source,
        };
        if texts.is_empty() {
            return Err(empty());
        }
        let pooled = TokenDistribution::from_tokens(texts.iter().flat_map(|s| s.tokens.iter()))
            .map_err(|_| empty())?;
        let per_text = texts
            .iter()
            .map(|s| TokenDistribution::from_tokens(&s.tokens))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| empty())?;
        let ppmi = ppmi_matrix(&texts, window);
        Ok(KnowledgeSpace {
            dish_id: dish_id.to_string(),
            country: country.to_string(),
            texts,
            pooled,
            per_text,
            ppmi,
            window,
        })
    }

    pub fn n_texts(&self) -> usize {
        self.texts.len()
    }

    pub fn pooled_token_count(&self) -> usize {
        self.texts.iter().map(TokenStream::len).sum()
    }

    /// All tokens of the community, concatenated in text order.
    pub fn pooled_stream(&self) -> TokenStream {
        TokenStream::new(
            self.texts
                .iter()
                .flat_map(|s| s.tokens.iter().cloned())
                .collect(),
            format!("{}:{}", self.dish_id, self.country),
            super::Stage::Filtered,
        )
    }
}

/// Community built from a dish's recipes for `country` with the given
/// source. References only exist for the origin country.
pub fn knowledge_space(
    dish: &Dish,
    country: &str,
    source_filter: Source,
    tagger: &dyn PosTagger,
    window: CoocWindow,
) -> Result<KnowledgeSpace, CorpusError> {
    let recipes: Vec<_> = match source_filter {
        Source::HumanReference => dish
            .references
            .iter()
            .filter(|r| r.country == country)
            .collect(),
        _ => dish
            .variations
            .get(country)
            .map(|v| v.iter().filter(|r| r.source == source_filter).collect())
            .unwrap_or_default(),
    };
    let streams = recipes
        .iter()
        .map(|r| preprocess(&r.instructions, tagger).with_source(r.recipe_id.clone()))
        .collect();
    KnowledgeSpace::from_streams(&dish.dish_id, country, source_filter, streams, window)
}
