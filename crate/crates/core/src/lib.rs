//! Information-theoretic measurement of cultural novelty in recipe corpora.
//!
//! The crate ingests paired human and model-generated recipe corpora,
//! scores every variation against its dish's reference community with five
//! divergence metrics, and produces the comparative reports built on them:
//! cultural-distance correlations, generation quality, ingredient grounding,
//! title country attribution, keyword gaps and layer-wise gaps.

pub mod corpus;
pub mod distances;
pub mod distrib;
pub mod ingredients;
pub mod novelty;
pub mod pipeline;
pub mod quality;
