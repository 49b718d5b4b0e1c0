//! Self-organising maps read as concept-wise multipreference models.
//!
//! A trained map induces, for each category, a preference over domain
//! elements by relative distance from the category's best-matching units.
//! From those preferences the crate extracts the strict and typicality
//! inclusions the map satisfies, combines the per-category orders into a
//! global preferential relation, checks KLM postulates over it, and
//! replays incremental training as a sequence of revised models.
//!
//! Everything is generic over the scalar type; the `*64` / `*32` aliases
//! fix it.

pub mod checker;
pub mod concept;
pub mod datasets;
pub mod error;
pub mod global;
pub mod revision;
pub mod scalar;
pub mod semantic;
pub mod som;

pub use checker::{
    check_bottom, check_strict, check_typicality, derive_specificity, extract_kb, CheckReport,
    ExtractedKb, Method, SpecificityRelation, Status,
};
pub use concept::{
    parse_concept, parse_inclusion, parse_kb, ConceptExpr, Inclusion, InclusionKind,
};
pub use error::{Error, Result};
pub use global::{global_prefer, CwmModel, PropertyReport};
pub use revision::{initial_model, revise, run_trace, RevisionState, RevisionStep};
pub use scalar::Scalar;
pub use semantic::SemanticModel;
pub use som::{SomMap, Stimulus, TrainConfig};

pub type SomMap64 = som::SomMap<f64>;
pub type SomMap32 = som::SomMap<f32>;
pub type Stimulus64 = som::Stimulus<f64>;
pub type Stimulus32 = som::Stimulus<f32>;
pub type TrainConfig64 = som::TrainConfig<f64>;
pub type TrainConfig32 = som::TrainConfig<f32>;
pub type SemanticModel64 = semantic::SemanticModel<f64>;
pub type SemanticModel32 = semantic::SemanticModel<f32>;
pub type CwmModel64 = global::CwmModel<f64>;
pub type CwmModel32 = global::CwmModel<f32>;
pub type RevisionStep64 = revision::RevisionStep<f64>;
pub type RevisionStep32 = revision::RevisionStep<f32>;
