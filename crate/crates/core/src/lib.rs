//! Example-critiquing preference search.
//!
//! A [`Catalog`] of options is ranked under a [`PreferenceModel`] of stated
//! preferences. Alongside the best-ranked candidates, the [`suggest`] module
//! picks options that are dominated now but most likely to become optimal once
//! the user states a preference they have not expressed yet. The [`sim`]
//! module measures how well each suggestion strategy elicits hidden
//! preferences from simulated users.

pub mod catalog;
pub mod error;
pub mod fixtures;
pub mod oracle;
pub mod prefmodel;
pub mod sim;
pub mod suggest;

pub use catalog::{
    AttrKind, AttributeSchema, AttributeSpec, Catalog, CatalogFormat, CatalogSpec, OptionRecord,
    Value,
};
pub use error::{Error, Result};
pub use prefmodel::{
    Combinator, Comparison, Criterion, Direction, DominanceIndex, ModelEvaluation, Polarity,
    Preference, PreferenceKind, PreferenceModel,
};
pub use sim::{
    CatalogSource, ExperimentResult, HiddenUserModel, Reaction, RunRecord, SessionConfig,
    SimConfig, SimulatedUser,
};
pub use suggest::{
    HiddenMode, NumericFamily, Strategy, SuggestionConfig, SuggestionScore, SuggestionSet,
};
