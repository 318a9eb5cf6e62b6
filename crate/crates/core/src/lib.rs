//! Byte premiums: how many more (or fewer) UTF-8 bytes one language needs
//! than another to encode the same content.
//!
//! The crate covers the whole pipeline:
//!
//! * [`corpus`] loads bitexts and multi-parallel TSV corpora;
//! * [`metrics`] computes byte counts, code-point counts and character entropy;
//! * [`estimation`] measures pairwise and multi-parallel premiums;
//! * [`fitting`] fits one gauge-fixed premium per language from pairwise
//!   observations and provides table lookups, rebasing and size conversion;
//! * [`regression`] predicts length ratios from entropy and writing-system
//!   features and converts them to premiums;
//! * [`validation`] runs leave-one-out evaluation of those predictions;
//! * [`compression`] measures premiums of gzip-compressed text;
//! * [`registry`] bundles a premium table for 153 languages and resolves any
//!   pair by table lookup, parallel text or regression.
//!
//! ```
//! use byte_premium::registry::Registry;
//!
//! let registry = Registry::bundled().unwrap();
//! let kat = "kat_geor".parse().unwrap();
//! let eng = "eng_latn".parse().unwrap();
//! let premium = registry.table().pairwise_lookup(&kat, &eng).unwrap();
//! assert_eq!(premium, 4.3381046);
//! ```
//!
//! Data-parallel loops (leave-one-out folds, per-language statistics and
//! compression, batches of bitexts) use rayon when the default `parallel`
//! feature is enabled and run sequentially otherwise. Results are identical
//! either way.

pub mod compression;
pub mod corpus;
pub mod error;
pub mod estimation;
pub mod fitting;
pub mod metrics;
mod par;
pub mod registry;
pub mod regression;
pub mod tag;
pub mod validation;

pub use error::{Error, Result};
pub use estimation::{PairwiseObservation, PremiumMap};
pub use fitting::{fit_premiums, FitConfig, FitMode, PremiumTable};
pub use par::is_parallel;
pub use registry::Registry;
pub use regression::{GroundTruthRecord, RegressionModel, Variant};
pub use tag::{LanguageTag, ScriptType};
