//! Error type shared by every module of the crate.

use std::path::PathBuf;

use crate::fitting::PremiumTable;
use crate::tag::LanguageTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Write {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line counts differ: {path_a} has {lines_a} lines, {path_b} has {lines_b}")]
    Alignment {
        path_a: PathBuf,
        lines_a: usize,
        path_b: PathBuf,
        lines_b: usize,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    Decode { path: PathBuf, offset: usize },

    #[error("{path}: corpus is empty")]
    EmptyCorpus { path: PathBuf },

    #[error("format error at row {row}: {message}")]
    Format { row: usize, message: String },

    #[error("language {0} appears more than once")]
    DuplicateLanguage(LanguageTag),

    #[error("invalid language tag {input:?}: {reason}")]
    InvalidTag { input: String, reason: &'static str },

    #[error("unknown script type {0:?} (expected alphabet, abjad, abugida or logography)")]
    InvalidScriptType(String),

    #[error("no script type is registered for script {0:?}; supply one explicitly")]
    UnknownScript(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown language {tag}{hint}")]
    UnknownLanguage { tag: LanguageTag, hint: String },

    #[error("languages cannot be resolved: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    UnresolvedLanguages(Vec<LanguageTag>),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("only {found} languages overlap; at least {needed} are required")]
    InsufficientOverlap { found: usize, needed: usize },

    #[error(
        "observation graph is disconnected ({} components); add pairs bridging: {}",
        .components.len(),
        format_components(.components)
    )]
    DisconnectedGraph { components: Vec<Vec<LanguageTag>> },

    #[error("fit did not converge after {iterations} iterations (objective {objective:e}, gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        grad_norm: f64,
        best: Box<PremiumTable>,
    },

    #[error("language {language} is missing required feature `{field}`")]
    FeatureMissing {
        language: String,
        field: &'static str,
    },

    #[error("design matrix is rank deficient ({rows} rows, {cols} columns); use a positive ridge")]
    RankDeficient { rows: usize, cols: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical routines (non-convergence, rank
    /// deficiency) as opposed to bad input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::RankDeficient { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_components(components: &[Vec<LanguageTag>]) -> String {
    components
        .iter()
        .map(|c| {
            let names: Vec<String> = c.iter().map(ToString::to_string).collect();
            format!("{{{}}}", names.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}
