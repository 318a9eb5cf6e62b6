//! Bundled premiums and language metadata, and resolution of premiums for
//! any language pair.
//!
//! Resolution follows a strict order for each language of a pair:
//!
//! 1. a language in the premium table uses its table value;
//! 2. otherwise parallel text against a table language gives
//!    `BP_A = (Bytes_A / Bytes_B) * BP_B`;
//! 3. otherwise monolingual text is turned into character entropy and
//!    bytes-per-character and run through the regression suite.
//!
//! The bundled metadata lists script type and family for every bundled
//! language. Bytes-per-character and entropy columns are empty: they have to
//! be measured from corpora, which are not shipped.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{convert_with_premium, rescale_with, PremiumTable};
use crate::metrics::{byte_len, char_entropy, char_len};
use crate::regression::{RegressionFeatures, Variant};
use crate::tag::{LanguageTag, ScriptType};
use crate::validation::PredictorSuite;

pub const BUNDLED_PREMIUMS_CSV: &str = include_str!("../data/premiums.csv");
pub const BUNDLED_METADATA_CSV: &str = include_str!("../data/metadata.csv");
/// Decimal places of the bundled premium values.
pub const BUNDLED_DIGITS: usize = 7;
pub const BUNDLED_SOURCE: &str = "bundled";

/// Below this many non-empty lines, user text is rejected.
pub const MIN_TEXT_LINES: usize = 5;
/// Below this many non-empty lines, user text is accepted with a warning.
pub const RECOMMENDED_TEXT_LINES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PremiumSource {
    Bundled,
    Fitted,
    ParallelDerived,
    Predicted,
}

impl PremiumSource {
    fn of_table(source: &str) -> Self {
        if source == BUNDLED_SOURCE {
            PremiumSource::Bundled
        } else if source.starts_with("multiparallel") {
            PremiumSource::ParallelDerived
        } else {
            PremiumSource::Fitted
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageMetadata {
    pub tag: LanguageTag,
    pub script_type: ScriptType,
    pub family: Option<String>,
    pub bytes_per_char: Option<f64>,
    pub char_entropy: Option<f64>,
    pub premium: Option<f64>,
    pub premium_source: Option<PremiumSource>,
}

#[derive(Deserialize)]
struct MetadataRow {
    language: LanguageTag,
    script_type: ScriptType,
    family: Option<String>,
    bytes_per_char: Option<f64>,
    char_entropy: Option<f64>,
}

/// Reads `language,script_type,family,bytes_per_char,char_entropy`, checking
/// each script type against the script of the tag.
pub fn read_metadata_csv<R: Read>(input: R) -> Result<Vec<LanguageMetadata>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        let row: MetadataRow = row?;
        if let Some(expected) = ScriptType::for_script(row.language.script()) {
            if expected != row.script_type {
                return Err(Error::Format {
                    row: i + 2,
                    message: format!(
                        "{} is listed as {} but script {} is {}",
                        row.language,
                        row.script_type,
                        row.language.script_title(),
                        expected
                    ),
                });
            }
        }
        out.push(LanguageMetadata {
            tag: row.language,
            script_type: row.script_type,
            family: row.family.filter(|f| !f.is_empty()),
            bytes_per_char: row.bytes_per_char,
            char_entropy: row.char_entropy,
            premium: None,
            premium_source: None,
        });
    }
    Ok(out)
}

/// Aligned text pairing a novel language with a language of the table.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelEvidence {
    pub known: LanguageTag,
    pub novel_text: Vec<String>,
    pub known_text: Vec<String>,
}

/// Monolingual text of a novel language plus what is known about it.
#[derive(Clone, Debug, PartialEq)]
pub struct MonolingualEvidence {
    pub texts: Vec<String>,
    pub script_type: ScriptType,
    /// Lowercase ISO 15924 code; enables variants I and II.
    pub script: Option<String>,
    /// Enables variant I.
    pub family: Option<String>,
}

/// Extra inputs for a language that is not in the premium table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NovelEvidence {
    pub parallel: Option<ParallelEvidence>,
    pub monolingual: Option<MonolingualEvidence>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Table,
    Parallel,
    Regression(Variant),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Table => f.write_str("table"),
            Method::Parallel => f.write_str("parallel"),
            Method::Regression(v) => write!(f, "regression-{v}"),
        }
    }
}

/// Premium of one language relative to the table reference.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageResolution {
    pub tag: LanguageTag,
    pub premium: f64,
    pub method: Method,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    /// `BP_{A/B}`.
    pub premium: f64,
    /// The least direct method used for either language.
    pub method: Method,
    pub sides: [LanguageResolution; 2],
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Registry {
    table: PremiumTable,
    metadata: BTreeMap<LanguageTag, LanguageMetadata>,
    suite: Option<PredictorSuite>,
}

impl Registry {
    /// The bundled premium table and metadata.
    pub fn bundled() -> Result<Self> {
        let table = bundled_table()?;
        let metadata = read_metadata_csv(BUNDLED_METADATA_CSV.as_bytes())?;
        Ok(Self::new(table, metadata))
    }

    pub fn new(table: PremiumTable, metadata: Vec<LanguageMetadata>) -> Self {
        let mut registry = Self {
            table,
            metadata: metadata.into_iter().map(|m| (m.tag, m)).collect(),
            suite: None,
        };
        registry.sync_metadata();
        registry
    }

    /// Replaces the premium table, keeping metadata.
    pub fn with_table(mut self, table: PremiumTable) -> Self {
        self.table = table;
        self.sync_metadata();
        self
    }

    pub fn with_suite(mut self, suite: PredictorSuite) -> Self {
        self.suite = Some(suite);
        self
    }

    fn sync_metadata(&mut self) {
        let source = PremiumSource::of_table(self.table.source());
        for m in self.metadata.values_mut() {
            m.premium = self.table.premiums().get(&m.tag).copied();
            m.premium_source = m.premium.map(|_| source);
        }
    }

    pub fn table(&self) -> &PremiumTable {
        &self.table
    }

    pub fn suite(&self) -> Option<&PredictorSuite> {
        self.suite.as_ref()
    }

    pub fn metadata(&self, tag: &LanguageTag) -> Option<&LanguageMetadata> {
        self.metadata.get(tag)
    }

    pub fn all_metadata(&self) -> impl Iterator<Item = &LanguageMetadata> {
        self.metadata.values()
    }

    pub fn family_of(&self, tag: &LanguageTag) -> Option<String> {
        self.metadata.get(tag).and_then(|m| m.family.clone())
    }

    /// Premium of one language, relative to the table reference.
    pub fn resolve_language(
        &self,
        tag: &LanguageTag,
        evidence: Option<&NovelEvidence>,
    ) -> Result<LanguageResolution> {
        if let Ok(premium) = self.table.get(tag) {
            return Ok(LanguageResolution {
                tag: *tag,
                premium,
                method: Method::Table,
                warnings: vec![],
            });
        }
        let evidence = evidence.ok_or_else(|| Error::UnknownLanguage {
            tag: *tag,
            hint: format!(
                " (not among the {} known languages; provide parallel text pairing it with a \
                 known language, or at least {MIN_TEXT_LINES} lines of monolingual text plus its \
                 script type)",
                self.table.len()
            ),
        })?;
        if let Some(par) = &evidence.parallel {
            return self.resolve_parallel(tag, par);
        }
        if let Some(mono) = &evidence.monolingual {
            return self.resolve_monolingual(tag, mono);
        }
        Err(Error::InsufficientData(format!(
            "no parallel or monolingual text given for {tag}"
        )))
    }

    fn resolve_parallel(
        &self,
        tag: &LanguageTag,
        ev: &ParallelEvidence,
    ) -> Result<LanguageResolution> {
        let known_premium = self.table.get(&ev.known)?;
        if ev.novel_text.len() != ev.known_text.len() {
            return Err(Error::InvalidArgument(format!(
                "parallel text is misaligned: {} lines for {tag}, {} for {}",
                ev.novel_text.len(),
                ev.known_text.len(),
                ev.known
            )));
        }
        let mut warnings = Vec::new();
        check_line_count(tag, &ev.novel_text, &mut warnings)?;
        let novel_bytes: usize = ev.novel_text.iter().map(|t| byte_len(t)).sum();
        let known_bytes: usize = ev.known_text.iter().map(|t| byte_len(t)).sum();
        if known_bytes == 0 || novel_bytes == 0 {
            return Err(Error::DegenerateCorpus(
                "parallel text has an empty side".into(),
            ));
        }
        Ok(LanguageResolution {
            tag: *tag,
            premium: novel_bytes as f64 / known_bytes as f64 * known_premium,
            method: Method::Parallel,
            warnings,
        })
    }

    fn resolve_monolingual(
        &self,
        tag: &LanguageTag,
        ev: &MonolingualEvidence,
    ) -> Result<LanguageResolution> {
        let suite = self.suite.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{tag} needs a regression prediction but no predictor suite is loaded \
                 (fit one from ground-truth records first)"
            ))
        })?;
        let mut warnings = Vec::new();
        check_line_count(tag, &ev.texts, &mut warnings)?;
        let bytes: usize = ev.texts.iter().map(|t| byte_len(t)).sum();
        let chars: usize = ev.texts.iter().map(|t| char_len(t)).sum();
        let features = RegressionFeatures {
            char_entropy: char_entropy(&ev.texts)?,
            script: ev.script.as_ref().map(|s| s.to_ascii_lowercase()),
            script_type: ev.script_type,
            family: ev.family.clone(),
        };
        let prediction = suite.predict(&features, bytes as f64 / chars as f64)?;
        for level in &prediction.unseen_levels {
            warnings.push(format!(
                "{tag}: unseen level {level} treated as the reference level"
            ));
        }
        // The suite predicts relative to its own reference language.
        let scale = self.table.get(&suite.reference)?;
        Ok(LanguageResolution {
            tag: *tag,
            premium: prediction.premium * scale,
            method: Method::Regression(prediction.variant),
            warnings,
        })
    }

    /// `BP_{A/B}` by the strict table > parallel > regression cascade.
    pub fn resolve_pair(
        &self,
        a: &LanguageTag,
        b: &LanguageTag,
        evidence: &BTreeMap<LanguageTag, NovelEvidence>,
    ) -> Result<Resolution> {
        let ra = self.resolve_language(a, evidence.get(a))?;
        let rb = if a == b {
            ra.clone()
        } else {
            self.resolve_language(b, evidence.get(b))?
        };
        let premium = if a == b { 1.0 } else { ra.premium / rb.premium };
        let method = ra.method.max(rb.method);
        let mut warnings = ra.warnings.clone();
        if a != b {
            warnings.extend(rb.warnings.iter().cloned());
        }
        Ok(Resolution {
            premium,
            method,
            sides: [ra, rb],
            warnings,
        })
    }

    pub fn convert_size(
        &self,
        size_bytes: u64,
        from: &LanguageTag,
        to: &LanguageTag,
        evidence: &BTreeMap<LanguageTag, NovelEvidence>,
    ) -> Result<u64> {
        let r = self.resolve_pair(from, to, evidence)?;
        Ok(convert_with_premium(size_bytes, r.premium))
    }

    /// Divides each proportion by its language's premium and renormalises.
    pub fn rescale_proportions(
        &self,
        proportions: &BTreeMap<LanguageTag, f64>,
        evidence: &BTreeMap<LanguageTag, NovelEvidence>,
    ) -> Result<BTreeMap<LanguageTag, f64>> {
        let mut premiums = BTreeMap::new();
        let mut missing = Vec::new();
        for tag in proportions.keys() {
            match self.resolve_language(tag, evidence.get(tag)) {
                Ok(r) => {
                    premiums.insert(*tag, r.premium);
                }
                Err(Error::UnknownLanguage { .. }) => missing.push(*tag),
                Err(e) => return Err(e),
            }
        }
        if !missing.is_empty() {
            return Err(Error::UnresolvedLanguages(missing));
        }
        rescale_with(proportions, &premiums)
    }
}

fn check_line_count(tag: &LanguageTag, texts: &[String], warnings: &mut Vec<String>) -> Result<()> {
    let lines = texts.iter().filter(|t| !t.is_empty()).count();
    if lines < MIN_TEXT_LINES {
        return Err(Error::InsufficientData(format!(
            "{tag}: {lines} non-empty lines given, at least {MIN_TEXT_LINES} are required"
        )));
    }
    if lines < RECOMMENDED_TEXT_LINES {
        warnings.push(format!(
            "{tag}: only {lines} non-empty lines; statistics are stable from about \
             {RECOMMENDED_TEXT_LINES} lines"
        ));
    }
    Ok(())
}

pub fn bundled_table() -> Result<PremiumTable> {
    PremiumTable::read_csv(BUNDLED_PREMIUMS_CSV.as_bytes())
}
