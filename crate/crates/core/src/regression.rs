//! Linear regressions predicting a language's length ratio (characters
//! relative to the reference language) from character entropy and
//! categorical writing-system and family features.
//!
//! Three predictor sets are supported:
//!
//! | variant | entropy | script type | script | family |
//! |---------|---------|-------------|--------|--------|
//! | I       | yes     | yes         | yes    | yes    |
//! | II      | yes     | yes         | yes    |        |
//! | III     | yes     | yes         |        |        |
//!
//! Categoricals are one-hot encoded with the most frequent level dropped as
//! the reference (ties broken alphabetically). Scripts are nested inside
//! script types: each script type gets its own block of script dummies with
//! its own most-frequent script as reference, so script and script-type
//! columns are never collinear.
//!
//! Regression targets are raw (not log) length ratios. When a record's byte
//! premium exceeds the clip threshold, its target length ratio is scaled
//! down by the same factor as the premium.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::MultiParallelCorpus;
use crate::error::{Error, Result};
use crate::estimation::PremiumMap;
use crate::estimation::{column_totals, ratios_from_totals, Measure};
use crate::metrics::{char_entropy, LanguageProfile};
use crate::par;
use crate::tag::{LanguageTag, ScriptType};

/// Model serialisation format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;
/// Length ratios are floored here so that derived premiums stay positive.
pub const MIN_LENGTH_RATIO: f64 = 1e-3;
pub const DEFAULT_CLIP: f64 = 4.0;
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    I,
    II,
    III,
}

impl Variant {
    /// In decreasing order of priority.
    pub const ALL: [Variant; 3] = [Variant::I, Variant::II, Variant::III];

    pub fn uses_script(self) -> bool {
        matches!(self, Variant::I | Variant::II)
    }

    pub fn uses_family(self) -> bool {
        self == Variant::I
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::I => "I",
            Variant::II => "II",
            Variant::III => "III",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Variant::I),
            "II" | "2" => Ok(Variant::II),
            "III" | "3" => Ok(Variant::III),
            _ => Err(Error::InvalidArgument(format!(
                "unknown regression variant {s:?}"
            ))),
        }
    }
}

/// Predictors for one language. `script` is a lowercase ISO 15924 code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFeatures {
    pub char_entropy: f64,
    pub script: Option<String>,
    pub script_type: ScriptType,
    pub family: Option<String>,
}

/// Corpus a ground-truth record was measured on. Declaration order is
/// priority order when a language occurs in several datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceDataset {
    #[serde(rename = "NLLB", alias = "nllb")]
    Nllb,
    #[serde(rename = "FLORES", alias = "flores")]
    Flores,
    #[serde(rename = "Bible", alias = "bible", alias = "BIBLE")]
    Bible,
}

impl FromStr for SourceDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nllb" => Ok(SourceDataset::Nllb),
            "flores" => Ok(SourceDataset::Flores),
            "bible" => Ok(SourceDataset::Bible),
            _ => Err(Error::InvalidArgument(format!(
                "unknown source dataset {s:?}"
            ))),
        }
    }
}

/// Measured statistics of one language, used as regression training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    #[serde(rename = "language")]
    pub tag: LanguageTag,
    pub length_ratio: f64,
    /// Unclipped premium.
    pub byte_premium: f64,
    pub bytes_per_char: f64,
    pub char_entropy: f64,
    pub script_type: ScriptType,
    pub family: Option<String>,
    pub source_dataset: SourceDataset,
}

impl GroundTruthRecord {
    pub fn clipped_premium(&self, clip: f64) -> f64 {
        self.byte_premium.min(clip)
    }

    /// Length ratio scaled by the same factor the premium was clipped by.
    pub fn target_length_ratio(&self, clip: f64) -> f64 {
        if self.byte_premium > clip {
            self.length_ratio * clip / self.byte_premium
        } else {
            self.length_ratio
        }
    }

    pub fn features(&self) -> RegressionFeatures {
        RegressionFeatures {
            char_entropy: self.char_entropy,
            script: Some(self.tag.script().to_string()),
            script_type: self.script_type,
            family: self.family.clone(),
        }
    }

    pub fn has_features_for(&self, variant: Variant) -> bool {
        !variant.uses_family() || self.family.is_some()
    }
}

/// Keeps one record per language, preferring NLLB over FLORES over Bible.
/// The result is sorted by tag.
pub fn dedupe_by_priority(records: &[GroundTruthRecord]) -> Vec<GroundTruthRecord> {
    let mut best: BTreeMap<LanguageTag, &GroundTruthRecord> = BTreeMap::new();
    for r in records {
        match best.get(&r.tag) {
            Some(cur) if cur.source_dataset <= r.source_dataset => {}
            _ => {
                best.insert(r.tag, r);
            }
        }
    }
    best.into_values().cloned().collect()
}

pub fn read_ground_truth_csv<R: Read>(input: R) -> Result<Vec<GroundTruthRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        let rec: GroundTruthRecord = rec?;
        for (name, v) in [
            ("length_ratio", rec.length_ratio),
            ("byte_premium", rec.byte_premium),
            ("bytes_per_char", rec.bytes_per_char),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Format {
                    row: out.len() + 2,
                    message: format!("{name} of {} must be positive, got {v}", rec.tag),
                });
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_ground_truth_csv<W: Write>(out: W, records: &[GroundTruthRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Write {
        context: "writing ground truth".into(),
        source: e,
    })?;
    Ok(())
}

/// Builds one record per column of a multi-parallel corpus: premiums and
/// length ratios from column totals, bytes-per-character and entropy from
/// the column's own text.
pub fn records_from_multiparallel<F>(
    corpus: &MultiParallelCorpus,
    reference: &LanguageTag,
    source: SourceDataset,
    family_of: F,
) -> Result<Vec<GroundTruthRecord>>
where
    F: Fn(&LanguageTag) -> Option<String>,
{
    let bytes = column_totals(corpus, Measure::Bytes);
    let chars = column_totals(corpus, Measure::Chars);
    let premiums = ratios_from_totals(corpus, reference, &bytes)?;
    let ratios = ratios_from_totals(corpus, reference, &chars)?;
    let entropies = par::map_range(corpus.languages().len(), |i| {
        let texts: Vec<&str> = corpus.column(i).collect();
        char_entropy(&texts)
    });
    let mut out = Vec::with_capacity(corpus.languages().len());
    for (i, (tag, entropy)) in corpus.languages().iter().zip(entropies).enumerate() {
        let script_type = ScriptType::for_script(tag.script())
            .ok_or_else(|| Error::UnknownScript(tag.script_title()))?;
        if chars[i] == 0 {
            return Err(Error::DegenerateCorpus(format!("{tag} has no text")));
        }
        out.push(GroundTruthRecord {
            tag: *tag,
            length_ratio: ratios[tag],
            byte_premium: premiums[tag],
            bytes_per_char: bytes[i] as f64 / chars[i] as f64,
            char_entropy: entropy?,
            script_type,
            family: family_of(tag),
            source_dataset: source,
        });
    }
    Ok(out)
}

/// Joins premiums and length ratios estimated elsewhere (e.g. fitted from
/// pairwise bitexts) with per-language text statistics. Languages missing
/// from any of the three inputs are returned separately.
pub fn records_from_tables<F>(
    premiums: &PremiumMap,
    length_ratios: &PremiumMap,
    profiles: &BTreeMap<LanguageTag, LanguageProfile>,
    source: SourceDataset,
    family_of: F,
) -> (Vec<GroundTruthRecord>, Vec<LanguageTag>)
where
    F: Fn(&LanguageTag) -> Option<String>,
{
    let mut records = Vec::new();
    let mut missing = Vec::new();
    for (tag, premium) in premiums {
        match (length_ratios.get(tag), profiles.get(tag)) {
            (Some(lr), Some(p)) => records.push(GroundTruthRecord {
                tag: *tag,
                length_ratio: *lr,
                byte_premium: *premium,
                bytes_per_char: p.bytes_per_char,
                char_entropy: p.char_entropy,
                script_type: p.script_type,
                family: p.family.clone().or_else(|| family_of(tag)),
                source_dataset: source,
            }),
            _ => missing.push(*tag),
        }
    }
    (records, missing)
}

/// One categorical predictor: coefficients of the non-reference levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCoefficients {
    pub reference: String,
    pub levels: BTreeMap<String, f64>,
}

impl LevelCoefficients {
    /// Coefficient of `level`, or None when the level was never seen.
    fn coefficient(&self, level: &str) -> Option<f64> {
        if level == self.reference {
            Some(0.0)
        } else {
            self.levels.get(level).copied()
        }
    }
}

/// A fitted length-ratio regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub format_version: u32,
    pub variant: Variant,
    pub intercept: f64,
    pub entropy_coef: f64,
    pub script_type: LevelCoefficients,
    /// Script dummies nested per script type (variants I and II).
    pub script: Option<BTreeMap<ScriptType, LevelCoefficients>>,
    /// Family dummies (variant I).
    pub family: Option<LevelCoefficients>,
    pub training_languages: Vec<LanguageTag>,
    pub target: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionConfig {
    /// Added to the normal-equation diagonal, intercept excluded.
    pub ridge: f64,
    /// Byte premiums above this are clipped before deriving targets.
    pub clip: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            ridge: DEFAULT_RIDGE,
            clip: DEFAULT_CLIP,
        }
    }
}

/// A length-ratio prediction with any unseen categorical levels that fell
/// back to the reference level.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthRatioPrediction {
    pub length_ratio: f64,
    pub unseen_levels: Vec<String>,
}

impl LengthRatioPrediction {
    pub fn has_warning(&self) -> bool {
        !self.unseen_levels.is_empty()
    }
}

fn reference_level<'a>(values: impl Iterator<Item = &'a str>) -> Option<(String, Vec<String>)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    // Most frequent; BTreeMap order breaks ties alphabetically.
    let reference = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(k, _)| k.to_string())?;
    let others = counts
        .keys()
        .filter(|k| **k != reference)
        .map(|k| k.to_string())
        .collect();
    Some((reference, others))
}

/// Column layout of the design matrix for one fit.
struct Encoding {
    variant: Variant,
    type_ref: String,
    type_levels: Vec<String>,
    scripts: BTreeMap<ScriptType, (String, Vec<String>)>,
    family: Option<(String, Vec<String>)>,
}

impl Encoding {
    fn new(records: &[&GroundTruthRecord], variant: Variant) -> Self {
        let (type_ref, type_levels) =
            reference_level(records.iter().map(|r| r.script_type.as_str())).expect("non-empty");
        let mut scripts = BTreeMap::new();
        if variant.uses_script() {
            for st in ScriptType::ALL {
                let members = records
                    .iter()
                    .filter(|r| r.script_type == st)
                    .map(|r| r.tag.script());
                if let Some(block) = reference_level(members) {
                    scripts.insert(st, block);
                }
            }
        }
        let family = variant
            .uses_family()
            .then(|| reference_level(records.iter().filter_map(|r| r.family.as_deref())))
            .flatten();
        Self {
            variant,
            type_ref,
            type_levels,
            scripts,
            family,
        }
    }

    fn n_cols(&self) -> usize {
        2 + self.type_levels.len()
            + self.scripts.values().map(|(_, l)| l.len()).sum::<usize>()
            + self.family.as_ref().map_or(0, |(_, l)| l.len())
    }

    fn row(&self, r: &GroundTruthRecord) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.n_cols());
        row.push(1.0);
        row.push(r.char_entropy);
        let st = r.script_type.as_str();
        row.extend(
            self.type_levels
                .iter()
                .map(|l| f64::from(u8::from(l == st))),
        );
        for (block_type, (_, levels)) in &self.scripts {
            let inside = *block_type == r.script_type;
            row.extend(
                levels
                    .iter()
                    .map(|l| f64::from(u8::from(inside && l == r.tag.script()))),
            );
        }
        if let Some((_, levels)) = &self.family {
            let fam = r.family.as_deref().unwrap_or_default();
            row.extend(levels.iter().map(|l| f64::from(u8::from(l == fam))));
        }
        row
    }

    fn into_model(
        self,
        coef: &DVector<f64>,
        training_languages: Vec<LanguageTag>,
    ) -> RegressionModel {
        let mut k = 2;
        let mut take = |levels: &[String]| -> BTreeMap<String, f64> {
            let m = levels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), coef[k + i]))
                .collect();
            k += levels.len();
            m
        };
        let script_type = LevelCoefficients {
            levels: take(&self.type_levels),
            reference: self.type_ref,
        };
        let script = self.variant.uses_script().then(|| {
            self.scripts
                .iter()
                .map(|(st, (reference, levels))| {
                    (
                        *st,
                        LevelCoefficients {
                            reference: reference.clone(),
                            levels: take(levels),
                        },
                    )
                })
                .collect()
        });
        let family = self
            .family
            .as_ref()
            .map(|(reference, levels)| LevelCoefficients {
                reference: reference.clone(),
                levels: take(levels),
            });
        RegressionModel {
            format_version: MODEL_FORMAT_VERSION,
            variant: self.variant,
            intercept: coef[0],
            entropy_coef: coef[1],
            script_type,
            script,
            family,
            training_languages,
            target: "length_ratio relative to reference language".into(),
        }
    }
}

/// Ordinary least squares (with optional ridge) of target length ratios on
/// the variant's one-hot design.
pub fn fit_regression(
    records: &[GroundTruthRecord],
    variant: Variant,
    config: &RegressionConfig,
) -> Result<RegressionModel> {
    let refs: Vec<&GroundTruthRecord> = records.iter().collect();
    fit_refs(&refs, variant, config)
}

pub(crate) fn fit_refs(
    records: &[&GroundTruthRecord],
    variant: Variant,
    config: &RegressionConfig,
) -> Result<RegressionModel> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "regression needs at least 2 records, got {}",
            records.len()
        )));
    }
    if config.ridge.is_nan() || config.ridge < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ridge must be non-negative, got {}",
            config.ridge
        )));
    }
    if let Some(r) = records.iter().find(|r| !r.has_features_for(variant)) {
        return Err(Error::FeatureMissing {
            language: r.tag.to_string(),
            field: "family",
        });
    }
    let enc = Encoding::new(records, variant);
    let (n, p) = (records.len(), enc.n_cols());
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = DVector::<f64>::zeros(n);
    for (i, r) in records.iter().enumerate() {
        for (j, v) in enc.row(r).into_iter().enumerate() {
            x[(i, j)] = v;
        }
        y[i] = r.target_length_ratio(config.clip);
    }
    let coef = solve_normal_equations(&x, &y, config.ridge)?;
    let mut training: Vec<LanguageTag> = records.iter().map(|r| r.tag).collect();
    training.sort();
    Ok(enc.into_model(&coef, training))
}

/// Solves `(X'X + ridge * D) b = X'y`, where D is the identity with a zero
/// in the intercept slot.
pub(crate) fn solve_normal_equations(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    ridge: f64,
) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    let deficient = || Error::RankDeficient { rows: n, cols: p };
    if ridge == 0.0 && n < p {
        return Err(deficient());
    }
    let mut gram = x.transpose() * x;
    for j in 1..p {
        gram[(j, j)] += ridge;
    }
    let rhs = x.transpose() * y;
    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None if ridge == 0.0 => return Err(deficient()),
        None => return gram.lu().solve(&rhs).ok_or_else(deficient),
    };
    if ridge == 0.0 {
        let diag = chol.l_dirty().diagonal();
        let max = diag.iter().fold(0.0f64, |m, v| m.max(v * v));
        let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v * v));
        if min <= max * 1e-13 {
            return Err(deficient());
        }
    }
    Ok(chol.solve(&rhs))
}

impl RegressionModel {
    /// Linear prediction, floored at [`MIN_LENGTH_RATIO`].
    pub fn predict_length_ratio(
        &self,
        features: &RegressionFeatures,
    ) -> Result<LengthRatioPrediction> {
        let mut value = self.intercept + self.entropy_coef * features.char_entropy;
        let mut unseen = Vec::new();
        let st = features.script_type.as_str();
        match self.script_type.coefficient(st) {
            Some(c) => value += c,
            None => unseen.push(format!("script_type={st}")),
        }
        if let Some(blocks) = &self.script {
            let script = features
                .script
                .as_deref()
                .ok_or(Error::FeatureMissing {
                    language: "<input>".into(),
                    field: "script",
                })?
                .to_ascii_lowercase();
            match blocks
                .get(&features.script_type)
                .and_then(|b| b.coefficient(&script))
            {
                Some(c) => value += c,
                None => unseen.push(format!("script={script}")),
            }
        }
        if let Some(fam) = &self.family {
            let family = features.family.as_deref().ok_or(Error::FeatureMissing {
                language: "<input>".into(),
                field: "family",
            })?;
            match fam.coefficient(family) {
                Some(c) => value += c,
                None => unseen.push(format!("family={family}")),
            }
        }
        Ok(LengthRatioPrediction {
            length_ratio: value.max(MIN_LENGTH_RATIO),
            unseen_levels: unseen,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: RegressionModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

/// Byte premium from a length ratio and the two bytes-per-character values.
pub fn premium_from_length_ratio(
    length_ratio: f64,
    bpc_target: f64,
    bpc_reference: f64,
) -> Result<f64> {
    for (name, v) in [
        ("length ratio", length_ratio),
        ("target bytes-per-char", bpc_target),
        ("reference bytes-per-char", bpc_reference),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(bpc_target * length_ratio / bpc_reference)
}
