//! Leave-one-out evaluation of regression-predicted byte premiums, variant
//! selection, and a bundle of fitted models for predicting novel languages.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::regression::{
    dedupe_by_priority, fit_refs, premium_from_length_ratio, GroundTruthRecord, RegressionConfig,
    RegressionFeatures, RegressionModel, Variant,
};
use crate::tag::LanguageTag;

pub const DEFAULT_SCRIPT_THRESHOLD: usize = 5;

/// Which optional predictors are known for a language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FeatureAvailability {
    pub script: bool,
    pub family: bool,
}

/// Uncommon scripts always get variant III; otherwise the richest variant
/// whose predictors are available.
pub fn select_variant(
    script: &str,
    available: FeatureAvailability,
    script_counts: &BTreeMap<String, usize>,
    threshold: usize,
) -> Variant {
    let count = script_counts
        .get(&script.to_ascii_lowercase())
        .copied()
        .unwrap_or(0);
    if count < threshold {
        return Variant::III;
    }
    match available {
        FeatureAvailability {
            script: true,
            family: true,
        } => Variant::I,
        FeatureAvailability {
            script: true,
            family: false,
        } => Variant::II,
        _ => Variant::III,
    }
}

/// Number of records per (lowercase) script code.
pub fn script_counts(records: &[GroundTruthRecord]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.tag.script().to_string()).or_insert(0) += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct LooConfig {
    pub variants: Vec<Variant>,
    /// Scripts shared by at least this many languages count as common.
    pub script_threshold: usize,
    /// Bytes per character of the reference language.
    pub reference_bytes_per_char: f64,
    pub regression: RegressionConfig,
}

impl Default for LooConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            script_threshold: DEFAULT_SCRIPT_THRESHOLD,
            reference_bytes_per_char: 1.0,
            regression: RegressionConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    /// None when no language falls in the group.
    pub rmse_common: Option<f64>,
    pub rmse_uncommon: Option<f64>,
    pub n_common: usize,
    pub n_uncommon: usize,
    /// Predicted minus (clipped) measured premium.
    pub per_language_errors: BTreeMap<LanguageTag, f64>,
    pub common_languages: Vec<LanguageTag>,
    /// Languages left out because a required feature was missing.
    pub skipped: Vec<LanguageTag>,
}

impl VariantReport {
    pub fn rmse_pooled(&self) -> Option<f64> {
        rmse(self.per_language_errors.values().copied())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub script_threshold: usize,
    pub per_variant: BTreeMap<Variant, VariantReport>,
}

impl ValidationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// RMSE table with one row per script group and one column per variant.
    pub fn to_table(&self, digits: usize) -> String {
        let variants: Vec<&Variant> = self.per_variant.keys().collect();
        let t = self.script_threshold;
        let labels = [
            format!("Scripts with count >={t}"),
            format!("Scripts with count <{t}"),
        ];
        let width = labels.iter().map(String::len).max().unwrap_or(0);
        let col = digits + 4;
        let mut out = String::new();
        let _ = write!(out, "{:width$}", "");
        for v in &variants {
            let _ = write!(out, " {:>col$}", v.as_str());
        }
        out.push('\n');
        for (i, label) in labels.iter().enumerate() {
            let _ = write!(out, "{label:width$}");
            for v in &variants {
                let r = &self.per_variant[*v];
                let value = if i == 0 {
                    r.rmse_common
                } else {
                    r.rmse_uncommon
                };
                let cell = value.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"));
                let _ = write!(out, " {cell:>col$}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:width$}", "n (common/uncommon)");
        for v in &variants {
            let r = &self.per_variant[*v];
            let _ = write!(out, " {:>col$}", format!("{}/{}", r.n_common, r.n_uncommon));
        }
        out.push('\n');
        out
    }
}

pub(crate) fn rmse(errors: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = errors.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    (n > 0).then(|| (sum / n as f64).sqrt())
}

/// Training set of the fold that holds out `held_out`.
pub(crate) fn fold_training_set<'a>(
    records: &'a [&'a GroundTruthRecord],
    held_out: usize,
) -> Vec<&'a GroundTruthRecord> {
    records
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .map(|(_, r)| *r)
        .collect()
}

/// For each variant and each language: fit on all other languages, predict
/// the held-out length ratio, convert it to a premium with the language's
/// measured bytes-per-character, and compare with its clipped premium.
///
/// Records are first reduced to one per language (NLLB > FLORES > Bible).
/// Script commonality is counted on the full reduced set.
pub fn loo_validate(records: &[GroundTruthRecord], config: &LooConfig) -> Result<ValidationReport> {
    let records = dedupe_by_priority(records);
    if records.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "leave-one-out needs at least 3 languages, got {}",
            records.len()
        )));
    }
    let counts = script_counts(&records);
    let mut per_variant = BTreeMap::new();
    for &variant in &config.variants {
        let (eligible, skipped): (Vec<&GroundTruthRecord>, Vec<&GroundTruthRecord>) =
            records.iter().partition(|r| r.has_features_for(variant));
        let errors = par::map_range(eligible.len(), |i| -> Result<f64> {
            let train = fold_training_set(&eligible, i);
            debug_assert!(train.iter().all(|r| r.tag != eligible[i].tag));
            let model = fit_refs(&train, variant, &config.regression)?;
            let held = eligible[i];
            let lr = model.predict_length_ratio(&held.features())?.length_ratio;
            let predicted = premium_from_length_ratio(
                lr,
                held.bytes_per_char,
                config.reference_bytes_per_char,
            )?;
            Ok(predicted - held.clipped_premium(config.regression.clip))
        });
        let mut per_language_errors = BTreeMap::new();
        let mut common = Vec::new();
        let mut uncommon = Vec::new();
        let mut common_languages = Vec::new();
        for (r, e) in eligible.iter().zip(errors) {
            let e = e?;
            per_language_errors.insert(r.tag, e);
            if counts[r.tag.script()] >= config.script_threshold {
                common.push(e);
                common_languages.push(r.tag);
            } else {
                uncommon.push(e);
            }
        }
        per_variant.insert(
            variant,
            VariantReport {
                rmse_common: rmse(common.iter().copied()),
                rmse_uncommon: rmse(uncommon.iter().copied()),
                n_common: common.len(),
                n_uncommon: uncommon.len(),
                per_language_errors,
                common_languages,
                skipped: skipped.iter().map(|r| r.tag).collect(),
            },
        );
    }
    Ok(ValidationReport {
        script_threshold: config.script_threshold,
        per_variant,
    })
}

/// Fitted models for all variants plus what is needed to choose among them
/// and turn a length ratio into a premium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorSuite {
    pub format_version: u32,
    /// Language the predicted premiums are relative to.
    pub reference: LanguageTag,
    pub reference_bytes_per_char: f64,
    pub script_threshold: usize,
    pub script_counts: BTreeMap<String, usize>,
    pub models: BTreeMap<Variant, RegressionModel>,
}

/// A premium predicted from monolingual statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct PremiumPrediction {
    pub premium: f64,
    pub length_ratio: f64,
    pub variant: Variant,
    pub unseen_levels: Vec<String>,
}

impl PredictorSuite {
    /// Fits every variant on the deduplicated records. Variant I uses only
    /// records with a known family and is omitted if fewer than two remain.
    pub fn fit(
        records: &[GroundTruthRecord],
        reference: LanguageTag,
        reference_bytes_per_char: f64,
        script_threshold: usize,
        config: &RegressionConfig,
    ) -> Result<Self> {
        let records = dedupe_by_priority(records);
        let mut models = BTreeMap::new();
        for variant in Variant::ALL {
            let train: Vec<&GroundTruthRecord> = records
                .iter()
                .filter(|r| r.has_features_for(variant))
                .collect();
            if variant == Variant::I && train.len() < 2 {
                continue;
            }
            models.insert(variant, fit_refs(&train, variant, config)?);
        }
        Ok(Self {
            format_version: crate::regression::MODEL_FORMAT_VERSION,
            reference,
            reference_bytes_per_char,
            script_threshold,
            script_counts: script_counts(&records),
            models,
        })
    }

    pub fn select(&self, features: &RegressionFeatures) -> Variant {
        let available = FeatureAvailability {
            script: features.script.is_some(),
            family: features.family.is_some(),
        };
        let script = features.script.as_deref().unwrap_or("");
        let preferred = select_variant(
            script,
            available,
            &self.script_counts,
            self.script_threshold,
        );
        Variant::ALL
            .into_iter()
            .skip_while(|v| *v != preferred)
            .find(|v| self.models.contains_key(v))
            .unwrap_or(Variant::III)
    }

    /// Premium relative to `self.reference` of a language with the given
    /// features and measured bytes-per-character.
    pub fn predict(
        &self,
        features: &RegressionFeatures,
        bytes_per_char: f64,
    ) -> Result<PremiumPrediction> {
        let variant = self.select(features);
        let model = self.models.get(&variant).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "predictor suite has no model for variant {variant}"
            ))
        })?;
        let p = model.predict_length_ratio(features)?;
        Ok(PremiumPrediction {
            premium: premium_from_length_ratio(
                p.length_ratio,
                bytes_per_char,
                self.reference_bytes_per_char,
            )?,
            length_ratio: p.length_ratio,
            variant,
            unseen_levels: p.unseen_levels,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
