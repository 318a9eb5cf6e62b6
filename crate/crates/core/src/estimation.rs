//! Byte premiums measured directly from parallel text.
//!
//! Two estimators are kept apart on purpose. Pairwise bitexts use the mean
//! of per-segment byte ratios; multi-parallel corpora use the ratio of
//! column totals. The mean of ratios is not reciprocal:
//! `pairwise(A,B) * pairwise(B,A) >= 1`, with equality only when every
//! segment has the same ratio.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{Bitext, MultiParallelCorpus};
use crate::error::{Error, Result};
use crate::metrics::{byte_len, char_len};
use crate::par;
use crate::tag::LanguageTag;

/// Premiums (or length ratios) keyed by language.
pub type PremiumMap = BTreeMap<LanguageTag, f64>;

/// Share of skipped segments above which a pairwise estimate is flagged.
pub const SKIP_WARNING_FRACTION: f64 = 0.10;

/// What a ratio counts: UTF-8 bytes (byte premiums) or code points
/// (length ratios).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Measure {
    #[default]
    Bytes,
    Chars,
}

impl Measure {
    fn of(self, text: &str) -> usize {
        match self {
            Measure::Bytes => byte_len(text),
            Measure::Chars => char_len(text),
        }
    }
}

/// A measured premium `BP_{A/B}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseObservation {
    pub lang_a: LanguageTag,
    pub lang_b: LanguageTag,
    pub premium: f64,
    pub n_segments: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseEstimate {
    pub observation: PairwiseObservation,
    /// Segments dropped because one side was empty.
    pub skipped: usize,
}

impl PairwiseEstimate {
    pub fn skipped_fraction(&self) -> f64 {
        let total = self.skipped + self.observation.n_segments;
        self.skipped as f64 / total as f64
    }

    pub fn should_warn(&self) -> bool {
        self.skipped_fraction() > SKIP_WARNING_FRACTION
    }
}

/// Mean per-segment byte ratio of side A over side B.
pub fn pairwise_premium(bitext: &Bitext) -> Result<PairwiseEstimate> {
    pairwise_ratio(bitext, Measure::Bytes)
}

/// Mean per-segment ratio under `measure`; segments with an empty side are
/// skipped.
pub fn pairwise_ratio(bitext: &Bitext, measure: Measure) -> Result<PairwiseEstimate> {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (a, b) in bitext.segments() {
        let (na, nb) = (measure.of(a), measure.of(b));
        if na == 0 || nb == 0 {
            skipped += 1;
            continue;
        }
        sum += na as f64 / nb as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InsufficientData(format!(
            "no segment of {}/{} has text on both sides ({skipped} skipped)",
            bitext.lang_a, bitext.lang_b
        )));
    }
    Ok(PairwiseEstimate {
        observation: PairwiseObservation {
            lang_a: bitext.lang_a,
            lang_b: bitext.lang_b,
            premium: sum / used as f64,
            n_segments: used,
        },
        skipped,
    })
}

/// Estimates many bitexts; runs in parallel when the `parallel` feature is on.
pub fn pairwise_premiums_batch(bitexts: &[Bitext]) -> Vec<Result<PairwiseEstimate>> {
    par::map_collect(bitexts, pairwise_premium)
}

/// Ratio of each column's total bytes to the reference column's total.
pub fn multiparallel_premiums(
    corpus: &MultiParallelCorpus,
    reference: &LanguageTag,
) -> Result<PremiumMap> {
    multiparallel_ratios(corpus, reference, Measure::Bytes)
}

/// Column-total ratios under `measure`. With [`Measure::Chars`] these are
/// the length ratios relative to the reference.
pub fn multiparallel_ratios(
    corpus: &MultiParallelCorpus,
    reference: &LanguageTag,
    measure: Measure,
) -> Result<PremiumMap> {
    let totals = column_totals(corpus, measure);
    ratios_from_totals(corpus, reference, &totals)
}

pub(crate) fn column_totals(corpus: &MultiParallelCorpus, measure: Measure) -> Vec<u64> {
    par::map_range(corpus.languages().len(), |i| {
        corpus.column(i).map(|t| measure.of(t) as u64).sum()
    })
}

pub(crate) fn ratios_from_totals(
    corpus: &MultiParallelCorpus,
    reference: &LanguageTag,
    totals: &[u64],
) -> Result<PremiumMap> {
    let ref_idx = corpus
        .index_of(reference)
        .ok_or_else(|| Error::UnknownLanguage {
            tag: *reference,
            hint: " (reference is not a column of the corpus)".into(),
        })?;
    let denom = totals[ref_idx];
    if denom == 0 {
        return Err(Error::DegenerateCorpus(format!(
            "reference {reference} has no text"
        )));
    }
    let mut out = PremiumMap::new();
    for (i, (tag, &total)) in corpus.languages().iter().zip(totals).enumerate() {
        let value = if i == ref_idx {
            1.0
        } else {
            total as f64 / denom as f64
        };
        out.insert(*tag, value);
    }
    Ok(out)
}

/// Pearson's r between two sets of premiums over their shared languages.
pub fn cross_dataset_correlation(x: &PremiumMap, y: &PremiumMap) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .filter_map(|(k, &vx)| y.get(k).map(|&vy| (vx, vy)))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientOverlap {
            found: xs.len(),
            needed: 3,
        });
    }
    pearson(&xs, &ys)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData(
            "correlation of a constant series".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Formats a value at full round-trip precision, or rounded to `digits`.
pub fn format_value(value: f64, digits: Option<usize>) -> String {
    match digits {
        Some(d) => format!("{value:.d$}"),
        None => format!("{value:?}"),
    }
}

/// Writes `language,byte_premium` rows, optionally preceded by `#` comment lines.
pub fn write_premium_csv<W: Write>(
    mut out: W,
    premiums: &PremiumMap,
    comments: &[String],
    digits: Option<usize>,
) -> Result<()> {
    let ctx = |e| Error::Write {
        context: "writing premium csv".into(),
        source: e,
    };
    for c in comments {
        writeln!(out, "# {c}").map_err(ctx)?;
    }
    writeln!(out, "language,byte_premium").map_err(ctx)?;
    for (tag, v) in premiums {
        writeln!(out, "{tag},{}", format_value(*v, digits)).map_err(ctx)?;
    }
    Ok(())
}

/// Parsed premium CSV: the values plus any leading `#` comment lines.
pub struct PremiumCsv {
    pub premiums: PremiumMap,
    pub comments: Vec<String>,
}

pub fn read_premium_csv<R: Read>(mut input: R) -> Result<PremiumCsv> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| Error::Write {
        context: "reading premium csv".into(),
        source: e,
    })?;
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "language" {
        return Err(Error::Format {
            row: 1,
            message: format!("expected header language,byte_premium, got {headers:?}"),
        });
    }
    let mut premiums = PremiumMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let tag: LanguageTag = rec[0].parse()?;
        let value: f64 = rec[1].trim().parse().map_err(|_| Error::Format {
            row,
            message: format!("not a number: {:?}", &rec[1]),
        })?;
        if premiums.insert(tag, value).is_some() {
            return Err(Error::DuplicateLanguage(tag));
        }
    }
    Ok(PremiumCsv { premiums, comments })
}

/// Observation rows: `lang_a,lang_b,premium,n_segments`.
pub fn write_observations_csv<W: Write>(out: W, obs: &[PairwiseObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for o in obs {
        w.serialize(o)?;
    }
    w.flush().map_err(|e| Error::Write {
        context: "writing observations".into(),
        source: e,
    })?;
    Ok(())
}

pub fn read_observations_csv<R: Read>(input: R) -> Result<Vec<PairwiseObservation>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
