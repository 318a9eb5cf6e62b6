//! Monolingual text statistics: UTF-8 byte counts, code-point counts and
//! character entropy.
//!
//! A "character" here is a Unicode scalar value, not a grapheme cluster.
//! Scripts that use combining marks (most abugidas) therefore count vowel
//! signs as separate characters. Entropy is measured in bits over the pooled
//! code-point distribution, whitespace and punctuation included; use
//! [`char_entropy_filtered`] to drop classes of characters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tag::{LanguageTag, ScriptType};

pub fn byte_len(text: &str) -> usize {
    text.len()
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Shannon entropy (bits) of the code-point distribution pooled over `texts`.
pub fn char_entropy<S: AsRef<str>>(texts: &[S]) -> Result<f64> {
    char_entropy_filtered(texts, |_| true)
}

/// Like [`char_entropy`] but only counts characters for which `keep` is true.
pub fn char_entropy_filtered<S, F>(texts: &[S], keep: F) -> Result<f64>
where
    S: AsRef<str>,
    F: Fn(char) -> bool,
{
    let mut counts: HashMap<char, u64> = HashMap::new();
    for text in texts {
        for c in text.as_ref().chars().filter(|&c| keep(c)) {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    entropy_from_counts(counts.into_values().collect())
}

fn entropy_from_counts(mut counts: Vec<u64>) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData(
            "entropy needs at least one non-empty text".into(),
        ));
    }
    // Fixed summation order keeps the result bit-reproducible.
    counts.sort_unstable();
    let n = total as f64;
    let h = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Per-language monolingual statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub tag: LanguageTag,
    pub total_bytes: u64,
    pub total_chars: u64,
    pub bytes_per_char: f64,
    pub char_entropy: f64,
    pub script_type: ScriptType,
    pub family: Option<String>,
}

pub fn profile<S: AsRef<str>>(
    tag: LanguageTag,
    texts: &[S],
    script_type: ScriptType,
    family: Option<String>,
) -> Result<LanguageProfile> {
    let char_entropy = char_entropy(texts)?;
    let (mut total_bytes, mut total_chars) = (0u64, 0u64);
    for t in texts {
        total_bytes += byte_len(t.as_ref()) as u64;
        total_chars += char_len(t.as_ref()) as u64;
    }
    Ok(LanguageProfile {
        tag,
        total_bytes,
        total_chars,
        bytes_per_char: total_bytes as f64 / total_chars as f64,
        char_entropy,
        script_type,
        family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn byte_and_char_lengths() {
        assert_eq!(byte_len("abc"), 3);
        assert_eq!(byte_len("héllo"), 6);
        assert_eq!(byte_len("日本"), 6);
        assert_eq!(char_len("abc"), 3);
        assert_eq!(char_len("日本"), 2);
        assert_eq!(char_len(""), 0);
    }

    #[test]
    fn entropy_small_cases() {
        assert_eq!(char_entropy(&["aaaa"]).unwrap(), 0.0);
        assert_abs_diff_eq!(char_entropy(&["ab"]).unwrap(), 1.0, epsilon = 1e-15);
        // -(2/3)log2(2/3) - (1/3)log2(1/3)
        let expected =
            -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0 / 3.0) * (1.0f64 / 3.0).log2();
        assert_abs_diff_eq!(expected, 0.918_295_834_054_489_6, epsilon = 1e-15);
        assert_abs_diff_eq!(char_entropy(&["aab"]).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn entropy_ignores_empty_strings_and_pools() {
        assert_eq!(
            char_entropy(&["", "a", "", "b"]).unwrap(),
            char_entropy(&["ab"]).unwrap()
        );
        assert!(matches!(
            char_entropy(&["", ""]),
            Err(Error::InsufficientData(_))
        ));
        let none: [&str; 0] = [];
        assert!(char_entropy(&none).is_err());
    }

    #[test]
    fn entropy_whitespace_filter() {
        let with = char_entropy(&["a b"]).unwrap();
        let without = char_entropy_filtered(&["a b"], |c| !c.is_whitespace()).unwrap();
        assert_abs_diff_eq!(with, 3f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(without, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn profile_examples() {
        let eng = profile(
            "eng_latn".parse().unwrap(),
            &["abc"],
            ScriptType::Alphabet,
            Some("Indo-European".into()),
        )
        .unwrap();
        assert_eq!(eng.bytes_per_char, 1.0);
        let jpn = profile(
            "jpn_jpan".parse().unwrap(),
            &["日本"],
            ScriptType::Logography,
            Some("Japonic".into()),
        )
        .unwrap();
        assert_eq!(jpn.bytes_per_char, 3.0);
        assert_eq!(jpn.total_bytes, 6);
        assert_eq!(jpn.total_chars, 2);
    }
}
