//! Byte premiums of gzip-compressed text.
//!
//! Each language column is joined with `\n` into one document and
//! compressed once at level 9. The gzip header carries no file name and a
//! zero modification time, so output depends only on the input bytes.

use std::io::Write;

use flate2::{Compression, GzBuilder};

use crate::corpus::MultiParallelCorpus;
use crate::error::{Error, Result};
use crate::estimation::{ratios_from_totals, PremiumMap};
use crate::par;
use crate::tag::LanguageTag;

/// Gzip (RFC 1952) at level 9 with a zeroed mtime and no file name.
pub fn gzip_deterministic(data: &[u8]) -> Result<Vec<u8>> {
    let ctx = |e| Error::Write {
        context: "gzip compression".into(),
        source: e,
    };
    let mut enc = GzBuilder::new()
        .mtime(0)
        .write(Vec::new(), Compression::best());
    enc.write_all(data).map_err(ctx)?;
    enc.finish().map_err(ctx)
}

/// Column text joined by newlines.
pub fn column_document(corpus: &MultiParallelCorpus, index: usize) -> String {
    corpus.column(index).collect::<Vec<_>>().join("\n")
}

/// Compressed size of every column, in corpus language order.
pub fn compressed_sizes(corpus: &MultiParallelCorpus) -> Result<Vec<u64>> {
    par::map_range(corpus.languages().len(), |i| {
        gzip_deterministic(column_document(corpus, i).as_bytes()).map(|z| z.len() as u64)
    })
    .into_iter()
    .collect()
}

/// Ratio of each column's compressed size to the reference column's.
pub fn compressed_premiums(
    corpus: &MultiParallelCorpus,
    reference: &LanguageTag,
) -> Result<PremiumMap> {
    let ref_idx = corpus
        .index_of(reference)
        .ok_or_else(|| Error::UnknownLanguage {
            tag: *reference,
            hint: " (reference is not a column of the corpus)".into(),
        })?;
    if corpus.column(ref_idx).all(str::is_empty) {
        return Err(Error::DegenerateCorpus(format!(
            "reference {reference} has no text"
        )));
    }
    let sizes = compressed_sizes(corpus)?;
    ratios_from_totals(corpus, reference, &sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> LanguageTag {
        s.parse().unwrap()
    }

    #[test]
    fn header_is_deterministic() {
        let z = gzip_deterministic(b"hello hello hello").unwrap();
        assert_eq!(&z[..3], &[0x1f, 0x8b, 8]);
        // FLG has no FNAME bit, MTIME is zero, XFL=2 marks maximum compression.
        assert_eq!(z[3], 0);
        assert_eq!(&z[4..8], &[0, 0, 0, 0]);
        assert_eq!(z[8], 2);
        assert_eq!(z, gzip_deterministic(b"hello hello hello").unwrap());
    }

    #[test]
    fn identical_columns_give_one() {
        let rows = (0..10)
            .map(|i| vec![format!("row {i} text"), format!("row {i} text")])
            .collect();
        let c = MultiParallelCorpus::new(vec![tag("eng_latn"), tag("fra_latn")], rows).unwrap();
        let p = compressed_premiums(&c, &tag("eng_latn")).unwrap();
        assert!(p.values().all(|v| *v == 1.0));
    }

    #[test]
    fn errors_match_uncompressed_path() {
        let c = MultiParallelCorpus::new(
            vec![tag("eng_latn"), tag("fra_latn")],
            vec![vec!["".into(), "x".into()]],
        )
        .unwrap();
        assert!(matches!(
            compressed_premiums(&c, &tag("deu_latn")),
            Err(Error::UnknownLanguage { .. })
        ));
        assert!(matches!(
            compressed_premiums(&c, &tag("eng_latn")),
            Err(Error::DegenerateCorpus(_))
        ));
    }
}
