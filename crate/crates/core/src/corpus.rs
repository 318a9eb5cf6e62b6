//! Loading aligned text: two-file bitexts and tab-separated multi-parallel
//! corpora.
//!
//! One line is one segment. Text is kept exactly as stored on disk (no
//! Unicode normalization, no trimming), so byte counts match the
//! distributed files. Empty lines are kept so alignment is never shifted;
//! the ratio computations skip them later.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tag::LanguageTag;

/// Pairwise parallel text between two languages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitext {
    pub lang_a: LanguageTag,
    pub lang_b: LanguageTag,
    segments: Vec<(String, String)>,
}

impl Bitext {
    pub fn new(
        lang_a: LanguageTag,
        lang_b: LanguageTag,
        segments: Vec<(String, String)>,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InsufficientData("bitext has no segments".into()));
        }
        Ok(Self {
            lang_a,
            lang_b,
            segments,
        })
    }

    pub fn segments(&self) -> &[(String, String)] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// The same segments with the two sides swapped.
    pub fn swapped(&self) -> Bitext {
        Bitext {
            lang_a: self.lang_b,
            lang_b: self.lang_a,
            segments: self
                .segments
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    /// Applies `f` to every segment text on both sides.
    pub fn map_text(mut self, f: impl Fn(&str) -> String) -> Bitext {
        for (a, b) in &mut self.segments {
            *a = f(a);
            *b = f(b);
        }
        self
    }
}

/// Text aligned row-by-row across any number of languages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiParallelCorpus {
    languages: Vec<LanguageTag>,
    rows: Vec<Vec<String>>,
}

impl MultiParallelCorpus {
    pub fn new(languages: Vec<LanguageTag>, rows: Vec<Vec<String>>) -> Result<Self> {
        if languages.is_empty() {
            return Err(Error::Format {
                row: 1,
                message: "header declares no languages".into(),
            });
        }
        let mut seen = HashSet::with_capacity(languages.len());
        for tag in &languages {
            if !seen.insert(*tag) {
                return Err(Error::DuplicateLanguage(*tag));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != languages.len() {
                return Err(ragged(i + 2, row.len(), languages.len()));
            }
            if let Some(cell) = row.iter().find(|c| c.contains('\t') || c.contains('\n')) {
                return Err(Error::Format {
                    row: i + 2,
                    message: format!("cell contains a tab or newline: {cell:?}"),
                });
            }
        }
        Ok(Self { languages, rows })
    }

    pub fn languages(&self) -> &[LanguageTag] {
        &self.languages
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn index_of(&self, tag: &LanguageTag) -> Option<usize> {
        self.languages.iter().position(|t| t == tag)
    }

    /// All texts of one language, in row order.
    pub fn column(&self, index: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[index].as_str())
    }

    /// Parses the TSV representation: a header of canonical tags followed by
    /// one aligned tuple per line.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = split_lines(text).into_iter();
        let header = lines.next().ok_or(Error::Format {
            row: 1,
            message: "missing header row".into(),
        })?;
        let languages = header
            .split('\t')
            .map(str::parse)
            .collect::<Result<Vec<LanguageTag>>>()?;
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != languages.len() {
                return Err(ragged(i + 2, row.len(), languages.len()));
            }
            rows.push(row);
        }
        Self::new(languages, rows)
    }

    /// Canonical TSV: `\t` separators, `\n` after every row including the last.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.languages.iter().map(ToString::to_string).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Applies `f` to every cell.
    pub fn map_text(mut self, f: impl Fn(&str) -> String) -> MultiParallelCorpus {
        for row in &mut self.rows {
            for cell in row.iter_mut() {
                *cell = f(cell);
            }
        }
        self
    }
}

fn ragged(row: usize, found: usize, expected: usize) -> Error {
    Error::Format {
        row,
        message: format!("expected {expected} columns, found {found}"),
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Splits on `\n`. A single trailing newline does not start a new line.
fn split_lines(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').collect()
}

/// Loads a bitext from two line-aligned files, keeping at most
/// `max_segments` leading segments.
pub fn load_bitext(
    path_a: impl AsRef<Path>,
    path_b: impl AsRef<Path>,
    lang_a: LanguageTag,
    lang_b: LanguageTag,
    max_segments: Option<usize>,
) -> Result<Bitext> {
    let (path_a, path_b) = (path_a.as_ref(), path_b.as_ref());
    let text_a = read_utf8(path_a)?;
    let text_b = read_utf8(path_b)?;
    let lines_a = split_lines(&text_a);
    let lines_b = split_lines(&text_b);
    for (path, lines) in [(path_a, &lines_a), (path_b, &lines_b)] {
        if lines.is_empty() {
            return Err(Error::EmptyCorpus {
                path: PathBuf::from(path),
            });
        }
    }
    if lines_a.len() != lines_b.len() {
        return Err(Error::Alignment {
            path_a: path_a.to_path_buf(),
            lines_a: lines_a.len(),
            path_b: path_b.to_path_buf(),
            lines_b: lines_b.len(),
        });
    }
    let keep = max_segments.map_or(lines_a.len(), |m| m.min(lines_a.len()));
    let segments = lines_a
        .into_iter()
        .zip(lines_b)
        .take(keep)
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    Bitext::new(lang_a, lang_b, segments)
}

pub fn load_multiparallel(path: impl AsRef<Path>) -> Result<MultiParallelCorpus> {
    let path = path.as_ref();
    let text = read_utf8(path)?;
    if text.is_empty() {
        return Err(Error::EmptyCorpus {
            path: path.to_path_buf(),
        });
    }
    MultiParallelCorpus::parse_tsv(&text)
}

/// Keeps the first `min(n, rows)` rows.
pub fn sample_lines(corpus: &MultiParallelCorpus, n: usize) -> Result<MultiParallelCorpus> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    Ok(MultiParallelCorpus {
        languages: corpus.languages.clone(),
        rows: corpus.rows.iter().take(n).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tag(s: &str) -> LanguageTag {
        s.parse().unwrap()
    }

    fn write(dir: &tempfile::TempDir, name: &str, content: &[u8]) -> PathBuf {
        let p = dir.path().join(name);
        fs::File::create(&p).unwrap().write_all(content).unwrap();
        p
    }

    #[test]
    fn bitext_prefix_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.txt", b"one\ntwo\nthree\n");
        let b = write(&dir, "b.txt", b"un\ndeux\ntrois\n");
        let bt = load_bitext(&a, &b, tag("eng_latn"), tag("fra_latn"), Some(2)).unwrap();
        assert_eq!(
            bt.segments(),
            &[("one".into(), "un".into()), ("two".into(), "deux".into())]
        );
        let all = load_bitext(&a, &b, tag("eng_latn"), tag("fra_latn"), None).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn bitext_line_mismatch_names_both_counts() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.txt", b"1\n2\n3\n4\n5\n");
        let b = write(&dir, "b.txt", b"1\n2\n3\n4\n5\n6\n");
        let err = load_bitext(&a, &b, tag("eng_latn"), tag("fra_latn"), None).unwrap_err();
        match err {
            Error::Alignment {
                lines_a: 5,
                lines_b: 6,
                ..
            } => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bitext_invalid_utf8_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.txt", b"ok\nab\xffc\n");
        let b = write(&dir, "b.txt", b"ok\nok\n");
        let err = load_bitext(&a, &b, tag("eng_latn"), tag("fra_latn"), None).unwrap_err();
        assert!(matches!(err, Error::Decode { offset: 5, .. }), "{err:?}");
    }

    #[test]
    fn bitext_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.txt", b"");
        let b = write(&dir, "b.txt", b"x\n");
        let err = load_bitext(&a, &b, tag("eng_latn"), tag("fra_latn"), None).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus { .. }));
    }

    #[test]
    fn bitext_keeps_empty_lines() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.txt", b"x\n\ny");
        let b = write(&dir, "b.txt", b"x\nz\n\n");
        let bt = load_bitext(&a, &b, tag("eng_latn"), tag("fra_latn"), None).unwrap();
        assert_eq!(bt.segments()[1], (String::new(), "z".to_string()));
        assert_eq!(bt.segments()[2], ("y".to_string(), String::new()));
    }

    #[test]
    fn multiparallel_parse_and_roundtrip() {
        let text = "eng_latn\tfra_latn\nhello\tbonjour\nbye\tau revoir\n";
        let c = MultiParallelCorpus::parse_tsv(text).unwrap();
        assert_eq!(c.languages(), &[tag("eng_latn"), tag("fra_latn")]);
        assert_eq!(c.num_rows(), 2);
        assert_eq!(c.to_tsv(), text);
        assert_eq!(
            c.column(1).collect::<Vec<_>>(),
            vec!["bonjour", "au revoir"]
        );
    }

    #[test]
    fn multiparallel_duplicate_header() {
        let err = MultiParallelCorpus::parse_tsv("eng_latn\teng_latn\na\tb\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateLanguage(t) if t == tag("eng_latn")));
    }

    #[test]
    fn multiparallel_ragged_row_reports_row_number() {
        let err = MultiParallelCorpus::parse_tsv("eng_latn\tfra_latn\na\tb\nc\n").unwrap_err();
        assert!(matches!(err, Error::Format { row: 3, .. }), "{err:?}");
        // An embedded tab shows up as an extra column.
        let err = MultiParallelCorpus::parse_tsv("eng_latn\tfra_latn\na\tb\tc\n").unwrap_err();
        assert!(matches!(err, Error::Format { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn multiparallel_many_columns() {
        let langs: Vec<String> = (0..204)
            .map(|i| {
                let a = (b'a' + (i / 26) as u8) as char;
                let b = (b'a' + (i % 26) as u8) as char;
                format!("x{a}{b}_latn")
            })
            .collect();
        let mut text = langs.join("\t");
        text.push('\n');
        text.push_str(&vec!["t"; 204].join("\t"));
        text.push('\n');
        let c = MultiParallelCorpus::parse_tsv(&text).unwrap();
        assert_eq!(c.languages().len(), 204);
    }

    #[test]
    fn sampling_clamps_and_prefixes() {
        let rows: Vec<Vec<String>> = (0..20).map(|i| vec![i.to_string()]).collect();
        let c = MultiParallelCorpus::new(vec![tag("eng_latn")], rows).unwrap();
        assert_eq!(sample_lines(&c, 100).unwrap().num_rows(), 20);
        let s = sample_lines(&c, 5).unwrap();
        assert_eq!(
            s.column(0).collect::<Vec<_>>(),
            vec!["0", "1", "2", "3", "4"]
        );
        assert!(matches!(
            sample_lines(&c, 0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
