//! Language identity: ISO 639-3 language plus ISO 15924 script, and the
//! four-way script-type taxonomy used by the length regressions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// An ISO 639-3 language code paired with an ISO 15924 script code.
///
/// The canonical text form is `<language>_<script>` with both parts in
/// lowercase, e.g. `mya_mymr`. Parsing accepts the script in any case.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageTag {
    language: [u8; 3],
    script: [u8; 4],
}

impl LanguageTag {
    pub fn new(language: &str, script: &str) -> Result<Self, Error> {
        let input = || format!("{language}_{script}");
        let lang = language.as_bytes();
        if lang.len() != 3 || !lang.iter().all(u8::is_ascii_lowercase) {
            return Err(Error::InvalidTag {
                input: input(),
                reason: "language must be three lowercase ASCII letters",
            });
        }
        let scr = script.as_bytes();
        if scr.len() != 4 || !scr.iter().all(u8::is_ascii_alphabetic) {
            return Err(Error::InvalidTag {
                input: input(),
                reason: "script must be four ASCII letters",
            });
        }
        let mut language = [0u8; 3];
        language.copy_from_slice(lang);
        let mut script = [0u8; 4];
        for (dst, src) in script.iter_mut().zip(scr) {
            *dst = src.to_ascii_lowercase();
        }
        Ok(Self { language, script })
    }

    pub fn language(&self) -> &str {
        // Constructed only from ASCII letters.
        std::str::from_utf8(&self.language).expect("ascii")
    }

    /// Script code in lowercase, as used in the canonical tag.
    pub fn script(&self) -> &str {
        std::str::from_utf8(&self.script).expect("ascii")
    }

    /// Script code in ISO 15924 title case (`Latn`, `Mymr`).
    pub fn script_title(&self) -> String {
        let s = self.script();
        let mut out = String::with_capacity(4);
        out.push(s.as_bytes()[0].to_ascii_uppercase() as char);
        out.push_str(&s[1..]);
        out
    }
}

impl FromStr for LanguageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lang, script) = s.split_once('_').ok_or_else(|| Error::InvalidTag {
            input: s.to_string(),
            reason: "expected <language>_<script>",
        })?;
        LanguageTag::new(lang, script)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.language(), self.script())
    }
}

impl fmt::Debug for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LanguageTag({self})")
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Writing-system class of a script.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptType {
    /// Symbols for both consonants and vowels.
    Alphabet,
    /// Consonant symbols; vowels often unwritten.
    Abjad,
    /// Consonant-vowel units with secondary vowel marking.
    Abugida,
    /// Symbols carrying semantic as well as phonetic information.
    Logography,
}

impl ScriptType {
    pub const ALL: [ScriptType; 4] = [
        ScriptType::Alphabet,
        ScriptType::Abjad,
        ScriptType::Abugida,
        ScriptType::Logography,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScriptType::Alphabet => "alphabet",
            ScriptType::Abjad => "abjad",
            ScriptType::Abugida => "abugida",
            ScriptType::Logography => "logography",
        }
    }

    /// Script type of an ISO 15924 script code (case-insensitive), if the
    /// script belongs to one of the four classes.
    pub fn for_script(script: &str) -> Option<ScriptType> {
        let key = script.to_ascii_lowercase();
        SCRIPT_TYPES
            .binary_search_by(|(code, _)| code.cmp(&key.as_str()))
            .ok()
            .map(|i| SCRIPT_TYPES[i].1)
    }
}

impl fmt::Display for ScriptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScriptType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alphabet" => Ok(ScriptType::Alphabet),
            "abjad" => Ok(ScriptType::Abjad),
            "abugida" => Ok(ScriptType::Abugida),
            "logography" => Ok(ScriptType::Logography),
            _ => Err(Error::InvalidScriptType(s.to_string())),
        }
    }
}

use ScriptType::{Abjad, Abugida, Alphabet, Logography};

// Sorted by code for binary search. Syllabaries (Cher, Vaii, Yiii, Kana
// alone) are left out since they fit none of the four classes.
const SCRIPT_TYPES: &[(&str, ScriptType)] = &[
    ("adlm", Alphabet),
    ("arab", Abjad),
    ("armn", Alphabet),
    ("bali", Abugida),
    ("batk", Abugida),
    ("beng", Abugida),
    ("bugi", Abugida),
    ("cakm", Abugida),
    ("cans", Abugida),
    ("copt", Alphabet),
    ("cyrl", Alphabet),
    ("deva", Abugida),
    ("ethi", Abugida),
    ("geor", Alphabet),
    ("goth", Alphabet),
    ("grek", Alphabet),
    ("gujr", Abugida),
    ("guru", Abugida),
    ("hang", Alphabet),
    ("hani", Logography),
    ("hans", Logography),
    ("hant", Logography),
    ("hebr", Abjad),
    ("java", Abugida),
    ("jpan", Logography),
    ("khmr", Abugida),
    ("knda", Abugida),
    ("lana", Abugida),
    ("laoo", Abugida),
    ("latn", Alphabet),
    ("lepc", Abugida),
    ("limb", Abugida),
    ("mand", Abjad),
    ("mlym", Abugida),
    ("mong", Alphabet),
    ("mtei", Abugida),
    ("mymr", Abugida),
    ("nkoo", Alphabet),
    ("olck", Alphabet),
    ("orya", Abugida),
    ("samr", Abjad),
    ("saur", Abugida),
    ("sinh", Abugida),
    ("sund", Abugida),
    ("syrc", Abjad),
    ("tale", Abugida),
    ("taml", Abugida),
    ("tavt", Abugida),
    ("telu", Abugida),
    ("tfng", Alphabet),
    ("tglg", Abugida),
    ("thaa", Abugida),
    ("thai", Abugida),
    ("tibt", Abugida),
];
