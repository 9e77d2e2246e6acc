//! Instance data model and the line-delimited corpus format.
//!
//! A corpus file holds one ambiguous word. The first line is a header
//! record, every following line one instance:
//!
//! ```text
//! {"word":"drug","category":"noun","senses":["medicine","narcotic"]}
//! {"tokens":[["The","other"],["drug","noun"],["works","verb"]],"target":1,"morph":"singular","sense":"medicine"}
//! ```
//!
//! Files written by [`WordSample::to_corpus_string`] are canonical: loading
//! and re-serialising them reproduces the input byte for byte.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown POS tag {tag:?}")]
    UnknownPos { line: usize, tag: String },
    #[error("line {line}: unknown word category {tag:?}")]
    UnknownCategory { line: usize, tag: String },
    #[error("line {line}: target index out of range ({index} >= {len})")]
    TargetOutOfRange { line: usize, index: usize, len: usize },
    #[error("line {line}: sense {sense:?} is not in the declared inventory")]
    UnknownSense { line: usize, sense: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("empty corpus: missing header record")]
    MissingHeader,
    #[error("instance {index} has no gold sense")]
    MissingGold { index: usize },
}

/// Coarse part-of-speech classes used by the POS window features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 5] = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb, Pos::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lenient parser used for hand-written tagged strings: accepts the full
    /// names plus the usual one-letter and short forms.
    pub fn parse_short(tag: &str) -> Option<Pos> {
        match tag {
            "n" | "nn" => Some(Pos::Noun),
            "v" | "vb" => Some(Pos::Verb),
            "adj" | "j" | "jj" => Some(Pos::Adjective),
            "adv" | "r" | "rb" => Some(Pos::Adverb),
            "o" | "x" => Some(Pos::Other),
            _ => tag.parse().ok(),
        }
    }
}

impl FromStr for Pos {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pos::ALL.iter().copied().find(|p| p.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Part of speech of the ambiguous word itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Adjective,
    Noun,
    Verb,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Adjective, Category::Noun, Category::Verb];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Adjective => "adjective",
            Category::Noun => "noun",
            Category::Verb => "verb",
        }
    }

    /// Plural label used for rollup rows in report tables.
    pub fn plural(self) -> &'static str {
        match self {
            Category::Adjective => "adjectives",
            Category::Noun => "nouns",
            Category::Verb => "verbs",
        }
    }

    /// Whether the morphology feature applies to words of this category.
    pub fn uses_morph(self) -> bool {
        !matches!(self, Category::Adjective)
    }
}

impl FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL.iter().copied().find(|c| c.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// Surface form as it appeared in the file.
    pub text: String,
    /// Lower-cased form used for all frequency counting.
    pub folded: String,
    pub pos: Pos,
}

impl Token {
    pub fn new(text: impl Into<String>, pos: Pos) -> Self {
        let text = text.into();
        let folded = text.to_lowercase();
        Token { text, folded, pos }
    }
}

/// One occurrence of the ambiguous word in its sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub tokens: Vec<Token>,
    pub target: usize,
    pub morph: String,
    pub sense: Option<String>,
}

impl Instance {
    /// Builds an instance from a whitespace-separated `text/tag` string,
    /// e.g. `"the/o drug/n works/v"`. The tag after the last `/` is parsed
    /// with [`Pos::parse_short`].
    pub fn from_tagged(
        tagged: &str,
        target: usize,
        morph: &str,
        sense: Option<&str>,
    ) -> Result<Self, CorpusError> {
        let mut tokens = Vec::new();
        for item in tagged.split_whitespace() {
            let (text, tag) = item.rsplit_once('/').ok_or_else(|| CorpusError::Malformed {
                line: 0,
                message: format!("token {item:?} lacks a /tag"),
            })?;
            let pos = Pos::parse_short(tag).ok_or_else(|| CorpusError::UnknownPos {
                line: 0,
                tag: tag.to_string(),
            })?;
            tokens.push(Token::new(text, pos));
        }
        if target >= tokens.len() {
            return Err(CorpusError::TargetOutOfRange {
                line: 0,
                index: target,
                len: tokens.len(),
            });
        }
        Ok(Instance {
            tokens,
            target,
            morph: morph.to_string(),
            sense: sense.map(str::to_string),
        })
    }

    pub fn target_token(&self) -> &Token {
        &self.tokens[self.target]
    }

    /// Token at a signed offset from the target, if inside the sentence.
    pub fn at_offset(&self, offset: isize) -> Option<&Token> {
        let pos = self.target as isize + offset;
        if pos < 0 {
            return None;
        }
        self.tokens.get(pos as usize)
    }
}

/// All instances of one ambiguous word plus its sense inventory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordSample {
    pub word: String,
    pub category: Category,
    pub senses: Vec<String>,
    pub instances: Vec<Instance>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    word: String,
    category: String,
    senses: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    tokens: Vec<(String, String)>,
    target: usize,
    morph: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sense: Option<String>,
}

impl WordSample {
    /// Validates and assembles a sample. Instance line numbers in errors are
    /// 1-based file lines (header = line 1).
    pub fn new(
        word: impl Into<String>,
        category: Category,
        senses: Vec<String>,
        instances: Vec<Instance>,
    ) -> Result<Self, CorpusError> {
        let sample = WordSample {
            word: word.into(),
            category,
            senses,
            instances,
        };
        sample.validate()?;
        Ok(sample)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.word.is_empty() {
            return Err(CorpusError::Invalid {
                line: 1,
                message: "empty word".into(),
            });
        }
        if self.senses.len() < 2 {
            return Err(CorpusError::Invalid {
                line: 1,
                message: format!("sense inventory needs at least 2 senses, got {}", self.senses.len()),
            });
        }
        for (i, s) in self.senses.iter().enumerate() {
            if s.is_empty() || self.senses[..i].contains(s) {
                return Err(CorpusError::Invalid {
                    line: 1,
                    message: format!("empty or duplicate sense label {s:?}"),
                });
            }
        }
        for (i, inst) in self.instances.iter().enumerate() {
            let line = i + 2;
            if inst.target >= inst.tokens.len() {
                return Err(CorpusError::TargetOutOfRange {
                    line,
                    index: inst.target,
                    len: inst.tokens.len(),
                });
            }
            if let Some(t) = inst.tokens.iter().find(|t| t.text.is_empty()) {
                return Err(CorpusError::Invalid {
                    line,
                    message: format!("empty token text (pos {})", t.pos),
                });
            }
            if self.category.uses_morph() && inst.morph.is_empty() {
                return Err(CorpusError::Invalid {
                    line,
                    message: format!("morph tag required for {} targets", self.category),
                });
            }
            if let Some(sense) = &inst.sense {
                if !self.senses.contains(sense) {
                    return Err(CorpusError::UnknownSense {
                        line,
                        sense: sense.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Number of senses, i.e. the number of clusters to discover.
    pub fn k(&self) -> usize {
        self.senses.len()
    }

    pub fn sense_index(&self, sense: &str) -> Option<usize> {
        self.senses.iter().position(|s| s == sense)
    }

    /// Gold sense index of every instance.
    pub fn gold_labels(&self) -> Result<Vec<usize>, CorpusError> {
        self.instances
            .iter()
            .enumerate()
            .map(|(index, inst)| {
                inst.sense
                    .as_deref()
                    .and_then(|s| self.sense_index(s))
                    .ok_or(CorpusError::MissingGold { index })
            })
            .collect()
    }

    /// Gold count per sense, in inventory order.
    pub fn sense_counts(&self) -> Result<Vec<usize>, CorpusError> {
        let mut counts = vec![0; self.k()];
        for label in self.gold_labels()? {
            counts[label] += 1;
        }
        Ok(counts)
    }

    /// Proportion of each sense in the sample, in inventory order.
    pub fn sense_distribution(&self) -> Result<Vec<(String, f64)>, CorpusError> {
        let counts = self.sense_counts()?;
        let n = self.len() as f64;
        Ok(self
            .senses
            .iter()
            .zip(counts)
            .map(|(s, c)| (s.clone(), if n > 0.0 { c as f64 / n } else { 0.0 }))
            .collect())
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or(CorpusError::MissingHeader)?;
        let header: HeaderRecord =
            serde_json::from_str(header_line).map_err(|e| CorpusError::Malformed {
                line: 1,
                message: e.to_string(),
            })?;
        let category = header
            .category
            .parse()
            .map_err(|_| CorpusError::UnknownCategory {
                line: 1,
                tag: header.category.clone(),
            })?;

        let mut instances = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let rec: InstanceRecord =
                serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let tokens = rec
                .tokens
                .into_iter()
                .map(|(text, tag)| {
                    let pos = tag.parse().map_err(|_| CorpusError::UnknownPos {
                        line: line_no,
                        tag: tag.clone(),
                    })?;
                    if text.is_empty() {
                        return Err(CorpusError::Invalid {
                            line: line_no,
                            message: "empty token text".into(),
                        });
                    }
                    Ok(Token::new(text, pos))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if rec.target >= tokens.len() {
                return Err(CorpusError::TargetOutOfRange {
                    line: line_no,
                    index: rec.target,
                    len: tokens.len(),
                });
            }
            if let Some(sense) = &rec.sense {
                if !header.senses.contains(sense) {
                    return Err(CorpusError::UnknownSense {
                        line: line_no,
                        sense: sense.clone(),
                    });
                }
            }
            instances.push(Instance {
                tokens,
                target: rec.target,
                morph: rec.morph,
                sense: rec.sense,
            });
        }
        WordSample::new(header.word, category, header.senses, instances)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical serialisation: compact JSON, one record per LF-terminated line.
    pub fn to_corpus_string(&self) -> String {
        let mut out = String::new();
        let header = HeaderRecord {
            word: self.word.clone(),
            category: self.category.as_str().to_string(),
            senses: self.senses.clone(),
        };
        out.push_str(&serde_json::to_string(&header).expect("header serialises"));
        out.push('\n');
        for inst in &self.instances {
            let rec = InstanceRecord {
                tokens: inst
                    .tokens
                    .iter()
                    .map(|t| (t.text.clone(), t.pos.as_str().to_string()))
                    .collect(),
                target: inst.target,
                morph: inst.morph.clone(),
                sense: inst.sense.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("instance serialises"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        fs::write(path, self.to_corpus_string()).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Reads a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<WordSample, CorpusError> {
    WordSample::load(path)
}
