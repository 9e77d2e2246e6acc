//! Nominal feature extraction.
//!
//! Five feature families are read off each instance's sentence:
//!
//! * `M`: morphology tag of the target (nouns and verbs only),
//! * `PLi`/`PRi`: coarse POS `i` tokens left/right of the target,
//! * `Ci`: presence of the `i`-th most frequent content word in the sentence,
//! * `ULi`/`URi`: the word `i` tokens left/right, restricted to the 19 most
//!   frequent words seen at that offset,
//! * `CL1`/`CR1`: as above, restricted to the 19 most frequent content words.
//!
//! Collocation features always have 21 values: the frequent words (padded
//! with unreachable placeholders when fewer than 19 exist), `(none)` for any
//! other word, and `(null)` when the offset falls outside the sentence.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Category, Instance, Pos, WordSample};
use crate::exec::Exec;

/// Number of frequent words retained per collocation feature.
pub const COLLOCATION_WORDS: usize = 19;
/// Number of co-occurrence features in set A.
pub const COOCCURRENCE_WORDS: usize = 3;
pub const NONE_VALUE: &str = "(none)";
pub const NULL_VALUE: &str = "(null)";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("offset {offset} is not a valid {kind} position")]
    InvalidOffset { offset: isize, kind: &'static str },
    #[error("cannot build a schema for an empty sample")]
    EmptySample,
    #[error("instance {row}: value {value:?} is not in the alphabet of feature {feature}")]
    OutsideAlphabet {
        row: usize,
        feature: String,
        value: String,
    },
    #[error("feature table: {0}")]
    Table(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureSetId {
    A,
    B,
    C,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 3] = [FeatureSetId::A, FeatureSetId::B, FeatureSetId::C];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetId::A => "A",
            FeatureSetId::B => "B",
            FeatureSetId::C => "C",
        }
    }

    /// Feature layout of the set, before dropping `M` for adjectives.
    fn layout(self) -> Vec<Slot> {
        use Slot::*;
        let pos = [Pos(-2), Pos(-1), Pos(1), Pos(2)];
        match self {
            FeatureSetId::A => {
                let mut v = vec![Morph];
                v.extend(pos);
                v.extend((0..COOCCURRENCE_WORDS).map(CoOccur));
                v
            }
            FeatureSetId::B => vec![
                Morph,
                Colloc(-2, false),
                Colloc(-1, false),
                Colloc(1, false),
                Colloc(2, false),
            ],
            FeatureSetId::C => {
                let mut v = vec![Morph];
                v.extend(pos);
                v.extend([Colloc(-1, true), Colloc(1, true)]);
                v
            }
        }
    }
}

impl FromStr for FeatureSetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(FeatureSetId::A),
            "B" | "b" => Ok(FeatureSetId::B),
            "C" | "c" => Ok(FeatureSetId::C),
            _ => Err(format!("unknown feature set {s:?} (expected A, B or C)")),
        }
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Morph,
    Pos(isize),
    CoOccur(usize),
    Colloc(isize, bool),
}

/// Function words excluded from content-word counts.
///
/// Pronouns and the primary auxiliaries (forms of *be*, *have*, *do*) are
/// deliberately absent: they behave as content words for this purpose.
const DEFAULT_STOPWORDS: &[&str] = &[
    // determiners
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "no",
    "all", "both", "either", "neither", "another", "such", "its", "their", "his", "her", "our",
    "my", "your",
    // prepositions
    "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
    "through", "during", "before", "after", "above", "below", "to", "from", "up", "down",
    "over", "under", "among", "within", "without", "upon", "onto", "off", "out", "per", "via",
    "than", "like", "near", "since", "until", "toward", "towards", "across", "along", "around",
    "behind", "beside", "besides", "beyond", "despite", "except", "inside", "outside",
    "throughout",
    // conjunctions
    "and", "or", "but", "nor", "so", "yet", "if", "because", "although", "though", "while",
    "whereas", "unless", "whether", "as",
    // modals and particles
    "will", "would", "can", "could", "may", "might", "shall", "should", "must", "not", "n't",
    "'s", "'",
    // punctuation
    ".", ",", ";", ":", "!", "?", "\"", "`", "``", "''", "--", "-", "(", ")", "[", "]", "{",
    "}", "...", "$", "%", "&",
];

/// Case-folded function-word list that defines which tokens are content words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Default for Stoplist {
    fn default() -> Self {
        Stoplist::from_words(DEFAULT_STOPWORDS.iter().copied())
    }
}

impl Stoplist {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stoplist {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    /// One word per line; blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Self {
        Stoplist::from_words(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Stoplist::parse(&text))
    }

    pub fn contains(&self, folded: &str) -> bool {
        self.words.contains(folded)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted word list, one per line.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&str> = self.words.iter().map(String::as_str).collect();
        words.sort_unstable();
        let mut out = words.join("\n");
        out.push('\n');
        out
    }
}

fn is_reserved(word: &str) -> bool {
    word.starts_with('(') && word.ends_with(')') && word.len() > 2
}

/// Decides content-word status for tokens of one sample.
struct ContentFilter<'a> {
    stoplist: &'a Stoplist,
    target_forms: HashSet<String>,
}

impl<'a> ContentFilter<'a> {
    fn new(sample: &WordSample, stoplist: &'a Stoplist) -> Self {
        let mut target_forms: HashSet<String> =
            sample.instances.iter().map(|i| i.target_token().folded.clone()).collect();
        target_forms.insert(sample.word.to_lowercase());
        ContentFilter {
            stoplist,
            target_forms,
        }
    }

    fn is_content(&self, folded: &str) -> bool {
        !self.stoplist.contains(folded)
            && !self.target_forms.contains(folded)
            && folded.chars().any(char::is_alphanumeric)
            && !is_reserved(folded)
    }
}

/// Highest counts first; ties in lexicographic order of the word.
fn top_k(counts: HashMap<&str, usize>, k: usize) -> Vec<String> {
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(w, _)| w.to_string()).collect()
}

/// The `k` most frequent content words over all sentences of the sample,
/// counted per token occurrence. The target word is never a candidate.
pub fn top_content_words(sample: &WordSample, k: usize, stoplist: &Stoplist) -> Vec<String> {
    let filter = ContentFilter::new(sample, stoplist);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for inst in &sample.instances {
        for (i, tok) in inst.tokens.iter().enumerate() {
            if i != inst.target && filter.is_content(&tok.folded) {
                *counts.entry(tok.folded.as_str()).or_insert(0) += 1;
            }
        }
    }
    top_k(counts, k)
}

/// The `k` most frequent words found exactly `offset` tokens from the target.
///
/// Unrestricted collocations accept offsets ±1 and ±2; content collocations
/// (`content_only`) accept ±1.
pub fn top_positional_words(
    sample: &WordSample,
    offset: isize,
    content_only: bool,
    k: usize,
    stoplist: &Stoplist,
) -> Result<Vec<String>, FeatureError> {
    let valid = if content_only {
        matches!(offset, -1 | 1)
    } else {
        matches!(offset, -2 | -1 | 1 | 2)
    };
    if !valid {
        return Err(FeatureError::InvalidOffset {
            offset,
            kind: if content_only {
                "content collocation"
            } else {
                "collocation"
            },
        });
    }
    let filter = ContentFilter::new(sample, stoplist);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for inst in &sample.instances {
        let Some(tok) = inst.at_offset(offset) else {
            continue;
        };
        if is_reserved(&tok.folded) || (content_only && !filter.is_content(&tok.folded)) {
            continue;
        }
        *counts.entry(tok.folded.as_str()).or_insert(0) += 1;
    }
    Ok(top_k(counts, k))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    /// Morphology tag of the target.
    Morph,
    /// Coarse POS at a signed offset; `other` outside the sentence.
    Pos { offset: isize },
    /// Presence of a frequent content word. `word` is `None` when the sample
    /// has fewer distinct content words than the feature's rank.
    CoOccurrence { rank: usize, word: Option<String> },
    /// Word at a signed offset restricted to a frequent-word list.
    Collocation {
        offset: isize,
        content_only: bool,
        words: Vec<String>,
    },
    /// Opaque values, e.g. a matrix read back from a table.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Duplicate-free value labels; extracted codes index into this.
    pub alphabet: Vec<String>,
}

impl FeatureSpec {
    pub fn cardinality(&self) -> usize {
        self.alphabet.len()
    }

    fn raw(name: String, alphabet: Vec<String>) -> Self {
        FeatureSpec {
            name,
            kind: FeatureKind::Raw,
            alphabet,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.features.iter().map(FeatureSpec::cardinality).collect()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Number of distinct feature vectors the schema can express.
    pub fn dimensionality(&self) -> u64 {
        self.features.iter().map(|f| f.cardinality() as u64).product()
    }
}

fn side_name(prefix: &str, offset: isize) -> String {
    let side = if offset < 0 { 'L' } else { 'R' };
    format!("{prefix}{side}{}", offset.unsigned_abs())
}

fn collocation_alphabet(words: &[String]) -> Vec<String> {
    let mut alphabet = words.to_vec();
    for i in words.len()..COLLOCATION_WORDS {
        alphabet.push(format!("(unused-{})", i + 1));
    }
    alphabet.push(NONE_VALUE.to_string());
    alphabet.push(NULL_VALUE.to_string());
    alphabet
}

/// Builds the schema of feature set `set` for `sample`.
pub fn build_schema(
    sample: &WordSample,
    set: FeatureSetId,
    stoplist: &Stoplist,
) -> Result<FeatureSchema, FeatureError> {
    if sample.is_empty() {
        return Err(FeatureError::EmptySample);
    }
    let mut features = Vec::new();
    let mut content: Option<Vec<String>> = None;
    for slot in set.layout() {
        match slot {
            Slot::Morph => {
                if !sample.category.uses_morph() {
                    continue;
                }
                let mut values: Vec<String> =
                    sample.instances.iter().map(|i| i.morph.clone()).collect();
                values.sort_unstable();
                values.dedup();
                features.push(FeatureSpec {
                    name: "M".into(),
                    kind: FeatureKind::Morph,
                    alphabet: values,
                });
            }
            Slot::Pos(offset) => features.push(FeatureSpec {
                name: side_name("P", offset),
                kind: FeatureKind::Pos { offset },
                alphabet: Pos::ALL.iter().map(|p| p.as_str().to_string()).collect(),
            }),
            Slot::CoOccur(rank) => {
                let words = content
                    .get_or_insert_with(|| top_content_words(sample, COOCCURRENCE_WORDS, stoplist));
                features.push(FeatureSpec {
                    name: format!("C{}", rank + 1),
                    kind: FeatureKind::CoOccurrence {
                        rank,
                        word: words.get(rank).cloned(),
                    },
                    alphabet: vec!["0".into(), "1".into()],
                });
            }
            Slot::Colloc(offset, content_only) => {
                let words =
                    top_positional_words(sample, offset, content_only, COLLOCATION_WORDS, stoplist)?;
                features.push(FeatureSpec {
                    name: side_name(if content_only { "C" } else { "U" }, offset),
                    alphabet: collocation_alphabet(&words),
                    kind: FeatureKind::Collocation {
                        offset,
                        content_only,
                        words,
                    },
                });
            }
        }
    }
    Ok(FeatureSchema { features })
}

/// Nominal codes for `n` instances over a schema, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMatrix {
    schema: FeatureSchema,
    n: usize,
    codes: Vec<u32>,
}

impl FeatureMatrix {
    /// Wraps row-major codes. Every code must index its feature's alphabet.
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<u32>>) -> Result<Self, FeatureError> {
        let q = schema.len();
        let cards = schema.cardinalities();
        let n = rows.len();
        let mut codes = Vec::with_capacity(n * q);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != q {
                return Err(FeatureError::Table(format!(
                    "row {i} has {} values, expected {q}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v as usize >= cards[j] {
                    return Err(FeatureError::OutsideAlphabet {
                        row: i,
                        feature: schema.features[j].name.clone(),
                        value: v.to_string(),
                    });
                }
            }
            codes.extend(row);
        }
        Ok(FeatureMatrix { schema, n, codes })
    }

    /// Builds a matrix from bare integer codes; feature `j` gets the alphabet
    /// `0..=max_j` and the name `f{j+1}`.
    pub fn from_codes(rows: Vec<Vec<u32>>) -> Result<Self, FeatureError> {
        let q = rows.first().map_or(0, Vec::len);
        let features = (0..q)
            .map(|j| {
                let max = rows.iter().filter_map(|r| r.get(j)).copied().max().unwrap_or(0);
                FeatureSpec::raw(format!("f{}", j + 1), (0..=max).map(|v| v.to_string()).collect())
            })
            .collect();
        FeatureMatrix::new(FeatureSchema { features }, rows)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let q = self.n_features();
        &self.codes[i * q..(i + 1) * q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn value(&self, i: usize, j: usize) -> u32 {
        self.codes[i * self.n_features() + j]
    }

    pub fn label(&self, i: usize, j: usize) -> &str {
        &self.schema.features[j].alphabet[self.value(i, j) as usize]
    }

    /// Tab-separated table: feature names, then one row of value labels per
    /// instance.
    pub fn to_table(&self) -> String {
        let mut out = self.schema.names().join("\t");
        out.push('\n');
        for i in 0..self.n {
            let labels: Vec<&str> = (0..self.n_features()).map(|j| self.label(i, j)).collect();
            out.push_str(&labels.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Reads a table written by [`FeatureMatrix::to_table`]. Alphabets are
    /// rebuilt from the observed labels in order of first appearance, so
    /// unobserved values of the original schema are lost.
    pub fn from_table(text: &str) -> Result<Self, FeatureError> {
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| FeatureError::Table("missing header".into()))?;
        let names: Vec<String> = header.split('\t').map(str::to_string).collect();
        let q = names.len();
        let mut alphabets: Vec<Vec<String>> = vec![Vec::new(); q];
        let mut lookup: Vec<HashMap<String, u32>> = vec![HashMap::new(); q];
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != q {
                return Err(FeatureError::Table(format!(
                    "line {}: {} fields, expected {q}",
                    i + 2,
                    fields.len()
                )));
            }
            let row = fields
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    *lookup[j].entry(f.to_string()).or_insert_with(|| {
                        alphabets[j].push(f.to_string());
                        (alphabets[j].len() - 1) as u32
                    })
                })
                .collect();
            rows.push(row);
        }
        let features = names
            .into_iter()
            .zip(alphabets)
            .map(|(name, alphabet)| FeatureSpec::raw(name, alphabet))
            .collect();
        FeatureMatrix::new(FeatureSchema { features }, rows)
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        FeatureMatrix::from_table(&text)
    }
}

/// Per-feature lookup prepared once before the row loop.
enum Coder<'a> {
    Morph(HashMap<&'a str, u32>),
    Pos(isize),
    CoOccur(Option<&'a str>),
    Colloc {
        offset: isize,
        words: HashMap<&'a str, u32>,
        none: u32,
        null: u32,
    },
    Raw,
}

impl Coder<'_> {
    fn code(&self, inst: &Instance) -> Option<u32> {
        match self {
            Coder::Morph(map) => map.get(inst.morph.as_str()).copied(),
            Coder::Pos(offset) => {
                Some(inst.at_offset(*offset).map_or(Pos::Other, |t| t.pos).index() as u32)
            }
            Coder::CoOccur(word) => Some(match word {
                Some(w) => inst
                    .tokens
                    .iter()
                    .enumerate()
                    .any(|(i, t)| i != inst.target && t.folded == *w)
                    as u32,
                None => 0,
            }),
            Coder::Colloc {
                offset,
                words,
                none,
                null,
            } => Some(match inst.at_offset(*offset) {
                None => *null,
                Some(t) => words.get(t.folded.as_str()).copied().unwrap_or(*none),
            }),
            Coder::Raw => None,
        }
    }
}

/// Encodes every instance of `sample` under `schema`.
pub fn extract(sample: &WordSample, schema: &FeatureSchema) -> Result<FeatureMatrix, FeatureError> {
    extract_with(sample, schema, Exec::default())
}

pub fn extract_with(
    sample: &WordSample,
    schema: &FeatureSchema,
    exec: Exec,
) -> Result<FeatureMatrix, FeatureError> {
    let coders: Vec<Coder> = schema
        .features
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Morph => Coder::Morph(
                f.alphabet.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect(),
            ),
            FeatureKind::Pos { offset } => Coder::Pos(*offset),
            FeatureKind::CoOccurrence { word, .. } => Coder::CoOccur(word.as_deref()),
            FeatureKind::Collocation { offset, words, .. } => Coder::Colloc {
                offset: *offset,
                words: words.iter().enumerate().map(|(i, w)| (w.as_str(), i as u32)).collect(),
                none: COLLOCATION_WORDS as u32,
                null: COLLOCATION_WORDS as u32 + 1,
            },
            FeatureKind::Raw => Coder::Raw,
        })
        .collect();

    let rows = exec.map_range(sample.len(), |i| {
        let inst = &sample.instances[i];
        coders
            .iter()
            .zip(&schema.features)
            .map(|(coder, spec)| {
                coder.code(inst).ok_or_else(|| FeatureError::OutsideAlphabet {
                    row: i,
                    feature: spec.name.clone(),
                    value: match spec.kind {
                        FeatureKind::Morph => inst.morph.clone(),
                        _ => "<raw>".into(),
                    },
                })
            })
            .collect::<Result<Vec<u32>, _>>()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    FeatureMatrix::new(schema.clone(), rows)
}

/// Size of the feature space of `set` for a word of `category`, using the
/// nominal morphology cardinalities 1 (adjective), 2 (noun) and 7 (verb).
pub fn dimensionality(set: FeatureSetId, category: Category) -> u64 {
    let morph = match category {
        Category::Adjective => 1,
        Category::Noun => 2,
        Category::Verb => 7,
    };
    set.layout()
        .into_iter()
        .map(|slot| match slot {
            Slot::Morph => morph,
            Slot::Pos(_) => Pos::ALL.len() as u64,
            Slot::CoOccur(_) => 2,
            Slot::Colloc(..) => COLLOCATION_WORDS as u64 + 2,
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Instance;

    fn sample(category: Category, sentences: &[(&str, usize, &str)]) -> WordSample {
        let instances = sentences
            .iter()
            .map(|(s, t, m)| Instance::from_tagged(s, *t, m, Some("s1")).unwrap())
            .collect();
        WordSample::new("concern", category, vec!["s1".into(), "s2".into()], instances).unwrap()
    }

    #[test]
    fn feature_space_sizes() {
        use Category::*;
        use FeatureSetId::*;
        assert_eq!(dimensionality(A, Adjective), 5_000);
        assert_eq!(dimensionality(A, Verb), 35_000);
        assert_eq!(dimensionality(B, Adjective), 194_481);
        assert_eq!(dimensionality(B, Verb), 1_361_367);
        assert_eq!(dimensionality(C, Adjective), 275_625);
        assert_eq!(dimensionality(C, Verb), 1_929_375);
    }

    #[test]
    fn adjective_set_a_has_no_morph() {
        let s = sample(Category::Adjective, &[("the/o chief/adj officer/n", 1, "")]);
        let schema = build_schema(&s, FeatureSetId::A, &Stoplist::default()).unwrap();
        assert_eq!(schema.names(), ["PL2", "PL1", "PR1", "PR2", "C1", "C2", "C3"]);
    }

    #[test]
    fn noun_set_b_shape() {
        let s = sample(
            Category::Noun,
            &[("the/o concern/n said/v", 1, "sg"), ("concerns/n grew/v", 0, "pl")],
        );
        let schema = build_schema(&s, FeatureSetId::B, &Stoplist::default()).unwrap();
        assert_eq!(schema.names(), ["M", "UL2", "UL1", "UR1", "UR2"]);
        assert_eq!(schema.cardinalities(), [2, 21, 21, 21, 21]);
        for f in &schema.features {
            let set: HashSet<&String> = f.alphabet.iter().collect();
            assert_eq!(set.len(), f.alphabet.len(), "{} alphabet has duplicates", f.name);
        }
    }

    #[test]
    fn verb_morph_cardinality_follows_observed_tags() {
        let tags = ["base", "past", "pastpart", "prespart", "3sg", "non3sg", "inf"];
        let sentences: Vec<(String, usize, &str)> =
            tags.iter().map(|t| (format!("they/o agree/v {t}/o"), 1, *t)).collect();
        let refs: Vec<(&str, usize, &str)> =
            sentences.iter().map(|(s, i, m)| (s.as_str(), *i, *m)).collect();
        let s = sample(Category::Verb, &refs);
        let schema = build_schema(&s, FeatureSetId::C, &Stoplist::default()).unwrap();
        assert_eq!(schema.get("M").unwrap().cardinality(), 7);
        assert_eq!(schema.names(), ["M", "PL2", "PL1", "PR1", "PR2", "CL1", "CR1"]);
    }

    #[test]
    fn boundary_values() {
        let s = sample(Category::Noun, &[("concern/n grew/v fast/adv", 0, "sg")]);
        let schema = build_schema(&s, FeatureSetId::B, &Stoplist::default()).unwrap();
        let m = extract(&s, &schema).unwrap();
        assert_eq!(m.label(0, 1), NULL_VALUE); // UL2
        assert_eq!(m.label(0, 2), NULL_VALUE); // UL1
        assert_eq!(m.label(0, 3), "grew");
        assert_eq!(m.label(0, 4), "fast");

        let schema = build_schema(&s, FeatureSetId::A, &Stoplist::default()).unwrap();
        let m = extract(&s, &schema).unwrap();
        assert_eq!(m.label(0, 1), "other"); // PL2 outside sentence
        assert_eq!(m.label(0, 3), "verb");
    }

    #[test]
    fn cooccurrence_is_presence() {
        let s = sample(
            Category::Noun,
            &[
                ("market/n concern/n rose/v", 1, "sg"),
                ("market/n concern/n rose/v", 1, "sg"),
                ("a/o concern/n", 1, "sg"),
            ],
        );
        let schema = build_schema(&s, FeatureSetId::A, &Stoplist::default()).unwrap();
        assert_eq!(
            schema.get("C1").unwrap().kind,
            FeatureKind::CoOccurrence {
                rank: 0,
                word: Some("market".into())
            }
        );
        let m = extract(&s, &schema).unwrap();
        let c1 = schema.names().iter().position(|n| *n == "C1").unwrap();
        assert_eq!([m.value(0, c1), m.value(1, c1), m.value(2, c1)], [1, 1, 0]);
        // only two distinct content words: C3 is constant 0
        let c3 = c1 + 2;
        assert_eq!(schema.features[c3].kind, FeatureKind::CoOccurrence { rank: 2, word: None });
        assert!(m.rows().all(|r| r[c3] == 0));
    }

    #[test]
    fn stopword_only_sentences_have_no_content_words() {
        let s = sample(Category::Noun, &[("the/o concern/n of/o a/o", 1, "sg")]);
        assert!(top_content_words(&s, 3, &Stoplist::default()).is_empty());
    }

    #[test]
    fn positional_offset_validation() {
        let s = sample(Category::Noun, &[("concern/n said/v", 0, "sg")]);
        let stop = Stoplist::default();
        assert!(top_positional_words(&s, 3, false, 19, &stop).is_err());
        assert!(top_positional_words(&s, 2, true, 19, &stop).is_err());
        assert!(top_positional_words(&s, 0, false, 19, &stop).is_err());
        assert!(top_positional_words(&s, -1, false, 19, &stop).unwrap().is_empty());
    }

    #[test]
    fn stoplist_file_format() {
        let s = Stoplist::parse("# comment\nThe\n\nof\n");
        assert!(s.contains("the") && s.contains("of"));
        assert_eq!(s.len(), 2);
        assert_eq!(Stoplist::parse(&s.to_text()), s);
    }

    #[test]
    fn table_round_trip_preserves_labels() {
        let s = sample(
            Category::Noun,
            &[("the/o concern/n said/v", 1, "sg"), ("concerns/n grew/v", 0, "pl")],
        );
        let schema = build_schema(&s, FeatureSetId::C, &Stoplist::default()).unwrap();
        let m = extract(&s, &schema).unwrap();
        let back = FeatureMatrix::from_table(&m.to_table()).unwrap();
        assert_eq!(back.to_table(), m.to_table());
    }

    #[test]
    fn from_codes_rejects_ragged_rows() {
        assert!(FeatureMatrix::from_codes(vec![vec![1, 2], vec![1]]).is_err());
    }
}
