//! Scoring discovered clusters against gold senses.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Category, CorpusError, WordSample};
use crate::stats;

/// Largest side for which the exhaustive mapping search is allowed.
pub const MAX_MAPPING_SIDE: usize = 8;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("mapping search limited to {MAX_MAPPING_SIDE}x{MAX_MAPPING_SIDE}, got {senses} senses x {clusters} clusters")]
    TooLarge { senses: usize, clusters: usize },
    #[error("no trials to aggregate")]
    NoTrials,
    #[error("no words in category {0}")]
    EmptyCategory(Category),
    #[error("no values to roll up")]
    NoValues,
    #[error("label {label} out of range (limit {limit})")]
    LabelOutOfRange { label: usize, limit: usize },
    #[error("gold and predicted label vectors differ in length ({gold} vs {predicted})")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Gold senses (rows) against discovered clusters (columns).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub senses: Vec<String>,
    pub n_clusters: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_labels(
        senses: Vec<String>,
        n_clusters: usize,
        gold: &[usize],
        predicted: &[usize],
    ) -> Result<Self, EvalError> {
        if gold.len() != predicted.len() {
            return Err(EvalError::LengthMismatch {
                gold: gold.len(),
                predicted: predicted.len(),
            });
        }
        let mut counts = vec![vec![0u64; n_clusters]; senses.len()];
        for (&g, &p) in gold.iter().zip(predicted) {
            if g >= senses.len() {
                return Err(EvalError::LabelOutOfRange {
                    label: g,
                    limit: senses.len(),
                });
            }
            if p >= n_clusters {
                return Err(EvalError::LabelOutOfRange {
                    label: p,
                    limit: n_clusters,
                });
            }
            counts[g][p] += 1;
        }
        Ok(ConfusionMatrix {
            senses,
            n_clusters,
            counts,
        })
    }

    /// Wraps raw counts; senses are labelled `s1, s2, …` unless given.
    pub fn from_counts(counts: Vec<Vec<u64>>, senses: Option<Vec<String>>) -> Result<Self, EvalError> {
        let n_clusters = counts.first().map_or(0, Vec::len);
        if let Some(line) = counts.iter().position(|r| r.len() != n_clusters) {
            return Err(EvalError::Parse {
                line: line + 1,
                message: format!("expected {n_clusters} columns"),
            });
        }
        let senses =
            senses.unwrap_or_else(|| (1..=counts.len()).map(|i| format!("s{i}")).collect());
        if senses.len() != counts.len() {
            return Err(EvalError::Parse {
                line: 0,
                message: format!("{} labels for {} rows", senses.len(), counts.len()),
            });
        }
        Ok(ConfusionMatrix {
            senses,
            n_clusters,
            counts,
        })
    }

    /// Whitespace- or comma-separated integer rows; `#` lines are comments.
    pub fn parse(text: &str, senses: Option<Vec<String>>) -> Result<Self, EvalError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<u64>().map_err(|e| EvalError::Parse {
                        line: i + 1,
                        message: format!("{s:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        ConfusionMatrix::from_counts(rows, senses)
    }

    pub fn n_senses(&self) -> usize {
        self.senses.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.n_clusters)
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    /// Instances whose cluster is mapped to their gold sense.
    pub fn agreement(&self, cluster_to_sense: &[Option<usize>]) -> u64 {
        cluster_to_sense
            .iter()
            .enumerate()
            .filter_map(|(c, s)| s.map(|s| self.counts[s][c]))
            .sum()
    }

    /// Text layout with actual senses as rows, discovered clusters as columns
    /// (headed by their mapped sense where one exists), margins, and the
    /// caption `<algorithm> - <n> correct`.
    pub fn render(&self, algorithm: &str, mapping: &Mapping) -> String {
        let headers: Vec<String> = (0..self.n_clusters)
            .map(|c| match mapping.cluster_to_sense.get(c).copied().flatten() {
                Some(s) => self.senses[s].clone(),
                None => format!("cluster{}", c + 1),
            })
            .collect();
        let label_w = self
            .senses
            .iter()
            .map(String::len)
            .chain(["Actual".len()])
            .max()
            .unwrap_or(6);
        let col_w = headers
            .iter()
            .map(String::len)
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .chain([self.total().to_string().len()])
            .max()
            .unwrap_or(1);

        let mut out = String::new();
        writeln!(out, "{:label_w$} | Discovered", "").unwrap();
        write!(out, "{:>label_w$} |", "Actual").unwrap();
        for h in &headers {
            write!(out, " {h:>col_w$}").unwrap();
        }
        writeln!(out, " |").unwrap();
        let rule = "-".repeat(label_w + 3 + (col_w + 1) * self.n_clusters + 2 + col_w + 1);
        writeln!(out, "{rule}").unwrap();
        for (s, row) in self.counts.iter().enumerate() {
            write!(out, "{:>label_w$} |", self.senses[s]).unwrap();
            for c in row {
                write!(out, " {c:>col_w$}").unwrap();
            }
            writeln!(out, " | {:>col_w$}", row.iter().sum::<u64>()).unwrap();
        }
        writeln!(out, "{rule}").unwrap();
        write!(out, "{:>label_w$} |", "").unwrap();
        for c in self.col_totals() {
            write!(out, " {c:>col_w$}").unwrap();
        }
        writeln!(out, " | {:>col_w$}", self.total()).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "{algorithm} - {} correct", mapping.agreement).unwrap();
        out
    }
}

/// Injective assignment of clusters to senses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mapping {
    /// Sense assigned to each cluster; `None` for clusters left unmapped
    /// when there are more clusters than senses.
    pub cluster_to_sense: Vec<Option<usize>>,
    pub agreement: u64,
}

impl Mapping {
    pub fn accuracy(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.agreement as f64 / n as f64
        }
    }
}

/// Visits every injective map from `0..from` into `0..into` in
/// lexicographic order.
fn for_each_injection(from: usize, into: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(
        depth: usize,
        from: usize,
        into: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == from {
            visit(current);
            return;
        }
        for t in 0..into {
            if !used[t] {
                used[t] = true;
                current.push(t);
                rec(depth + 1, from, into, used, current, visit);
                current.pop();
                used[t] = false;
            }
        }
    }
    let mut used = vec![false; into];
    rec(0, from, into, &mut used, &mut Vec::with_capacity(from), &mut visit);
}

/// Agreement-maximising cluster-to-sense mapping by exhaustive search.
///
/// The smaller of the two index sets is mapped injectively into the larger.
/// Among maximisers the lexicographically smallest map wins.
pub fn best_mapping(cm: &ConfusionMatrix) -> Result<Mapping, EvalError> {
    let (senses, clusters) = (cm.n_senses(), cm.n_clusters);
    if senses > MAX_MAPPING_SIDE || clusters > MAX_MAPPING_SIDE {
        return Err(EvalError::TooLarge { senses, clusters });
    }
    let mut best: Option<Mapping> = None;
    let mut consider = |cluster_to_sense: Vec<Option<usize>>| {
        let agreement = cm.agreement(&cluster_to_sense);
        if best.as_ref().is_none_or(|b| agreement > b.agreement) {
            best = Some(Mapping {
                cluster_to_sense,
                agreement,
            });
        }
    };
    if clusters <= senses {
        for_each_injection(clusters, senses, |map| {
            consider(map.iter().map(|&s| Some(s)).collect())
        });
    } else {
        for_each_injection(senses, clusters, |map| {
            let mut c2s = vec![None; clusters];
            for (s, &c) in map.iter().enumerate() {
                c2s[c] = Some(s);
            }
            consider(c2s)
        });
    }
    Ok(best.unwrap_or(Mapping {
        cluster_to_sense: vec![None; clusters],
        agreement: 0,
    }))
}

/// Most frequent gold sense and its share of the sample. Ties go to the
/// sense listed first in the inventory.
pub fn majority_classifier(sample: &WordSample) -> Result<(String, f64), EvalError> {
    let dist = sample.sense_distribution()?;
    let (mut best, mut share) = (0, f64::NEG_INFINITY);
    for (i, (_, p)) in dist.iter().enumerate() {
        if *p > share {
            best = i;
            share = *p;
        }
    }
    Ok((dist[best].0.clone(), share))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub word: String,
    pub set: String,
    pub algorithm: String,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub accuracy: f64,
    pub mapping: Mapping,
    pub confusion: ConfusionMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AggregateReport {
    pub mean: f64,
    /// Sample standard deviation; `None` with a single trial.
    pub std: Option<f64>,
    pub trials: usize,
}

impl AggregateReport {
    /// `.mmm±.ss`, the table cell format.
    pub fn cell(&self) -> String {
        format!("{}±{}", fmt_fraction(self.mean, 3), fmt_fraction(self.std.unwrap_or(0.0), 2))
    }
}

/// Formats a value in `[0, 1]` without the leading zero, e.g. `.734`.
pub fn fmt_fraction(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

pub fn aggregate_values(values: &[f64]) -> Result<AggregateReport, EvalError> {
    let mean = stats::mean(values).ok_or(EvalError::NoTrials)?;
    Ok(AggregateReport {
        mean,
        std: stats::sample_std(values),
        trials: values.len(),
    })
}

pub fn aggregate(trials: &[TrialReport]) -> Result<AggregateReport, EvalError> {
    let values: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
    aggregate_values(&values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rollup {
    /// Unweighted mean over the words of each requested category.
    pub per_category: Vec<(Category, f64)>,
    /// Unweighted mean of the category means.
    pub overall: f64,
}

/// Rolls per-word values up to category means and an overall mean of the
/// category means. Every category in `categories` must have at least one word.
pub fn category_rollup(
    values: &[(Category, f64)],
    categories: &[Category],
) -> Result<Rollup, EvalError> {
    if categories.is_empty() {
        return Err(EvalError::NoValues);
    }
    let mut per_category = Vec::with_capacity(categories.len());
    for &cat in categories {
        let xs: Vec<f64> = values
            .iter()
            .filter(|(c, _)| *c == cat)
            .map(|(_, v)| *v)
            .collect();
        let m = stats::mean(&xs).ok_or(EvalError::EmptyCategory(cat))?;
        per_category.push((cat, m));
    }
    let means: Vec<f64> = per_category.iter().map(|(_, m)| *m).collect();
    Ok(Rollup {
        overall: stats::mean(&means).unwrap(),
        per_category,
    })
}
