//! Config-driven experiment runner.
//!
//! Every (word, feature set, algorithm) cell is run for a number of seeded
//! trials. Features and dissimilarities are computed once per (word, set);
//! trials differ only in their RNG stream, which is derived from the master
//! seed and the cell coordinates so that results do not depend on scheduling
//! or on which other cells are configured.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agglom;
use crate::corpus::{Category, CorpusError, WordSample};
use crate::dissim::{self, DissimilarityMatrix};
use crate::em::{self, EmConfig};
use crate::eval::{self, fmt_fraction, AggregateReport, ConfusionMatrix, TrialReport};
use crate::exec::Exec;
use crate::features::{self, FeatureMatrix, FeatureSetId, Stoplist};
use crate::rng;
use crate::stats;

pub const DEFAULT_TRIALS: usize = 25;
/// Significance level for the table's bold and underline marks.
pub const TABLE_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Corpus { path: String, source: CorpusError },
    #[error(transparent)]
    Stoplist(#[from] features::FeatureError),
    #[cfg(feature = "parallel")]
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    McQuitty,
    Ward,
    Em,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::McQuitty, Algorithm::Ward, Algorithm::Em];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::McQuitty => "mcquitty",
            Algorithm::Ward => "ward",
            Algorithm::Em => "em",
        }
    }

    /// Column heading used in reports.
    pub fn title(self) -> &'static str {
        match self {
            Algorithm::McQuitty => "McQuitty",
            Algorithm::Ward => "Ward",
            Algorithm::Em => "EM",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mcquitty" => Ok(Algorithm::McQuitty),
            "ward" => Ok(Algorithm::Ward),
            "em" => Ok(Algorithm::Em),
            _ => Err(format!("unknown algorithm {s:?} (expected mcquitty, ward or em)")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub corpora: Vec<PathBuf>,
    pub sets: Vec<FeatureSetId>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub em: EmConfig,
    pub stopwords: Option<PathBuf>,
    pub output: PathBuf,
    /// Trial whose confusion matrices are written out.
    pub designated_trial: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    trials: Option<usize>,
    sets: Option<Vec<String>>,
    algorithms: Option<Vec<String>>,
    output: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    designated_trial: Option<usize>,
    em: Option<RawEm>,
    #[serde(default)]
    word: Vec<RawWord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEm {
    max_iter: Option<usize>,
    tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWord {
    corpus: PathBuf,
}

impl ExperimentConfig {
    /// Parses a TOML config. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ExperimentError> {
        let raw: RawConfig = toml::from_str(text)?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let sets = match raw.sets {
            None => FeatureSetId::ALL.to_vec(),
            Some(v) => v
                .iter()
                .map(|s| s.parse().map_err(ExperimentError::Config))
                .collect::<Result<_, _>>()?,
        };
        let algorithms = match raw.algorithms {
            None => Algorithm::ALL.to_vec(),
            Some(v) => v
                .iter()
                .map(|s| s.parse().map_err(ExperimentError::Config))
                .collect::<Result<_, _>>()?,
        };
        let defaults = EmConfig::default();
        let em = EmConfig {
            max_iter: raw.em.as_ref().and_then(|e| e.max_iter).unwrap_or(defaults.max_iter),
            tol: raw.em.as_ref().and_then(|e| e.tol).unwrap_or(defaults.tol),
        };
        let config = ExperimentConfig {
            corpora: raw.word.into_iter().map(|w| resolve(w.corpus)).collect(),
            sets,
            algorithms,
            trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
            seed: raw.seed,
            em,
            stopwords: raw.stopwords.map(resolve),
            output: resolve(raw.output.unwrap_or_else(|| PathBuf::from("results"))),
            designated_trial: raw.designated_trial.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.corpora.is_empty() {
            return fail("at least one [[word]] entry is required");
        }
        if self.sets.is_empty() {
            return fail("at least one feature set is required");
        }
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required");
        }
        if self.designated_trial >= self.trials {
            return fail("designated_trial must be below trials");
        }
        if self.em.max_iter == 0 || self.em.tol.is_nan() || self.em.tol <= 0.0 {
            return fail("em.max_iter and em.tol must be positive");
        }
        let unique = |n: usize, m: usize| n == m;
        if !unique(self.sets.iter().collect::<BTreeSet<_>>().len(), self.sets.len())
            || !unique(
                self.algorithms.iter().collect::<BTreeSet<_>>().len(),
                self.algorithms.len(),
            )
        {
            return fail("feature sets and algorithms must not repeat");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses all available cores.
    pub jobs: Option<usize>,
    /// Also write the raw cluster assignment of every trial.
    pub dump_clusters: bool,
}

/// One line of `results.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub word: String,
    pub set: String,
    pub algorithm: String,
    pub trial: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub correct: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
}

/// One line of `aggregates.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRecord {
    pub word: String,
    pub category: Category,
    pub set: String,
    pub algorithm: String,
    pub mean: f64,
    pub std: Option<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellFailure {
    pub word: String,
    pub set: FeatureSetId,
    pub algorithm: Algorithm,
    pub message: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}: {}", self.word, self.set, self.algorithm, self.message)
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub word: String,
    pub category: Category,
    pub set: FeatureSetId,
    pub algorithm: Algorithm,
    pub trials: Vec<TrialReport>,
    pub assignments: Vec<Vec<usize>>,
}

impl Cell {
    pub fn accuracies(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.accuracy).collect()
    }

    pub fn aggregate(&self) -> AggregateReport {
        eval::aggregate(&self.trials).expect("cells hold at least one trial")
    }
}

#[derive(Clone, Debug)]
pub struct WordInfo {
    pub word: String,
    pub category: Category,
    pub majority: f64,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub words: Vec<WordInfo>,
    /// Completed cells ordered by (word, set, algorithm).
    pub cells: Vec<Cell>,
    pub failures: Vec<CellFailure>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Seed of trial `trial` of a cell.
pub fn trial_seed(master: u64, word: &str, set: FeatureSetId, algorithm: Algorithm, trial: usize) -> u64 {
    rng::derive_seed(
        master,
        &[word, set.as_str(), algorithm.as_str(), &trial.to_string()],
    )
}

struct Prepared {
    matrix: FeatureMatrix,
    dissim: Option<DissimilarityMatrix>,
    rows: Option<Vec<Vec<f64>>>,
}

struct Task {
    word: usize,
    set: usize,
    algorithm: Algorithm,
    trial: usize,
}

struct Pool {
    #[cfg(feature = "parallel")]
    inner: rayon::ThreadPool,
}

impl Pool {
    fn new(jobs: Option<usize>) -> Result<Self, ExperimentError> {
        #[cfg(feature = "parallel")]
        {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                builder = builder.num_threads(j.max(1));
            }
            Ok(Pool {
                inner: builder.build()?,
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = jobs;
            Ok(Pool {})
        }
    }

    /// Maps `f` over `items`, returning results in input order.
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.inner.install(|| items.par_iter().map(f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        {
            items.iter().map(f).collect()
        }
    }
}

fn run_trial(
    sample: &WordSample,
    gold: &[usize],
    prepared: &Prepared,
    set: FeatureSetId,
    algorithm: Algorithm,
    trial: usize,
    config: &ExperimentConfig,
) -> Result<(TrialReport, Vec<usize>), String> {
    let k = sample.k();
    let seed = trial_seed(config.seed, &sample.word, set, algorithm, trial);
    let exec = Exec::Sequential;
    let assignment = match algorithm {
        Algorithm::McQuitty => {
            let d = prepared.dissim.as_ref().expect("dissimilarities prepared");
            agglom::mcquitty_with(d, k, seed, exec).map_err(|e| e.to_string())?.assignment
        }
        Algorithm::Ward => {
            let rows = prepared.rows.as_ref().expect("row vectors prepared");
            agglom::ward_with(rows, k, seed, exec).map_err(|e| e.to_string())?.assignment
        }
        Algorithm::Em => {
            em::fit_with(&prepared.matrix, k, seed, &config.em, exec, |_, _| {})
                .map_err(|e| e.to_string())?
                .assignment
        }
    };
    let confusion = ConfusionMatrix::from_labels(sample.senses.clone(), k, gold, &assignment)
        .map_err(|e| e.to_string())?;
    let mapping = eval::best_mapping(&confusion).map_err(|e| e.to_string())?;
    let report = TrialReport {
        word: sample.word.clone(),
        set: set.to_string(),
        algorithm: algorithm.as_str().to_string(),
        trial,
        seed,
        n: sample.len(),
        k,
        accuracy: mapping.accuracy(sample.len() as u64),
        mapping,
        confusion,
    };
    Ok((report, assignment))
}

/// Runs every configured cell and writes the report files into
/// `config.output`. Cell failures are collected, not raised.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunSummary, ExperimentError> {
    config.validate()?;
    let mut samples = Vec::with_capacity(config.corpora.len());
    for path in &config.corpora {
        let sample = WordSample::load(path).map_err(|source| ExperimentError::Corpus {
            path: path.display().to_string(),
            source,
        })?;
        if samples.iter().any(|s: &WordSample| s.word == sample.word) {
            return Err(ExperimentError::Config(format!("word {:?} listed twice", sample.word)));
        }
        samples.push(sample);
    }
    let stoplist = match &config.stopwords {
        Some(p) => Stoplist::load(p)?,
        None => Stoplist::default(),
    };
    let pool = Pool::new(options.jobs)?;

    let mut words = Vec::with_capacity(samples.len());
    let mut golds = Vec::with_capacity(samples.len());
    for s in &samples {
        let gold = s.gold_labels().map_err(|source| ExperimentError::Corpus {
            path: s.word.clone(),
            source,
        })?;
        let (_, majority) = eval::majority_classifier(s).map_err(|e| {
            ExperimentError::Config(format!("{}: {e}", s.word))
        })?;
        golds.push(gold);
        words.push(WordInfo {
            word: s.word.clone(),
            category: s.category,
            majority,
        });
    }

    let needs_dissim = config
        .algorithms
        .iter()
        .any(|a| matches!(a, Algorithm::McQuitty | Algorithm::Ward));
    let needs_rows = config.algorithms.contains(&Algorithm::Ward);
    let pairs: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|w| (0..config.sets.len()).map(move |s| (w, s)))
        .collect();
    let prepared: Vec<Result<Prepared, String>> = pool.map(&pairs, |&(w, s)| {
        let sample = &samples[w];
        let schema =
            features::build_schema(sample, config.sets[s], &stoplist).map_err(|e| e.to_string())?;
        let matrix = features::extract_with(sample, &schema, Exec::default()).map_err(|e| e.to_string())?;
        let dissim = needs_dissim.then(|| dissim::build_with(&matrix, Exec::default()));
        let rows = if needs_rows { dissim.as_ref().map(|d| d.row_vectors()) } else { None };
        Ok(Prepared { matrix, dissim, rows })
    });

    let mut tasks = Vec::new();
    for (p, &(w, s)) in pairs.iter().enumerate() {
        if prepared[p].is_err() {
            continue;
        }
        for &algorithm in &config.algorithms {
            for trial in 0..config.trials {
                tasks.push(Task { word: w, set: s, algorithm, trial });
            }
        }
    }
    let outcomes = pool.map(&tasks, |t| {
        let p = prepared[t.word * config.sets.len() + t.set].as_ref().expect("prepared");
        run_trial(
            &samples[t.word],
            &golds[t.word],
            p,
            config.sets[t.set],
            t.algorithm,
            t.trial,
            config,
        )
    });

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for (p, &(w, s)) in pairs.iter().enumerate() {
        let set = config.sets[s];
        for &algorithm in &config.algorithms {
            let failure = |message: String| CellFailure {
                word: samples[w].word.clone(),
                set,
                algorithm,
                message,
            };
            if let Err(e) = &prepared[p] {
                failures.push(failure(e.clone()));
                continue;
            }
            let mut trials = Vec::with_capacity(config.trials);
            let mut assignments = Vec::with_capacity(config.trials);
            let mut error = None;
            for _ in 0..config.trials {
                match outcomes.next().expect("one outcome per task") {
                    Ok((report, assignment)) => {
                        trials.push(report);
                        assignments.push(assignment);
                    }
                    Err(e) => {
                        error.get_or_insert(e);
                    }
                }
            }
            match error {
                Some(e) => failures.push(failure(e)),
                None => cells.push(Cell {
                    word: samples[w].word.clone(),
                    category: samples[w].category,
                    set,
                    algorithm,
                    trials,
                    assignments,
                }),
            }
        }
    }

    let mut summary = RunSummary {
        words,
        cells,
        failures,
        files: Vec::new(),
    };
    summary.files = write_outputs(config, options, &summary)?;
    Ok(summary)
}

fn write_file(path: &Path, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(io_err(path))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn write_outputs(
    config: &ExperimentConfig,
    options: &RunOptions,
    summary: &RunSummary,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let out = &config.output;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut files = Vec::new();

    let mut results = String::new();
    let mut aggregates = String::new();
    for cell in &summary.cells {
        for t in &cell.trials {
            let record = ResultRecord {
                word: t.word.clone(),
                set: t.set.clone(),
                algorithm: t.algorithm.clone(),
                trial: t.trial,
                seed: t.seed,
                accuracy: t.accuracy,
                correct: t.mapping.agreement,
                n: t.n,
                k: t.k,
            };
            results.push_str(&serde_json::to_string(&record).expect("record serialises"));
            results.push('\n');
        }
        let agg = cell.aggregate();
        let record = CellRecord {
            word: cell.word.clone(),
            category: cell.category,
            set: cell.set.to_string(),
            algorithm: cell.algorithm.as_str().to_string(),
            mean: agg.mean,
            std: agg.std,
            trials: agg.trials,
        };
        aggregates.push_str(&serde_json::to_string(&record).expect("record serialises"));
        aggregates.push('\n');
    }
    write_file(&out.join("results.jsonl"), &results, &mut files)?;
    write_file(&out.join("aggregates.jsonl"), &aggregates, &mut files)?;
    write_file(
        &out.join("table.md"),
        &render_table(&summary.words, &summary.cells, &config.sets, &config.algorithms),
        &mut files,
    )?;

    let confusion_dir = out.join("confusion");
    fs::create_dir_all(&confusion_dir).map_err(io_err(&confusion_dir))?;
    for w in &summary.words {
        for &set in &config.sets {
            let mut text = String::new();
            for cell in summary
                .cells
                .iter()
                .filter(|c| c.word == w.word && c.set == set)
            {
                let t = &cell.trials[config.designated_trial];
                if !text.is_empty() {
                    text.push('\n');
                }
                text.push_str(&t.confusion.render(cell.algorithm.title(), &t.mapping));
            }
            if !text.is_empty() {
                let name = format!("{}_{}.txt", w.word, set);
                write_file(&confusion_dir.join(name), &text, &mut files)?;
            }
        }
    }

    if options.dump_clusters {
        let dir = out.join("clusters");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for cell in &summary.cells {
            let mut text = String::new();
            for (trial, labels) in cell.assignments.iter().enumerate() {
                write!(text, "{trial}").unwrap();
                for l in labels {
                    write!(text, " {l}").unwrap();
                }
                text.push('\n');
            }
            let name = format!("{}_{}_{}.txt", cell.word, cell.set, cell.algorithm);
            write_file(&dir.join(name), &text, &mut files)?;
        }
    }
    Ok(files)
}

/// Accuracy samples for one table entry (a word or a rollup row).
#[derive(Clone, Debug)]
struct Entry {
    mean: f64,
    std: Option<f64>,
    samples: Vec<f64>,
}

fn significantly_above(a: &Entry, b: &Entry) -> bool {
    if a.mean <= b.mean {
        return false;
    }
    match stats::t_test(&a.samples, &b.samples, TABLE_ALPHA) {
        Ok(t) => t.significant,
        // too few trials to test: any difference counts
        Err(_) => true,
    }
}

fn render_row(
    label: &str,
    majority: Option<f64>,
    entries: &[Vec<Option<Entry>>],
    out: &mut String,
) {
    write!(out, "| {label} | ").unwrap();
    match majority {
        Some(m) => write!(out, "{}", fmt_fraction(m, 3)).unwrap(),
        None => out.push_str("n/a"),
    }
    out.push_str(" |");
    let all: Vec<&Entry> = entries.iter().flatten().flatten().collect();
    let best = all
        .iter()
        .copied()
        .max_by(|a, b| a.mean.total_cmp(&b.mean));
    for row in entries {
        for cell in row {
            let Some(e) = cell else {
                out.push_str(" n/a |");
                continue;
            };
            let bold = !row.iter().flatten().any(|o| significantly_above(o, e));
            let underline = best.is_some_and(|b| !significantly_above(b, e));
            let mut text = fmt_fraction(e.mean, 3);
            if bold {
                text = format!("**{text}**");
            }
            if underline {
                text = format!("<u>{text}</u>");
            }
            write!(out, " {text}±{} |", fmt_fraction(e.std.unwrap_or(0.0), 2)).unwrap();
        }
    }
    out.push('\n');
}

/// Markdown table with one row per word, category rollups and an overall
/// row. Cells show mean±std over trials; bold marks cells that no other
/// algorithm beats significantly under the same feature set, underline
/// marks the row's best cell and those not significantly below it.
pub fn render_table(
    words: &[WordInfo],
    cells: &[Cell],
    sets: &[FeatureSetId],
    algorithms: &[Algorithm],
) -> String {
    let lookup = |word: &str, set: FeatureSetId, alg: Algorithm| {
        cells
            .iter()
            .find(|c| c.word == word && c.set == set && c.algorithm == alg)
    };
    let entry_for = |group: &[&WordInfo], set: FeatureSetId, alg: Algorithm| -> Option<Entry> {
        let mut means = Vec::new();
        let mut samples = Vec::new();
        for w in group {
            let c = lookup(&w.word, set, alg)?;
            means.push(c.aggregate().mean);
            samples.extend(c.accuracies());
        }
        Some(Entry {
            mean: stats::mean(&means)?,
            std: stats::sample_std(&samples),
            samples,
        })
    };
    let grid = |group: &[&WordInfo]| -> Vec<Vec<Option<Entry>>> {
        sets.iter()
            .map(|&s| algorithms.iter().map(|&a| entry_for(group, s, a)).collect())
            .collect()
    };

    let mut out = String::new();
    out.push_str("| | Maj. |");
    for s in sets {
        for a in algorithms {
            write!(out, " {s} {} |", a.title()).unwrap();
        }
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in 0..sets.len() * algorithms.len() {
        out.push_str("---|");
    }
    out.push('\n');

    let categories: Vec<Category> = Category::ALL
        .into_iter()
        .filter(|c| words.iter().any(|w| w.category == *c))
        .collect();
    let mut category_grids = Vec::new();
    let mut category_majority = Vec::new();
    for &cat in &categories {
        let group: Vec<&WordInfo> = words.iter().filter(|w| w.category == cat).collect();
        for w in &group {
            render_row(&w.word, Some(w.majority), &grid(&[*w]), &mut out);
        }
        let g = grid(&group);
        let maj: Vec<(Category, f64)> = group.iter().map(|w| (cat, w.majority)).collect();
        let m = eval::category_rollup(&maj, &[cat]).ok().map(|r| r.overall);
        render_row(cat.plural(), m, &g, &mut out);
        category_grids.push(g);
        category_majority.push((cat, m));
    }

    // overall: mean of category means, trial accuracies pooled
    let overall: Vec<Vec<Option<Entry>>> = (0..sets.len())
        .map(|s| {
            (0..algorithms.len())
                .map(|a| {
                    let per_cat: Option<Vec<&Entry>> =
                        category_grids.iter().map(|g| g[s][a].as_ref()).collect();
                    let per_cat = per_cat?;
                    let means: Vec<f64> = per_cat.iter().map(|e| e.mean).collect();
                    let samples: Vec<f64> =
                        per_cat.iter().flat_map(|e| e.samples.iter().copied()).collect();
                    Some(Entry {
                        mean: stats::mean(&means)?,
                        std: stats::sample_std(&samples),
                        samples,
                    })
                })
                .collect()
        })
        .collect();
    let maj: Option<Vec<(Category, f64)>> = category_majority
        .iter()
        .map(|(c, m)| m.map(|m| (*c, m)))
        .collect();
    let overall_majority = maj
        .and_then(|v| eval::category_rollup(&v, &categories).ok())
        .map(|r| r.overall);
    render_row("overall", overall_majority, &overall, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let c = ExperimentConfig::from_toml("seed = 7\n[[word]]\ncorpus = \"line.txt\"\n", Path::new("/data")).unwrap();
        assert_eq!(c.trials, 25);
        assert_eq!(c.sets, FeatureSetId::ALL.to_vec());
        assert_eq!(c.algorithms, Algorithm::ALL.to_vec());
        assert_eq!(c.corpora, vec![PathBuf::from("/data/line.txt")]);
        assert_eq!(c.output, PathBuf::from("/data/results"));
        assert_eq!(c.em, EmConfig::default());
    }

    #[test]
    fn config_overrides_and_errors() {
        let text = r#"
seed = 1
trials = 3
sets = ["A", "C"]
algorithms = ["em"]
output = "/tmp/out"
[em]
max_iter = 50
tol = 1e-4
[[word]]
corpus = "a.txt"
"#;
        let c = ExperimentConfig::from_toml(text, Path::new("")).unwrap();
        assert_eq!(c.sets, vec![FeatureSetId::A, FeatureSetId::C]);
        assert_eq!(c.em.max_iter, 50);
        assert_eq!(c.output, PathBuf::from("/tmp/out"));

        for bad in [
            "trials = 0\n[[word]]\ncorpus = \"a\"\n",
            "algorithms = [\"kmeans\"]\n[[word]]\ncorpus = \"a\"\n",
            "seed = 1\n",
            "colour = 1\n[[word]]\ncorpus = \"a\"\n",
            "trials = 2\ndesignated_trial = 2\n[[word]]\ncorpus = \"a\"\n",
        ] {
            assert!(ExperimentConfig::from_toml(bad, Path::new("")).is_err(), "{bad}");
        }
    }

    #[test]
    fn trial_seeds_differ_by_coordinate() {
        let a = trial_seed(1, "line", FeatureSetId::A, Algorithm::Em, 0);
        assert_ne!(a, trial_seed(1, "line", FeatureSetId::A, Algorithm::Em, 1));
        assert_ne!(a, trial_seed(1, "line", FeatureSetId::B, Algorithm::Em, 0));
        assert_ne!(a, trial_seed(2, "line", FeatureSetId::A, Algorithm::Em, 0));
        assert_eq!(a, trial_seed(1, "line", FeatureSetId::A, Algorithm::Em, 0));
    }
}
