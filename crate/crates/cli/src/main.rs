use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use senseclust_core::agglom;
use senseclust_core::corpus::{Category, WordSample};
use senseclust_core::dissim::{self, DissimilarityMatrix};
use senseclust_core::em::{self, EmConfig};
use senseclust_core::eval::{self, ConfusionMatrix};
use senseclust_core::experiment::{self, ExperimentConfig, RunOptions};
use senseclust_core::features::{self, FeatureMatrix, FeatureSetId, Stoplist};

#[derive(Parser)]
#[command(name = "senseclust", version, about = "Unsupervised word-sense discrimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Linkage {
    Mcquitty,
    Ward,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a feature table from a sense-tagged corpus file.
    Extract {
        corpus: PathBuf,
        #[arg(long, value_parser = parse_set)]
        set: FeatureSetId,
        /// One stopword per line; defaults to the built-in list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the mismatch-count dissimilarity matrix of a feature table.
    Dissim {
        features: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Agglomerative clustering of a dissimilarity matrix.
    Cluster {
        dissim: PathBuf,
        #[arg(long, value_enum)]
        alg: Linkage,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the merge trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fit a Naive Bayes mixture to a feature table with EM.
    Em {
        features: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = em::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = em::DEFAULT_TOL)]
        tol: f64,
    },
    /// Score clusters against gold senses.
    ///
    /// Either give a confusion-matrix file (senses as rows, clusters as
    /// columns), or a corpus together with a file of cluster labels.
    Eval {
        matrix: Option<PathBuf>,
        #[arg(long, requires = "labels", conflicts_with = "matrix")]
        corpus: Option<PathBuf>,
        /// One cluster label per line, in corpus order.
        #[arg(long, requires = "corpus")]
        labels: Option<PathBuf>,
        /// Comma-separated row labels for a matrix file.
        #[arg(long, value_delimiter = ',')]
        senses: Option<Vec<String>>,
        /// Caption prefix.
        #[arg(long, default_value = "Clusters")]
        name: String,
    },
    /// Print the size of the feature space.
    Dim {
        #[arg(long, value_parser = parse_set)]
        set: Option<FeatureSetId>,
        #[arg(long, value_parser = parse_category)]
        category: Option<Category>,
    },
    /// Run a configured experiment.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(short, long)]
        jobs: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write raw cluster assignments of every trial.
        #[arg(long)]
        dump_clusters: bool,
    },
}

fn parse_set(s: &str) -> Result<FeatureSetId, String> {
    s.parse()
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse()
        .map_err(|_| format!("unknown category {s:?} (expected adjective, noun or verb)"))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .with_context(|| format!("{}:{}: not a cluster label", path.display(), i + 1))
        })
        .collect()
}

fn eval_command(
    matrix: Option<PathBuf>,
    corpus: Option<PathBuf>,
    labels: Option<PathBuf>,
    senses: Option<Vec<String>>,
    name: &str,
) -> Result<()> {
    let cm = match (matrix, corpus, labels) {
        (Some(m), None, None) => {
            let text =
                fs::read_to_string(&m).with_context(|| format!("cannot read {}", m.display()))?;
            ConfusionMatrix::parse(&text, senses)?
        }
        (None, Some(c), Some(l)) => {
            let sample = WordSample::load(&c)?;
            let predicted = read_labels(&l)?;
            let n_clusters = predicted.iter().max().map_or(0, |m| m + 1);
            ConfusionMatrix::from_labels(
                sample.senses.clone(),
                n_clusters,
                &sample.gold_labels()?,
                &predicted,
            )?
        }
        _ => bail!("give either a matrix file or --corpus with --labels"),
    };
    let mapping = eval::best_mapping(&cm)?;
    print!("{}", cm.render(name, &mapping));
    Ok(())
}

fn dim_command(set: Option<FeatureSetId>, category: Option<Category>) {
    match (set, category) {
        (Some(s), Some(c)) => println!("{}", features::dimensionality(s, c)),
        (set, category) => {
            let sets: Vec<FeatureSetId> = set.map_or(FeatureSetId::ALL.to_vec(), |s| vec![s]);
            let cats: Vec<Category> = category.map_or(Category::ALL.to_vec(), |c| vec![c]);
            println!("set\tcategory\tdimensionality");
            for s in &sets {
                for c in &cats {
                    println!("{s}\t{c}\t{}", features::dimensionality(*s, *c));
                }
            }
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Extract {
            corpus,
            set,
            stopwords,
            output,
        } => {
            let sample = WordSample::load(&corpus)?;
            let stoplist = match stopwords {
                Some(p) => Stoplist::load(p)?,
                None => Stoplist::default(),
            };
            let schema = features::build_schema(&sample, set, &stoplist)?;
            let matrix = features::extract(&sample, &schema)?;
            emit(output.as_deref(), &matrix.to_table())?;
        }
        Command::Dissim { features, output } => {
            let matrix = FeatureMatrix::load_table(&features)?;
            emit(output.as_deref(), &dissim::build(&matrix).to_text())?;
        }
        Command::Cluster {
            dissim,
            alg,
            k,
            seed,
            trace,
        } => {
            let d = DissimilarityMatrix::load(&dissim)?;
            let result = match alg {
                Linkage::Mcquitty => agglom::mcquitty(&d, k, seed)?,
                Linkage::Ward => agglom::ward_on_rows(&d, k, seed)?,
            };
            if let Some(p) = trace {
                emit(Some(&p), &result.trace())?;
            }
            let text: String = result.assignment.iter().map(|c| format!("{c}\n")).collect();
            emit(None, &text)?;
        }
        Command::Em {
            features,
            k,
            seed,
            max_iter,
            tol,
        } => {
            let matrix = FeatureMatrix::load_table(&features)?;
            let result = em::fit(&matrix, k, seed, &EmConfig { max_iter, tol })?;
            println!("{}", result.to_json());
        }
        Command::Eval {
            matrix,
            corpus,
            labels,
            senses,
            name,
        } => eval_command(matrix, corpus, labels, senses, &name)?,
        Command::Dim { set, category } => dim_command(set, category),
        Command::Run {
            config,
            jobs,
            output,
            dump_clusters,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(o) = output {
                config.output = o;
            }
            let summary = experiment::run(&config, &RunOptions { jobs, dump_clusters })?;
            let trials: usize = summary.cells.iter().map(|c| c.trials.len()).sum();
            eprintln!(
                "{} cells, {trials} trials, results in {}",
                summary.cells.len(),
                config.output.display()
            );
            if !summary.succeeded() {
                for f in &summary.failures {
                    eprintln!("failed: {f}");
                }
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
