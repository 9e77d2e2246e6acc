//! Unsupervised discrimination of word senses in untagged text.
//!
//! The pipeline turns a sense-annotated (or unannotated) sample of one
//! ambiguous word into nominal feature vectors ([`features`]), then groups
//! the instances either with agglomerative clustering over a feature-mismatch
//! dissimilarity matrix ([`dissim`], [`agglom`]) or with EM over a Naive Bayes
//! mixture ([`em`]). [`eval`] maps discovered clusters onto gold senses and
//! aggregates repeated trials; [`experiment`] drives whole grids of runs.
//!
//! With the default `parallel` feature, row-wise work (feature extraction,
//! dissimilarity rows, E-step posteriors, linkage updates, experiment trials)
//! runs on rayon. Without it everything runs on the calling thread and
//! produces bit-identical results.

pub mod agglom;
pub mod corpus;
pub mod dissim;
pub mod em;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod features;
pub mod rng;
pub mod stats;

pub use agglom::{mcquitty, ward, ClusterResult, Merge};
pub use corpus::{Category, Instance, Pos, Token, WordSample};
pub use dissim::DissimilarityMatrix;
pub use em::{EmConfig, EmResult, NaiveBayesParams};
pub use eval::{AggregateReport, ConfusionMatrix, Mapping, TrialReport};
pub use exec::Exec;
pub use features::{FeatureMatrix, FeatureSchema, FeatureSetId, Stoplist};
