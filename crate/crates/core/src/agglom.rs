//! Agglomerative clustering down to a fixed number of clusters.
//!
//! Two merge criteria share one engine:
//!
//! * [`ward`]: observations are points (rows of the dissimilarity matrix);
//!   the pair of clusters merged is the one minimising
//!   `V = ‖mean_K − mean_L‖² / (1/N_K + 1/N_L)`. Cluster means are kept
//!   explicitly and every criterion value is recomputed from them.
//! * [`mcquitty`]: works on the mismatch counts directly; after merging `K`
//!   and `L`, the dissimilarity to any other cluster `I` becomes
//!   `(D_KI + D_LI) / 2`.
//!
//! When several pairs attain the minimum (within a relative tolerance of
//! 1e-9), one is drawn uniformly at random from a stream seeded by the
//! caller. Candidate pairs are enumerated in order of the smallest member of
//! each cluster, so a given seed always yields the same trace.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dissim::{condensed_index, DissimilarityMatrix};
use crate::exec::Exec;
use crate::rng;

/// Relative tolerance for treating two criterion values as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {n} observations")]
    TooManyClusters { k: usize, n: usize },
    #[error("number of clusters must be at least 1")]
    ZeroClusters,
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
}

/// One merge step. Cluster ids `0..n` are the singletons; the cluster created
/// by merge step `s` gets id `n + s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Criterion value of the merged pair (`V_KL` or `D_KL`).
    pub value: f64,
    /// Size of the merged cluster.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterResult {
    /// Cluster label in `0..k` for every observation. Labels are ordered by
    /// the smallest observation index in each cluster.
    pub assignment: Vec<usize>,
    pub merges: Vec<Merge>,
    pub k: usize,
}

impl ClusterResult {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Members of every cluster id, singletons first, then one entry per merge.
    pub fn members_by_id(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut merged = members[m.left].clone();
            merged.extend_from_slice(&members[m.right]);
            merged.sort_unstable();
            members.push(merged);
        }
        members
    }

    /// Members of each final cluster, indexed by label.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Dendrogram trace, one line per merge:
    /// `step<TAB>left-members<TAB>right-members<TAB>criterion-value`.
    pub fn trace(&self) -> String {
        let members = self.members_by_id();
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::new();
        for (step, m) in self.merges.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                step + 1,
                join(&members[m.left]),
                join(&members[m.right]),
                m.value
            )
            .unwrap();
        }
        out
    }
}

/// Merge rule plugged into the shared engine.
trait Linkage: Sync {
    /// Folds cluster `drop` into slot `keep`.
    fn merge(&mut self, keep: usize, drop: usize);
    /// Criterion between the freshly merged cluster in `keep` and `other`,
    /// given the values both parts had to `other` before the merge.
    fn updated(&self, keep: usize, other: usize, d_keep: f64, d_drop: f64) -> f64;
}

struct McQuittyLinkage;

impl Linkage for McQuittyLinkage {
    fn merge(&mut self, _keep: usize, _drop: usize) {}

    fn updated(&self, _keep: usize, _other: usize, d_keep: f64, d_drop: f64) -> f64 {
        (d_keep + d_drop) / 2.0
    }
}

/// Explicit cluster means and sizes for Ward's criterion.
struct WardLinkage {
    means: Vec<Vec<f64>>,
    sizes: Vec<usize>,
}

impl WardLinkage {
    fn criterion(&self, a: usize, b: usize) -> f64 {
        ward_criterion(&self.means[a], self.sizes[a], &self.means[b], self.sizes[b])
    }
}

/// `‖mean_a − mean_b‖² / (1/n_a + 1/n_b)`.
pub fn ward_criterion(mean_a: &[f64], n_a: usize, mean_b: &[f64], n_b: usize) -> f64 {
    let sq: f64 = mean_a
        .iter()
        .zip(mean_b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    sq / (1.0 / n_a as f64 + 1.0 / n_b as f64)
}

/// Size-weighted mean of two cluster means.
pub fn merged_mean(mean_a: &[f64], n_a: usize, mean_b: &[f64], n_b: usize) -> Vec<f64> {
    let (wa, wb) = (n_a as f64, n_b as f64);
    let total = wa + wb;
    mean_a
        .iter()
        .zip(mean_b)
        .map(|(x, y)| (wa * x + wb * y) / total)
        .collect()
}

impl Linkage for WardLinkage {
    fn merge(&mut self, keep: usize, drop: usize) {
        let mean = merged_mean(
            &self.means[keep],
            self.sizes[keep],
            &self.means[drop],
            self.sizes[drop],
        );
        self.means[keep] = mean;
        self.sizes[keep] += self.sizes[drop];
        self.means[drop] = Vec::new();
        self.sizes[drop] = 0;
    }

    fn updated(&self, keep: usize, other: usize, _d_keep: f64, _d_drop: f64) -> f64 {
        self.criterion(keep, other)
    }
}

fn is_tied(value: f64, min: f64) -> bool {
    value <= min + TIE_TOLERANCE * min.abs().max(1.0)
}

struct Engine {
    n: usize,
    dist: Vec<f64>,
    active: Vec<bool>,
    /// Minimum over active `j > i` of `dist(i, j)`, with the arg-min.
    row_min: Vec<(f64, usize)>,
}

impl Engine {
    fn d(&self, i: usize, j: usize) -> f64 {
        if i < j {
            self.dist[condensed_index(self.n, i, j)]
        } else {
            self.dist[condensed_index(self.n, j, i)]
        }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = if i < j {
            condensed_index(self.n, i, j)
        } else {
            condensed_index(self.n, j, i)
        };
        self.dist[idx] = v;
    }

    fn scan_row(&self, i: usize) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in i + 1..self.n {
            if self.active[j] {
                let v = self.d(i, j);
                if v < best.0 {
                    best = (v, j);
                }
            }
        }
        best
    }

    /// Every active pair within tolerance of the global minimum, ordered.
    fn tied_minimum_pairs(&self) -> Vec<(usize, usize)> {
        let min = (0..self.n)
            .filter(|&i| self.active[i])
            .map(|i| self.row_min[i].0)
            .fold(f64::INFINITY, f64::min);
        let mut pairs = Vec::new();
        for i in 0..self.n {
            if !self.active[i] || !is_tied(self.row_min[i].0, min) {
                continue;
            }
            for j in i + 1..self.n {
                if self.active[j] && is_tied(self.d(i, j), min) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }
}

fn agglomerate<L: Linkage>(
    n: usize,
    dist: Vec<f64>,
    mut linkage: L,
    k: usize,
    seed: u64,
    exec: Exec,
) -> ClusterResult {
    let mut rng = rng::stream(seed);
    let mut engine = Engine {
        n,
        dist,
        active: vec![true; n],
        row_min: Vec::new(),
    };
    engine.row_min = exec.map_range(n, |i| engine.scan_row(i));

    let mut ids: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::with_capacity(n - k);
    let mut remaining = n;

    while remaining > k {
        let pairs = engine.tied_minimum_pairs();
        let pick = if pairs.len() > 1 {
            rng.random_range(0..pairs.len())
        } else {
            0
        };
        let (a, b) = pairs[pick];

        let value = engine.d(a, b);
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        merges.push(Merge {
            left: ids[a],
            right: ids[b],
            value,
            size: members[a].len(),
        });
        ids[a] = n + merges.len() - 1;

        linkage.merge(a, b);
        engine.active[b] = false;
        remaining -= 1;

        let others: Vec<usize> = (0..n).filter(|&o| engine.active[o] && o != a).collect();
        let fresh = exec.map_range(others.len(), |t| {
            let o = others[t];
            linkage.updated(a, o, engine.d(a, o), engine.d(b, o))
        });
        for (&o, v) in others.iter().zip(fresh) {
            engine.set(a, o, v);
        }

        engine.row_min[a] = engine.scan_row(a);
        engine.row_min[b] = (f64::INFINITY, usize::MAX);
        for &i in others.iter().take_while(|&&i| i < b) {
            let (best, arg) = engine.row_min[i];
            if arg == a || arg == b {
                engine.row_min[i] = engine.scan_row(i);
            } else if i < a {
                let v = engine.d(i, a);
                if v < best {
                    engine.row_min[i] = (v, a);
                }
            }
        }
    }

    let mut assignment = vec![0; n];
    let mut label = 0;
    for (slot, group) in members.iter().enumerate() {
        if engine.active[slot] {
            for &i in group {
                assignment[i] = label;
            }
            label += 1;
        }
    }
    ClusterResult {
        assignment,
        merges,
        k,
    }
}

fn check_k(k: usize, n: usize) -> Result<(), ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    if k > n {
        return Err(ClusterError::TooManyClusters { k, n });
    }
    Ok(())
}

/// Ward's minimum-variance clustering of `points` into `k` clusters.
pub fn ward(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterResult, ClusterError> {
    ward_with(points, k, seed, Exec::default())
}

pub fn ward_with(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    exec: Exec,
) -> Result<ClusterResult, ClusterError> {
    let n = points.len();
    check_k(k, n)?;
    let dim = points[0].len();
    if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
        return Err(ClusterError::DimensionMismatch {
            index,
            expected: dim,
            found: p.len(),
        });
    }
    let linkage = WardLinkage {
        means: points.to_vec(),
        sizes: vec![1; n],
    };
    let rows = exec.map_range(n, |i| {
        (i + 1..n)
            .map(|j| linkage.criterion(i, j))
            .collect::<Vec<f64>>()
    });
    Ok(agglomerate(n, rows.concat(), linkage, k, seed, exec))
}

/// Ward's method on the rows of a dissimilarity matrix.
pub fn ward_on_rows(
    d: &DissimilarityMatrix,
    k: usize,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    ward(&d.row_vectors(), k, seed)
}

/// McQuitty's similarity analysis on mismatch counts.
pub fn mcquitty(
    d: &DissimilarityMatrix,
    k: usize,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    mcquitty_with(d, k, seed, Exec::default())
}

pub fn mcquitty_with(
    d: &DissimilarityMatrix,
    k: usize,
    seed: u64,
    exec: Exec,
) -> Result<ClusterResult, ClusterError> {
    let n = d.len();
    check_k(k, n)?;
    let mut dist = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dist.push(d.get(i, j) as f64);
        }
    }
    Ok(agglomerate(n, dist, McQuittyLinkage, k, seed, exec))
}
