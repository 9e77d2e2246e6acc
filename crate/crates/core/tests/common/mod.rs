//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use senseclust_core::rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// The nine reference confusion matrices with their captions.
pub fn reference_matrices() -> Vec<(&'static str, Vec<Vec<u64>>, u64)> {
    vec![
        ("concern McQuitty", vec![vec![166, 281], vec![181, 607]], 773),
        ("concern Ward", vec![vec![288, 159], vec![155, 633]], 921),
        ("concern EM", vec![vec![384, 63], vec![132, 656]], 1040),
        (
            "interest McQuitty",
            vec![vec![53, 6, 302], vec![58, 187, 255], vec![108, 4, 1140]],
            1380,
        ),
        (
            "interest Ward",
            vec![vec![280, 3, 78], vec![240, 197, 63], vec![559, 0, 693]],
            1170,
        ),
        (
            "interest EM",
            vec![vec![127, 230, 4], vec![134, 364, 2], vec![320, 124, 808]],
            1299,
        ),
        ("help McQuitty", vec![vec![45, 234], vec![146, 842]], 887),
        ("help Ward", vec![vec![88, 191], vec![354, 634]], 722),
        ("help EM", vec![vec![119, 160], vec![344, 644]], 763),
    ]
}

/// Largest agreement over all injective maps, found by counting through
/// every function from the smaller side to the larger and skipping the
/// non-injective ones.
pub fn brute_force_agreement(counts: &[Vec<u64>]) -> u64 {
    let rows = counts.len();
    let cols = counts.first().map_or(0, Vec::len);
    let (small, large, transpose) = if cols <= rows {
        (cols, rows, false)
    } else {
        (rows, cols, true)
    };
    let cell = |from: usize, to: usize| {
        if transpose {
            counts[from][to]
        } else {
            counts[to][from]
        }
    };
    let total = (large as u64).pow(small as u32);
    let mut best = 0;
    for code in 0..total {
        let mut c = code;
        let mut image = Vec::with_capacity(small);
        for _ in 0..small {
            image.push((c % large as u64) as usize);
            c /= large as u64;
        }
        let mut seen = image.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != small {
            continue;
        }
        let score = image.iter().enumerate().map(|(f, &t)| cell(f, t)).sum();
        best = best.max(score);
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleMerge {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum Ties {
    /// Give up (return `None`) when the best pair is not clearly unique.
    Reject,
    /// Reproduce the seeded random choice among tied pairs.
    Replicate(u64),
}

fn choose(
    candidates: &[(usize, usize, f64)],
    ties: Ties,
    rng: &mut rng::StreamRng,
) -> Option<(usize, usize, f64)> {
    let min = candidates
        .iter()
        .map(|c| c.2)
        .fold(f64::INFINITY, f64::min);
    match ties {
        Ties::Reject => {
            let mut near = candidates
                .iter()
                .filter(|c| c.2 <= min + 1e-6 * min.abs().max(1.0));
            let first = *near.next()?;
            if near.next().is_some() {
                None
            } else {
                Some(first)
            }
        }
        Ties::Replicate(_) => {
            let tied: Vec<_> = candidates
                .iter()
                .filter(|c| c.2 <= min + 1e-9 * min.abs().max(1.0))
                .copied()
                .collect();
            let pick = if tied.len() > 1 {
                rng.random_range(0..tied.len())
            } else {
                0
            };
            Some(tied[pick])
        }
    }
}

fn rng_for(ties: Ties) -> rng::StreamRng {
    match ties {
        Ties::Replicate(seed) => rng::stream(seed),
        Ties::Reject => rng::stream(0),
    }
}

/// Naive agglomeration: at every step every pair of current clusters is
/// scored from scratch by `score`. Clusters are kept ordered by their
/// smallest member.
fn naive_agglomerate(
    n: usize,
    k: usize,
    ties: Ties,
    mut score: impl FnMut(&[usize], &[usize], &[OracleMerge]) -> f64,
) -> Option<(Vec<OracleMerge>, Vec<Vec<usize>>)> {
    let mut rng = rng_for(ties);
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    while clusters.len() > k {
        let mut candidates = Vec::new();
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                candidates.push((a, b, score(&clusters[a], &clusters[b], &merges)));
            }
        }
        let (a, b, value) = choose(&candidates, ties, &mut rng)?;
        let right = clusters.remove(b);
        let left = clusters[a].clone();
        clusters[a].extend(&right);
        clusters[a].sort_unstable();
        merges.push(OracleMerge { left, right, value });
    }
    Some((merges, clusters))
}

fn mean_of(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = points[0].len();
    let mut m = vec![0.0; dim];
    for &i in members {
        for (x, p) in m.iter_mut().zip(&points[i]) {
            *x += p;
        }
    }
    m.iter().map(|x| x / members.len() as f64).collect()
}

/// Ward's criterion recomputed from scratch for every pair at every step.
pub fn ward_oracle(
    points: &[Vec<f64>],
    k: usize,
    ties: Ties,
) -> Option<(Vec<OracleMerge>, Vec<Vec<usize>>)> {
    naive_agglomerate(points.len(), k, ties, |a, b, _| {
        let (ma, mb) = (mean_of(points, a), mean_of(points, b));
        let sq: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).powi(2)).sum();
        let (na, nb) = (a.len() as f64, b.len() as f64);
        sq * na * nb / (na + nb)
    })
}

/// Averaging distance between two current clusters, expanded recursively
/// through the merge history back to the original matrix: the cluster that
/// was formed later splits into its two halves, the other stays whole.
pub fn averaged_distance(d: &[Vec<f64>], merges: &[OracleMerge], a: &[usize], b: &[usize]) -> f64 {
    let formed = |c: &[usize]| {
        merges.iter().rposition(|m| {
            let mut all = m.left.clone();
            all.extend(&m.right);
            all.sort_unstable();
            all == c
        })
    };
    match (formed(a), formed(b)) {
        (None, None) => d[a[0]][b[0]],
        (fa, fb) => {
            // `None < Some(_)`: singletons count as formed first
            let (other, step) = if fa >= fb {
                (b, fa.unwrap())
            } else {
                (a, fb.unwrap())
            };
            let m = &merges[step];
            let history = &merges[..step];
            (averaged_distance(d, history, &m.left, other)
                + averaged_distance(d, history, &m.right, other))
                / 2.0
        }
    }
}

/// McQuitty's method with every cluster distance re-derived from the
/// original matrix.
pub fn mcquitty_oracle(
    d: &[Vec<f64>],
    k: usize,
    ties: Ties,
) -> Option<(Vec<OracleMerge>, Vec<Vec<usize>>)> {
    naive_agglomerate(d.len(), k, ties, |a, b, merges| averaged_distance(d, merges, a, b))
}

/// Total within-cluster sum of squares.
pub fn within_ss(points: &[Vec<f64>], clusters: &[Vec<usize>]) -> f64 {
    clusters
        .iter()
        .map(|c| {
            let m = mean_of(points, c);
            c.iter()
                .map(|&i| points[i].iter().zip(&m).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
                .sum::<f64>()
        })
        .sum()
}

/// Two-tailed Student t tail mass by Simpson integration of the density
/// over `[0, |t|]`.
pub fn t_tail_by_quadrature(t: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let t = t.abs();
    let log_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |x: f64| (log_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let steps = 20_000;
    let h = t / steps as f64;
    let mut acc = density(0.0) + density(t);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(i as f64 * h);
    }
    (1.0 - 2.0 * acc * h / 3.0).clamp(0.0, 1.0)
}

/// Sorted member lists of a clustering result's merges.
pub fn merge_members(result: &senseclust_core::ClusterResult) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let members = result.members_by_id();
    result
        .merges
        .iter()
        .map(|m| (members[m.left].clone(), members[m.right].clone(), m.value))
        .collect()
}

/// Compares library merges with oracle merges; values to a relative `tol`.
pub fn traces_match(
    result: &senseclust_core::ClusterResult,
    oracle: &[OracleMerge],
    tol: f64,
) -> Result<(), String> {
    let lib = merge_members(result);
    if lib.len() != oracle.len() {
        return Err(format!("{} merges vs {}", lib.len(), oracle.len()));
    }
    for (step, ((l, r, v), o)) in lib.iter().zip(oracle).enumerate() {
        if *l != o.left || *r != o.right {
            return Err(format!(
                "step {step}: merged {l:?}+{r:?}, oracle {:?}+{:?}",
                o.left, o.right
            ));
        }
        if (v - o.value).abs() > tol * o.value.abs().max(1.0) {
            return Err(format!("step {step}: value {v} vs {}", o.value));
        }
    }
    Ok(())
}
