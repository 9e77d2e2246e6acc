//! EM for a Naive Bayes mixture whose class variable (the sense) is never
//! observed.
//!
//! Parameters are the sense priors `P(s)` and, for every observed feature
//! `j`, the joint table `P(s, f_j = v)`. Under conditional independence the
//! full joint of an instance `y` with `q` features is
//!
//! ```text
//! P(s, y) = Π_j P(s, y_j) / P(s)^(q-1)
//! ```
//!
//! The E-step turns this into posteriors `P(s | y_n)` and accumulates the
//! expected counts `count(s, f_j = v)` and `count(s)`; the M-step divides
//! them by `N`. Posteriors are computed in log space, and every stored
//! probability is kept at or above [`PROB_FLOOR`] so the division by
//! `P(s)^(q-1)` stays defined.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::features::{FeatureMatrix, FeatureSchema};
use crate::rng;

pub const PROB_FLOOR: f64 = 1e-12;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 1_000;

#[derive(Debug, Error, PartialEq)]
pub enum EmError {
    #[error("number of senses must be at least 1")]
    ZeroSenses,
    #[error("cannot fit an empty sample")]
    EmptySample,
    #[error("instance {0} has zero likelihood under every sense")]
    DegenerateLikelihood(usize),
    #[error("expected counts sum to {total}, expected {n}")]
    InconsistentCounts { total: f64, n: usize },
    #[error("parameters do not match the data: {0}")]
    Shape(String),
    #[error("separation must lie in (0, 1], got {0}")]
    Separation(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NaiveBayesParams {
    pub k: usize,
    pub cardinalities: Vec<usize>,
    /// `P(s)`.
    pub priors: Vec<f64>,
    /// `P(s, f_j = v)` stored at `joints[j][s * card_j + v]`.
    pub joints: Vec<Vec<f64>>,
}

impl NaiveBayesParams {
    pub fn joint(&self, feature: usize, sense: usize, value: usize) -> f64 {
        self.joints[feature][sense * self.cardinalities[feature] + value]
    }

    pub fn n_features(&self) -> usize {
        self.cardinalities.len()
    }

    /// Checks normalisation, margin agreement and the probability floor.
    pub fn check(&self, tol: f64) -> Result<(), String> {
        let prior_sum: f64 = self.priors.iter().sum();
        if (prior_sum - 1.0).abs() > tol {
            return Err(format!("priors sum to {prior_sum}"));
        }
        if let Some(p) = self.priors.iter().find(|&&p| p < PROB_FLOOR) {
            return Err(format!("prior {p} below floor"));
        }
        for (j, table) in self.joints.iter().enumerate() {
            let card = self.cardinalities[j];
            if table.len() != self.k * card {
                return Err(format!("feature {j}: table has {} cells", table.len()));
            }
            let total: f64 = table.iter().sum();
            if (total - 1.0).abs() > tol {
                return Err(format!("feature {j}: joint sums to {total}"));
            }
            if let Some(p) = table.iter().find(|&&p| p < PROB_FLOOR) {
                return Err(format!("feature {j}: probability {p} below floor"));
            }
            for s in 0..self.k {
                let margin: f64 = table[s * card..(s + 1) * card].iter().sum();
                if (margin - self.priors[s]).abs() > tol {
                    return Err(format!(
                        "feature {j}, sense {s}: margin {margin} != prior {}",
                        self.priors[s]
                    ));
                }
            }
        }
        Ok(())
    }

    fn max_abs_diff(&self, other: &NaiveBayesParams) -> f64 {
        let priors = self.priors.iter().zip(&other.priors);
        let joints = self
            .joints
            .iter()
            .zip(&other.joints)
            .flat_map(|(a, b)| a.iter().zip(b));
        priors
            .chain(joints)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `ln P(s, y)` for every sense.
    pub fn log_joint(&self, row: &[u32]) -> Vec<f64> {
        let q = row.len() as f64;
        (0..self.k)
            .map(|s| {
                let features: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| self.joint(j, s, v as usize).ln())
                    .sum();
                features - (q - 1.0) * self.priors[s].ln()
            })
            .collect()
    }
}

/// Expected sufficient statistics from one E-step.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedCounts {
    pub k: usize,
    pub cardinalities: Vec<usize>,
    /// `count(s)`.
    pub by_sense: Vec<f64>,
    /// `count(s, f_j = v)` at `joint[j][s * card_j + v]`.
    pub joint: Vec<Vec<f64>>,
}

impl ExpectedCounts {
    /// Accumulates counts in row order from per-instance posteriors.
    pub fn from_posteriors(posteriors: &[Vec<f64>], data: &FeatureMatrix, k: usize) -> Self {
        let cardinalities = data.schema().cardinalities();
        let mut by_sense = vec![0.0; k];
        let mut joint: Vec<Vec<f64>> = cardinalities.iter().map(|&c| vec![0.0; k * c]).collect();
        for (post, row) in posteriors.iter().zip(data.rows()) {
            for (s, &p) in post.iter().enumerate() {
                by_sense[s] += p;
                for (j, &v) in row.iter().enumerate() {
                    joint[j][s * cardinalities[j] + v as usize] += p;
                }
            }
        }
        ExpectedCounts {
            k,
            cardinalities,
            by_sense,
            joint,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EStep {
    pub counts: ExpectedCounts,
    /// `P(s | y_n)`, one row per instance.
    pub posteriors: Vec<Vec<f64>>,
    /// Observed-data log-likelihood of the parameters used.
    pub log_likelihood: f64,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn e_step(params: &NaiveBayesParams, data: &FeatureMatrix) -> Result<EStep, EmError> {
    e_step_with(params, data, Exec::default())
}

pub fn e_step_with(
    params: &NaiveBayesParams,
    data: &FeatureMatrix,
    exec: Exec,
) -> Result<EStep, EmError> {
    let cards = data.schema().cardinalities();
    if cards != params.cardinalities {
        return Err(EmError::Shape(format!(
            "data cardinalities {cards:?}, parameters {:?}",
            params.cardinalities
        )));
    }
    let rows = exec.map_range(data.n_rows(), |i| {
        let logs = params.log_joint(data.row(i));
        let total = log_sum_exp(&logs);
        let post: Vec<f64> = logs.iter().map(|l| (l - total).exp()).collect();
        (post, total)
    });
    let mut log_likelihood = 0.0;
    let mut posteriors = Vec::with_capacity(rows.len());
    for (i, (post, total)) in rows.into_iter().enumerate() {
        if !total.is_finite() {
            return Err(EmError::DegenerateLikelihood(i));
        }
        log_likelihood += total;
        posteriors.push(post);
    }
    let counts = ExpectedCounts::from_posteriors(&posteriors, data, params.k);
    Ok(EStep {
        counts,
        posteriors,
        log_likelihood,
    })
}

/// Rescales `values` to sum to `total` while keeping every entry at or above
/// `floor`. Entries that would fall below the floor are pinned to it and the
/// remaining mass is spread proportionally over the rest.
fn floor_to_total(values: &mut [f64], floor: f64, total: f64) {
    let len = values.len();
    debug_assert!(total >= floor * len as f64);
    let mut pinned = vec![false; len];
    loop {
        let n_pinned = pinned.iter().filter(|&&p| p).count();
        let n_free = len - n_pinned;
        if n_free == 0 {
            values.iter_mut().for_each(|v| *v = total / len as f64);
            return;
        }
        let budget = total - floor * n_pinned as f64;
        let free_sum: f64 = values
            .iter()
            .zip(&pinned)
            .filter(|(_, &p)| !p)
            .map(|(v, _)| *v)
            .sum();
        let scaled = |v: f64| {
            if free_sum > 0.0 {
                v * budget / free_sum
            } else {
                budget / n_free as f64
            }
        };
        let mut changed = false;
        for (v, p) in values.iter().zip(pinned.iter_mut()) {
            if !*p && scaled(*v) < floor {
                *p = true;
                changed = true;
            }
        }
        if !changed {
            for (v, p) in values.iter_mut().zip(&pinned) {
                *v = if *p { floor } else { scaled(*v) };
            }
            return;
        }
    }
}

/// Re-estimates parameters from expected counts over `n` instances.
pub fn m_step(counts: &ExpectedCounts, n: usize) -> Result<NaiveBayesParams, EmError> {
    if n == 0 {
        return Err(EmError::EmptySample);
    }
    let total: f64 = counts.by_sense.iter().sum();
    if (total - n as f64).abs() > 1e-6 * (n as f64).max(1.0) {
        return Err(EmError::InconsistentCounts { total, n });
    }
    let nf = n as f64;
    let max_card = counts.cardinalities.iter().copied().max().unwrap_or(1).max(1);

    let mut priors: Vec<f64> = counts.by_sense.iter().map(|c| c / nf).collect();
    // each prior must leave room for card_j floored joint cells
    floor_to_total(&mut priors, PROB_FLOOR * max_card as f64, 1.0);

    let joints = counts
        .joint
        .iter()
        .zip(&counts.cardinalities)
        .map(|(table, &card)| {
            let mut out: Vec<f64> = table.iter().map(|c| c / nf).collect();
            for (s, prior) in priors.iter().enumerate() {
                floor_to_total(&mut out[s * card..(s + 1) * card], PROB_FLOOR, *prior);
            }
            out
        })
        .collect();

    Ok(NaiveBayesParams {
        k: counts.k,
        cardinalities: counts.cardinalities.clone(),
        priors,
        joints,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once no parameter moves by this much or more.
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmResult {
    pub params: NaiveBayesParams,
    pub posteriors: Vec<Vec<f64>>,
    /// Most probable sense per instance (lowest index on exact ties).
    pub assignment: Vec<usize>,
    /// Log-likelihood of the initial estimate and of each re-estimate.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl EmResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("EM result serialises")
    }
}

/// Random starting point: uniform-Dirichlet posterior rows pushed through
/// one M-step.
pub fn initial_params(
    data: &FeatureMatrix,
    k: usize,
    seed: u64,
) -> Result<NaiveBayesParams, EmError> {
    let mut rng = rng::stream(seed);
    let posteriors: Vec<Vec<f64>> = (0..data.n_rows())
        .map(|_| {
            let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = draws.iter().sum();
            draws.iter().map(|d| d / total).collect()
        })
        .collect();
    m_step(&ExpectedCounts::from_posteriors(&posteriors, data, k), data.n_rows())
}

pub fn fit(
    data: &FeatureMatrix,
    k: usize,
    seed: u64,
    config: &EmConfig,
) -> Result<EmResult, EmError> {
    fit_with(data, k, seed, config, Exec::default(), |_, _| {})
}

/// Runs EM, calling `observer(iteration, params)` with the initial estimate
/// (iteration 0) and after every M-step.
pub fn fit_with<F>(
    data: &FeatureMatrix,
    k: usize,
    seed: u64,
    config: &EmConfig,
    exec: Exec,
    mut observer: F,
) -> Result<EmResult, EmError>
where
    F: FnMut(usize, &NaiveBayesParams),
{
    if k == 0 {
        return Err(EmError::ZeroSenses);
    }
    let n = data.n_rows();
    if n == 0 {
        return Err(EmError::EmptySample);
    }
    let mut params = initial_params(data, k, seed)?;
    observer(0, &params);

    let mut loglik_trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let estep = e_step_with(&params, data, exec)?;
        loglik_trace.push(estep.log_likelihood);
        let next = m_step(&estep.counts, n)?;
        let delta = params.max_abs_diff(&next);
        params = next;
        iterations += 1;
        observer(iterations, &params);
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let last = e_step_with(&params, data, exec)?;
    loglik_trace.push(last.log_likelihood);
    let assignment = last
        .posteriors
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (s, &p)| {
                    if p > best.1 {
                        (s, p)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect();
    Ok(EmResult {
        params,
        posteriors: last.posteriors,
        assignment,
        loglik_trace,
        iterations,
        converged,
    })
}

/// Generating model behind [`generate`]: uniform sense priors and, for each
/// sense and feature, `P(v | s) = separation·[v = mode(s)] + (1 − separation)/card`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticModel {
    pub priors: Vec<f64>,
    pub cardinalities: Vec<usize>,
    /// `P(v | s)` at `conditionals[j][s * card_j + v]`.
    pub conditionals: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub data: FeatureMatrix,
    pub labels: Vec<usize>,
    pub model: SyntheticModel,
}

/// Samples `n` instances from a Naive Bayes model with `k` senses over the
/// alphabets of `schema`. Senses get distinct modal values on every feature
/// whose cardinality allows it.
pub fn generate(
    k: usize,
    schema: &FeatureSchema,
    n: usize,
    separation: f64,
    seed: u64,
) -> Result<Synthetic, EmError> {
    if k == 0 {
        return Err(EmError::ZeroSenses);
    }
    if !(separation > 0.0 && separation <= 1.0) {
        return Err(EmError::Separation(separation));
    }
    let mut rng = rng::stream(seed);
    let cards = schema.cardinalities();
    let modes: Vec<Vec<usize>> = cards
        .iter()
        .map(|&card| {
            let offset = rng.random_range(0..card);
            (0..k).map(|s| (offset + s) % card).collect()
        })
        .collect();
    let conditionals = cards
        .iter()
        .zip(&modes)
        .map(|(&card, m)| {
            let mut table = vec![(1.0 - separation) / card as f64; k * card];
            for (s, &mode) in m.iter().enumerate() {
                table[s * card + mode] += separation;
            }
            table
        })
        .collect();

    let mut labels = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let s = rng.random_range(0..k);
        let row = cards
            .iter()
            .zip(&modes)
            .map(|(&card, m)| {
                if rng.random::<f64>() < separation {
                    m[s] as u32
                } else {
                    rng.random_range(0..card) as u32
                }
            })
            .collect();
        labels.push(s);
        rows.push(row);
    }
    let data = FeatureMatrix::new(schema.clone(), rows)
        .map_err(|e| EmError::Shape(e.to_string()))?;
    Ok(Synthetic {
        data,
        labels,
        model: SyntheticModel {
            priors: vec![1.0 / k as f64; k],
            cardinalities: cards,
            conditionals,
        },
    })
}
