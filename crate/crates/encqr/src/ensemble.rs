//! Disjoint-subset ensembles of quantile regressors.
//!
//! The training range is cut into `b` contiguous, equally sized subsets of
//! `floor(T / b)` steps each; any leftover steps at the end stay unassigned.
//! Member `j` is trained only on windows that lie entirely inside subset
//! `j`, so windows crossing a subset boundary are discarded. In return,
//! every step whose full input window sits inside a single subset has
//! `b - 1` members that never saw it, and those members provide the
//! leave-one-out estimates that seed the conformity scores.
//!
//! Within each subset the first `n_x` steps cannot anchor such an estimate,
//! which gives the exact count of `T' - b * n_x` eligible steps over the
//! assigned range `T' = b * floor(T / b)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::QuantileLevels;
use crate::regress::{QuantileAlgorithm, QuantileModel, QuantilePrediction};
use crate::series::TimeSeries;
use crate::window::{extract_input_window, WindowedDataset};

/// How member predictions are combined into one value per step and track.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
    /// Mean after dropping the `floor(fraction * n)` smallest and largest
    /// values.
    TrimmedMean { fraction: f64 },
}

/// Combine `values` according to `how`.
pub fn aggregate(values: &[f64], how: &Aggregation) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    match how {
        Aggregation::Mean => Ok(values.iter().sum::<f64>() / values.len() as f64),
        Aggregation::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let n = sorted.len();
            if n % 2 == 1 {
                Ok(sorted[n / 2])
            } else {
                Ok((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0)
            }
        }
        Aggregation::TrimmedMean { fraction } => {
            if !(0.0..0.5).contains(fraction) {
                return Err(Error::InvalidConfig(format!(
                    "trim fraction {fraction} outside [0, 0.5)"
                )));
            }
            // floor(fraction * n) < n / 2 because fraction < 0.5, so at
            // least one value always survives the trim.
            let k = (fraction * values.len() as f64).floor() as usize;
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let kept = &sorted[k..values.len() - k];
            Ok(kept.iter().sum::<f64>() / kept.len() as f64)
        }
    }
}

/// The subset layout for one training range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPlan {
    /// Length of the full training range.
    pub t_total: usize,
    /// Number of members.
    pub b: usize,
    /// Steps per subset, `floor(t_total / b)`.
    pub t_b: usize,
    pub n_x: usize,
    pub n_y: usize,
}

/// Split `t_total` training steps into `b` contiguous subsets sized for
/// windows of shape `(n_x, n_y)`.
pub fn plan_subsets(t_total: usize, b: usize, n_x: usize, n_y: usize) -> Result<SubsetPlan> {
    if b < 2 {
        return Err(Error::InvalidConfig(format!(
            "an ensemble needs at least 2 members, got {b}"
        )));
    }
    if n_x == 0 || n_y == 0 {
        return Err(Error::InvalidWindow("window lengths must be positive".into()));
    }
    let t_b = t_total / b;
    if t_b < n_x + n_y {
        return Err(Error::SubsetsTooSmall { subset_len: t_b, window: n_x + n_y });
    }
    Ok(SubsetPlan { t_total, b, t_b, n_x, n_y })
}

impl SubsetPlan {
    /// Steps covered by subsets; trailing leftovers are excluded.
    pub fn assigned_len(&self) -> usize {
        self.b * self.t_b
    }

    /// Step range of subset `j`.
    pub fn subset_range(&self, j: usize) -> std::ops::Range<usize> {
        j * self.t_b..(j + 1) * self.t_b
    }

    /// The subset a step belongs to, if any.
    pub fn member_of_step(&self, step: usize) -> Option<usize> {
        (step < self.assigned_len()).then(|| step / self.t_b)
    }

    /// Whether the window with its first target step at `origin` lies
    /// entirely inside subset `j`.
    pub fn hosts_window(&self, j: usize, origin: usize) -> bool {
        let range = self.subset_range(j);
        origin >= range.start + self.n_x && origin + self.n_y <= range.end
    }

    /// Steps whose full input window sits inside a single subset, paired
    /// with that subset, in chronological order. Exactly
    /// `assigned_len() - b * n_x` entries.
    pub fn eligible_steps(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.assigned_len() - self.b * self.n_x);
        for j in 0..self.b {
            let range = self.subset_range(j);
            for step in range.start + self.n_x..range.end {
                out.push((step, j));
            }
        }
        out
    }
}

/// A fitted ensemble: `plan.b` members plus the aggregation rule.
#[derive(Debug, Clone)]
pub struct EnsembleModel<M: QuantileModel> {
    members: Vec<M>,
    plan: SubsetPlan,
    aggregation: Aggregation,
}

impl<M: QuantileModel> EnsembleModel<M> {
    pub fn new(members: Vec<M>, plan: SubsetPlan, aggregation: Aggregation) -> Result<Self> {
        if members.len() != plan.b {
            return Err(Error::ShapeMismatch(format!(
                "{} members for a plan of {}",
                members.len(),
                plan.b
            )));
        }
        if members.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "an ensemble needs at least 2 members, got {}",
                members.len()
            )));
        }
        Ok(Self { members, plan, aggregation })
    }

    pub fn members(&self) -> &[M] {
        &self.members
    }

    pub fn plan(&self) -> &SubsetPlan {
        &self.plan
    }

    pub fn aggregation(&self) -> &Aggregation {
        &self.aggregation
    }

    pub fn levels(&self) -> QuantileLevels {
        self.members[0].levels()
    }

    pub fn horizon(&self) -> usize {
        self.members[0].horizon()
    }

    /// Aggregate the tracks of the listed members on one input window.
    pub fn aggregate_tracks(
        &self,
        input: &[f64],
        member_indices: &[usize],
    ) -> Result<QuantilePrediction> {
        if member_indices.is_empty() {
            return Err(Error::EmptyAggregate);
        }
        let preds: Vec<QuantilePrediction> = member_indices
            .iter()
            .map(|&j| self.members[j].predict(input))
            .collect::<Result<_>>()?;
        let n_y = preds[0].horizon();
        let mut lo = Vec::with_capacity(n_y);
        let mut mid = Vec::with_capacity(n_y);
        let mut hi = Vec::with_capacity(n_y);
        let mut column = Vec::with_capacity(preds.len());
        for h in 0..n_y {
            for (track, out) in [(0usize, &mut lo), (1, &mut mid), (2, &mut hi)] {
                column.clear();
                for p in &preds {
                    column.push(match track {
                        0 => p.lo[h],
                        1 => p.mid[h],
                        _ => p.hi[h],
                    });
                }
                out.push(aggregate(&column, &self.aggregation)?);
            }
        }
        Ok(QuantilePrediction { lo, mid, hi })
    }

    /// Aggregate all members, as done at prediction time.
    pub fn predict_all(&self, input: &[f64]) -> Result<QuantilePrediction> {
        let all: Vec<usize> = (0..self.members.len()).collect();
        self.aggregate_tracks(input, &all)
    }
}

/// Fit one member per subset. `full_windows` must be the stride-1 windows
/// of the training range the plan was built for; each member keeps only
/// the windows fully inside its subset.
///
/// Members are independent, so they are fitted in parallel with one seed
/// per member; the result is identical to fitting them sequentially.
pub fn fit_ensemble<A: QuantileAlgorithm>(
    algorithm: &A,
    full_windows: &WindowedDataset,
    plan: &SubsetPlan,
    levels: QuantileLevels,
    aggregation: Aggregation,
    seed: u64,
) -> Result<EnsembleModel<A::Fitted>> {
    if full_windows.n_x != plan.n_x || full_windows.n_y != plan.n_y {
        return Err(Error::ShapeMismatch(format!(
            "windows of shape ({}, {}) for a plan of shape ({}, {})",
            full_windows.n_x, full_windows.n_y, plan.n_x, plan.n_y
        )));
    }
    let member_indices: Vec<Vec<usize>> = (0..plan.b)
        .map(|j| {
            (0..full_windows.len())
                .filter(|&k| plan.hosts_window(j, full_windows.origins[k]))
                .collect()
        })
        .collect();
    if member_indices.iter().any(|idx| idx.is_empty()) {
        return Err(Error::NoTrainingData);
    }
    let members: Vec<A::Fitted> = member_indices
        .into_par_iter()
        .enumerate()
        .map(|(j, idx)| {
            let data = full_windows.select(&idx);
            let member_seed = seed.wrapping_add(j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            algorithm.fit(&data, levels, member_seed)
        })
        .collect::<Result<_>>()?;
    EnsembleModel::new(members, plan.clone(), aggregation)
}

/// A leave-one-out quantile estimate at one training step.
#[derive(Debug, Clone, PartialEq)]
pub struct LooEstimate {
    /// Step index in the training range.
    pub step: usize,
    /// First-horizon lower, median and upper estimates from the members
    /// whose subset excludes the step and its whole input window.
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
}

/// Leave-one-out estimates for every eligible training step, in
/// chronological order.
///
/// For a step in subset `j`, the input window ending there is fed to all
/// members except `j` and their first-horizon predictions are aggregated.
/// Exactly `plan.assigned_len() - b * n_x` estimates come back.
pub fn loo_quantile_estimates<M: QuantileModel>(
    ensemble: &EnsembleModel<M>,
    train: &TimeSeries,
) -> Result<Vec<LooEstimate>> {
    let plan = ensemble.plan();
    if train.len() < plan.assigned_len() {
        return Err(Error::SeriesTooShort {
            needed: plan.assigned_len(),
            actual: train.len(),
        });
    }
    let eligible = plan.eligible_steps();
    eligible
        .par_iter()
        .map(|&(step, owner)| {
            let others: Vec<usize> = (0..plan.b).filter(|&j| j != owner).collect();
            if others.is_empty() {
                return Err(Error::NoOutOfSampleLearner { step });
            }
            let input = extract_input_window(train, step, plan.n_x)?;
            let pred = ensemble.aggregate_tracks(&input, &others)?;
            Ok(LooEstimate { step, lo: pred.lo[0], mid: pred.mid[0], hi: pred.hi[0] })
        })
        .collect()
}
