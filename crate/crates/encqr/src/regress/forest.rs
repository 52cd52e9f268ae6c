//! Quantile regression forest.
//!
//! Trees are grown on bootstrap resamples with variance-reduction splits
//! over the flattened input window. Every leaf keeps the training target
//! vectors that reached it, so a prediction at any quantile level is the
//! plain empirical quantile of the values pooled from all trees' leaves,
//! computed independently per horizon step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{empirical_quantile, QuantileConvention, QuantileLevels};
use crate::regress::{QuantileModel, QuantilePrediction};
use crate::window::WindowedDataset;

/// Hyperparameters for [`fit_quantile_forest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestHyper {
    pub n_trees: usize,
    /// Minimum number of samples a split may leave on either side. Nodes
    /// stop splitting once they are pure or hold fewer than
    /// `2 * min_samples_leaf` samples.
    pub min_samples_leaf: usize,
    /// Number of candidate features per split; all features when absent.
    pub max_features: Option<usize>,
    /// Draw a bootstrap resample per tree instead of using the data as-is.
    pub bootstrap: bool,
}

impl Default for ForestHyper {
    fn default() -> Self {
        Self { n_trees: 10, min_samples_leaf: 2, max_features: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { targets: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    /// Node 0 is the root.
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, input: &[f64]) -> &Vec<Vec<f64>> {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split { feature, threshold, left, right } => {
                    idx = if input[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { targets } => return targets,
            }
        }
    }
}

/// A fitted quantile regression forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileForestModel {
    levels: QuantileLevels,
    n_y: usize,
    input_len: usize,
    pub(crate) trees: Vec<Tree>,
}

impl QuantileModel for QuantileForestModel {
    fn levels(&self) -> QuantileLevels {
        self.levels
    }

    fn horizon(&self) -> usize {
        self.n_y
    }

    fn input_len(&self) -> usize {
        self.input_len
    }

    fn predict(&self, input: &[f64]) -> Result<QuantilePrediction> {
        if input.len() != self.input_len {
            return Err(Error::ShapeMismatch(format!(
                "input of length {}, model expects {}",
                input.len(),
                self.input_len
            )));
        }
        let pools: Vec<&Vec<Vec<f64>>> = self.trees.iter().map(|t| t.leaf(input)).collect();
        let mut lo = Vec::with_capacity(self.n_y);
        let mut mid = Vec::with_capacity(self.n_y);
        let mut hi = Vec::with_capacity(self.n_y);
        let mut column = Vec::new();
        for h in 0..self.n_y {
            column.clear();
            for pool in &pools {
                column.extend(pool.iter().map(|row| row[h]));
            }
            lo.push(empirical_quantile(&column, self.levels.lo, QuantileConvention::Plain)?);
            mid.push(empirical_quantile(&column, self.levels.mid(), QuantileConvention::Plain)?);
            hi.push(empirical_quantile(&column, self.levels.hi, QuantileConvention::Plain)?);
        }
        // Plain quantiles of one pooled sample are monotone in the level,
        // so the tracks cannot cross.
        Ok(QuantilePrediction { lo, mid, hi })
    }
}

/// Working view of the node samples during growth.
struct Grower<'a> {
    data: &'a WindowedDataset,
    min_samples_leaf: usize,
    max_features: Option<usize>,
    nodes: Vec<Node>,
}

impl<'a> Grower<'a> {
    fn is_pure(&self, samples: &[usize]) -> bool {
        let first = &self.data.targets[samples[0]];
        samples[1..].iter().all(|&k| &self.data.targets[k] == first)
    }

    fn grow(&mut self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        if samples.len() < 2 * self.min_samples_leaf || self.is_pure(&samples) {
            return self.push_leaf(samples);
        }

        let d = self.data.input_len();
        let features: Vec<usize> = match self.max_features {
            Some(m) if m < d => {
                let mut picked: Vec<usize> = (0..d).collect();
                for i in 0..m {
                    let j = rng.gen_range(i..d);
                    picked.swap(i, j);
                }
                picked.truncate(m);
                picked.sort_unstable();
                picked
            }
            _ => (0..d).collect(),
        };

        let n = samples.len();
        let n_y = self.data.n_y;
        let mut parent_sums = vec![0.0f64; n_y];
        let mut parent_sq = 0.0f64;
        for &k in &samples {
            for (h, &v) in self.data.targets[k].iter().enumerate() {
                parent_sums[h] += v;
                parent_sq += v * v;
            }
        }
        let parent_sse =
            parent_sq - parent_sums.iter().map(|s| s * s / n as f64).sum::<f64>();

        let mut best: Option<(f64, usize, f64)> = None; // (reduction, feature, threshold)
        let mut order = samples.clone();
        let mut left_sums = vec![0.0f64; n_y];
        for &f in &features {
            order.sort_by(|&a, &b| {
                self.data.inputs[a][f].total_cmp(&self.data.inputs[b][f])
            });
            left_sums.iter_mut().for_each(|v| *v = 0.0);
            let mut left_sq = 0.0f64;
            for i in 0..n - 1 {
                let k = order[i];
                for (h, &v) in self.data.targets[k].iter().enumerate() {
                    left_sums[h] += v;
                    left_sq += v * v;
                }
                let here = self.data.inputs[k][f];
                let next = self.data.inputs[order[i + 1]][f];
                if here == next {
                    continue;
                }
                let n_l = i + 1;
                let n_r = n - n_l;
                if n_l < self.min_samples_leaf || n_r < self.min_samples_leaf {
                    continue;
                }
                let sse_l = left_sq
                    - left_sums.iter().map(|s| s * s / n_l as f64).sum::<f64>();
                let sse_r = (parent_sq - left_sq)
                    - parent_sums
                        .iter()
                        .zip(&left_sums)
                        .map(|(p, l)| {
                            let r = p - l;
                            r * r / n_r as f64
                        })
                        .sum::<f64>();
                let reduction = parent_sse - sse_l - sse_r;
                if best.map_or(true, |(b, _, _)| reduction > b) {
                    // The midpoint of two adjacent floats can round onto an
                    // endpoint; fall back to the left value so the `<=`
                    // partition reproduces exactly this candidate split.
                    let mid = (here + next) / 2.0;
                    let threshold = if here < mid && mid < next { mid } else { here };
                    best = Some((reduction, f, threshold));
                }
            }
        }

        match best {
            Some((reduction, feature, threshold)) if reduction > 1e-12 => {
                let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
                    .into_iter()
                    .partition(|&k| self.data.inputs[k][feature] <= threshold);
                if left_samples.is_empty() || right_samples.is_empty() {
                    let mut all = left_samples;
                    all.extend(right_samples);
                    return self.push_leaf(all);
                }
                let node = self.nodes.len();
                self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
                let left = self.grow(left_samples, rng);
                let right = self.grow(right_samples, rng);
                if let Node::Split { left: l, right: r, .. } = &mut self.nodes[node] {
                    *l = left;
                    *r = right;
                }
                node
            }
            _ => self.push_leaf(samples),
        }
    }

    fn push_leaf(&mut self, samples: Vec<usize>) -> usize {
        let targets = samples.iter().map(|&k| self.data.targets[k].clone()).collect();
        self.nodes.push(Node::Leaf { targets });
        self.nodes.len() - 1
    }
}

fn grow_tree(data: &WindowedDataset, hyper: &ForestHyper, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();
    let samples: Vec<usize> = if hyper.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut grower = Grower {
        data,
        min_samples_leaf: hyper.min_samples_leaf,
        max_features: hyper.max_features,
        nodes: Vec::new(),
    };
    grower.grow(samples, &mut rng);
    Tree { nodes: grower.nodes }
}

/// Fit a quantile regression forest. Trees are independent, so they are
/// grown in parallel; each gets its own seed derived from `seed`, which
/// keeps the result identical to sequential growth.
pub fn fit_quantile_forest(
    data: &WindowedDataset,
    levels: QuantileLevels,
    hyper: &ForestHyper,
    seed: u64,
) -> Result<QuantileForestModel> {
    if data.is_empty() {
        return Err(Error::NoTrainingData);
    }
    if hyper.n_trees == 0 || hyper.min_samples_leaf == 0 {
        return Err(Error::InvalidConfig(format!(
            "forest hyperparameters out of range: n_trees {}, min_samples_leaf {}",
            hyper.n_trees, hyper.min_samples_leaf
        )));
    }
    if let Some(m) = hyper.max_features {
        if m == 0 {
            return Err(Error::InvalidConfig("max_features must be positive".into()));
        }
    }
    let trees: Vec<Tree> = (0..hyper.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(data, hyper, seed.wrapping_add(t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        .collect();
    Ok(QuantileForestModel { levels, n_y: data.n_y, input_len: data.input_len(), trees })
}
