//! Conformalized interval constructors.
//!
//! Five ways to turn quantile-regressor output into prediction intervals
//! at nominal miscoverage `alpha`:
//!
//! * `split_cp`: symmetric band around the median track, half-width set by
//!   the conformal quantile of absolute calibration residuals;
//! * `cqr`: the lower/upper tracks shifted outward by the conformal
//!   quantile of the symmetric score `max(q_lo - y, y - q_hi)`;
//! * `raw_qr`: the aggregated ensemble tracks as-is, no calibration;
//! * `enbpi`: aggregated median of a disjoint-subset ensemble plus a
//!   symmetric half-width from a sliding FIFO of absolute leave-one-out
//!   residuals;
//! * `encqr`: the aggregated lower/upper tracks, each shifted by its own
//!   sliding FIFO of asymmetric leave-one-out scores.
//!
//! The sliding methods are batched: `predict_batch` freezes the FIFO
//! quantiles for one whole batch, and the matching `observe` call feeds
//! the freshly revealed targets back in, dropping the oldest scores
//! one-for-one. Offsets from a single symmetric score family use the
//! conformal quantile at `1 - alpha`. The asymmetric pair calibrates each
//! bound separately, so each side uses level `1 - alpha / 2` and the two
//! tails split the miscoverage budget between them.

mod store;

pub use store::{ResidualStore, ScoreFifo};

use serde::{Deserialize, Serialize};

use crate::ensemble::{loo_quantile_estimates, EnsembleModel};
use crate::error::{Error, Result};
use crate::interval::IntervalBatch;
use crate::quantile::{empirical_quantile, QuantileConvention};
use crate::regress::QuantileModel;
use crate::series::TimeSeries;
use crate::window::WindowedDataset;

/// Signed miss distances of an interval `[q_lo, q_hi]` from an observation:
/// `(q_lo - y, y - q_hi)`. A positive value means the observation escaped
/// on that side; inside the interval both values are negative.
pub fn asymmetric_scores(q_lo: f64, q_hi: f64, y: f64) -> (f64, f64) {
    (q_lo - y, y - q_hi)
}

/// The symmetric conformity score `max(q_lo - y, y - q_hi)`.
pub fn cqr_score(q_lo: f64, q_hi: f64, y: f64) -> f64 {
    let (lo, hi) = asymmetric_scores(q_lo, q_hi, y);
    lo.max(hi)
}

/// Which FIFO layout the asymmetric scores use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualPooling {
    /// All horizon steps share one FIFO pair.
    #[default]
    Pooled,
    /// One FIFO pair per horizon step, for ablations.
    PerHorizon,
}

#[derive(Debug, Clone)]
enum Bank {
    Pooled(ResidualStore),
    PerHorizon(Vec<ResidualStore>),
}

#[derive(Debug, Clone)]
struct PendingTracks {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Kind<M: QuantileModel> {
    SplitCp { model: M, half_width: f64 },
    Cqr { model: M, offset: f64 },
    RawQr { ensemble: EnsembleModel<M> },
    Enbpi { ensemble: EnsembleModel<M>, store: ScoreFifo, pending: Option<Vec<f64>> },
    Encqr { ensemble: EnsembleModel<M>, bank: Bank, pending: Option<PendingTracks> },
}

/// A fitted interval constructor. Build one with the method constructors,
/// then alternate [`ConformalPredictor::predict_batch`] and
/// [`ConformalPredictor::observe`] over the evaluation stream.
#[derive(Debug, Clone)]
pub struct ConformalPredictor<M: QuantileModel> {
    kind: Kind<M>,
    alpha: f64,
    bound_swaps: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidLevel(alpha));
    }
    Ok(())
}

fn check_calibration<M: QuantileModel>(model: &M, calibration: &WindowedDataset) -> Result<()> {
    if calibration.is_empty() {
        return Err(Error::EmptyResidualSet);
    }
    if calibration.input_len() != model.input_len() || calibration.n_y != model.horizon() {
        return Err(Error::ShapeMismatch(format!(
            "calibration pairs of shape ({}, {}) for a model expecting ({}, {})",
            calibration.input_len(),
            calibration.n_y,
            model.input_len(),
            model.horizon()
        )));
    }
    Ok(())
}

impl<M: QuantileModel> ConformalPredictor<M> {
    /// Split conformal prediction: a constant-width band around the median
    /// track. Every calibration pair contributes one absolute residual per
    /// horizon step.
    pub fn split_cp(model: M, calibration: &WindowedDataset, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_calibration(&model, calibration)?;
        let mut residuals = Vec::with_capacity(calibration.len() * calibration.n_y);
        for (x, y) in calibration.inputs.iter().zip(&calibration.targets) {
            let pred = model.predict(x)?;
            for (h, &obs) in y.iter().enumerate() {
                residuals.push((obs - pred.mid[h]).abs());
            }
        }
        let half_width =
            empirical_quantile(&residuals, 1.0 - alpha, QuantileConvention::Conformal)?;
        Ok(Self { kind: Kind::SplitCp { model, half_width }, alpha, bound_swaps: 0 })
    }

    /// Conformalized quantile regression with the symmetric score: both
    /// tracks shift outward by one common offset.
    pub fn cqr(model: M, calibration: &WindowedDataset, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_calibration(&model, calibration)?;
        let mut scores = Vec::with_capacity(calibration.len() * calibration.n_y);
        for (x, y) in calibration.inputs.iter().zip(&calibration.targets) {
            let pred = model.predict(x)?;
            for (h, &obs) in y.iter().enumerate() {
                scores.push(cqr_score(pred.lo[h], pred.hi[h], obs));
            }
        }
        let offset = empirical_quantile(&scores, 1.0 - alpha, QuantileConvention::Conformal)?;
        Ok(Self { kind: Kind::Cqr { model, offset }, alpha, bound_swaps: 0 })
    }

    /// The aggregated ensemble tracks with no calibration at all. Useful
    /// as the baseline the conformalized variants are measured against.
    pub fn raw_qr(ensemble: EnsembleModel<M>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { kind: Kind::RawQr { ensemble }, alpha, bound_swaps: 0 })
    }

    /// Sliding symmetric intervals around the aggregated median track,
    /// seeded with the absolute leave-one-out residuals of `train`.
    pub fn enbpi(ensemble: EnsembleModel<M>, train: &TimeSeries, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let estimates = loo_quantile_estimates(&ensemble, train)?;
        let residuals: Vec<f64> = estimates
            .iter()
            .map(|est| (train.target()[est.step] - est.mid).abs())
            .collect();
        let store = ScoreFifo::warm(residuals)?;
        Ok(Self { kind: Kind::Enbpi { ensemble, store, pending: None }, alpha, bound_swaps: 0 })
    }

    /// Sliding asymmetric intervals around the aggregated lower/upper
    /// tracks, seeded with the leave-one-out scores of `train`.
    pub fn encqr(
        ensemble: EnsembleModel<M>,
        train: &TimeSeries,
        alpha: f64,
        pooling: ResidualPooling,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let estimates = loo_quantile_estimates(&ensemble, train)?;
        let plan = ensemble.plan().clone();
        let scored: Vec<(usize, f64, f64)> = estimates
            .iter()
            .map(|est| {
                let (e_lo, e_hi) =
                    asymmetric_scores(est.lo, est.hi, train.target()[est.step]);
                (est.step, e_lo, e_hi)
            })
            .collect();
        let bank = match pooling {
            ResidualPooling::Pooled => {
                let lo = scored.iter().map(|s| s.1).collect();
                let hi = scored.iter().map(|s| s.2).collect();
                Bank::Pooled(ResidualStore::warm(lo, hi)?)
            }
            ResidualPooling::PerHorizon => {
                // Training scores come one per step; spread them over the
                // horizon FIFOs by their phase within the eligible run of
                // their subset, so every FIFO starts non-empty.
                let n_y = plan.n_y;
                let mut lo_buckets: Vec<Vec<f64>> = vec![Vec::new(); n_y];
                let mut hi_buckets: Vec<Vec<f64>> = vec![Vec::new(); n_y];
                for &(step, e_lo, e_hi) in &scored {
                    let owner = plan
                        .member_of_step(step)
                        .ok_or(Error::NoOutOfSampleLearner { step })?;
                    let run_start = plan.subset_range(owner).start + plan.n_x;
                    let phase = (step - run_start) % n_y;
                    lo_buckets[phase].push(e_lo);
                    hi_buckets[phase].push(e_hi);
                }
                let stores = lo_buckets
                    .into_iter()
                    .zip(hi_buckets)
                    .map(|(lo, hi)| ResidualStore::warm(lo, hi))
                    .collect::<Result<Vec<_>>>()?;
                Bank::PerHorizon(stores)
            }
        };
        Ok(Self { kind: Kind::Encqr { ensemble, bank, pending: None }, alpha, bound_swaps: 0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn method_name(&self) -> &'static str {
        match &self.kind {
            Kind::SplitCp { .. } => "split_cp",
            Kind::Cqr { .. } => "cqr",
            Kind::RawQr { .. } => "raw_qr",
            Kind::Enbpi { .. } => "enbpi",
            Kind::Encqr { .. } => "encqr",
        }
    }

    /// Steps per batch, equal to the regressor horizon.
    pub fn horizon(&self) -> usize {
        match &self.kind {
            Kind::SplitCp { model, .. } | Kind::Cqr { model, .. } => model.horizon(),
            Kind::RawQr { ensemble }
            | Kind::Enbpi { ensemble, .. }
            | Kind::Encqr { ensemble, .. } => ensemble.horizon(),
        }
    }

    /// How many interval bounds had to be swapped back into order so far.
    pub fn bound_swaps(&self) -> usize {
        self.bound_swaps
    }

    /// Number of conformity scores currently stored, if this method keeps
    /// a sliding store.
    pub fn store_len(&self) -> Option<usize> {
        match &self.kind {
            Kind::Enbpi { store, .. } => Some(store.len()),
            Kind::Encqr { bank, .. } => Some(match bank {
                Bank::Pooled(store) => store.len(),
                Bank::PerHorizon(stores) => stores.iter().map(|s| s.len()).sum(),
            }),
            _ => None,
        }
    }

    /// The per-side offsets that would apply to the next batch, when this
    /// method calibrates asymmetric bounds.
    pub fn current_offsets(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Encqr { bank, .. } => {
                let level = 1.0 - self.alpha / 2.0;
                match bank {
                    Bank::Pooled(store) => Some((
                        store.lo.quantile(level).ok()?,
                        store.hi.quantile(level).ok()?,
                    )),
                    Bank::PerHorizon(_) => None,
                }
            }
            _ => None,
        }
    }

    /// Intervals for the next batch of `horizon()` steps. For the sliding
    /// methods the matching [`ConformalPredictor::observe`] call must
    /// arrive before the following batch.
    pub fn predict_batch(&mut self, input: &[f64]) -> Result<IntervalBatch> {
        let alpha = self.alpha;
        let (batch, swaps) = match &mut self.kind {
            Kind::SplitCp { model, half_width } => {
                let pred = model.predict(input)?;
                let lower = pred.mid.iter().map(|c| c - *half_width).collect();
                let upper = pred.mid.iter().map(|c| c + *half_width).collect();
                IntervalBatch::assemble(lower, pred.mid.clone(), upper, alpha)?
            }
            Kind::Cqr { model, offset } => {
                let pred = model.predict(input)?;
                let lower = pred.lo.iter().map(|q| q - *offset).collect();
                let upper = pred.hi.iter().map(|q| q + *offset).collect();
                IntervalBatch::assemble(lower, pred.mid, upper, alpha)?
            }
            Kind::RawQr { ensemble } => {
                let pred = ensemble.predict_all(input)?;
                IntervalBatch::assemble(pred.lo, pred.mid, pred.hi, alpha)?
            }
            Kind::Enbpi { ensemble, store, pending } => {
                if pending.is_some() {
                    return Err(Error::Protocol(
                        "predict_batch called again before observe".into(),
                    ));
                }
                let half_width = store.quantile(1.0 - alpha)?;
                let pred = ensemble.predict_all(input)?;
                let lower = pred.mid.iter().map(|c| c - half_width).collect();
                let upper = pred.mid.iter().map(|c| c + half_width).collect();
                *pending = Some(pred.mid.clone());
                IntervalBatch::assemble(lower, pred.mid, upper, alpha)?
            }
            Kind::Encqr { ensemble, bank, pending } => {
                if pending.is_some() {
                    return Err(Error::Protocol(
                        "predict_batch called again before observe".into(),
                    ));
                }
                let level = 1.0 - alpha / 2.0;
                let pred = ensemble.predict_all(input)?;
                let n_y = pred.horizon();
                let mut lower = Vec::with_capacity(n_y);
                let mut upper = Vec::with_capacity(n_y);
                match bank {
                    Bank::Pooled(store) => {
                        let omega_lo = store.lo.quantile(level)?;
                        let omega_hi = store.hi.quantile(level)?;
                        for h in 0..n_y {
                            lower.push(pred.lo[h] - omega_lo);
                            upper.push(pred.hi[h] + omega_hi);
                        }
                    }
                    Bank::PerHorizon(stores) => {
                        if stores.len() != n_y {
                            return Err(Error::ShapeMismatch(format!(
                                "{} per-horizon stores for horizon {n_y}",
                                stores.len()
                            )));
                        }
                        for h in 0..n_y {
                            lower.push(pred.lo[h] - stores[h].lo.quantile(level)?);
                            upper.push(pred.hi[h] + stores[h].hi.quantile(level)?);
                        }
                    }
                }
                *pending = Some(PendingTracks { lo: pred.lo, hi: pred.hi });
                IntervalBatch::assemble(lower, pred.mid, upper, alpha)?
            }
        };
        self.bound_swaps += swaps;
        Ok(batch)
    }

    /// Feed back the targets of the batch just predicted. The sliding
    /// methods compute scores against their raw (uncalibrated) tracks and
    /// rotate the FIFOs; the static methods only validate the shape.
    pub fn observe(&mut self, y_batch: &[f64]) -> Result<()> {
        let horizon = self.horizon();
        if y_batch.len() != horizon {
            return Err(Error::BatchSizeMismatch { expected: horizon, actual: y_batch.len() });
        }
        match &mut self.kind {
            Kind::SplitCp { .. } | Kind::Cqr { .. } | Kind::RawQr { .. } => Ok(()),
            Kind::Enbpi { store, pending, .. } => {
                let centers = pending.take().ok_or_else(|| {
                    Error::Protocol("observe called with no batch outstanding".into())
                })?;
                let residuals: Vec<f64> = y_batch
                    .iter()
                    .zip(&centers)
                    .map(|(y, c)| (y - c).abs())
                    .collect();
                store.update(&residuals)
            }
            Kind::Encqr { bank, pending, .. } => {
                let tracks = pending.take().ok_or_else(|| {
                    Error::Protocol("observe called with no batch outstanding".into())
                })?;
                match bank {
                    Bank::Pooled(store) => {
                        let mut lo_scores = Vec::with_capacity(y_batch.len());
                        let mut hi_scores = Vec::with_capacity(y_batch.len());
                        for (h, &y) in y_batch.iter().enumerate() {
                            let (e_lo, e_hi) = asymmetric_scores(tracks.lo[h], tracks.hi[h], y);
                            lo_scores.push(e_lo);
                            hi_scores.push(e_hi);
                        }
                        store.update(&lo_scores, &hi_scores)
                    }
                    Bank::PerHorizon(stores) => {
                        for (h, &y) in y_batch.iter().enumerate() {
                            let (e_lo, e_hi) = asymmetric_scores(tracks.lo[h], tracks.hi[h], y);
                            stores[h].update(&[e_lo], &[e_hi])?;
                        }
                        Ok(())
                    }
                }
            }
        }
    }
}
