//! Seeded initialization, epoch-based SGD, and the learning-rate grid driver.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::RatingDataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricReport};
use crate::models::{dot, EmbeddingModel, FactorMatrix, ModelKind};
use crate::ranking::RankTable;
use crate::seeding::{derive_seed, STREAM_EPOCH_SHUFFLE};

/// Epoch loss above this value flags the run as diverged and stops it.
pub const DIVERGENCE_LOSS_CAP: f64 = 1e12;

/// Everything a single training run needs besides the data.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Vanilla,
            k: 10,
            learning_rate: 0.01,
            epochs: 100,
            seed: 42,
            init_scale: 0.1,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be a positive finite number, got {}",
                self.learning_rate
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".to_string()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".to_string()));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "init_scale must be a positive finite number, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }

    pub fn with_learning_rate(&self, learning_rate: f64) -> Self {
        Self { learning_rate, ..self.clone() }
    }

    pub fn with_kind(&self, kind: ModelKind) -> Self {
        Self { kind, ..self.clone() }
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Total squared training loss recorded after each completed epoch.
    pub epoch_loss: Vec<f64>,
    pub diverged: bool,
    pub model: EmbeddingModel,
}

impl TrainTrace {
    pub fn epochs_run(&self) -> usize {
        self.epoch_loss.len()
    }
}

/// Fresh factor matrices with entries drawn i.i.d. uniform from `[0, scale)`.
///
/// User rows are drawn before item rows, row by row, so the layout of the
/// stream is part of the determinism contract.
pub fn init_embeddings(
    kind: ModelKind,
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    scale: f64,
) -> EmbeddingModel {
    assert!(m >= 1 && n >= 1 && k >= 1, "init_embeddings requires m, n, k >= 1");
    assert!(scale > 0.0, "init_embeddings requires scale > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut user_factors = FactorMatrix::zeros(m, k);
    for i in 0..m {
        for x in user_factors.row_mut(i) {
            *x = rng.random::<f64>() * scale;
        }
    }
    let mut item_factors = FactorMatrix::zeros(n, k);
    for j in 0..n {
        for x in item_factors.row_mut(j) {
            *x = rng.random::<f64>() * scale;
        }
    }
    EmbeddingModel::new(kind, user_factors, item_factors)
        .expect("freshly initialized factors are dimension-consistent")
}

/// Runs SGD over the training triplets.
///
/// Each epoch visits every triplet once in a seeded shuffled order and applies
/// the pair update `u -= lr * du`, `v -= lr * dv` where `du = 2 e v`,
/// `dv = 2 e u` from the pre-update snapshot of the pair. The total squared
/// loss is recorded after every epoch; a non-finite loss, a loss above
/// [`DIVERGENCE_LOSS_CAP`], or a non-finite factor entry marks the run
/// diverged and stops it early.
pub fn train(config: &TrainConfig, data: &RatingDataset, ranks: &RankTable) -> Result<TrainTrace> {
    config.validate()?;
    if ranks.user_ranks().len() != data.user_count() || ranks.item_ranks().len() != data.item_count()
    {
        return Err(Error::DimensionMismatch(format!(
            "rank table covers {}x{} users/items, dataset has {}x{}",
            ranks.user_ranks().len(),
            ranks.item_ranks().len(),
            data.user_count(),
            data.item_count()
        )));
    }

    let triplets = data.triplets();
    let targets: Vec<f64> = triplets
        .iter()
        .map(|t| crate::models::target(config.kind, t.rating, ranks.user_rank(t.user), ranks.item_rank(t.item)))
        .collect();

    let mut model = init_embeddings(
        config.kind,
        data.user_count(),
        data.item_count(),
        config.k,
        config.seed,
        config.init_scale,
    );

    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_EPOCH_SHUFFLE));
    if !config.shuffle_each_epoch {
        order.shuffle(&mut shuffle_rng);
    }

    let lr = config.learning_rate;
    let k = config.k;
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut diverged = false;

    for _ in 0..config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut shuffle_rng);
        }
        let (user_factors, item_factors) = model.factors_mut();
        for &idx in &order {
            let t = triplets[idx];
            let u = user_factors.row_mut(t.user);
            let v = item_factors.row_mut(t.item);
            let e = dot(u, v) - targets[idx];
            for f in 0..k {
                let u_f = u[f];
                let v_f = v[f];
                let du_f = 2.0 * e * v_f;
                let dv_f = 2.0 * e * u_f;
                u[f] = u_f - lr * du_f;
                v[f] = v_f - lr * dv_f;
            }
        }

        let mut loss = 0.0;
        for (t, tgt) in triplets.iter().zip(&targets) {
            let e = model.dot(t.user, t.item) - tgt;
            loss += e * e;
        }
        epoch_loss.push(loss);
        if !loss.is_finite() || loss > DIVERGENCE_LOSS_CAP || !model.all_finite() {
            diverged = true;
            break;
        }
    }

    Ok(TrainTrace { epoch_loss, diverged, model })
}

/// One grid-search result: the rate swept and the metrics it earned.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub report: MetricReport,
}

/// Trains one model per learning rate (same seed, same data) and evaluates
/// each on the held-out split. Output order matches the input rate order no
/// matter how the runs are scheduled.
pub fn grid_search(
    base: &TrainConfig,
    learning_rates: &[f64],
    train_data: &RatingDataset,
    test_data: &RatingDataset,
    ranks: &RankTable,
    top_n: usize,
) -> Result<Vec<GridPoint>> {
    if learning_rates.is_empty() {
        return Err(Error::InvalidConfig("learning-rate grid is empty".to_string()));
    }
    for &rate in learning_rates {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning-rate grid entries must be positive finite numbers, got {rate}"
            )));
        }
    }
    learning_rates
        .par_iter()
        .map(|&rate| {
            let config = base.with_learning_rate(rate);
            let trace = train(&config, train_data, ranks)?;
            let report = evaluate(&trace, &config, train_data, test_data, ranks, top_n)?;
            Ok(GridPoint { learning_rate: rate, report })
        })
        .collect()
}

/// Eight log-spaced learning rates from 1e-4 to 5e-2, endpoints exact.
pub fn default_learning_rate_grid() -> Vec<f64> {
    log_spaced_grid(1e-4, 5e-2, 8)
}

/// `count` log-spaced values from `lo` to `hi` inclusive, endpoints exact.
pub fn log_spaced_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let ratio = hi / lo;
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                lo * ratio.powf(i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}
