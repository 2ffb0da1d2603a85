//! Model kinds, regression targets, gradients, and inverse prediction
//! transforms.
//!
//! All three variants factor the rating matrix as dot products of user and
//! item embeddings and minimize squared error against a kind-specific target:
//!
//! * vanilla:  `t = r`
//! * glovemat: `t = ln(r + 1)`
//! * rankmat:  `t = ln(r + 1) / (ln(rank_u + 1) + ln(rank_i + 1))`
//!
//! `predict_rating` inverts the transform to map a trained dot product back
//! onto the rating scale. No bias terms and no regularization anywhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::dataset::RatingDataset;
use crate::error::{Error, Result};
use crate::ranking::RankTable;
use crate::trainer::TrainConfig;

/// Cap on the exponent fed to `exp` when inverting log-space targets, so a
/// divergent dot product yields a huge-but-clampable value instead of rolling
/// into infinity before the clamp.
const MAX_EXP_ARG: f64 = 50.0;

/// The three matrix-factorization variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Vanilla,
    GloveMat,
    RankMat,
}

impl ModelKind {
    /// All variants, in comparison-table order.
    pub const ALL: [ModelKind; 3] = [ModelKind::Vanilla, ModelKind::GloveMat, ModelKind::RankMat];
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(ModelKind::Vanilla),
            "glovemat" => Ok(ModelKind::GloveMat),
            "rankmat" => Ok(ModelKind::RankMat),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind {other:?}, expected vanilla, glovemat, or rankmat"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Vanilla => write!(f, "vanilla"),
            ModelKind::GloveMat => write!(f, "glovemat"),
            ModelKind::RankMat => write!(f, "rankmat"),
        }
    }
}

/// Inclusive output range for predicted ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampRange {
    min: f64,
    max: f64,
}

impl ClampRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidConfig(format!(
                "clamp range requires min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn apply(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    /// Clamp bounds taken from the observed rating range of a dataset.
    pub fn from_dataset(data: &RatingDataset) -> Result<Self> {
        Self::new(data.rating_min(), data.rating_max())
    }
}

/// Kind-specific regression target for one observed rating.
///
/// Ranks are 1-based, so the rank-normalizing denominator is at least
/// `2 ln 2` and the rankmat target is always defined.
pub fn target(kind: ModelKind, rating: f64, user_rank: usize, item_rank: usize) -> f64 {
    match kind {
        ModelKind::Vanilla => rating,
        ModelKind::GloveMat => (rating + 1.0).ln(),
        ModelKind::RankMat => {
            (rating + 1.0).ln() / (((user_rank as f64) + 1.0).ln() + ((item_rank as f64) + 1.0).ln())
        }
    }
}

/// Inverts the target transform and clamps the result onto the rating scale.
pub fn predict_rating(
    kind: ModelKind,
    dot: f64,
    user_rank: usize,
    item_rank: usize,
    clamp: ClampRange,
) -> f64 {
    let raw = match kind {
        ModelKind::Vanilla => dot,
        ModelKind::GloveMat => dot.min(MAX_EXP_ARG).exp() - 1.0,
        ModelKind::RankMat => {
            let denom = ((user_rank as f64) + 1.0).ln() + ((item_rank as f64) + 1.0).ln();
            (dot * denom).min(MAX_EXP_ARG).exp() - 1.0
        }
    };
    clamp.apply(raw)
}

/// Gradient of the single-pair squared error `(u . v - t)^2`.
///
/// Writes `du = 2 e v` and `dv = 2 e u` into the provided buffers and
/// returns the residual `e = u . v - t`.
pub fn grad_pair_into(u: &[f64], v: &[f64], t: f64, du: &mut [f64], dv: &mut [f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let e = dot(u, v) - t;
    for f in 0..u.len() {
        du[f] = 2.0 * e * v[f];
        dv[f] = 2.0 * e * u[f];
    }
    e
}

/// Allocating variant of [`grad_pair_into`], returning `(du, dv)`.
pub fn grad_pair(u: &[f64], v: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut du = vec![0.0; u.len()];
    let mut dv = vec![0.0; v.len()];
    grad_pair_into(u, v, t, &mut du, &mut dv);
    (du, dv)
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Dense row-major matrix of embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(
                    "ragged factor matrix rows".to_string(),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: n_rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Trained (or initializing) user and item embeddings for one model kind.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    kind: ModelKind,
    k: usize,
    user_factors: FactorMatrix,
    item_factors: FactorMatrix,
}

impl EmbeddingModel {
    pub fn new(kind: ModelKind, user_factors: FactorMatrix, item_factors: FactorMatrix) -> Result<Self> {
        if user_factors.cols() != item_factors.cols() {
            return Err(Error::DimensionMismatch(format!(
                "user factors have k={}, item factors k={}",
                user_factors.cols(),
                item_factors.cols()
            )));
        }
        let k = user_factors.cols();
        if k == 0 {
            return Err(Error::InvalidConfig("latent dimension must be >= 1".to_string()));
        }
        Ok(Self { kind, k, user_factors, item_factors })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn user_factors(&self) -> &FactorMatrix {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &FactorMatrix {
        &self.item_factors
    }

    /// Mutable access to both factor matrices at once, for SGD updates.
    pub fn factors_mut(&mut self) -> (&mut FactorMatrix, &mut FactorMatrix) {
        (&mut self.user_factors, &mut self.item_factors)
    }

    /// Dot product of one user row with one item row.
    pub fn dot(&self, user: usize, item: usize) -> f64 {
        dot(self.user_factors.row(user), self.item_factors.row(item))
    }

    /// Predicted rating for a (user, item) pair.
    pub fn predict(&self, user: usize, item: usize, ranks: &RankTable, clamp: ClampRange) -> f64 {
        predict_rating(
            self.kind,
            self.dot(user, item),
            ranks.user_rank(user),
            ranks.item_rank(item),
            clamp,
        )
    }

    pub fn all_finite(&self) -> bool {
        self.user_factors.as_slice().iter().all(|x| x.is_finite())
            && self.item_factors.as_slice().iter().all(|x| x.is_finite())
    }

    pub(crate) fn check_dims(&self, data: &RatingDataset, ranks: &RankTable) -> Result<()> {
        if self.user_factors.rows() != data.user_count()
            || self.item_factors.rows() != data.item_count()
        {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{} users/items, dataset is {}x{}",
                self.user_factors.rows(),
                self.item_factors.rows(),
                data.user_count(),
                data.item_count()
            )));
        }
        if ranks.user_ranks().len() != data.user_count()
            || ranks.item_ranks().len() != data.item_count()
        {
            return Err(Error::DimensionMismatch(
                "rank table does not match dataset dimensions".to_string(),
            ));
        }
        Ok(())
    }

    /// Writes the model as JSON, together with the config that produced it.
    pub fn save_json(&self, config: &TrainConfig, path: &Path) -> Result<()> {
        let file = ModelFile {
            kind: self.kind,
            k: self.k,
            user_factors: self.user_factors.to_nested(),
            item_factors: self.item_factors.to_nested(),
            seed: config.seed,
            config: config.clone(),
        };
        let out = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut writer = BufWriter::new(out);
        serde_json::to_writer_pretty(&mut writer, &file)?;
        writer
            .write_all(b"\n")
            .and_then(|()| writer.flush())
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(())
    }

    /// Loads a model previously written by [`EmbeddingModel::save_json`].
    pub fn load_json(path: &Path) -> Result<(EmbeddingModel, TrainConfig)> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed: ModelFile = serde_json::from_reader(BufReader::new(file))?;
        let model = EmbeddingModel::new(
            parsed.kind,
            FactorMatrix::from_rows(parsed.user_factors)?,
            FactorMatrix::from_rows(parsed.item_factors)?,
        )?;
        if model.k() != parsed.k {
            return Err(Error::DimensionMismatch(format!(
                "model file declares k={} but factor rows have length {}",
                parsed.k,
                model.k()
            )));
        }
        Ok((model, parsed.config))
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    kind: ModelKind,
    k: usize,
    user_factors: Vec<Vec<f64>>,
    item_factors: Vec<Vec<f64>>,
    seed: u64,
    config: TrainConfig,
}

/// Total squared error of the model against its targets, summed over the
/// observed triplets only.
pub fn loss(model: &EmbeddingModel, data: &RatingDataset, ranks: &RankTable) -> Result<f64> {
    model.check_dims(data, ranks)?;
    let mut acc = 0.0;
    for t in data.triplets() {
        let tgt = target(model.kind(), t.rating, ranks.user_rank(t.user), ranks.item_rank(t.item));
        let e = model.dot(t.user, t.item) - tgt;
        acc += e * e;
    }
    Ok(acc)
}
