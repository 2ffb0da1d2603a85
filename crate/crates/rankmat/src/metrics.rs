//! Held-out accuracy (MAE) and the Matthew-effect fairness measure taken
//! from the slope of the top-N recommendation-frequency distribution in
//! log-log space.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::dataset::RatingDataset;
use crate::error::{Error, Result};
use crate::models::{ClampRange, EmbeddingModel};
use crate::ranking::RankTable;
use crate::trainer::{TrainConfig, TrainTrace};

/// Evaluation summary for one training run.
///
/// `mae` and `matthew_degree` are `None` exactly when the run diverged; a
/// diverged model's numbers would be meaningless, so they are withheld rather
/// than reported.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    pub mae: Option<f64>,
    pub matthew_degree: Option<f64>,
    pub top_n: usize,
    pub diverged: bool,
    pub config_echo: TrainConfig,
}

/// Mean absolute error of clamped predictions over the held-out triplets.
pub fn mae(
    model: &EmbeddingModel,
    test: &RatingDataset,
    ranks: &RankTable,
    clamp: ClampRange,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InsufficientData(
            "cannot compute MAE over an empty test set".to_string(),
        ));
    }
    model.check_dims(test, ranks)?;
    let total: f64 = test
        .triplets()
        .iter()
        .map(|t| (model.predict(t.user, t.item, ranks, clamp) - t.rating).abs())
        .sum();
    Ok(total / test.len() as f64)
}

/// Per-user top-`n` recommendation lists.
///
/// Every item the user did not rate in `train` is scored with the clamped
/// rating prediction; the `n` highest scores win, ties broken by ascending
/// item index. Users who rated everything get an empty list; users with
/// fewer than `n` candidates get all of them.
pub fn top_n_recommend(
    model: &EmbeddingModel,
    train: &RatingDataset,
    ranks: &RankTable,
    n: usize,
) -> Result<Vec<Vec<usize>>> {
    assert!(n >= 1, "top_n_recommend requires n >= 1");
    model.check_dims(train, ranks)?;
    let clamp = ClampRange::from_dataset(train)?;

    let mut seen: Vec<Vec<usize>> = vec![Vec::new(); train.user_count()];
    for t in train.triplets() {
        seen[t.user].push(t.item);
    }

    let item_count = train.item_count();
    let lists: Vec<Vec<usize>> = (0..train.user_count())
        .into_par_iter()
        .map(|user| {
            let mut is_seen = vec![false; item_count];
            for &item in &seen[user] {
                is_seen[item] = true;
            }
            let mut candidates: Vec<(usize, f64)> = (0..item_count)
                .filter(|&item| !is_seen[item])
                .map(|item| (item, model.predict(user, item, ranks, clamp)))
                .collect();
            // descending score, ascending item index
            let by_score =
                |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
            if candidates.len() > n {
                candidates.select_nth_unstable_by(n - 1, by_score);
                candidates.truncate(n);
            }
            candidates.sort_unstable_by(by_score);
            candidates.into_iter().map(|(item, _)| item).collect()
        })
        .collect();
    Ok(lists)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FreqEntry {
    pub item: usize,
    pub frequency: u64,
    pub rank: usize,
}

/// Recommendation counts per item, sorted by descending frequency with
/// ascending-index tie-break; ranks run 1..=len. Items never recommended do
/// not appear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqDistribution {
    entries: Vec<FreqEntry>,
}

impl FreqDistribution {
    pub fn from_recommendations(lists: &[Vec<usize>]) -> Self {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for list in lists {
            for &item in list {
                *counts.entry(item).or_insert(0) += 1;
            }
        }
        let mut pairs: Vec<(usize, u64)> = counts.into_iter().collect();
        pairs.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let entries = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (item, frequency))| FreqEntry { item, frequency, rank: i + 1 })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[FreqEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "item_index,frequency,rank")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.item, e.frequency, e.rank)?;
        }
        Ok(())
    }
}

/// Ordinary-least-squares slope of `ln(frequency)` on `ln(rank)` with ranks
/// `1..=len`, natural logs. The core of [`zipf_slope`], exposed over raw
/// positive values so callers can fit non-integer frequencies too.
pub fn log_log_slope(frequencies: &[f64]) -> Result<f64> {
    if frequencies.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log-log slope needs at least 2 ranked frequencies, got {}",
            frequencies.len()
        )));
    }
    for &f in frequencies {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InsufficientData(format!(
                "log-log slope needs strictly positive frequencies, got {f}"
            )));
        }
    }
    let n = frequencies.len() as f64;
    let xs: Vec<f64> = (1..=frequencies.len()).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = frequencies.iter().map(|f| f.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    Ok(sxy / sxx)
}

/// OLS log-log slope of a recommendation-frequency distribution.
pub fn zipf_slope(dist: &FreqDistribution) -> Result<f64> {
    let freqs: Vec<f64> = dist.entries.iter().map(|e| e.frequency as f64).collect();
    log_log_slope(&freqs)
}

/// Degree of Matthew effect: the Zipf slope of the top-`n` recommendation
/// frequencies. Values are ≤ 0 in practice; values nearer 0 mean exposure is
/// spread more evenly across items.
pub fn degree_of_matthew_effect(
    model: &EmbeddingModel,
    train: &RatingDataset,
    ranks: &RankTable,
    n: usize,
) -> Result<f64> {
    let lists = top_n_recommend(model, train, ranks, n)?;
    let dist = FreqDistribution::from_recommendations(&lists);
    if dist.is_empty() {
        return Err(Error::InsufficientData(
            "no recommendations produced; every user has rated every item".to_string(),
        ));
    }
    zipf_slope(&dist)
}

/// Full evaluation of a finished training run: MAE on the held-out split and
/// the Matthew-effect degree of top-`top_n` recommendations over the training
/// universe. A diverged run yields a report with both metrics withheld.
pub fn evaluate(
    trace: &TrainTrace,
    config: &TrainConfig,
    train: &RatingDataset,
    test: &RatingDataset,
    ranks: &RankTable,
    top_n: usize,
) -> Result<MetricReport> {
    if top_n == 0 {
        return Err(Error::InvalidConfig("top_n must be >= 1".to_string()));
    }
    if trace.diverged {
        return Ok(MetricReport {
            mae: None,
            matthew_degree: None,
            top_n,
            diverged: true,
            config_echo: config.clone(),
        });
    }
    let clamp = ClampRange::from_dataset(train)?;
    let mae_value = mae(&trace.model, test, ranks, clamp)?;
    let matthew = degree_of_matthew_effect(&trace.model, train, ranks, top_n)?;
    Ok(MetricReport {
        mae: Some(mae_value),
        matthew_degree: Some(matthew),
        top_n,
        diverged: false,
        config_echo: config.clone(),
    })
}
