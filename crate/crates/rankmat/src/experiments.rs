//! Three-way model comparison over a learning-rate grid: one dataset, one
//! split, one seed, every kind at every rate, emitted as plot-ready files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{load_ratings, RatingsFormat};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::models::{ClampRange, ModelKind};
use crate::ranking::{compute_ranks, RankBasis};
use crate::trainer::{train, TrainConfig};

/// Everything configurable about a comparison sweep except the rate grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CompareOptions {
    pub k: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub shuffle_each_epoch: bool,
    pub split_ratio: f64,
    pub top_n: usize,
    pub basis: RankBasis,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            k: 10,
            epochs: 100,
            seed: 42,
            init_scale: 0.1,
            shuffle_each_epoch: true,
            split_ratio: 0.8,
            top_n: 10,
            basis: RankBasis::RatingSum,
        }
    }
}

impl CompareOptions {
    fn train_config(&self, kind: ModelKind, learning_rate: f64) -> TrainConfig {
        TrainConfig {
            kind,
            k: self.k,
            learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            init_scale: self.init_scale,
            shuffle_each_epoch: self.shuffle_each_epoch,
        }
    }
}

/// One (learning rate, model kind) cell of the sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComparisonRow {
    pub learning_rate: f64,
    pub kind: ModelKind,
    pub mae: Option<f64>,
    pub matthew_degree: Option<f64>,
    pub diverged: bool,
    pub epochs_run: usize,
}

/// Identifies the data a sweep ran against, for honest reporting.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetFingerprint {
    pub path: String,
    pub user_count: usize,
    pub item_count: usize,
    pub triplet_count: usize,
    pub split_seed: u64,
    pub split_ratio: f64,
}

/// Full sweep result: |grid| × 3 rows, rate-major in ascending rate order
/// with kinds in [`ModelKind::ALL`] order inside each rate.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub fingerprint: DatasetFingerprint,
    pub options: CompareOptions,
}

/// Loads the data, splits it once, computes ranks once, then trains and
/// evaluates every model kind at every grid rate from the same seed and
/// split. A diverged run — or one whose metrics are undefined, such as a
/// degenerate recommendation distribution — is recorded as a diverged row
/// rather than aborting the sweep.
pub fn run_comparison(
    data_path: &Path,
    options: &CompareOptions,
    grid: &[f64],
) -> Result<ComparisonTable> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("learning-rate grid is empty".to_string()));
    }
    for &rate in grid {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning-rate grid entries must be positive finite numbers, got {rate}"
            )));
        }
    }
    let mut rates = grid.to_vec();
    rates.sort_unstable_by(f64::total_cmp);
    if rates.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(
            "learning-rate grid contains duplicate entries".to_string(),
        ));
    }
    if options.top_n == 0 {
        return Err(Error::InvalidConfig("top_n must be >= 1".to_string()));
    }
    // validate the per-run config shape once, up front
    options.train_config(ModelKind::Vanilla, rates[0]).validate()?;

    let data = load_ratings(data_path, RatingsFormat::MovielensCsv)?;
    let split = data.split(options.split_ratio, options.seed)?;
    let ranks = compute_ranks(&split.train, options.basis)?;
    ClampRange::from_dataset(&split.train)?;

    let cells: Vec<(f64, ModelKind)> = rates
        .iter()
        .flat_map(|&rate| ModelKind::ALL.into_iter().map(move |kind| (rate, kind)))
        .collect();

    let rows: Vec<ComparisonRow> = cells
        .into_par_iter()
        .map(|(rate, kind)| {
            let config = options.train_config(kind, rate);
            let trace = train(&config, &split.train, &ranks)?;
            let epochs_run = trace.epochs_run();
            let row = match evaluate(&trace, &config, &split.train, &split.test, &ranks, options.top_n)
            {
                Ok(report) => ComparisonRow {
                    learning_rate: rate,
                    kind,
                    mae: report.mae,
                    matthew_degree: report.matthew_degree,
                    diverged: report.diverged,
                    epochs_run,
                },
                // undefined metrics are reported like a divergence so one bad
                // cell cannot sink the rest of the sweep
                Err(_) => ComparisonRow {
                    learning_rate: rate,
                    kind,
                    mae: None,
                    matthew_degree: None,
                    diverged: true,
                    epochs_run,
                },
            };
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonTable {
        rows,
        fingerprint: DatasetFingerprint {
            path: data_path.display().to_string(),
            user_count: data.user_count(),
            item_count: data.item_count(),
            triplet_count: data.len(),
            split_seed: options.seed,
            split_ratio: options.split_ratio,
        },
        options: options.clone(),
    })
}

fn metric_token(value: Option<f64>) -> String {
    match value {
        Some(x) => format!("{x}"),
        None => "NaN".to_string(),
    }
}

/// Writes `mae.csv`, `matthew.csv`, and `comparison.json` into `out_dir`
/// (created if missing). CSV rows are one line per rate, ascending, with one
/// column per model kind; diverged cells carry a literal `NaN` token in the
/// CSVs and `null` in the JSON.
pub fn emit_plot_data(table: &ComparisonTable, out_dir: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::InvalidConfig("comparison table has no rows".to_string()));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut rates: Vec<f64> = table.rows.iter().map(|r| r.learning_rate).collect();
    rates.sort_unstable_by(f64::total_cmp);
    rates.dedup();

    let cell = |rate: f64, kind: ModelKind| -> Result<&ComparisonRow> {
        table
            .rows
            .iter()
            .find(|r| r.learning_rate == rate && r.kind == kind)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("table is missing the ({rate}, {kind}) row"))
            })
    };

    let write_metric_csv = |name: &str, pick: &dyn Fn(&ComparisonRow) -> Option<f64>| -> Result<()> {
        let path = out_dir.join(name);
        let file = File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let mut out = BufWriter::new(file);
        let mut body = String::from("learning_rate,vanilla,glovemat,rankmat\n");
        for &rate in &rates {
            body.push_str(&format!(
                "{rate},{},{},{}\n",
                metric_token(pick(cell(rate, ModelKind::Vanilla)?)),
                metric_token(pick(cell(rate, ModelKind::GloveMat)?)),
                metric_token(pick(cell(rate, ModelKind::RankMat)?)),
            ));
        }
        out.write_all(body.as_bytes())
            .and_then(|()| out.flush())
            .map_err(|source| Error::Io { path, source })
    };

    write_metric_csv("mae.csv", &|row| row.mae)?;
    write_metric_csv("matthew.csv", &|row| row.matthew_degree)?;

    let json_path = out_dir.join("comparison.json");
    let file = File::create(&json_path).map_err(|source| Error::Io {
        path: json_path.clone(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, table)?;
    out.write_all(b"\n")
        .and_then(|()| out.flush())
        .map_err(|source| Error::Io { path: json_path, source })?;
    Ok(())
}
