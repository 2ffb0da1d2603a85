use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rankmat::dataset::{load_ratings, RatingsFormat};
use rankmat::experiments::{emit_plot_data, run_comparison, CompareOptions};
use rankmat::metrics::{evaluate, top_n_recommend, FreqDistribution};
use rankmat::models::{EmbeddingModel, ModelKind};
use rankmat::ranking::{compute_ranks, RankBasis};
use rankmat::synth::{write_movielens_csv, SynthConfig};
use rankmat::trainer::{default_learning_rate_grid, train, TrainConfig, TrainTrace};

#[derive(Parser)]
#[command(
    name = "rankmat",
    version,
    about = "Train and compare vanilla, glovemat, and rankmat matrix factorization on a ratings CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep all three model kinds over a learning-rate grid and write
    /// mae.csv, matthew.csv, and comparison.json
    Compare(CompareArgs),
    /// Train one model and save it as JSON
    Train(TrainArgs),
    /// Evaluate a saved model: MAE and Matthew-effect degree
    Eval(EvalArgs),
    /// Compute popularity ranks for every user and item
    Ranks(RanksArgs),
    /// Generate a synthetic ratings CSV in the MovieLens layout
    Synth(SynthArgs),
}

/// Optional JSON config file; any field present overrides the built-in
/// default, and explicit command-line flags override the file.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    kind: Option<ModelKind>,
    k: Option<usize>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    seed: Option<u64>,
    init_scale: Option<f64>,
    shuffle_each_epoch: Option<bool>,
    split_ratio: Option<f64>,
    top_n: Option<usize>,
    basis: Option<RankBasis>,
    grid: Option<Vec<f64>>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Ratings CSV (userId,movieId,rating,timestamp with a header row)
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated learning rates; defaults to 8 log-spaced values from
    /// 1e-4 to 5e-2
    #[arg(long)]
    grid: Option<String>,
    /// Latent dimension
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for initialization, shuffling, and the train/test split
    #[arg(long)]
    seed: Option<u64>,
    /// Recommendation-list length for the Matthew-effect metric
    #[arg(long)]
    topn: Option<usize>,
    /// Popularity basis: "sum" (rating mass) or "count" (rating count)
    #[arg(long)]
    basis: Option<String>,
    /// Directory for mae.csv, matthew.csv, comparison.json
    #[arg(long)]
    out: PathBuf,
    /// Fraction of each user's ratings kept for training
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// JSON file with the same knobs; flags win over file values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// vanilla, glovemat, or rankmat
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    basis: Option<String>,
    /// Where to write the trained model JSON
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model JSON produced by `rankmat train`
    #[arg(long)]
    model: PathBuf,
    /// The same ratings CSV the model was trained from
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    topn: Option<usize>,
    /// Split ratio used at training time
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    basis: Option<String>,
    /// Also write the top-N recommendation-frequency distribution CSV here
    #[arg(long)]
    freq_out: Option<PathBuf>,
}

#[derive(Args)]
struct RanksArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    basis: Option<String>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 610)]
    users: usize,
    #[arg(long, default_value_t = 9742)]
    items: usize,
    #[arg(long, default_value_t = 100_000)]
    ratings: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Compare(args) => cmd_compare(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Ranks(args) => cmd_ranks(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().with_context(|| format!("bad learning rate {t:?} in --grid"))
        })
        .collect()
}

fn parse_basis(flag: Option<&str>, file: Option<RankBasis>) -> anyhow::Result<RankBasis> {
    match flag {
        Some(text) => Ok(RankBasis::from_str(text)?),
        None => Ok(file.unwrap_or_default()),
    }
}

fn metric_or_nan(value: Option<f64>) -> String {
    value.map_or_else(|| "NaN".to_string(), |x| format!("{x:.6}"))
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let defaults = CompareOptions::default();
    let options = CompareOptions {
        k: args.k.or(file.k).unwrap_or(defaults.k),
        epochs: args.epochs.or(file.epochs).unwrap_or(defaults.epochs),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        init_scale: args.init_scale.or(file.init_scale).unwrap_or(defaults.init_scale),
        shuffle_each_epoch: file.shuffle_each_epoch.unwrap_or(defaults.shuffle_each_epoch),
        split_ratio: args.ratio.or(file.split_ratio).unwrap_or(defaults.split_ratio),
        top_n: args.topn.or(file.top_n).unwrap_or(defaults.top_n),
        basis: parse_basis(args.basis.as_deref(), file.basis)?,
    };
    let grid = match &args.grid {
        Some(text) => parse_grid(text)?,
        None => file.grid.unwrap_or_else(default_learning_rate_grid),
    };

    eprintln!(
        "comparing {} kinds x {} rates on {} (k={}, epochs={}, seed={})",
        ModelKind::ALL.len(),
        grid.len(),
        args.data.display(),
        options.k,
        options.epochs,
        options.seed
    );
    let table = run_comparison(&args.data, &options, &grid)?;
    emit_plot_data(&table, &args.out)?;

    println!("learning_rate  kind      mae       matthew   diverged");
    for row in &table.rows {
        println!(
            "{:<13.6}  {:<8}  {:<8}  {:<8}  {}",
            row.learning_rate,
            row.kind.to_string(),
            metric_or_nan(row.mae),
            metric_or_nan(row.matthew_degree),
            row.diverged
        );
    }
    println!(
        "wrote mae.csv, matthew.csv, comparison.json to {}",
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let defaults = TrainConfig::default();
    let kind = match args.kind.as_deref() {
        Some(text) => ModelKind::from_str(text)?,
        None => file.kind.unwrap_or(defaults.kind),
    };
    let config = TrainConfig {
        kind,
        k: args.k.or(file.k).unwrap_or(defaults.k),
        learning_rate: args
            .learning_rate
            .or(file.learning_rate)
            .unwrap_or(defaults.learning_rate),
        epochs: args.epochs.or(file.epochs).unwrap_or(defaults.epochs),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        init_scale: args.init_scale.or(file.init_scale).unwrap_or(defaults.init_scale),
        shuffle_each_epoch: file.shuffle_each_epoch.unwrap_or(defaults.shuffle_each_epoch),
    };
    let ratio = args.ratio.or(file.split_ratio).unwrap_or(0.8);
    let basis = parse_basis(args.basis.as_deref(), file.basis)?;

    let data = load_ratings(&args.data, RatingsFormat::MovielensCsv)?;
    let split = data.split(ratio, config.seed)?;
    let ranks = compute_ranks(&split.train, basis)?;
    eprintln!(
        "training {} on {} triplets (k={}, lr={}, epochs={})",
        config.kind,
        split.train.len(),
        config.k,
        config.learning_rate,
        config.epochs
    );
    let trace = train(&config, &split.train, &ranks)?;
    if trace.diverged {
        anyhow::bail!(
            "training diverged after {} epochs (last loss {:e}); refusing to save the model",
            trace.epochs_run(),
            trace.epoch_loss.last().copied().unwrap_or(f64::NAN)
        );
    }
    trace.model.save_json(&config, &args.out)?;
    eprintln!(
        "final training loss {:.6} after {} epochs",
        trace.epoch_loss.last().copied().unwrap_or(f64::NAN),
        trace.epochs_run()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let (model, config) = EmbeddingModel::load_json(&args.model)?;
    if !model.all_finite() {
        anyhow::bail!("model {} contains non-finite factors", args.model.display());
    }
    let data = load_ratings(&args.data, RatingsFormat::MovielensCsv)?;
    let ratio = args.ratio.unwrap_or(0.8);
    let basis = parse_basis(args.basis.as_deref(), None)?;
    let top_n = args.topn.unwrap_or(10);

    let split = data.split(ratio, config.seed)?;
    let ranks = compute_ranks(&split.train, basis)?;
    let trace = TrainTrace { epoch_loss: Vec::new(), diverged: false, model };
    let report = evaluate(&trace, &config, &split.train, &split.test, &ranks, top_n)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    if let Some(freq_path) = &args.freq_out {
        let lists = top_n_recommend(&trace.model, &split.train, &ranks, top_n)?;
        let dist = FreqDistribution::from_recommendations(&lists);
        let file = std::fs::File::create(freq_path)
            .with_context(|| format!("creating {}", freq_path.display()))?;
        dist.write_csv(std::io::BufWriter::new(file))
            .with_context(|| format!("writing {}", freq_path.display()))?;
        eprintln!("wrote {}", freq_path.display());
    }
    Ok(())
}

fn cmd_ranks(args: RanksArgs) -> anyhow::Result<()> {
    let basis = parse_basis(args.basis.as_deref(), None)?;
    let data = load_ratings(&args.data, RatingsFormat::MovielensCsv)?;
    let table = compute_ranks(&data, basis)?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            table
                .write_csv(std::io::BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            print!("{}", String::from_utf8(buf).expect("csv output is utf-8"));
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let config = SynthConfig {
        users: args.users,
        items: args.items,
        target_ratings: args.ratings,
        seed: args.seed,
    };
    write_movielens_csv(&config, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
