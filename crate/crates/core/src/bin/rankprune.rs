//! Command-line surface: noise-rate estimation, pruning-based training,
//! prediction, synthetic benchmark sweeps, and an MNIST noise-estimation
//! grid.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate estimation,
//! 4 infeasible configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankprune::data::{complete_rates, format_float, Dataset};
use rankprune::error::Error;
use rankprune::logreg::{FitConfig, LogisticModel};
use rankprune::mnist::load_mnist_idx;
use rankprune::prune::{estimate_noise, rank_prune_fit};
use rankprune::sweep::{run_sweep, write_aggregate_csv, write_trials_csv, Axis, Method};
use rankprune::synth::{corrupt, rates_from_target_pair, SynthConfig};

#[derive(Parser)]
#[command(
    name = "rankprune",
    version,
    about = "Noise-robust binary classification by rank pruning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate noise rates from a labeled CSV dataset.
    Estimate(EstimateArgs),
    /// Train a model with rank pruning and write it as JSON.
    Train(TrainArgs),
    /// Predict probabilities for a CSV dataset with a trained model.
    Predict(PredictArgs),
    /// Run a synthetic benchmark sweep and emit CSV results.
    Bench(BenchArgs),
    /// Noise-estimation consistency grid on MNIST one-vs-rest.
    MnistGrid(MnistGridArgs),
}

#[derive(Args)]
struct CommonFit {
    #[arg(long, default_value_t = 3)]
    cv_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 1.0)]
    reg_inverse_c: f64,
}

impl CommonFit {
    fn fit_config(&self) -> FitConfig {
        FitConfig {
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            learning_rate: None,
            reg_inverse_c: self.reg_inverse_c,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset CSV with header f0,...,f{m-1},s[,y].
    input: PathBuf,
    #[command(flatten)]
    fit: CommonFit,
    /// Emit machine-readable JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TrainArgs {
    input: PathBuf,
    /// Use this known rho1 instead of estimating (requires --rho0).
    #[arg(long, requires = "rho0")]
    rho1: Option<f64>,
    /// Use this known rho0 instead of estimating (requires --rho1).
    #[arg(long, requires = "rho1")]
    rho0: Option<f64>,
    /// Where to write the model JSON (stdout if omitted).
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[command(flatten)]
    fit: CommonFit,
}

#[derive(Args)]
struct PredictArgs {
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Where to write the prediction CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Flat key=value configuration file; omitted keys use defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for trials.csv and aggregate.csv.
    #[arg(long)]
    out: PathBuf,
    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MnistGridArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 1)]
    digit: u8,
    /// Comma-separated pi1 grid values.
    #[arg(long, default_value = "0,0.25,0.5")]
    pi1_values: String,
    /// Comma-separated rho1 grid values.
    #[arg(long, default_value = "0,0.25,0.5")]
    rho1_values: String,
    /// Subsample to at most this many examples (0 = all).
    #[arg(long, default_value_t = 10000)]
    max_n: usize,
    /// Where to write the grid CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    fit: CommonFit,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Bench(args) => cmd_bench(args),
        Command::MnistGrid(args) => cmd_mnist_grid(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DegenerateCounts(_) | Error::EmptyClass(_) | Error::InvalidRates(_) => 3,
        Error::InfeasibleConfig(_) => 4,
        _ => 2,
    }
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let d = Dataset::from_csv_path(&args.input)?;
    let est = estimate_noise(&d, &args.fit.fit_config(), args.fit.cv_k, args.fit.seed)?;
    if args.json {
        let out = serde_json::json!({
            "rho1": est.rates.rho1,
            "rho0": est.rates.rho0,
            "pi1": est.rates.pi1,
            "pi0": est.rates.pi0,
            "p_s1": est.rates.p_s1,
            "p_y1": est.rates.p_y1,
            "clamped": est.rates.clamped,
            "lb_y1": est.thresholds.lb_y1,
            "ub_y0": est.thresholds.ub_y0,
            "confident_counts": est.counts,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("rho1_hat = {:.6}", est.rates.rho1);
        println!("rho0_hat = {:.6}", est.rates.rho0);
        println!("pi1_hat  = {:.6}", est.rates.pi1);
        println!("pi0_hat  = {:.6}", est.rates.pi0);
        println!("LB_y1    = {:.6}", est.thresholds.lb_y1);
        println!("UB_y0    = {:.6}", est.thresholds.ub_y0);
        if est.rates.clamped {
            println!("note: derived inverse rates were clamped into [0,1)");
        }
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let d = Dataset::from_csv_path(&args.input)?;
    let cfg = args.fit.fit_config();
    let rates_override = match (args.rho1, args.rho0) {
        (Some(rho1), Some(rho0)) => Some(complete_rates(rho1, rho0, d.p_s1())?),
        _ => None,
    };
    let out = rank_prune_fit(&d, &cfg, args.fit.cv_k, args.fit.seed, rates_override)?;
    eprintln!(
        "rates: rho1={:.4} rho0={:.4} pi1={:.4} pi0={:.4}; pruned {} positives, {} negatives; kept {}",
        out.rates.rho1,
        out.rates.rho0,
        out.rates.pi1,
        out.rates.pi0,
        out.prune.removed_pos,
        out.prune.removed_neg,
        out.prune.kept_indices.len()
    );
    let json = out.model.to_json()?;
    match &args.model_out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let d = Dataset::from_csv_path(&args.input)?;
    let model = LogisticModel::from_json(&std::fs::read_to_string(&args.model)?)?;
    if d.m() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            got: d.m(),
        });
    }
    let mut out = String::from("g,pred\n");
    for i in 0..d.n() {
        let g = model.predict_one(d.row(i));
        out.push_str(&format!(
            "{},{}\n",
            format_float(g),
            u8::from(g > args.threshold)
        ));
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

/// Bench configuration parsed from flat key=value lines. Unknown keys
/// are hard errors so experiment provenance stays trustworthy.
struct BenchConfig {
    axis: Axis,
    values: Vec<f64>,
    pairs: Vec<(f64, f64)>,
    methods: Vec<Method>,
    synth: SynthConfig,
    fit: FitConfig,
    cv_k: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            axis: Axis::Separability,
            values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            pairs: vec![(0.0, 0.0), (0.0, 0.5), (0.25, 0.25), (0.5, 0.0), (0.5, 0.5)],
            methods: Method::ALL.to_vec(),
            synth: SynthConfig {
                trials: 200,
                ..Default::default()
            },
            fit: FitConfig::default(),
            cv_k: 3,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, Error> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, Error> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
}

fn parse_bench_config(path: &Path) -> Result<BenchConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut kv = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut cfg = BenchConfig::default();
    for (k, v) in kv {
        match k.as_str() {
            "axis" => cfg.axis = Axis::parse(&v)?,
            "values" => {
                cfg.values = v
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64("values", s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "pairs" => {
                cfg.pairs = v
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|p| {
                        let (a, b) = p.split_once(':').ok_or_else(|| {
                            Error::Parse(format!("pair {p:?}: expected pi1:rho1"))
                        })?;
                        Ok((parse_f64("pairs", a.trim())?, parse_f64("pairs", b.trim())?))
                    })
                    .collect::<Result<_, Error>>()?;
            }
            "methods" => {
                cfg.methods = v
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| Method::parse(s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "d" => cfg.synth.d = parse_f64("d", &v)?,
            "dim" => cfg.synth.dim = parse_usize("dim", &v)?,
            "n" => cfg.synth.n = parse_usize("n", &v)?,
            "p_y1" => cfg.synth.p_y1 = parse_f64("p_y1", &v)?,
            "noise_frac" => cfg.synth.noise_frac = parse_f64("noise_frac", &v)?,
            "trials" => cfg.synth.trials = parse_usize("trials", &v)?,
            "seed" => {
                cfg.synth.seed = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value for seed: {v:?}")))?;
            }
            "cv_k" => cfg.cv_k = parse_usize("cv_k", &v)?,
            "max_iters" => cfg.fit.max_iters = parse_usize("max_iters", &v)?,
            "tolerance" => cfg.fit.tolerance = parse_f64("tolerance", &v)?,
            "reg_inverse_c" => cfg.fit.reg_inverse_c = parse_f64("reg_inverse_c", &v)?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
    }
    Ok(cfg)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(path) => parse_bench_config(path)?,
        None => BenchConfig::default(),
    };
    if let Some(trials) = args.trials {
        cfg.synth.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.synth.seed = seed;
    }
    if cfg.values.is_empty() || cfg.pairs.is_empty() {
        return Err(Error::InfeasibleConfig(
            "values and pairs must be non-empty".into(),
        ));
    }
    let records = run_sweep(
        cfg.axis,
        &cfg.values,
        &cfg.pairs,
        &cfg.synth,
        &cfg.methods,
        &cfg.fit,
        cfg.cv_k,
    )?;
    std::fs::create_dir_all(&args.out)?;
    let trials = std::fs::File::create(args.out.join("trials.csv"))?;
    write_trials_csv(&records, trials)?;
    let aggregate = std::fs::File::create(args.out.join("aggregate.csv"))?;
    write_aggregate_csv(&records, aggregate)?;
    let failures = records.iter().filter(|r| r.failure.is_some()).count();
    eprintln!(
        "wrote {} records ({failures} failed trials) to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_mnist_grid(args: MnistGridArgs) -> Result<(), Error> {
    let full = load_mnist_idx(&args.images, &args.labels, args.digit)?;
    let d = if args.max_n > 0 && full.n() > args.max_n {
        full.subset(&(0..args.max_n).collect::<Vec<_>>())
    } else {
        full
    };
    let y = d.observed_labels().to_vec();
    let p_y1 = y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64;
    let parse_grid = |s: &str| -> Result<Vec<f64>, Error> {
        s.split(',').map(|v| parse_f64("grid", v.trim())).collect()
    };
    let pi1s = parse_grid(&args.pi1_values)?;
    let rho1s = parse_grid(&args.rho1_values)?;
    let cfg = args.fit.fit_config();

    let mut out =
        String::from("pi1,rho1,rho1_realized,rho1_hat,rho0_hat,pi1_hat,pi0_hat,abs_err_rho1\n");
    for &pi1 in &pi1s {
        for &rho1 in &rho1s {
            let target = match rates_from_target_pair(pi1, rho1, p_y1) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("skipping (pi1={pi1}, rho1={rho1}): {e}");
                    continue;
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(rankprune::sweep::derive_seed(
                args.fit.seed,
                &[pi1.to_bits(), rho1.to_bits()],
            ));
            let corrupted = corrupt(&y, target.rho1, target.rho0, &mut rng)?;
            let train = d.with_observed_labels(corrupted.s.clone())?;
            let est = estimate_noise(&train, &cfg, args.fit.cv_k, args.fit.seed)?;
            let realized = corrupted.realized_rho1();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                format_float(pi1),
                format_float(rho1),
                format_float(realized),
                format_float(est.rates.rho1),
                format_float(est.rates.rho0),
                format_float(est.rates.pi1),
                format_float(est.rates.pi0),
                format_float((est.rates.rho1 - rho1).abs())
            ));
            eprintln!(
                "pi1={pi1} rho1={rho1}: rho1_hat={:.4} (realized {realized:.4})",
                est.rates.rho1
            );
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}
