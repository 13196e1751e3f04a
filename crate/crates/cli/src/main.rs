//! `mrf-isar`: simulate, reconstruct and score sparse ISAR images.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mrf_isar::config::{parse_config, Algorithm, ExperimentConfig, KEYS};
use mrf_isar::experiment::{run_experiment, summarize, trial_seed, write_trace};
use mrf_isar::io::{emit_pgm, read_image, read_measurements, write_image, write_measurements, PgmScale, StoredImage};
use mrf_isar::metrics::report;
use mrf_isar::seed::mix_seed;
use mrf_isar::solver::{back_projection, solve};
use mrf_isar::{make_mask, make_phantom, simulate_measurements, SensingOperator};

#[derive(Parser, Debug)]
#[command(name = "mrf-isar", version, about = "Sparse ISAR imaging with FISTA and an MRF support prior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a phantom and simulate undersampled, noisy measurements.
    Simulate(SimulateArgs),
    /// Reconstruct an image from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Run a Monte-Carlo sweep over sampling ratios and SNRs.
    Experiment(ExperimentArgs),
    /// Compare an estimate against a reference image.
    Metrics(MetricsArgs),
    /// List every config key with its default value.
    Keys,
}

/// Config file plus per-key overrides, shared by all subcommands.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// Config file (`key = value` lines); defaults to the desk-scale scenario.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set solver.max_iter=100`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (`seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Sampling ratio in (0, 1] (`sampling.ratio`; first entry if a list).
    #[arg(long)]
    ratio: Option<String>,
    /// SNR in dB, or `inf` (`snr_db`; first entry if a list).
    #[arg(long)]
    snr: Option<String>,
    /// Measurement file to write.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write the ground-truth image (lossless format).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write a PGM preview of the ground truth.
    #[arg(long)]
    truth_pgm: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Measurement file to read.
    #[arg(short, long)]
    input: PathBuf,
    /// mrf-fista, fista or bp.
    #[arg(short, long, default_value = "mrf-fista")]
    algorithm: String,
    /// Reconstructed image (lossless format).
    #[arg(short, long)]
    out: PathBuf,
    /// PGM preview of the reconstruction.
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// dB-scaled PGM (-40 dB floor).
    #[arg(long)]
    db: bool,
    /// Solver trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Reference image to score against.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory (`output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Concurrent trials (`workers`).
    #[arg(short, long)]
    workers: Option<usize>,
    /// Trials per (ratio, snr) cell (`trials`).
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Reference image (lossless format).
    #[arg(long)]
    reference: PathBuf,
    /// Estimated image (lossless format).
    #[arg(long)]
    estimate: PathBuf,
    /// Histogram bins for the entropy.
    #[arg(long, default_value_t = mrf_isar::metrics::DEFAULT_BINS)]
    bins: usize,
}

/// Failure category, mapped onto the exit code.
enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load_config(args: &ConfigArgs, extra: &[(&str, String)]) -> Result<ExperimentConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(usage)?
        }
        None => ExperimentConfig::default(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{o}` is not KEY=VALUE")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = args.seed {
        pairs.push(("seed".into(), seed.to_string()));
    }
    pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    // Same precedence as in files: a preset first, explicit keys after.
    pairs.sort_by_key(|(k, _)| k != "radar.preset");
    for (k, v) in pairs {
        if !KEYS.contains(&k.as_str()) {
            return Err(usage(format!("unknown config key `{k}`")));
        }
        config.set(&k, &v).map_err(|m| usage(format!("{k}: {m}")))?;
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut extra = Vec::new();
    if let Some(r) = &args.ratio {
        extra.push(("sampling.ratio", r.clone()));
    }
    if let Some(s) = &args.snr {
        extra.push(("snr_db", s.clone()));
    }
    let config = load_config(&args.cfg, &extra)?;
    let ratio = config.ratios[0];
    let snr = config.snr_db[0];
    let grid = config.image_grid().map_err(usage)?;
    let phantom = config.phantom.spec().map_err(usage)?;

    // Same seeds as the first cell of an experiment with this config.
    let seed = trial_seed(config.seed, 0, 0, 0);
    let truth = make_phantom(&grid, &phantom, config.phantom.seed).map_err(runtime)?;
    let mask = make_mask(config.radar.n_freq, config.radar.n_angle, ratio, mix_seed(seed, &[0])).map_err(runtime)?;
    let op = SensingOperator::new(config.radar, grid, mask, config.mode).map_err(runtime)?;
    let meas = simulate_measurements(&op, &truth, snr.is_finite().then_some(snr), mix_seed(seed, &[1])).map_err(runtime)?;
    write_measurements(&meas, &args.out).map_err(runtime)?;
    if let Some(p) = &args.truth {
        write_image(&StoredImage::Real(truth.clone()), p).map_err(runtime)?;
    }
    if let Some(p) = &args.truth_pgm {
        emit_pgm(truth.values(), &grid, p, PgmScale::Linear).map_err(runtime)?;
    }
    println!(
        "wrote {} ({} of {} cells, ratio {}, snr {} dB, {} scatterer pixels)",
        args.out.display(),
        meas.len(),
        config.radar.cells(),
        ratio,
        snr,
        truth.nonzero_count()
    );
    Ok(())
}

fn reconstruct(args: &ReconstructArgs) -> Result<(), Failure> {
    let algorithm: Algorithm = args.algorithm.parse().map_err(usage)?;
    let mut config = load_config(&args.cfg, &[])?;
    let meas = read_measurements(&args.input).map_err(runtime)?;
    // The measurement file fixes the radar; the config fixes the grid.
    config.radar = *meas.config();
    let grid = config.image_grid().map_err(usage)?;
    let op = SensingOperator::new(config.radar, grid, meas.mask().clone(), config.mode).map_err(runtime)?;
    let (image, trace) = match algorithm {
        Algorithm::Bp => (back_projection(&op, meas.samples()).map_err(runtime)?, None),
        _ => {
            let params = config.solver.params(algorithm == Algorithm::MrfFista, mix_seed(config.seed, &[2]));
            let out = solve(&op, meas.samples(), &params, None).map_err(runtime)?;
            println!(
                "{algorithm}: {} iterations, converged {}, L = {:.6e}, lambda1 = {:.6e}, lambda_tv = {:.6e}",
                out.trace.iterations(),
                out.trace.converged,
                out.lipschitz,
                out.weights.lambda1,
                out.weights.lambda_tv
            );
            (out.image, Some(out.trace))
        }
    };
    write_image(&StoredImage::Complex(image.clone()), &args.out).map_err(runtime)?;
    if let Some(p) = &args.pgm {
        let scale = if args.db { PgmScale::DEFAULT_DB } else { PgmScale::Linear };
        emit_pgm(&image.magnitudes(), &grid, p, scale).map_err(runtime)?;
    }
    if let (Some(p), Some(t)) = (&args.trace, &trace) {
        write_trace(t, p).map_err(runtime)?;
    }
    if let Some(p) = &args.truth {
        let truth = read_image(p).map_err(runtime)?.to_real();
        let rep = report(&truth, &image, config.bins).map_err(runtime)?;
        println!("rmse {:.6e}  rmse_db {:.3}  entropy_bits {:.4}", rep.rmse, rep.rmse_db, rep.entropy_bits);
    }
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let mut extra = Vec::new();
    if let Some(o) = &args.out {
        extra.push(("output.dir", o.display().to_string()));
    }
    if let Some(w) = args.workers {
        extra.push(("workers", w.to_string()));
    }
    if let Some(t) = args.trials {
        extra.push(("trials", t.to_string()));
    }
    let config = load_config(&args.cfg, &extra)?;
    let results = run_experiment(&config).map_err(runtime)?;
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    println!("{:<10} {:>7} {:>8} {:>6} {:>12} {:>12} {:>10}", "algorithm", "ratio", "snr_db", "ok", "rmse_db", "entropy", "iters");
    for row in summarize(&results) {
        println!(
            "{:<10} {:>7.3} {:>8} {:>6} {:>12.3} {:>12.4} {:>10.1}",
            row.algorithm.name(),
            row.ratio,
            row.snr_db,
            row.trials_ok,
            row.mean_rmse_db,
            row.mean_entropy_bits,
            row.mean_iterations
        );
    }
    println!("results in {}", config.output.dir.display());
    if failed > 0 {
        for r in results.iter().filter(|r| r.outcome.is_err()) {
            eprintln!("trial failed: {} r{} s{} t{}: {}", r.algorithm, r.ratio_index, r.snr_index, r.trial, r.outcome.as_ref().unwrap_err());
        }
        return Err(runtime(format!("{failed} of {} runs failed", results.len())));
    }
    Ok(())
}

fn load_image(path: &Path) -> Result<StoredImage, Failure> {
    read_image(path).map_err(runtime)
}

fn metrics(args: &MetricsArgs) -> Result<(), Failure> {
    if args.bins < 2 {
        return Err(usage("--bins must be at least 2"));
    }
    let reference = load_image(&args.reference)?.to_real();
    let estimate = load_image(&args.estimate)?.to_complex();
    let rep = report(&reference, &estimate, args.bins).map_err(runtime)?;
    println!("rmse,rmse_db,entropy_bits,bins");
    println!(
        "{},{},{},{}",
        mrf_isar::io::fmt_float(rep.rmse),
        mrf_isar::io::fmt_float(rep.rmse_db),
        mrf_isar::io::fmt_float(rep.entropy_bits),
        rep.bins
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Experiment(a) => experiment(a),
        Command::Metrics(a) => metrics(a),
        Command::Keys => {
            print!("{}", mrf_isar::config::serialize(&ExperimentConfig::default()));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
