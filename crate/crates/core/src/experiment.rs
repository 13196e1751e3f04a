//! Monte-Carlo sweeps over sampling ratio and SNR.
//!
//! Every `(ratio, snr, trial)` cell gets the child seed
//! `mix_seed(master, [ratio_index, snr_index, trial_index])`, from which the
//! mask (`[.., 0]`), noise (`[.., 1]`), solver (`[.., 2]`) and power-iteration
//! (`[.., 3]`) seeds are derived the same way. All algorithms in a cell see
//! the same mask and noisy measurements. Outputs depend only on the config,
//! never on the worker count or scheduling.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::grid::{ComplexImage, RealImage};
use crate::io::{emit_pgm, fmt_float, write_csv, write_image, PgmScale, StoredImage};
use crate::measurement::make_mask;
use crate::metrics::{report, MetricReport};
use crate::operator::{estimate_lipschitz, simulate_measurements, SensingOperator};
use crate::phantom::make_phantom;
use crate::seed::mix_seed;
use crate::solver::{back_projection, solve, LipschitzChoice, SolveTrace};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

pub const RESULTS_HEADER: &[&str] = &[
    "algorithm",
    "ratio",
    "snr_db",
    "trial",
    "seed",
    "rmse",
    "rmse_db",
    "entropy_bits",
    "bins",
    "iterations",
    "converged",
    "support_size",
    "status",
];

pub const TRACE_HEADER: &[&str] = &["iteration", "objective", "rel_change", "support_size", "accepted"];

/// Metrics of one successful algorithm run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub report: MetricReport,
    /// Solver iterations; 0 for back-projection.
    pub iterations: usize,
    pub converged: bool,
    /// Nonzero pixels of the returned image.
    pub support_size: usize,
    pub wall_s: f64,
}

/// One row per (algorithm, ratio, snr, trial).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub algorithm: Algorithm,
    pub ratio_index: usize,
    pub ratio: f64,
    pub snr_index: usize,
    pub snr_db: f64,
    pub trial: usize,
    /// Child seed of the cell.
    pub seed: u64,
    /// Failure message when the trial could not be completed.
    pub outcome: std::result::Result<TrialMetrics, String>,
}

/// Mean metrics of one (algorithm, ratio, snr) group over its successful
/// trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub ratio: f64,
    pub snr_db: f64,
    pub trials_ok: usize,
    pub mean_rmse_db: f64,
    pub mean_entropy_bits: f64,
    pub mean_iterations: f64,
}

pub fn trial_seed(master: u64, ratio_index: usize, snr_index: usize, trial: usize) -> u64 {
    mix_seed(master, &[ratio_index as u64, snr_index as u64, trial as u64])
}

/// File stem for per-trial artifacts, e.g. `fista_r1_s0_t3`.
pub fn trial_stem(algorithm: Algorithm, ratio_index: usize, snr_index: usize, trial: usize) -> String {
    format!("{algorithm}_r{ratio_index}_s{snr_index}_t{trial}")
}

fn noise(snr_db: f64) -> Option<f64> {
    if snr_db.is_finite() {
        Some(snr_db)
    } else {
        None
    }
}

fn support_size(img: &ComplexImage) -> usize {
    img.values().iter().filter(|v| v.re != 0.0 || v.im != 0.0).count()
}

fn pgm_scale(config: &ExperimentConfig) -> PgmScale {
    if config.output.pgm_db {
        PgmScale::DEFAULT_DB
    } else {
        PgmScale::Linear
    }
}

pub fn write_trace(trace: &SolveTrace, path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_float(r.objective),
                fmt_float(r.rel_change),
                r.support_size.to_string(),
                r.accepted.to_string(),
            ]
        })
        .collect();
    write_csv(path, TRACE_HEADER, &rows)
}

struct Cell {
    ratio_index: usize,
    snr_index: usize,
    trial: usize,
}

/// Runs the full sweep, writing artifacts under `config.output.dir`.
///
/// Failures inside a trial become error rows; only problems with the
/// configuration or the output directory abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let grid = config.image_grid()?;
    let truth = make_phantom(&grid, &config.phantom.spec()?, config.phantom.seed)?;
    if config.output.images {
        emit_pgm(truth.values(), &grid, &dir.join("truth.pgm"), pgm_scale(config))?;
        write_image(&StoredImage::Real(truth.clone()), &dir.join("truth.img"))?;
    }

    let cells: Vec<Cell> = (0..config.ratios.len())
        .flat_map(|ri| {
            (0..config.snr_db.len())
                .flat_map(move |si| (0..config.trials).map(move |ti| Cell { ratio_index: ri, snr_index: si, trial: ti }))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {} workers: {e}", config.workers)))?;
    let mut results: Vec<TrialResult> = pool.install(|| {
        cells
            .par_iter()
            .flat_map_iter(|cell| run_cell(config, &truth, &dir, cell))
            .collect()
    });
    let position = |a: Algorithm| config.algorithms.iter().position(|&b| b == a);
    results.sort_by_key(|r| (r.ratio_index, r.snr_index, r.trial, position(r.algorithm)));

    write_results(&results, &dir.join(RESULTS_FILE))?;
    write_summary(&summarize(&results), &dir.join(SUMMARY_FILE))?;
    if config.output.timings {
        write_timings(&results, &dir.join(TIMINGS_FILE))?;
    }
    Ok(results)
}

fn run_cell(config: &ExperimentConfig, truth: &RealImage, dir: &Path, cell: &Cell) -> Vec<TrialResult> {
    let ratio = config.ratios[cell.ratio_index];
    let snr_db = config.snr_db[cell.snr_index];
    let seed = trial_seed(config.seed, cell.ratio_index, cell.snr_index, cell.trial);
    let row = |algorithm, outcome| TrialResult {
        algorithm,
        ratio_index: cell.ratio_index,
        ratio,
        snr_index: cell.snr_index,
        snr_db,
        trial: cell.trial,
        seed,
        outcome,
    };

    let setup = || -> Result<_> {
        let radar = config.radar;
        let mask = make_mask(radar.n_freq, radar.n_angle, ratio, mix_seed(seed, &[0]))?;
        let op = SensingOperator::new(radar, *truth.grid(), mask, config.mode)?;
        let meas = simulate_measurements(&op, truth, noise(snr_db), mix_seed(seed, &[1]))?;
        Ok((op, meas))
    };
    let (op, meas) = match setup() {
        Ok(v) => v,
        Err(e) => {
            return config
                .algorithms
                .iter()
                .map(|&a| row(a, Err(format!("setup failed: {e}"))))
                .collect()
        }
    };
    let y = meas.samples();

    // One Lipschitz estimate shared by both solvers.
    let lipschitz = match config.solver.lipschitz {
        Some(l) => Ok(l),
        None if config.algorithms.iter().any(|&a| a != Algorithm::Bp) => {
            let defaults = crate::solver::SolverParams::default();
            let (tol, max_iter) = match defaults.lipschitz {
                LipschitzChoice::Estimate { tol, max_iter } => (tol, max_iter),
                LipschitzChoice::Given(_) => (1e-4, 100),
            };
            estimate_lipschitz(&op, tol, max_iter, mix_seed(seed, &[3])).map(|est| est.value.max(f64::MIN_POSITIVE))
        }
        None => Ok(1.0),
    };

    config
        .algorithms
        .iter()
        .map(|&alg| {
            let started = Instant::now();
            let stem = trial_stem(alg, cell.ratio_index, cell.snr_index, cell.trial);
            let outcome = (|| -> Result<TrialMetrics> {
                let (image, trace) = match alg {
                    Algorithm::Bp => (back_projection(&op, y)?, None),
                    Algorithm::Fista | Algorithm::MrfFista => {
                        let l = lipschitz.as_ref().map_err(|e| Error::invalid(format!("Lipschitz estimate failed: {e}")))?;
                        let mut params = config.solver.params(alg == Algorithm::MrfFista, mix_seed(seed, &[2]));
                        params.lipschitz = LipschitzChoice::Given(*l);
                        let out = solve(&op, y, &params, None)?;
                        (out.image, Some(out.trace))
                    }
                };
                let rep = report(truth, &image, config.bins)?;
                let wall_s = started.elapsed().as_secs_f64();
                if config.output.images {
                    emit_pgm(&image.magnitudes(), image.grid(), &dir.join(format!("{stem}.pgm")), pgm_scale(config))?;
                    write_image(&StoredImage::Complex(image.clone()), &dir.join(format!("{stem}.img")))?;
                }
                if let (true, Some(trace)) = (config.output.traces, &trace) {
                    write_trace(trace, &dir.join(format!("{stem}_trace.csv")))?;
                }
                Ok(TrialMetrics {
                    report: rep,
                    iterations: trace.as_ref().map_or(0, |t| t.iterations()),
                    converged: trace.as_ref().is_none_or(|t| t.converged),
                    support_size: support_size(&image),
                    wall_s,
                })
            })();
            row(alg, outcome.map_err(|e| e.to_string()))
        })
        .collect()
}

fn clean(message: &str) -> String {
    message.replace([',', '\n', '\r'], ";")
}

pub fn write_results(results: &[TrialResult], path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = vec![
                r.algorithm.to_string(),
                fmt_float(r.ratio),
                fmt_float(r.snr_db),
                r.trial.to_string(),
                r.seed.to_string(),
            ];
            match &r.outcome {
                Ok(m) => row.extend([
                    fmt_float(m.report.rmse),
                    fmt_float(m.report.rmse_db),
                    fmt_float(m.report.entropy_bits),
                    m.report.bins.to_string(),
                    m.iterations.to_string(),
                    m.converged.to_string(),
                    m.support_size.to_string(),
                    "ok".to_string(),
                ]),
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), 7));
                    row.push(format!("error: {}", clean(e)));
                }
            }
            row
        })
        .collect();
    write_csv(path, RESULTS_HEADER, &rows)
}

fn write_timings(results: &[TrialResult], path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = results
        .iter()
        .filter_map(|r| {
            let m = r.outcome.as_ref().ok()?;
            Some(vec![
                r.algorithm.to_string(),
                fmt_float(r.ratio),
                fmt_float(r.snr_db),
                r.trial.to_string(),
                fmt_float(m.wall_s),
            ])
        })
        .collect();
    write_csv(path, &["algorithm", "ratio", "snr_db", "trial", "wall_s"], &rows)
}

/// Group means in first-appearance order of `results`.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut groups: Vec<((Algorithm, usize, usize), f64, f64, Vec<&TrialMetrics>)> = Vec::new();
    for r in results {
        let key = (r.algorithm, r.ratio_index, r.snr_index);
        let idx = match groups.iter().position(|g| g.0 == key) {
            Some(i) => i,
            None => {
                groups.push((key, r.ratio, r.snr_db, Vec::new()));
                groups.len() - 1
            }
        };
        if let Ok(m) = &r.outcome {
            groups[idx].3.push(m);
        }
    }
    groups
        .into_iter()
        .map(|((algorithm, _, _), ratio, snr_db, ms)| {
            let n = ms.len() as f64;
            let mean = |f: &dyn Fn(&TrialMetrics) -> f64| {
                if ms.is_empty() {
                    f64::NAN
                } else {
                    ms.iter().map(|m| f(m)).sum::<f64>() / n
                }
            };
            SummaryRow {
                algorithm,
                ratio,
                snr_db,
                trials_ok: ms.len(),
                mean_rmse_db: mean(&|m| m.report.rmse_db),
                mean_entropy_bits: mean(&|m| m.report.entropy_bits),
                mean_iterations: mean(&|m| m.iterations as f64),
            }
        })
        .collect()
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.algorithm.to_string(),
                fmt_float(r.ratio),
                fmt_float(r.snr_db),
                r.trials_ok.to_string(),
                fmt_float(r.mean_rmse_db),
                fmt_float(r.mean_entropy_bits),
                fmt_float(r.mean_iterations),
            ]
        })
        .collect();
    write_csv(
        path,
        &["algorithm", "ratio", "snr_db", "trials_ok", "mean_rmse_db", "mean_entropy_bits", "mean_iterations"],
        &body,
    )
}

/// Paths of the per-trial artifacts written for a result row.
pub fn artifact_paths(dir: &Path, r: &TrialResult) -> (PathBuf, PathBuf) {
    let stem = trial_stem(r.algorithm, r.ratio_index, r.snr_index, r.trial);
    (dir.join(format!("{stem}.pgm")), dir.join(format!("{stem}_trace.csv")))
}
