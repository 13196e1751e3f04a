use std::fs;
use std::path::Path;

use mrf_isar::config::{parse_config, ExperimentConfig};
use mrf_isar::experiment::{run_experiment, RESULTS_FILE, RESULTS_HEADER};
use mrf_isar::io::read_image;

fn config(doc: &str, dir: &Path) -> ExperimentConfig {
    let mut cfg = parse_config(doc).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn small(dir: &Path) -> ExperimentConfig {
    config(
        "grid.nx = 24\ngrid.ny = 24\nradar.n_freq = 24\nradar.n_angle = 24\n\
         sampling.ratio = 0.5\nsnr_db = 15, inf\ntrials = 2\nsolver.max_iter = 40\nseed = 9\n",
        dir,
    )
}

#[test]
fn back_projection_of_point_target_peaks_at_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        "grid.nx = 32\ngrid.ny = 32\nradar.n_freq = 32\nradar.n_angle = 32\n\
         phantom.count = 1\nphantom.radius = 0\nsampling.ratio = 1.0\nsnr_db = inf\n\
         trials = 1\nalgorithms = bp\n",
        tmp.path(),
    );
    let results = run_experiment(&cfg).unwrap();
    assert_eq!(results.len(), 1);
    let truth = read_image(&tmp.path().join("truth.img")).unwrap().magnitudes();
    let bp = read_image(&tmp.path().join("bp_r0_s0_t0.img")).unwrap().magnitudes();
    let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    assert_eq!(truth.iter().filter(|&&m| m > 0.0).count(), 1);
    assert_eq!(argmax(&bp), argmax(&truth));
}

#[test]
fn results_have_one_row_per_cell_and_reparse() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(tmp.path());
    let results = run_experiment(&cfg).unwrap();
    assert_eq!(results.len(), 3 * 2 * 2);

    let text = fs::read_to_string(tmp.path().join(RESULTS_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], RESULTS_HEADER.join(","));
    assert_eq!(lines.len(), 1 + results.len());
    let col = |name: &str| RESULTS_HEADER.iter().position(|h| *h == name).unwrap();
    for (line, r) in lines[1..].iter().zip(&results) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), RESULTS_HEADER.len());
        let m = r.outcome.as_ref().unwrap();
        let close = |name: &str, want: f64| {
            let got: f64 = fields[col(name)].parse().unwrap();
            assert!(got == want || ((got - want) / want).abs() < 1e-8, "{name}: {got} vs {want}");
        };
        close("ratio", r.ratio);
        close("rmse", m.report.rmse);
        close("rmse_db", m.report.rmse_db);
        close("entropy_bits", m.report.entropy_bits);
        assert_eq!(fields[col("algorithm")], r.algorithm.name());
        assert_eq!(fields[col("seed")].parse::<u64>().unwrap(), r.seed);
        assert_eq!(fields[col("iterations")].parse::<usize>().unwrap(), m.iterations);
    }
}

#[test]
fn single_trial_gives_two_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.snr_db = vec![15.0];
    cfg.trials = 1;
    cfg.algorithms = vec!["bp".parse().unwrap()];
    run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(tmp.path().join(RESULTS_FILE)).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn reruns_and_worker_counts_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path())).unwrap();
    let mut cfg = small(b.path());
    cfg.workers = 3;
    run_experiment(&cfg).unwrap();

    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 10);
    for name in names {
        let left = fs::read(a.path().join(&name)).unwrap();
        let right = fs::read(b.path().join(&name)).unwrap();
        assert!(left == right, "{name:?} differs");
    }
}
