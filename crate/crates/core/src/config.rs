//! Plain-text experiment configuration.
//!
//! One `key = value` per line; `#` starts a comment; blank lines are
//! ignored. Lists are comma-separated. Unknown or repeated keys are errors.
//! Missing keys take the defaults of [`ExperimentConfig::default`] (the
//! desk-scale scenario). `radar.preset` is applied before every other key, so
//! explicit radar keys refine a preset regardless of their order.
//!
//! [`serialize`] writes every key explicitly; parsing its output yields an
//! identical config.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::metrics::DEFAULT_BINS;
use crate::mrf::{IsingParams, LikelihoodPolicy, McmcSchedule};
use crate::operator::RangeModel;
use crate::phantom::PhantomSpec;
use crate::prox::{RegWeights, TvProxOptions};
use crate::radar::RadarConfig;
use crate::solver::{LikelihoodChoice, LipschitzChoice, MrfSettings, SolverParams, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    MrfFista,
    Fista,
    Bp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::MrfFista, Algorithm::Fista, Algorithm::Bp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MrfFista => "mrf-fista",
            Algorithm::Fista => "fista",
            Algorithm::Bp => "bp",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{}` (expected mrf-fista, fista or bp)", s.trim())))
    }
}

/// Image grid size; unset spacings default to the radar resolution cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: Option<f64>,
    pub dy: Option<f64>,
}

/// Phantom parameters as written in the config (all kept, whatever the
/// shape, so documents round-trip).
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSettings {
    pub shape: String,
    pub count: usize,
    pub radius: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub seed: u64,
}

impl PhantomSettings {
    pub fn spec(&self) -> Result<PhantomSpec> {
        PhantomSpec::from_parts(&self.shape, self.count, self.radius, self.amp_min, self.amp_max)
    }
}

/// Solver knobs shared by both FISTA variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub lambda1_rel: f64,
    pub tv_ratio: f64,
    pub w1: f64,
    /// Absolute penalties; when set they replace the relative ones.
    pub lambda1: Option<f64>,
    pub lambda_tv: Option<f64>,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub patience: usize,
    pub tv_iters: usize,
    pub tv_tol: f64,
    /// `None` estimates `L` by power iteration.
    pub lipschitz: Option<f64>,
    pub mrf_every: usize,
    pub alpha: f64,
    pub beta: f64,
    pub temperature: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub sigma_off_scale: f64,
    pub top_fraction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let p = SolverParams::default();
        let ising = IsingParams::default();
        let policy = LikelihoodPolicy::default();
        let schedule = McmcSchedule::default();
        let (lambda1_rel, tv_ratio, w1) = match WeightSpec::default() {
            WeightSpec::Scaled {
                lambda1_rel,
                tv_ratio,
                w1,
            } => (lambda1_rel, tv_ratio, w1),
            WeightSpec::Fixed(w) => (w.lambda1, w.lambda_tv / w.lambda1, w.w1),
        };
        Self {
            lambda1_rel,
            tv_ratio,
            w1,
            lambda1: None,
            lambda_tv: None,
            max_iter: p.max_iter,
            stop_tol: p.stop_tol,
            patience: p.patience,
            tv_iters: p.tv_inner.max_iter,
            tv_tol: p.tv_inner.tol,
            lipschitz: None,
            mrf_every: p.mrf.every,
            alpha: ising.alpha,
            beta: ising.beta,
            temperature: ising.temperature,
            burn_in: schedule.burn_in,
            samples: schedule.samples,
            sigma_off_scale: policy.sigma_off_scale,
            top_fraction: policy.top_fraction,
        }
    }
}

impl SolverSettings {
    /// Solver parameters (MRF step enabled or not) with the given seed.
    pub fn params(&self, mrf: bool, seed: u64) -> SolverParams {
        let defaults = SolverParams::default();
        let weights = match (self.lambda1, self.lambda_tv) {
            (None, None) => WeightSpec::Scaled {
                lambda1_rel: self.lambda1_rel,
                tv_ratio: self.tv_ratio,
                w1: self.w1,
            },
            (l1, ltv) => {
                let l1 = l1.unwrap_or(0.0);
                let ltv = ltv.unwrap_or(self.tv_ratio * l1);
                WeightSpec::Fixed(RegWeights {
                    lambda1: l1,
                    lambda_tv: ltv,
                    w1: self.w1,
                    w2: 1.0 - self.w1,
                })
            }
        };
        SolverParams {
            weights,
            lipschitz: self.lipschitz.map_or(defaults.lipschitz, LipschitzChoice::Given),
            max_iter: self.max_iter,
            stop_tol: self.stop_tol,
            patience: self.patience,
            tv_inner: TvProxOptions {
                max_iter: self.tv_iters,
                tol: self.tv_tol,
            },
            mrf: MrfSettings {
                enabled: mrf,
                every: self.mrf_every,
                ising: IsingParams {
                    alpha: self.alpha,
                    beta: self.beta,
                    temperature: self.temperature,
                },
                likelihood: LikelihoodChoice::Adaptive(LikelihoodPolicy {
                    top_fraction: self.top_fraction,
                    sigma_off_scale: self.sigma_off_scale,
                }),
                schedule: McmcSchedule {
                    burn_in: self.burn_in,
                    samples: self.samples,
                },
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Per-trial PGM and lossless images.
    pub images: bool,
    /// Per-trial solver traces.
    pub traces: bool,
    /// Wall-clock timings in a separate `timings.csv` (not reproducible).
    pub timings: bool,
    /// dB-scaled PGM previews (-40 dB floor) instead of linear.
    pub pgm_db: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            images: true,
            traces: true,
            timings: false,
            pgm_db: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub radar: RadarConfig,
    pub mode: RangeModel,
    pub grid: GridSpec,
    pub phantom: PhantomSettings,
    pub ratios: Vec<f64>,
    /// `f64::INFINITY` means noiseless.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub solver: SolverSettings,
    pub bins: usize,
    pub output: OutputSettings,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let radar = RadarConfig::desk();
        Self {
            radar,
            mode: RangeModel::Exact,
            grid: GridSpec {
                nx: radar.n_freq,
                ny: radar.n_angle,
                dx: None,
                dy: None,
            },
            phantom: PhantomSettings {
                shape: "blobs".into(),
                count: 3,
                radius: 2,
                amp_min: 1.0,
                amp_max: 1.0,
                seed: 7,
            },
            ratios: vec![0.2, 0.3, 0.4],
            snr_db: vec![10.0],
            trials: 10,
            algorithms: Algorithm::ALL.to_vec(),
            solver: SolverSettings::default(),
            bins: DEFAULT_BINS,
            output: OutputSettings::default(),
            seed: 1,
            workers: 1,
        }
    }
}

/// Every recognised key, in the order [`serialize`] writes them.
pub const KEYS: &[&str] = &[
    "radar.preset",
    "radar.f0",
    "radar.df",
    "radar.n_freq",
    "radar.n_angle",
    "radar.r0",
    "radar.omega",
    "radar.dt",
    "radar.mode",
    "grid.nx",
    "grid.ny",
    "grid.dx",
    "grid.dy",
    "phantom.shape",
    "phantom.count",
    "phantom.radius",
    "phantom.amp_min",
    "phantom.amp_max",
    "phantom.seed",
    "sampling.ratio",
    "snr_db",
    "trials",
    "algorithms",
    "solver.lambda1_rel",
    "solver.tv_ratio",
    "solver.w1",
    "solver.lambda1",
    "solver.lambda_tv",
    "solver.max_iter",
    "solver.stop_tol",
    "solver.patience",
    "solver.tv_iters",
    "solver.tv_tol",
    "solver.lipschitz",
    "solver.mrf_every",
    "mrf.alpha",
    "mrf.beta",
    "mrf.temperature",
    "mrf.burn_in",
    "mrf.samples",
    "mrf.sigma_off_scale",
    "mrf.top_fraction",
    "metrics.bins",
    "output.dir",
    "output.images",
    "output.traces",
    "output.timings",
    "output.pgm_db",
    "seed",
    "workers",
];

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if x.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(x)
}

fn finite(v: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(v)?;
    if !x.is_finite() {
        return Err(format!("`{v}` must be finite"));
    }
    Ok(x)
}

fn positive(v: &str) -> std::result::Result<f64, String> {
    let x = finite(v)?;
    if x <= 0.0 {
        return Err(format!("`{v}` must be positive"));
    }
    Ok(x)
}

fn nonneg(v: &str) -> std::result::Result<f64, String> {
    let x = finite(v)?;
    if x < 0.0 {
        return Err(format!("`{v}` must be nonnegative"));
    }
    Ok(x)
}

fn count(v: &str, min: usize) -> std::result::Result<usize, String> {
    let n: usize = v.parse().map_err(|_| format!("`{v}` is not a nonnegative integer"))?;
    if n < min {
        return Err(format!("must be at least {min}, got {n}"));
    }
    Ok(n)
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn list<T>(v: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    Ok(items)
}

fn optional(v: &str, item: impl Fn(&str) -> std::result::Result<f64, String>) -> std::result::Result<Option<f64>, String> {
    match v {
        "auto" | "estimate" => Ok(None),
        _ => item(v).map(Some),
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Sets one key from its textual value. Used by the parser and for
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let s = &mut self.solver;
        match key {
            "radar.preset" => {
                self.radar = match v {
                    "desk" => RadarConfig::desk(),
                    "uav" => RadarConfig::uav_preset(),
                    _ => return Err(format!("unknown preset `{v}` (expected desk or uav)")),
                }
            }
            "radar.f0" => self.radar.f0 = positive(v)?,
            "radar.df" => self.radar.df = positive(v)?,
            "radar.n_freq" => self.radar.n_freq = count(v, 1)?,
            "radar.n_angle" => self.radar.n_angle = count(v, 1)?,
            "radar.r0" => self.radar.r0 = positive(v)?,
            "radar.omega" => self.radar.omega = finite(v)?,
            "radar.dt" => self.radar.dt = positive(v)?,
            "radar.mode" => self.mode = v.parse().map_err(|e: Error| e.to_string())?,
            "grid.nx" => self.grid.nx = count(v, 1)?,
            "grid.ny" => self.grid.ny = count(v, 1)?,
            "grid.dx" => self.grid.dx = optional(v, positive)?,
            "grid.dy" => self.grid.dy = optional(v, positive)?,
            "phantom.shape" => {
                if !["blobs", "aircraft"].contains(&v) {
                    return Err(format!("unknown phantom shape `{v}` (expected blobs or aircraft)"));
                }
                self.phantom.shape = v.to_string()
            }
            "phantom.count" => self.phantom.count = count(v, 1)?,
            "phantom.radius" => self.phantom.radius = count(v, 0)?,
            "phantom.amp_min" => self.phantom.amp_min = positive(v)?,
            "phantom.amp_max" => self.phantom.amp_max = positive(v)?,
            "phantom.seed" => self.phantom.seed = v.parse().map_err(|_| format!("`{v}` is not a seed"))?,
            "sampling.ratio" => {
                self.ratios = list(v, |x| {
                    let r = parse_f64(x)?;
                    if r > 0.0 && r <= 1.0 {
                        Ok(r)
                    } else {
                        Err(format!("sampling ratio {x} is outside the range (0, 1]"))
                    }
                })?
            }
            "snr_db" => {
                self.snr_db = list(v, |x| {
                    let r = parse_f64(x)?;
                    if r == f64::NEG_INFINITY {
                        Err("SNR of -inf dB is meaningless".into())
                    } else {
                        Ok(r)
                    }
                })?
            }
            "trials" => self.trials = count(v, 1)?,
            "algorithms" => {
                let algs = list(v, |x| x.parse::<Algorithm>().map_err(|e| e.to_string()))?;
                let mut seen = HashSet::new();
                if let Some(dup) = algs.iter().find(|a| !seen.insert(**a)) {
                    return Err(format!("algorithm `{dup}` listed twice"));
                }
                self.algorithms = algs
            }
            "solver.lambda1_rel" => s.lambda1_rel = nonneg(v)?,
            "solver.tv_ratio" => s.tv_ratio = nonneg(v)?,
            "solver.w1" => {
                let w = finite(v)?;
                if !(w > 0.0 && w < 1.0) {
                    return Err("w1 must lie in (0, 1)".into());
                }
                s.w1 = w
            }
            "solver.lambda1" => s.lambda1 = optional(v, nonneg)?,
            "solver.lambda_tv" => s.lambda_tv = optional(v, nonneg)?,
            "solver.max_iter" => s.max_iter = count(v, 1)?,
            "solver.stop_tol" => s.stop_tol = nonneg(v)?,
            "solver.patience" => s.patience = count(v, 1)?,
            "solver.tv_iters" => s.tv_iters = count(v, 1)?,
            "solver.tv_tol" => s.tv_tol = nonneg(v)?,
            "solver.lipschitz" => s.lipschitz = optional(v, positive)?,
            "solver.mrf_every" => s.mrf_every = count(v, 1)?,
            "mrf.alpha" => s.alpha = finite(v)?,
            "mrf.beta" => s.beta = finite(v)?,
            "mrf.temperature" => s.temperature = positive(v)?,
            "mrf.burn_in" => s.burn_in = count(v, 1)?,
            "mrf.samples" => s.samples = count(v, 1)?,
            "mrf.sigma_off_scale" => s.sigma_off_scale = positive(v)?,
            "mrf.top_fraction" => {
                let f = finite(v)?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err("top_fraction must lie in (0, 1]".into());
                }
                s.top_fraction = f
            }
            "metrics.bins" => self.bins = count(v, 2)?,
            "output.dir" => {
                if v.is_empty() {
                    return Err("output directory must not be empty".into());
                }
                self.output.dir = PathBuf::from(v)
            }
            "output.images" => self.output.images = flag(v)?,
            "output.traces" => self.output.traces = flag(v)?,
            "output.timings" => self.output.timings = flag(v)?,
            "output.pgm_db" => self.output.pgm_db = flag(v)?,
            "seed" => self.seed = v.parse().map_err(|_| format!("`{v}` is not a seed"))?,
            "workers" => self.workers = count(v, 1)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Cross-field checks that no single key can enforce.
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.phantom.spec()?;
        self.image_grid()?;
        self.solver.params(true, 0).validate()?;
        Ok(())
    }

    pub fn image_grid(&self) -> Result<ImageGrid> {
        let base = self.radar.resolution_grid(self.grid.nx, self.grid.ny)?;
        ImageGrid::new(
            self.grid.nx,
            self.grid.ny,
            self.grid.dx.unwrap_or(base.dx()),
            self.grid.dy.unwrap_or(base.dy()),
        )
    }

    /// Value of `key` as [`serialize`] writes it.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = &self.solver;
        let opt = |v: Option<f64>, none: &str| v.map_or(none.to_string(), |x| x.to_string());
        Some(match key {
            "radar.preset" => return None,
            "radar.f0" => self.radar.f0.to_string(),
            "radar.df" => self.radar.df.to_string(),
            "radar.n_freq" => self.radar.n_freq.to_string(),
            "radar.n_angle" => self.radar.n_angle.to_string(),
            "radar.r0" => self.radar.r0.to_string(),
            "radar.omega" => self.radar.omega.to_string(),
            "radar.dt" => self.radar.dt.to_string(),
            "radar.mode" => self.mode.to_string(),
            "grid.nx" => self.grid.nx.to_string(),
            "grid.ny" => self.grid.ny.to_string(),
            "grid.dx" => opt(self.grid.dx, "auto"),
            "grid.dy" => opt(self.grid.dy, "auto"),
            "phantom.shape" => self.phantom.shape.clone(),
            "phantom.count" => self.phantom.count.to_string(),
            "phantom.radius" => self.phantom.radius.to_string(),
            "phantom.amp_min" => self.phantom.amp_min.to_string(),
            "phantom.amp_max" => self.phantom.amp_max.to_string(),
            "phantom.seed" => self.phantom.seed.to_string(),
            "sampling.ratio" => join(&self.ratios),
            "snr_db" => join(&self.snr_db),
            "trials" => self.trials.to_string(),
            "algorithms" => join(&self.algorithms),
            "solver.lambda1_rel" => s.lambda1_rel.to_string(),
            "solver.tv_ratio" => s.tv_ratio.to_string(),
            "solver.w1" => s.w1.to_string(),
            "solver.lambda1" => opt(s.lambda1, "auto"),
            "solver.lambda_tv" => opt(s.lambda_tv, "auto"),
            "solver.max_iter" => s.max_iter.to_string(),
            "solver.stop_tol" => s.stop_tol.to_string(),
            "solver.patience" => s.patience.to_string(),
            "solver.tv_iters" => s.tv_iters.to_string(),
            "solver.tv_tol" => s.tv_tol.to_string(),
            "solver.lipschitz" => opt(s.lipschitz, "estimate"),
            "solver.mrf_every" => s.mrf_every.to_string(),
            "mrf.alpha" => s.alpha.to_string(),
            "mrf.beta" => s.beta.to_string(),
            "mrf.temperature" => s.temperature.to_string(),
            "mrf.burn_in" => s.burn_in.to_string(),
            "mrf.samples" => s.samples.to_string(),
            "mrf.sigma_off_scale" => s.sigma_off_scale.to_string(),
            "mrf.top_fraction" => s.top_fraction.to_string(),
            "metrics.bins" => self.bins.to_string(),
            "output.dir" => self.output.dir.display().to_string(),
            "output.images" => self.output.images.to_string(),
            "output.traces" => self.output.traces.to_string(),
            "output.timings" => self.output.timings.to_string(),
            "output.pgm_db" => self.output.pgm_db.to_string(),
            "seed" => self.seed.to_string(),
            "workers" => self.workers.to_string(),
            _ => return None,
        })
    }
}

/// Parses a config document. Errors name the offending line and key; a
/// failed cross-field check is reported against line 0.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                key: key.to_string(),
                message: "key given more than once".into(),
            });
        }
        entries.push((line, key, value.trim()));
    }
    // The preset goes first so explicit radar keys refine it.
    entries.sort_by_key(|&(_, key, _)| key != "radar.preset");

    let mut config = ExperimentConfig::default();
    for (line, key, value) in entries {
        config.set(key, value).map_err(|message| Error::Parse {
            line,
            key: key.to_string(),
            message,
        })?;
    }
    config.validate().map_err(|e| Error::Parse {
        line: 0,
        key: "<document>".into(),
        message: e.to_string(),
    })?;
    Ok(config)
}

/// Writes every key of `config` as a parseable document.
pub fn serialize(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        if let Some(value) = config.get(key) {
            writeln!(out, "{key} = {value}").expect("write to String");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_is_desk() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.radar.f0, 35e9);
        assert_eq!((c.radar.n_freq, c.radar.n_angle), (64, 64));
        assert_eq!(c.radar.r0, 5_000.0);
        assert!((c.radar.total_angle().to_degrees() - 1.7).abs() < 1e-12);
        let g = c.image_grid().unwrap();
        assert_eq!((g.nx(), g.ny()), (64, 64));
    }

    #[test]
    fn ratio_out_of_range_names_line_and_key() {
        let err = parse_config("# comment\n\nsampling.ratio = 1.5\n").unwrap_err();
        match err {
            Error::Parse { line, key, message } => {
                assert_eq!(line, 3);
                assert_eq!(key, "sampling.ratio");
                assert!(message.contains("(0, 1]"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_config("sampling.ratio = 0").is_err());
    }

    #[test]
    fn unknown_duplicate_and_malformed_lines() {
        assert!(matches!(parse_config("bogus = 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("trials = 2\ntrials = 3"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("trials"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("algorithms = fista, lasso"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("trials = 0"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("snr_db = nan"), Err(Error::Parse { .. })));
    }

    #[test]
    fn values_and_comments() {
        let c = parse_config(
            "snr_db = 10, inf   # noisy and clean\n\
             algorithms = bp,fista\n\
             radar.mode = far-field\n\
             solver.lipschitz = 12.5\n\
             output.pgm_db = true\n",
        )
        .unwrap();
        assert_eq!(c.snr_db, vec![10.0, f64::INFINITY]);
        assert_eq!(c.algorithms, vec![Algorithm::Bp, Algorithm::Fista]);
        assert_eq!(c.mode, RangeModel::FarField);
        assert_eq!(c.solver.lipschitz, Some(12.5));
        assert!(c.output.pgm_db);
    }

    #[test]
    fn preset_applies_before_explicit_keys() {
        let a = parse_config("radar.n_freq = 32\nradar.preset = uav\n").unwrap();
        assert_eq!(a.radar.n_freq, 32);
        assert_eq!(a.radar.f0, RadarConfig::uav_preset().f0);
    }

    #[test]
    fn cross_field_errors_are_reported() {
        // 90 degrees of rotation breaks the small-angle geometry.
        let err = parse_config("radar.omega = 2.0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 0, .. }));
        assert!(parse_config("phantom.amp_min = 2\nphantom.amp_max = 1").is_err());
    }

    #[test]
    fn default_params_match_solver_defaults() {
        let p = ExperimentConfig::default().solver.params(false, 0);
        assert_eq!(p, SolverParams::default());
    }

    fn value_for(key: &str) -> BoxedStrategy<String> {
        let float = |lo: f64, hi: f64| (lo..hi).prop_map(|v| v.to_string()).boxed();
        let int = |lo: usize, hi: usize| (lo..hi).prop_map(|v| v.to_string()).boxed();
        let boolean = any::<bool>().prop_map(|b| b.to_string()).boxed();
        match key {
            "radar.preset" => prop_oneof![Just("desk".to_string()), Just("uav".to_string())].boxed(),
            "radar.f0" => float(1e9, 1e11),
            "radar.df" => float(1e5, 1e8),
            "radar.n_freq" | "radar.n_angle" | "grid.nx" | "grid.ny" => int(1, 200),
            "radar.r0" => float(1e3, 1e5),
            "radar.omega" => float(0.0, 0.02),
            "radar.dt" => float(0.1, 1.0),
            "radar.mode" => prop_oneof![Just("exact".to_string()), Just("far-field".to_string())].boxed(),
            "grid.dx" | "grid.dy" => prop_oneof![Just("auto".to_string()), (0.01f64..1.0).prop_map(|v| v.to_string())].boxed(),
            "phantom.shape" => prop_oneof![Just("blobs".to_string()), Just("aircraft".to_string())].boxed(),
            "phantom.count" => int(1, 9),
            "phantom.radius" => int(0, 5),
            "phantom.amp_min" => float(0.1, 1.0),
            "phantom.amp_max" => float(1.0, 3.0),
            "sampling.ratio" => proptest::collection::vec(0.01f64..=1.0, 1..4)
                .prop_map(|v| join(&v))
                .boxed(),
            "snr_db" => proptest::collection::vec(prop_oneof![(-10.0f64..60.0), Just(f64::INFINITY)], 1..3)
                .prop_map(|v| join(&v))
                .boxed(),
            "trials" | "solver.max_iter" | "solver.patience" | "solver.tv_iters" | "solver.mrf_every" | "mrf.burn_in" | "mrf.samples" | "workers" => int(1, 50),
            "algorithms" => proptest::sample::subsequence(vec!["mrf-fista", "fista", "bp"], 1..=3)
                .prop_map(|v| v.join(","))
                .boxed(),
            "solver.lambda1_rel" | "solver.tv_ratio" | "solver.stop_tol" | "solver.tv_tol" => float(0.0, 1.0),
            "solver.w1" => float(0.05, 0.95),
            "solver.lambda1" | "solver.lambda_tv" => prop_oneof![Just("auto".to_string()), (0.0f64..10.0).prop_map(|v| v.to_string())].boxed(),
            "solver.lipschitz" => prop_oneof![Just("estimate".to_string()), (1.0f64..1e4).prop_map(|v| v.to_string())].boxed(),
            "mrf.alpha" | "mrf.beta" => float(-1.0, 1.0),
            "mrf.temperature" | "mrf.sigma_off_scale" => float(0.05, 5.0),
            "mrf.top_fraction" => float(0.01, 1.0),
            "metrics.bins" => int(2, 1024),
            "output.dir" => "[a-z][a-z0-9_/]{0,12}".boxed(),
            "output.images" | "output.traces" | "output.timings" | "output.pgm_db" => boolean,
            "seed" | "phantom.seed" => any::<u64>().prop_map(|v| v.to_string()).boxed(),
            other => panic!("no generator for {other}"),
        }
    }

    fn document() -> impl Strategy<Value = String> {
        proptest::sample::subsequence(KEYS.to_vec(), 0..KEYS.len())
            .prop_flat_map(|keys| {
                let values: Vec<_> = keys.iter().map(|k| value_for(k)).collect();
                (Just(keys), values)
            })
            .prop_map(|(keys, values)| {
                keys.iter()
                    .zip(values)
                    .map(|(k, v)| format!("{k} = {v}\n"))
                    .collect::<String>()
            })
    }

    proptest! {
        #[test]
        fn serialize_roundtrips(doc in document()) {
            // Some random combinations are legitimately rejected (e.g. a
            // rotation too large for the geometry); only valid ones count.
            if let Ok(config) = parse_config(&doc) {
                let text = serialize(&config);
                let back = parse_config(&text).unwrap();
                prop_assert_eq!(&back, &config);
                prop_assert_eq!(serialize(&back), text);
            }
        }
    }
}
