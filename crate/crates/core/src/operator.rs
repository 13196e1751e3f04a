//! The ISAR sensing operator `Phi`, its adjoint, and supporting numerics.
//!
//! Entry `(l, i)` of `Phi` is `exp(-j 4 pi f_n R_i(t_m) / c)`, where the
//! measurement index splits as `l = m * N + n` and `R_i` is either the exact
//! instantaneous range or its far-field linearization. Only rows on kept
//! mask cells are materialized.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, ImageGrid, RealImage};
use crate::measurement::{MeasurementSet, SamplingMask};
use crate::radar::{RadarConfig, TWO_WAY_WAVENUMBER};

/// Largest `N * M * I` for which `Phi` is assembled explicitly.
pub const DENSE_ENTRY_LIMIT: usize = 1 << 24;

/// Safety factor applied to power-iteration estimates of `||Phi||^2`.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A linear map from images on [`grid`](LinearOperator::grid) to a vector of
/// `rows()` complex measurements.
pub trait LinearOperator: Sync {
    fn grid(&self) -> &ImageGrid;

    fn rows(&self) -> usize;

    fn forward_into(&self, x: &[Complex64], out: &mut [Complex64]);

    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]);

    fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.rows()];
        self.forward_into(x, &mut out);
        out
    }

    fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.grid().len()];
        self.adjoint_into(y, &mut out);
        out
    }
}

/// Explicit row-major complex matrix acting on images. Real and imaginary
/// parts are stored in separate planes so the kernels vectorize.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    grid: ImageGrid,
    rows: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl DenseOperator {
    pub fn new(grid: ImageGrid, rows: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * grid.len() {
            return Err(Error::invalid(format!(
                "dense operator needs {} entries, got {}",
                rows * grid.len(),
                data.len()
            )));
        }
        Ok(Self {
            grid,
            rows,
            re: data.iter().map(|c| c.re).collect(),
            im: data.iter().map(|c| c.im).collect(),
        })
    }

    pub fn identity(grid: ImageGrid) -> Self {
        let n = grid.len();
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(grid, n, data).expect("square identity")
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let k = row * self.grid.len() + col;
        Complex64::new(self.re[k], self.im[k])
    }

    pub fn row(&self, row: usize) -> Vec<Complex64> {
        (0..self.grid.len()).map(|c| self.entry(row, c)).collect()
    }
}

const ADJOINT_CHUNK: usize = 512;
const LANES: usize = 4;

fn split(v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
}

/// `sum(a[i] * x[i])` over split planes with interleaved partial sums; the
/// summation order is fixed, so results are reproducible.
fn dot(ar: &[f64], ai: &[f64], xr: &[f64], xi: &[f64]) -> Complex64 {
    let mut sr = [0.0f64; LANES];
    let mut si = [0.0f64; LANES];
    let body = ar.len() - ar.len() % LANES;
    let planes = ar[..body]
        .chunks_exact(LANES)
        .zip(ai[..body].chunks_exact(LANES))
        .zip(xr[..body].chunks_exact(LANES).zip(xi[..body].chunks_exact(LANES)));
    for ((a, b), (c, d)) in planes {
        for k in 0..LANES {
            sr[k] += a[k] * c[k] - b[k] * d[k];
            si[k] += a[k] * d[k] + b[k] * c[k];
        }
    }
    let mut re = (sr[0] + sr[1]) + (sr[2] + sr[3]);
    let mut im = (si[0] + si[1]) + (si[2] + si[3]);
    for k in body..ar.len() {
        re += ar[k] * xr[k] - ai[k] * xi[k];
        im += ar[k] * xi[k] + ai[k] * xr[k];
    }
    Complex64::new(re, im)
}

impl LinearOperator for DenseOperator {
    fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    fn rows(&self) -> usize {
        self.rows
    }

    fn forward_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.len();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), self.rows);
        let (xr, xi) = split(x);
        out.par_iter_mut()
            .zip(self.re.par_chunks(n).zip(self.im.par_chunks(n)))
            .for_each(|(o, (ar, ai))| *o = dot(ar, ai, &xr, &xi));
    }

    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.len();
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), n);
        out.par_chunks_mut(ADJOINT_CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let start = c * ADJOINT_CHUNK;
                let len = chunk.len();
                let mut or = vec![0.0f64; len];
                let mut oi = vec![0.0f64; len];
                for (l, yl) in y.iter().enumerate() {
                    let ar = &self.re[l * n + start..l * n + start + len];
                    let ai = &self.im[l * n + start..l * n + start + len];
                    // conj(a) * y
                    for k in 0..len {
                        or[k] += ar[k] * yl.re + ai[k] * yl.im;
                        oi[k] += ar[k] * yl.im - ai[k] * yl.re;
                    }
                }
                for (o, (r, i)) in chunk.iter_mut().zip(or.into_iter().zip(oi)) {
                    *o = Complex64::new(r, i);
                }
            });
    }
}

/// Range model used to build sensing entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeModel {
    Exact,
    FarField,
}

impl std::str::FromStr for RangeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RangeModel::Exact),
            "far-field" | "farfield" => Ok(RangeModel::FarField),
            other => Err(Error::invalid(format!("unknown range model `{other}`"))),
        }
    }
}

impl std::fmt::Display for RangeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RangeModel::Exact => "exact",
            RangeModel::FarField => "far-field",
        })
    }
}

#[inline]
fn entry_at(config: &RadarConfig, mode: RangeModel, n: usize, sin_cos: (f64, f64), x: f64, y: f64) -> Complex64 {
    let (s, c) = sin_cos;
    let r0 = config.r0;
    let range = match mode {
        RangeModel::Exact => (r0 * r0 + x * x + y * y + 2.0 * r0 * (-x * s + y * c)).sqrt(),
        RangeModel::FarField => r0 - x * s + y * c,
    };
    Complex64::from_polar(1.0, -TWO_WAY_WAVENUMBER * config.frequency(n) * range)
}

#[inline]
fn angle_sin_cos(config: &RadarConfig, m: usize) -> (f64, f64) {
    (config.omega * config.slow_time(m)).sin_cos()
}

fn check_geometry(config: &RadarConfig, grid: &ImageGrid) -> Result<()> {
    config.validate()?;
    // Every pixel must stay strictly in front of the radar for the exact range.
    let max_r = (0..grid.len())
        .map(|i| {
            let (x, y) = grid.coords_unchecked(i);
            x.hypot(y)
        })
        .fold(0.0, f64::max);
    if max_r >= config.r0 {
        return Err(Error::Domain(format!(
            "scene radius {max_r} m reaches the radar at {} m",
            config.r0
        )));
    }
    Ok(())
}

/// A single entry `phi_{l,i}` of the unmasked sensing matrix.
pub fn sensing_entry(
    config: &RadarConfig,
    grid: &ImageGrid,
    l: usize,
    i: usize,
    mode: RangeModel,
) -> Result<Complex64> {
    if l >= config.cells() {
        return Err(Error::invalid(format!(
            "measurement index {l} out of range for {} cells",
            config.cells()
        )));
    }
    let (x, y) = grid.pixel_coords(i)?;
    check_geometry(config, grid)?;
    let (n, m) = config.split_index(l);
    Ok(entry_at(config, mode, n, angle_sin_cos(config, m), x, y))
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(DenseOperator),
    MatrixFree { coords: Vec<(f64, f64)> },
}

/// `Phi` restricted to the kept rows of a sampling mask.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    config: RadarConfig,
    grid: ImageGrid,
    mask: SamplingMask,
    mode: RangeModel,
    storage: Storage,
}

impl SensingOperator {
    pub fn new(config: RadarConfig, grid: ImageGrid, mask: SamplingMask, mode: RangeModel) -> Result<Self> {
        Self::with_dense_limit(config, grid, mask, mode, DENSE_ENTRY_LIMIT)
    }

    /// As [`new`](Self::new), materializing `Phi` only when
    /// `N * M * I <= dense_limit`.
    pub fn with_dense_limit(
        config: RadarConfig,
        grid: ImageGrid,
        mask: SamplingMask,
        mode: RangeModel,
        dense_limit: usize,
    ) -> Result<Self> {
        check_geometry(&config, &grid)?;
        mask.check_shape(&config)?;
        let coords: Vec<(f64, f64)> = (0..grid.len()).map(|i| grid.coords_unchecked(i)).collect();
        let storage = if config.cells().saturating_mul(grid.len()) <= dense_limit {
            let n = grid.len();
            let mut data = vec![ZERO; mask.kept_count() * n];
            data.par_chunks_mut(n)
                .zip(mask.kept_indices().par_iter())
                .for_each(|(row, &l)| fill_row(&config, mode, &coords, l, row));
            Storage::Dense(DenseOperator::new(grid, mask.kept_count(), data)?)
        } else {
            Storage::MatrixFree { coords }
        };
        Ok(Self {
            config,
            grid,
            mask,
            mode,
            storage,
        })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.config
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn mode(&self) -> RangeModel {
        self.mode
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Explicit matrix of the kept rows, assembled on demand.
    pub fn to_dense(&self) -> DenseOperator {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::MatrixFree { coords } => {
                let n = self.grid.len();
                let mut data = vec![ZERO; self.rows() * n];
                data.par_chunks_mut(n)
                    .zip(self.mask.kept_indices().par_iter())
                    .for_each(|(row, &l)| fill_row(&self.config, self.mode, coords, l, row));
                DenseOperator::new(self.grid, self.rows(), data).expect("sized to the mask")
            }
        }
    }

    pub fn apply_forward(&self, image: &ComplexImage) -> Result<MeasurementSet> {
        self.grid.check_same(image.grid(), "apply_forward")?;
        let samples = self.forward(image.values());
        MeasurementSet::new(self.config, self.mask.clone(), samples)
    }

    pub fn apply_adjoint(&self, meas: &MeasurementSet) -> Result<ComplexImage> {
        self.check_measurements(meas)?;
        Ok(ComplexImage::from_parts(self.grid, self.adjoint(meas.samples())))
    }

    pub(crate) fn check_measurements(&self, meas: &MeasurementSet) -> Result<()> {
        if meas.mask() != &self.mask {
            return Err(Error::invalid("measurement mask does not match the operator mask"));
        }
        if meas.config() != &self.config {
            return Err(Error::invalid("measurement radar config does not match the operator"));
        }
        Ok(())
    }
}

fn fill_row(config: &RadarConfig, mode: RangeModel, coords: &[(f64, f64)], l: usize, row: &mut [Complex64]) {
    let (n, m) = config.split_index(l);
    let sc = angle_sin_cos(config, m);
    for (o, &(x, y)) in row.iter_mut().zip(coords) {
        *o = entry_at(config, mode, n, sc, x, y);
    }
}

impl LinearOperator for SensingOperator {
    fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    fn rows(&self) -> usize {
        self.mask.kept_count()
    }

    fn forward_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        match &self.storage {
            Storage::Dense(d) => d.forward_into(x, out),
            Storage::MatrixFree { coords } => {
                assert_eq!(x.len(), coords.len());
                out.par_iter_mut()
                    .zip(self.mask.kept_indices().par_iter())
                    .for_each(|(o, &l)| {
                        let (n, m) = self.config.split_index(l);
                        let sc = angle_sin_cos(&self.config, m);
                        *o = coords
                            .iter()
                            .zip(x)
                            .map(|(&(px, py), v)| entry_at(&self.config, self.mode, n, sc, px, py) * v)
                            .sum();
                    });
            }
        }
    }

    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) {
        match &self.storage {
            Storage::Dense(d) => d.adjoint_into(y, out),
            Storage::MatrixFree { coords } => {
                assert_eq!(y.len(), self.rows());
                let rows: Vec<(usize, (f64, f64))> = self
                    .mask
                    .kept_indices()
                    .iter()
                    .map(|&l| {
                        let (n, m) = self.config.split_index(l);
                        (n, angle_sin_cos(&self.config, m))
                    })
                    .collect();
                out.par_iter_mut().zip(coords.par_iter()).for_each(|(o, &(px, py))| {
                    *o = rows
                        .iter()
                        .zip(y)
                        .map(|(&(n, sc), v)| entry_at(&self.config, self.mode, n, sc, px, py).conj() * v)
                        .sum();
                });
            }
        }
    }
}

/// Result of a power-iteration estimate of the gradient's Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    /// Inflated estimate, `LIPSCHITZ_SAFETY * eigenvalue`.
    pub value: f64,
    /// Largest-eigenvalue estimate of `Phi^H Phi` before inflation.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on `Phi^H Phi` from a seeded random start.
pub fn estimate_lipschitz<O: LinearOperator + ?Sized>(
    op: &O,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("power-iteration tolerance must be positive"));
    }
    let n = op.grid().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    normalize(&mut v);

    let mut fwd = vec![ZERO; op.rows()];
    let mut w = vec![ZERO; n];
    let mut eig = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=max_iter.max(1) {
        iterations = k;
        op.forward_into(&v, &mut fwd);
        op.adjoint_into(&fwd, &mut w);
        // Rayleigh quotient ||Phi v||^2 with ||v|| = 1.
        let next: f64 = fwd.iter().map(|c| c.norm_sqr()).sum();
        let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            eig = 0.0;
            converged = true;
            break;
        }
        let done = k > 1 && (next - eig).abs() <= tol * next;
        eig = next;
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / norm;
        }
        if done {
            converged = true;
            break;
        }
    }
    Ok(LipschitzEstimate {
        value: LIPSCHITZ_SAFETY * eig,
        eigenvalue: eig,
        iterations,
        converged,
    })
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|c| *c /= norm);
    }
}

/// Noisy measurements of a real scene: `y = Phi x + e`, with circular
/// complex Gaussian `e` whose per-sample variance is the mean noiseless
/// sample power scaled by `10^(-snr/10)`. `snr_db = None` means noiseless;
/// a zero scene also yields zero noise.
pub fn simulate_measurements(
    op: &SensingOperator,
    scene: &RealImage,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<MeasurementSet> {
    op.grid.check_same(scene.grid(), "simulate_measurements")?;
    let clean = op.apply_forward(&scene.to_complex())?;
    let mut samples = clean.samples().to_vec();
    if let Some(snr) = snr_db {
        if !snr.is_finite() {
            if snr < 0.0 {
                return Err(Error::invalid("SNR must not be -inf"));
            }
        } else {
            let power = samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / samples.len() as f64;
            let variance = power * 10f64.powf(-snr / 10.0);
            if variance > 0.0 {
                let std = (variance / 2.0).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for s in samples.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *s += Complex64::new(std * re, std * im);
                }
            }
        }
    }
    MeasurementSet::new(op.config, op.mask.clone(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::make_mask;

    fn small_config(n: usize) -> RadarConfig {
        RadarConfig::from_sweep(35e9, 36e9, n, 1.7, n, 5_000.0)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect()
    }

    fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    fn norm(a: &[Complex64]) -> f64 {
        a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn entry_at_origin() {
        let cfg = small_config(8);
        let grid = cfg.resolution_grid(8, 8).unwrap();
        let i = grid.index(4, 4);
        let got = sensing_entry(&cfg, &grid, 0, i, RangeModel::Exact).unwrap();
        let want = Complex64::from_polar(1.0, -4.0 * std::f64::consts::PI * cfg.f0 * cfg.r0 / crate::grid::SPEED_OF_LIGHT);
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn entries_have_unit_modulus() {
        let cfg = small_config(16);
        let grid = cfg.resolution_grid(16, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let l = rand::Rng::random_range(&mut rng, 0..cfg.cells());
            let i = rand::Rng::random_range(&mut rng, 0..grid.len());
            for mode in [RangeModel::Exact, RangeModel::FarField] {
                let e = sensing_entry(&cfg, &grid, l, i, mode).unwrap();
                assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!(sensing_entry(&cfg, &grid, cfg.cells(), 0, RangeModel::Exact).is_err());
        assert!(sensing_entry(&cfg, &grid, 0, grid.len(), RangeModel::Exact).is_err());
    }

    #[test]
    fn impulse_response_is_a_matrix_column() {
        let cfg = small_config(8);
        let grid = cfg.resolution_grid(8, 8).unwrap();
        let mask = make_mask(8, 8, 0.5, 9).unwrap();
        let op = SensingOperator::new(cfg, grid, mask.clone(), RangeModel::Exact).unwrap();
        for i in [0, 17, 63] {
            let mut x = vec![ZERO; grid.len()];
            x[i] = Complex64::new(1.0, 0.0);
            let col = op.forward(&x);
            for (k, &l) in mask.kept_indices().iter().enumerate() {
                let e = sensing_entry(&cfg, &grid, l, i, RangeModel::Exact).unwrap();
                assert_eq!(col[k], e);
            }
        }
    }

    #[test]
    fn adjoint_identity_both_modes_and_storages() {
        let cfg = small_config(12);
        let grid = cfg.resolution_grid(10, 12).unwrap();
        let mask = make_mask(12, 12, 0.4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [RangeModel::Exact, RangeModel::FarField] {
            for limit in [DENSE_ENTRY_LIMIT, 0] {
                let op = SensingOperator::with_dense_limit(cfg, grid, mask.clone(), mode, limit).unwrap();
                assert_eq!(op.is_dense(), limit > 0);
                for _ in 0..10 {
                    let u = random_vec(&mut rng, grid.len());
                    let v = random_vec(&mut rng, op.rows());
                    let lhs = dot(&op.forward(&u), &v);
                    let rhs = dot(&u, &op.adjoint(&v));
                    assert!((lhs - rhs).norm() <= 1e-10 * norm(&u) * norm(&v));
                }
            }
        }
    }

    #[test]
    fn matrix_free_matches_dense() {
        let cfg = small_config(16);
        let grid = cfg.resolution_grid(16, 16).unwrap();
        let mask = make_mask(16, 16, 0.3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mode in [RangeModel::Exact, RangeModel::FarField] {
            let dense = SensingOperator::new(cfg, grid, mask.clone(), mode).unwrap();
            let free = SensingOperator::with_dense_limit(cfg, grid, mask.clone(), mode, 0).unwrap();
            let x = random_vec(&mut rng, grid.len());
            let (a, b) = (dense.forward(&x), free.forward(&x));
            let diff: Vec<_> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm(&diff) <= 1e-12 * norm(&a));
            let y = random_vec(&mut rng, dense.rows());
            let (a, b) = (dense.adjoint(&y), free.adjoint(&y));
            let diff: Vec<_> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm(&diff) <= 1e-12 * norm(&a));
        }
    }

    #[test]
    fn forward_and_adjoint_reject_mismatches() {
        let cfg = small_config(8);
        let grid = cfg.resolution_grid(8, 8).unwrap();
        let op = SensingOperator::new(cfg, grid, make_mask(8, 8, 0.5, 1).unwrap(), RangeModel::Exact).unwrap();
        let other = ImageGrid::new(4, 4, 0.1, 0.1).unwrap();
        assert!(op.apply_forward(&ComplexImage::zeros(other)).is_err());
        let wrong_mask = make_mask(8, 8, 0.5, 2).unwrap();
        let meas = MeasurementSet::new(cfg, wrong_mask.clone(), vec![ZERO; wrong_mask.kept_count()]).unwrap();
        assert!(op.apply_adjoint(&meas).is_err());
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let cfg = small_config(8);
        let grid = cfg.resolution_grid(8, 8).unwrap();
        let op = SensingOperator::new(cfg, grid, make_mask(8, 8, 0.5, 1).unwrap(), RangeModel::Exact).unwrap();
        let y = op.apply_forward(&ComplexImage::zeros(grid)).unwrap();
        assert!(y.samples().iter().all(|c| *c == ZERO));
        let x = op.apply_adjoint(&y).unwrap();
        assert!(x.values().iter().all(|c| *c == ZERO));
    }

    #[test]
    fn lipschitz_of_identity() {
        let grid = ImageGrid::new(4, 4, 1.0, 1.0).unwrap();
        let est = estimate_lipschitz(&DenseOperator::identity(grid), 1e-10, 100, 0).unwrap();
        assert!(est.converged);
        assert!((est.value - 1.05).abs() < 1e-9);
        assert!(estimate_lipschitz(&DenseOperator::identity(grid), 0.0, 100, 0).is_err());
    }

    #[test]
    fn lipschitz_is_seeded() {
        let cfg = small_config(8);
        let grid = cfg.resolution_grid(8, 8).unwrap();
        let op = SensingOperator::new(cfg, grid, make_mask(8, 8, 0.5, 1).unwrap(), RangeModel::Exact).unwrap();
        let a = estimate_lipschitz(&op, 1e-6, 200, 17).unwrap();
        let b = estimate_lipschitz(&op, 1e-6, 200, 17).unwrap();
        assert_eq!(a, b);
        let short = estimate_lipschitz(&op, 1e-15, 2, 17).unwrap();
        assert!(!short.converged);
        assert!(short.value > 0.0);
    }

    #[test]
    fn noiseless_simulation_equals_forward() {
        let cfg = small_config(8);
        let grid = cfg.resolution_grid(8, 8).unwrap();
        let op = SensingOperator::new(cfg, grid, make_mask(8, 8, 0.5, 1).unwrap(), RangeModel::Exact).unwrap();
        let mut vals = vec![0.0; 64];
        vals[20] = 1.0;
        vals[21] = 0.5;
        let scene = RealImage::new(grid, vals).unwrap();
        let y = simulate_measurements(&op, &scene, None, 3).unwrap();
        let y_inf = simulate_measurements(&op, &scene, Some(f64::INFINITY), 3).unwrap();
        let clean = op.apply_forward(&scene.to_complex()).unwrap();
        assert_eq!(y, clean);
        assert_eq!(y_inf, clean);
        let zero = simulate_measurements(&op, &RealImage::zeros(grid), Some(10.0), 3).unwrap();
        assert!(zero.samples().iter().all(|c| *c == ZERO));
    }
}
