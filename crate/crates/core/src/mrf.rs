//! Ising prior on the signal support and its MAP estimation.
//!
//! The support `s in {0,1}^I` lives on the image lattice with 4-neighbor
//! edges (no wraparound). Energies follow the convention "lower is more
//! probable":
//!
//! * single site: `V1(1) = +alpha`, `V1(0) = -alpha`, so a larger `alpha`
//!   favors sparser supports;
//! * pair: `V2 = -beta` when neighbors agree and `+beta` when they differ.
//!
//! The posterior energy adds `-log p(x_i | s_i)` per site, with a Laplacian
//! for active pixels and a narrow Gaussian for inactive ones.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, ImageGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingParams {
    pub alpha: f64,
    pub beta: f64,
    pub temperature: f64,
}

impl Default for IsingParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.3,
            temperature: 1.0,
        }
    }
}

impl IsingParams {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    #[inline]
    fn v1(&self, s: bool) -> f64 {
        if s {
            self.alpha
        } else {
            -self.alpha
        }
    }

    #[inline]
    fn v2(&self, a: bool, b: bool) -> f64 {
        if a == b {
            -self.beta
        } else {
            self.beta
        }
    }
}

/// Per-pixel likelihood `p(x_i | s_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodParams {
    /// Both states equally likely for every `x`: the posterior is the prior.
    Flat,
    /// Laplacian with scale `b_on` when active, zero-mean Gaussian with
    /// standard deviation `sigma_off` when inactive.
    SpikeSlab { b_on: f64, sigma_off: f64 },
}

impl LikelihoodParams {
    pub fn spike_slab(b_on: f64, sigma_off: f64) -> Result<Self> {
        if !(b_on > 0.0 && b_on.is_finite() && sigma_off > 0.0 && sigma_off.is_finite()) {
            return Err(Error::invalid(format!(
                "likelihood scales must be positive, got b_on={b_on}, sigma_off={sigma_off}"
            )));
        }
        Ok(LikelihoodParams::SpikeSlab { b_on, sigma_off })
    }

    /// `log p(x | s)`.
    pub fn log_likelihood(&self, x: Complex64, s: bool) -> f64 {
        match *self {
            LikelihoodParams::Flat => 0.0,
            LikelihoodParams::SpikeSlab { b_on, sigma_off } => {
                if s {
                    -x.norm() / b_on - (2.0 * b_on).ln()
                } else {
                    -x.norm_sqr() / (2.0 * sigma_off * sigma_off)
                        - (sigma_off * (2.0 * std::f64::consts::PI).sqrt()).ln()
                }
            }
        }
    }
}

/// Rule deriving [`LikelihoodParams`] from the current estimate.
///
/// `b_on` is the mean magnitude of the brightest `top_fraction` of pixels;
/// `sigma_off` is `sigma_off_scale` times the median magnitude over the
/// nonzero pixels, floored at `1e-6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodPolicy {
    pub top_fraction: f64,
    pub sigma_off_scale: f64,
}

impl Default for LikelihoodPolicy {
    fn default() -> Self {
        Self {
            top_fraction: 0.1,
            sigma_off_scale: 2.0,
        }
    }
}

impl LikelihoodPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::invalid("top_fraction must lie in (0, 1]"));
        }
        if !(self.sigma_off_scale > 0.0 && self.sigma_off_scale.is_finite()) {
            return Err(Error::invalid("sigma_off_scale must be positive"));
        }
        Ok(())
    }

    pub fn estimate(&self, x: &ComplexImage) -> LikelihoodParams {
        let mut mags = x.magnitudes();
        mags.sort_by(|a, b| b.total_cmp(a));
        let top = ((mags.len() as f64 * self.top_fraction).ceil() as usize).clamp(1, mags.len());
        let b_on = (mags[..top].iter().sum::<f64>() / top as f64).max(1e-6);
        let nonzero = mags.iter().take_while(|&&m| m > 0.0).count();
        let median = if nonzero > 0 { mags[nonzero / 2] } else { 0.0 };
        let sigma_off = (self.sigma_off_scale * median).max(1e-6);
        LikelihoodParams::SpikeSlab { b_on, sigma_off }
    }
}

/// Binary support field over an image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask {
    grid: ImageGrid,
    bits: Vec<bool>,
}

impl SupportMask {
    pub fn new(grid: ImageGrid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::invalid(format!(
                "support has {} sites, grid has {}",
                bits.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, bits })
    }

    pub fn filled(grid: ImageGrid, value: bool) -> Self {
        Self {
            bits: vec![value; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Hadamard product with an image: pixels outside the support become 0.
    pub fn gate(&self, image: &ComplexImage) -> Result<ComplexImage> {
        self.grid.check_same(image.grid(), "support gating")?;
        let values = image
            .values()
            .iter()
            .zip(&self.bits)
            .map(|(&v, &b)| if b { v } else { Complex64::new(0.0, 0.0) })
            .collect();
        Ok(ComplexImage::from_parts(self.grid, values))
    }
}

/// Burn-in and sampling sweep counts for [`map_support`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcSchedule {
    pub burn_in: usize,
    pub samples: usize,
}

impl Default for McmcSchedule {
    fn default() -> Self {
        Self {
            burn_in: 5,
            samples: 1,
        }
    }
}

fn for_each_neighbor(grid: &ImageGrid, i: usize, mut f: impl FnMut(usize)) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (c, r) = grid.col_row(i);
    if c > 0 {
        f(i - 1);
    }
    if c + 1 < nx {
        f(i + 1);
    }
    if r > 0 {
        f(i - nx);
    }
    if r + 1 < ny {
        f(i + nx);
    }
}

fn pair_energy(s: &SupportMask, p: &IsingParams) -> f64 {
    let g = &s.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let mut e = 0.0;
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            if c + 1 < nx {
                e += p.v2(s.bits[i], s.bits[i + 1]);
            }
            if r + 1 < ny {
                e += p.v2(s.bits[i], s.bits[i + nx]);
            }
        }
    }
    e
}

/// Prior energy `sum_i V1(s_i) + sum_(i,j) V2(s_i, s_j)`.
pub fn ising_energy(s: &SupportMask, p: &IsingParams) -> f64 {
    let single: f64 = s.bits.iter().map(|&b| p.v1(b)).sum();
    single + pair_energy(s, p)
}

/// Negative log-posterior of `s` given `x`, up to a constant.
pub fn posterior_energy(
    s: &SupportMask,
    x: &ComplexImage,
    p: &IsingParams,
    lp: &LikelihoodParams,
) -> Result<f64> {
    s.grid.check_same(x.grid(), "posterior_energy")?;
    let unary: f64 = s
        .bits
        .iter()
        .zip(x.values())
        .map(|(&b, &v)| p.v1(b) - lp.log_likelihood(v, b))
        .sum();
    Ok(unary + pair_energy(s, p))
}

/// Per-site difference of unary energies, `u_i(1) - u_i(0)`.
fn unary_deltas(x: &ComplexImage, p: &IsingParams, lp: &LikelihoodParams) -> Vec<f64> {
    x.values()
        .iter()
        .map(|&v| (p.v1(true) - lp.log_likelihood(v, true)) - (p.v1(false) - lp.log_likelihood(v, false)))
        .collect()
}

/// `E(s_i = 1) - E(s_i = 0)` with all other sites held fixed.
#[inline]
fn local_delta(bits: &[bool], grid: &ImageGrid, unary: &[f64], beta: f64, i: usize) -> f64 {
    let mut disagree_if_on = 0i32;
    for_each_neighbor(grid, i, |j| {
        disagree_if_on += if bits[j] { -1 } else { 1 };
    });
    unary[i] + 2.0 * beta * disagree_if_on as f64
}

#[inline]
fn prob_on(delta: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (delta / temperature).exp())
}

/// Exact single-site conditional `P(s_i = 1 | s_-i, x_i)`.
pub fn site_conditional(
    s: &SupportMask,
    x: &ComplexImage,
    p: &IsingParams,
    lp: &LikelihoodParams,
    i: usize,
) -> Result<f64> {
    s.grid.check_same(x.grid(), "site_conditional")?;
    if i >= s.bits.len() {
        return Err(Error::invalid(format!("site {i} out of range")));
    }
    let v = x.values()[i];
    let unary = (p.v1(true) - lp.log_likelihood(v, true)) - (p.v1(false) - lp.log_likelihood(v, false));
    let mut disagree_if_on = 0i32;
    for_each_neighbor(&s.grid, i, |j| {
        disagree_if_on += if s.bits[j] { -1 } else { 1 };
    });
    Ok(prob_on(unary + 2.0 * p.beta * disagree_if_on as f64, p.temperature))
}

fn sweep_in_place(bits: &mut [bool], grid: &ImageGrid, unary: &[f64], p: &IsingParams, rng: &mut ChaCha8Rng) {
    for i in 0..bits.len() {
        let delta = local_delta(bits, grid, unary, p.beta, i);
        let u: f64 = rng.random();
        bits[i] = u < prob_on(delta, p.temperature);
    }
}

/// One raster-order Gibbs sweep, each site drawn from its exact conditional.
pub fn gibbs_sweep(
    s: &SupportMask,
    x: &ComplexImage,
    p: &IsingParams,
    lp: &LikelihoodParams,
    rng: &mut ChaCha8Rng,
) -> Result<SupportMask> {
    s.grid.check_same(x.grid(), "gibbs_sweep")?;
    let unary = unary_deltas(x, p, lp);
    let mut out = s.clone();
    sweep_in_place(&mut out.bits, &s.grid, &unary, p, rng);
    Ok(out)
}

/// Iterated conditional modes: flips any site whose flip strictly lowers
/// the energy, sweeping in raster order until none does.
fn icm(bits: &mut [bool], grid: &ImageGrid, unary: &[f64], beta: f64) {
    loop {
        let mut changed = false;
        for i in 0..bits.len() {
            let delta = local_delta(bits, grid, unary, beta, i);
            let gain = if bits[i] { -delta } else { delta };
            if gain < 0.0 {
                bits[i] = !bits[i];
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Approximate MAP support for `x`.
///
/// Starts from the per-site (beta = 0) minimizer, runs
/// `burn_in + samples` Gibbs sweeps keeping the lowest-energy state seen,
/// then polishes it with ICM down to a local minimum.
pub fn map_support(
    x: &ComplexImage,
    p: &IsingParams,
    lp: &LikelihoodParams,
    schedule: McmcSchedule,
    seed: u64,
) -> Result<SupportMask> {
    p.validate()?;
    if schedule.burn_in == 0 || schedule.samples == 0 {
        return Err(Error::invalid("MCMC schedule counts must be >= 1"));
    }
    let grid = *x.grid();
    let unary = unary_deltas(x, p, lp);
    let mut state = SupportMask::new(grid, unary.iter().map(|&d| d < 0.0).collect())?;
    let mut best = state.clone();
    let mut best_energy = posterior_energy(&state, x, p, lp)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..schedule.burn_in + schedule.samples {
        sweep_in_place(&mut state.bits, &grid, &unary, p, &mut rng);
        let e = posterior_energy(&state, x, p, lp)?;
        if e < best_energy {
            best_energy = e;
            best.bits.copy_from_slice(&state.bits);
        }
    }
    icm(&mut best.bits, &grid, &unary, p.beta);
    Ok(best)
}

/// ICM from a given starting support.
pub fn icm_descent(
    start: &SupportMask,
    x: &ComplexImage,
    p: &IsingParams,
    lp: &LikelihoodParams,
) -> Result<SupportMask> {
    start.grid.check_same(x.grid(), "icm_descent")?;
    let unary = unary_deltas(x, p, lp);
    let mut out = start.clone();
    icm(&mut out.bits, &start.grid, &unary, p.beta);
    Ok(out)
}
