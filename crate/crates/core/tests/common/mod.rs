//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::too_many_arguments)]

use mrf_isar::{make_phantom, ImageGrid, PhantomSpec, RadarConfig, RealImage};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Small stepped-frequency setup: `n` frequencies over 35–36 GHz and `m`
/// pulses across 1.7 degrees, imaged on a `side`-square resolution grid.
pub fn small_scene(n: usize, m: usize, side: usize) -> (RadarConfig, ImageGrid) {
    let radar = RadarConfig::from_sweep(35e9, 36e9, n, 1.7, m, 5000.0);
    let grid = radar.resolution_grid(side, side).unwrap();
    (radar, grid)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// First seed whose two radius-1 disks land apart: ten pixels in two clusters.
pub fn ten_pixel_phantom(grid: &ImageGrid) -> RealImage {
    let spec = PhantomSpec::Blobs {
        count: 2,
        radius: 1,
        amp_min: 0.5,
        amp_max: 1.0,
    };
    (0..)
        .map(|seed| make_phantom(grid, &spec, seed).unwrap())
        .find(|img| img.nonzero_count() == 10)
        .unwrap()
}

// --- total variation -------------------------------------------------------

fn gradient(u: &[f64], nx: usize, ny: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; u.len()];
    let mut gy = vec![0.0; u.len()];
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            if c + 1 < nx {
                gx[i] = u[i + 1] - u[i];
            }
            if r + 1 < ny {
                gy[i] = u[i + nx] - u[i];
            }
        }
    }
    (gx, gy)
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut d = vec![0.0; px.len()];
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            if c + 1 < nx {
                d[i] += px[i];
                d[i + 1] -= px[i];
            }
            if r + 1 < ny {
                d[i] += py[i];
                d[i + nx] -= py[i];
            }
        }
    }
    d
}

pub fn tv(u: &[f64], nx: usize, ny: usize) -> f64 {
    let (gx, gy) = gradient(u, nx, ny);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

fn tv_gap(u: &[f64], px: &[f64], py: &[f64], f: &[f64], nx: usize, ny: usize, tau: f64) -> f64 {
    let primal = 0.5 * u.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + tau * tv(u, nx, ny);
    let d = divergence(px, py, nx, ny);
    let dual = 0.5 * f.iter().map(|v| v * v).sum::<f64>()
        - 0.5 * f.iter().zip(&d).map(|(fi, di)| (fi - tau * di).powi(2)).sum::<f64>();
    primal - dual
}

/// Minimizer of `1/2 ||u - f||^2 + tau TV(u)` by ADMM on the splitting
/// `d = grad u`, with an exact Cholesky solve for the `u` step.
///
/// Convergence is certified, not assumed: the scaled multiplier, projected
/// onto the unit dual ball, gives a feasible dual point, and strong
/// convexity turns the primal-dual gap into `||u - u*|| <= sqrt(2 gap)`.
/// Panics unless that bound drops below `5e-5`.
pub fn admm_tv(f: &[f64], nx: usize, ny: usize, tau: f64) -> Vec<f64> {
    if tau == 0.0 {
        return f.to_vec();
    }
    let n = f.len();
    let rho = tau.max(1e-3);
    // Rows 0..n are horizontal differences, n..2n vertical ones.
    let mut grad = nalgebra::DMatrix::<f64>::zeros(2 * n, n);
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            if c + 1 < nx {
                grad[(i, i)] = -1.0;
                grad[(i, i + 1)] = 1.0;
            }
            if r + 1 < ny {
                grad[(n + i, i)] = -1.0;
                grad[(n + i, i + nx)] = 1.0;
            }
        }
    }
    let system = nalgebra::DMatrix::<f64>::identity(n, n) + rho * grad.transpose() * &grad;
    let chol = system.cholesky().expect("I + rho G^T G is positive definite");
    let fv = nalgebra::DVector::from_column_slice(f);
    let mut d = nalgebra::DVector::<f64>::zeros(2 * n);
    let mut b = nalgebra::DVector::<f64>::zeros(2 * n);
    let mut gap = f64::INFINITY;
    for it in 0..200_000 {
        let u = chol.solve(&(&fv + rho * grad.transpose() * (&d - &b)));
        let gu = &grad * &u;
        let mut px = vec![0.0; n];
        let mut py = vec![0.0; n];
        for i in 0..n {
            let (vx, vy) = (gu[i] + b[i], gu[n + i] + b[n + i]);
            let mag = vx.hypot(vy);
            let keep = if mag > tau / rho { 1.0 - tau / (rho * mag) } else { 0.0 };
            d[i] = keep * vx;
            d[n + i] = keep * vy;
            b[i] = vx - d[i];
            b[n + i] = vy - d[n + i];
            // Multiplier rho b pairs with grad; the dual variable of
            // `u = f - tau div p` is its negation over tau.
            let (qx, qy) = (-rho * b[i] / tau, -rho * b[n + i] / tau);
            let scale = qx.hypot(qy).max(1.0);
            px[i] = qx / scale;
            py[i] = qy / scale;
        }
        if it % 50 == 0 {
            gap = tv_gap(u.as_slice(), &px, &py, f, nx, ny, tau);
            if gap <= 1e-9 {
                return u.as_slice().to_vec();
            }
        }
    }
    panic!("ADMM oracle stalled at gap {gap:e} (tau {tau})");
}

// --- Ising model -----------------------------------------------------------

/// `E(s) = sum V1(s_i) + sum_(i,j) V2(s_i, s_j)` with `V1(1) = alpha`,
/// `V1(0) = -alpha`, `V2 = -beta` for equal and `+beta` for differing
/// 4-neighbors. Bit `i` of `state` is site `i` in raster order.
pub fn prior_energy(state: u32, nx: usize, ny: usize, alpha: f64, beta: f64) -> f64 {
    let bit = |i: usize| (state >> i) & 1 == 1;
    let mut e = 0.0;
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            e += if bit(i) { alpha } else { -alpha };
            let mut pair = |j: usize| e += if bit(i) == bit(j) { -beta } else { beta };
            if c + 1 < nx {
                pair(i + 1);
            }
            if r + 1 < ny {
                pair(i + nx);
            }
        }
    }
    e
}

/// Exact Gibbs distribution `exp(-E / T) / Z` over all `2^(nx ny)` states.
pub fn ising_distribution(nx: usize, ny: usize, alpha: f64, beta: f64, temperature: f64) -> Vec<f64> {
    let states = 1u32 << (nx * ny);
    let energies: Vec<f64> = (0..states).map(|s| prior_energy(s, nx, ny, alpha, beta)).collect();
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - e_min) / temperature).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

/// Negative log-posterior of a support under the spike-and-slab likelihood
/// (Laplacian slab of scale `b_on`, Gaussian spike of deviation `sigma_off`).
pub fn posterior_energy(
    state: u32,
    mags: &[f64],
    nx: usize,
    ny: usize,
    alpha: f64,
    beta: f64,
    b_on: f64,
    sigma_off: f64,
) -> f64 {
    let mut e = prior_energy(state, nx, ny, alpha, beta);
    for (i, &m) in mags.iter().enumerate() {
        let log_p = if (state >> i) & 1 == 1 {
            -m / b_on - (2.0 * b_on).ln()
        } else {
            -m * m / (2.0 * sigma_off * sigma_off) - (sigma_off * (2.0 * std::f64::consts::PI).sqrt()).ln()
        };
        e -= log_p;
    }
    e
}

/// Exhaustive minimizer of [`posterior_energy`]: `(state, energy)`.
pub fn exhaustive_map(
    mags: &[f64],
    nx: usize,
    ny: usize,
    alpha: f64,
    beta: f64,
    b_on: f64,
    sigma_off: f64,
) -> (u32, f64) {
    (0..1u32 << (nx * ny))
        .map(|s| (s, posterior_energy(s, mags, nx, ny, alpha, beta, b_on, sigma_off)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

pub fn pack_bits(bits: &[bool]) -> u32 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u32) << i))
}
