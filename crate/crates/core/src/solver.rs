//! Reconstruction algorithms: composite-splitting FISTA for the l1 + TV
//! problem, its variant with an Ising support prior (MRF-FISTA), and
//! matched-filter back-projection.
//!
//! One FISTA step from the extrapolated point `z_k`:
//!
//! ```text
//! v_k   = z_k - (1/L) Phi^H (Phi z_k - y)
//! x1    = soft_threshold(v_k, lambda1 / (w1 L))
//! x2    = tv_prox(v_k, lambda_tv / (w2 L))
//! x'_k  = w1 x1 + w2 x2
//! x'_k  = x'_k o s_k                      (MRF-FISTA only)
//! x_k   = argmin F over {x'_k, x_{k-1}}   (ties go to x'_k)
//! t_k+1 = (1 + sqrt(1 + 4 t_k^2)) / 2
//! z_k+1 = x_k + t_k/t_k+1 (x'_k - x_k) + (t_k - 1)/t_k+1 (x_k - x_{k-1})
//! ```

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexImage;
use crate::mrf::{map_support, IsingParams, LikelihoodParams, LikelihoodPolicy, McmcSchedule, SupportMask};
use crate::operator::{estimate_lipschitz, LinearOperator};
use crate::prox::{objective_from_residual, shrink, tv_prox, RegWeights, TvProxOptions};
use crate::seed::mix_seed;

/// How the regularization weights are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSpec {
    Fixed(RegWeights),
    /// `lambda1 = lambda1_rel * max |Phi^H y|`, `lambda_tv = tv_ratio * lambda1`.
    Scaled {
        lambda1_rel: f64,
        tv_ratio: f64,
        w1: f64,
    },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Scaled {
            lambda1_rel: 0.01,
            tv_ratio: 0.1,
            w1: 0.5,
        }
    }
}

impl WeightSpec {
    pub fn resolve(&self, adjoint_peak: f64) -> Result<RegWeights> {
        let w = match *self {
            WeightSpec::Fixed(w) => w,
            WeightSpec::Scaled {
                lambda1_rel,
                tv_ratio,
                w1,
            } => {
                let lambda1 = lambda1_rel * adjoint_peak;
                RegWeights {
                    lambda1,
                    lambda_tv: tv_ratio * lambda1,
                    w1,
                    w2: 1.0 - w1,
                }
            }
        };
        w.validate()?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LipschitzChoice {
    Given(f64),
    Estimate { tol: f64, max_iter: usize },
}

impl Default for LipschitzChoice {
    fn default() -> Self {
        LipschitzChoice::Estimate {
            tol: 1e-4,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodChoice {
    /// Re-estimated from the candidate at every MRF step.
    Adaptive(LikelihoodPolicy),
    Fixed(LikelihoodParams),
}

/// Support-prior settings for MRF-FISTA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrfSettings {
    pub enabled: bool,
    /// Apply the support step on iterations `1, 1 + every, 1 + 2 every, ...`.
    pub every: usize,
    pub ising: IsingParams,
    pub likelihood: LikelihoodChoice,
    pub schedule: McmcSchedule,
}

impl Default for MrfSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            every: 1,
            ising: IsingParams::default(),
            likelihood: LikelihoodChoice::Adaptive(LikelihoodPolicy::default()),
            schedule: McmcSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub weights: WeightSpec,
    pub lipschitz: LipschitzChoice,
    pub max_iter: usize,
    /// Relative change `||x_k - x_{k-1}|| / max(||x_{k-1}||, 1e-12)` below
    /// which an iteration counts as quiet.
    pub stop_tol: f64,
    /// Consecutive quiet iterations that end the run. A rejected candidate
    /// leaves `x_k = x_{k-1}`, so a single rejection must not stop it.
    pub patience: usize,
    pub tv_inner: TvProxOptions,
    pub mrf: MrfSettings,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            weights: WeightSpec::default(),
            lipschitz: LipschitzChoice::default(),
            max_iter: 300,
            stop_tol: 1e-5,
            patience: 5,
            tv_inner: TvProxOptions::default(),
            mrf: MrfSettings::default(),
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn with_mrf(mut self) -> Self {
        self.mrf.enabled = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::invalid("stop_tol must be >= 0"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be >= 1"));
        }
        if let LipschitzChoice::Given(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("Lipschitz constant must be positive, got {l}")));
            }
        }
        if self.mrf.every == 0 {
            return Err(Error::invalid("mrf every must be >= 1"));
        }
        self.mrf.ising.validate()?;
        if let LikelihoodChoice::Adaptive(p) = self.mrf.likelihood {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// `F(x_k)` after the monotone selection.
    pub objective: f64,
    pub rel_change: f64,
    /// Nonzero pixels of `x_k`.
    pub support_size: usize,
    /// Whether `x'_k` was accepted over `x_{k-1}`.
    pub accepted: bool,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    /// Set when a non-finite value appeared; the last finite iterate is kept.
    pub diverged: bool,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].objective <= w[0].objective)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub image: ComplexImage,
    pub trace: SolveTrace,
    /// Last support estimate (MRF-FISTA only).
    pub support: Option<SupportMask>,
    pub weights: RegWeights,
    pub lipschitz: f64,
}

/// `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
pub fn momentum_update(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// `z - (1/L) Phi^H (Phi z - y)`.
pub fn gradient_step<O: LinearOperator + ?Sized>(
    op: &O,
    y: &[Complex64],
    z: &ComplexImage,
    lipschitz: f64,
) -> Result<ComplexImage> {
    check_inputs(op, y)?;
    op.grid().check_same(z.grid(), "gradient_step")?;
    if !(lipschitz > 0.0) {
        return Err(Error::invalid("Lipschitz constant must be positive"));
    }
    let phi_z = op.forward(z.values());
    Ok(ComplexImage::from_parts(
        *op.grid(),
        descend(op, y, z.values(), &phi_z, lipschitz),
    ))
}

fn descend<O: LinearOperator + ?Sized>(
    op: &O,
    y: &[Complex64],
    z: &[Complex64],
    phi_z: &[Complex64],
    lipschitz: f64,
) -> Vec<Complex64> {
    let residual: Vec<Complex64> = phi_z.iter().zip(y).map(|(a, b)| a - b).collect();
    let grad = op.adjoint(&residual);
    let step = 1.0 / lipschitz;
    z.iter().zip(&grad).map(|(zi, gi)| zi - gi * step).collect()
}

fn check_inputs<O: LinearOperator + ?Sized>(op: &O, y: &[Complex64]) -> Result<()> {
    if y.len() != op.rows() {
        return Err(Error::invalid(format!(
            "{} measurements for an operator with {} rows",
            y.len(),
            op.rows()
        )));
    }
    Ok(())
}

/// Matched-filter image `Phi^H y / rows`.
pub fn back_projection<O: LinearOperator + ?Sized>(op: &O, y: &[Complex64]) -> Result<ComplexImage> {
    check_inputs(op, y)?;
    let scale = 1.0 / op.rows() as f64;
    let values = op.adjoint(y).into_iter().map(|v| v * scale).collect();
    Ok(ComplexImage::from_parts(*op.grid(), values))
}

/// Composite-splitting FISTA without the support prior.
pub fn fista_l1tv<O: LinearOperator + ?Sized>(op: &O, y: &[Complex64], params: &SolverParams) -> Result<SolveOutput> {
    let mut p = *params;
    p.mrf.enabled = false;
    solve(op, y, &p, None)
}

/// MRF-FISTA: FISTA with the MAP support gating step.
pub fn mrf_fista<O: LinearOperator + ?Sized>(op: &O, y: &[Complex64], params: &SolverParams) -> Result<SolveOutput> {
    let mut p = *params;
    p.mrf.enabled = true;
    solve(op, y, &p, None)
}

/// Runs the solver described by `params`, optionally from a warm start
/// (used as both `x_0` and `z_1`).
pub fn solve<O: LinearOperator + ?Sized>(
    op: &O,
    y: &[Complex64],
    params: &SolverParams,
    warm_start: Option<&ComplexImage>,
) -> Result<SolveOutput> {
    params.validate()?;
    check_inputs(op, y)?;
    let grid = *op.grid();
    let started = Instant::now();

    let adjoint_peak = op.adjoint(y).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let weights = params.weights.resolve(adjoint_peak)?;
    let lipschitz = match params.lipschitz {
        LipschitzChoice::Given(l) => l,
        LipschitzChoice::Estimate { tol, max_iter } => {
            let est = estimate_lipschitz(op, tol, max_iter, mix_seed(params.seed, &[0x4C49_5053]))?;
            if est.value > 0.0 {
                est.value
            } else {
                1.0
            }
        }
    };
    let tau_l1 = weights.lambda1 / (weights.w1 * lipschitz);
    let tau_tv = weights.lambda_tv / (weights.w2 * lipschitz);

    let zero = Complex64::new(0.0, 0.0);
    let (mut x_prev, mut phi_x_prev) = match warm_start {
        Some(x0) => {
            grid.check_same(x0.grid(), "warm start")?;
            (x0.clone(), op.forward(x0.values()))
        }
        None => (ComplexImage::zeros(grid), vec![zero; op.rows()]),
    };
    let residual = |phi_x: &[Complex64]| -> Vec<Complex64> { phi_x.iter().zip(y).map(|(a, b)| a - b).collect() };
    let mut f_prev = objective_from_residual(&residual(&phi_x_prev), &x_prev, &weights);
    let mut z = x_prev.values().to_vec();
    let mut phi_z = phi_x_prev.clone();
    let mut t = 1.0f64;
    let mut quiet = 0usize;

    let mut trace = SolveTrace::default();
    let mut support = None;

    for k in 1..=params.max_iter {
        let v = descend(op, y, &z, &phi_z, lipschitz);
        let v = ComplexImage::from_parts(grid, v);
        let x2 = tv_prox(&v, tau_tv, params.tv_inner)?;
        let mut cand: Vec<Complex64> = v
            .values()
            .iter()
            .zip(x2.values())
            .map(|(&vi, &b)| shrink(vi, tau_l1) * weights.w1 + b * weights.w2)
            .collect();

        if params.mrf.enabled && (k - 1) % params.mrf.every == 0 {
            let x_cand = ComplexImage::from_parts(grid, cand);
            let lp = match params.mrf.likelihood {
                LikelihoodChoice::Adaptive(policy) => policy.estimate(&x_cand),
                LikelihoodChoice::Fixed(lp) => lp,
            };
            let s = map_support(
                &x_cand,
                &params.mrf.ising,
                &lp,
                params.mrf.schedule,
                mix_seed(params.seed, &[k as u64]),
            )?;
            cand = s.gate(&x_cand)?.into_values();
            support = Some(s);
        }

        let phi_cand = op.forward(&cand);
        let cand_img = ComplexImage::from_parts(grid, cand);
        let f_cand = objective_from_residual(&residual(&phi_cand), &cand_img, &weights);
        if !f_cand.is_finite() {
            trace.diverged = true;
            break;
        }

        let accepted = f_cand <= f_prev;
        // ||x_k - x_{k-1}||: zero when the candidate is rejected.
        let rel_change = if accepted {
            let change = cand_img
                .values()
                .iter()
                .zip(x_prev.values())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            change / x_prev.norm().max(1e-12)
        } else {
            0.0
        };
        let t_next = momentum_update(t);
        let (a, b) = (t / t_next, (t - 1.0) / t_next);
        // x_k is either the candidate or x_{k-1}.
        let (x_k, phi_x_k, f_k) = if accepted {
            (cand_img.values(), phi_cand.as_slice(), f_cand)
        } else {
            (x_prev.values(), phi_x_prev.as_slice(), f_prev)
        };
        let extrapolate = |xk: &[Complex64], xc: &[Complex64], xp: &[Complex64]| -> Vec<Complex64> {
            xk.iter()
                .zip(xc)
                .zip(xp)
                .map(|((&xk, &xc), &xp)| xk + (xc - xk) * a + (xk - xp) * b)
                .collect()
        };
        z = extrapolate(x_k, cand_img.values(), x_prev.values());
        phi_z = extrapolate(phi_x_k, &phi_cand, &phi_x_prev);
        t = t_next;

        if accepted {
            x_prev = cand_img;
            phi_x_prev = phi_cand;
            f_prev = f_k;
        }

        trace.records.push(TraceRecord {
            iteration: k,
            objective: f_prev,
            rel_change,
            support_size: x_prev.values().iter().filter(|v| **v != zero).count(),
            accepted,
            elapsed_s: started.elapsed().as_secs_f64(),
        });

        quiet = if rel_change < params.stop_tol { quiet + 1 } else { 0 };
        if quiet >= params.patience {
            trace.converged = true;
            break;
        }
    }

    Ok(SolveOutput {
        image: x_prev,
        trace,
        support,
        weights,
        lipschitz,
    })
}
