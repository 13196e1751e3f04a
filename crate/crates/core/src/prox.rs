//! Proximal operators and the regularized least-squares objective
//! `F(x) = 1/2 ||y - Phi x||^2 + lambda1 ||x||_1 + lambda_tv TV(x)`.
//!
//! TV is isotropic with forward differences and a reflexive (Neumann)
//! boundary: the difference across the last row/column is zero. For complex
//! images TV is the sum of the TV of the real and imaginary parts, so its
//! prox splits into two independent real problems.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexImage;
use crate::operator::LinearOperator;

/// Regularization weights and the composite-splitting weights `w1 + w2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegWeights {
    pub lambda1: f64,
    pub lambda_tv: f64,
    pub w1: f64,
    pub w2: f64,
}

impl RegWeights {
    pub fn new(lambda1: f64, lambda_tv: f64) -> Self {
        Self {
            lambda1,
            lambda_tv,
            w1: 0.5,
            w2: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(Error::invalid(format!("lambda1 must be >= 0, got {}", self.lambda1)));
        }
        if !(self.lambda_tv >= 0.0 && self.lambda_tv.is_finite()) {
            return Err(Error::invalid(format!("lambda_tv must be >= 0, got {}", self.lambda_tv)));
        }
        if !(self.w1 > 0.0 && self.w2 > 0.0) || (self.w1 + self.w2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "splitting weights must be positive and sum to 1, got w1={}, w2={}",
                self.w1, self.w2
            )));
        }
        Ok(())
    }
}

/// Complex soft thresholding: shrinks every magnitude by `tau`, keeping phase.
pub fn soft_threshold(image: &ComplexImage, tau: f64) -> Result<ComplexImage> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("threshold must be >= 0, got {tau}")));
    }
    let values = image.values().iter().map(|&v| shrink(v, tau)).collect();
    Ok(ComplexImage::from_parts(*image.grid(), values))
}

#[inline]
pub(crate) fn shrink(v: Complex64, tau: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= tau {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((mag - tau) / mag)
    }
}

/// Inner-solver budget for [`tv_prox`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvProxOptions {
    pub max_iter: usize,
    /// Stop once the duality gap falls below `tol` times the primal value.
    pub tol: f64,
}

impl Default for TvProxOptions {
    fn default() -> Self {
        Self {
            max_iter: 20,
            tol: 1e-6,
        }
    }
}

/// Approximate minimizer of `1/2 ||u - image||^2 + tau TV(u)`.
///
/// Each of the real and imaginary parts is solved with the accelerated dual
/// projected-gradient (FGP) iteration. The best primal iterate seen is
/// returned, so the prox objective never exceeds its value at `image`.
pub fn tv_prox(image: &ComplexImage, tau: f64, opts: TvProxOptions) -> Result<ComplexImage> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("TV weight must be >= 0, got {tau}")));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("TV prox needs at least one inner iteration"));
    }
    if tau == 0.0 {
        return Ok(image.clone());
    }
    let (nx, ny) = (image.grid().nx(), image.grid().ny());
    let re: Vec<f64> = image.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = image.values().iter().map(|v| v.im).collect();
    let re = tv_prox_real(&re, nx, ny, tau, opts);
    let im = tv_prox_real(&im, nx, ny, tau, opts);
    let values = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
    Ok(ComplexImage::from_parts(*image.grid(), values))
}

/// Dual variable of isotropic TV: one 2-vector per pixel.
struct DualField {
    px: Vec<f64>,
    py: Vec<f64>,
}

impl DualField {
    fn zeros(n: usize) -> Self {
        Self {
            px: vec![0.0; n],
            py: vec![0.0; n],
        }
    }
}

/// Forward differences with zero difference across the last column/row.
fn gradient(u: &[f64], nx: usize, ny: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            gx[i] = if c + 1 < nx { u[i + 1] - u[i] } else { 0.0 };
            gy[i] = if r + 1 < ny { u[i + nx] - u[i] } else { 0.0 };
        }
    }
}

/// Adjoint of [`gradient`] (negative divergence).
fn gradient_adjoint(p: &DualField, nx: usize, ny: usize, out: &mut [f64]) {
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            let mut v = 0.0;
            if c + 1 < nx {
                v -= p.px[i];
            }
            if c > 0 {
                v += p.px[i - 1];
            }
            if r + 1 < ny {
                v -= p.py[i];
            }
            if r > 0 {
                v += p.py[i - nx];
            }
            out[i] = v;
        }
    }
}

fn tv_real(u: &[f64], nx: usize, ny: usize) -> f64 {
    let mut total = 0.0;
    for r in 0..ny {
        for c in 0..nx {
            let i = r * nx + c;
            let dx = if c + 1 < nx { u[i + 1] - u[i] } else { 0.0 };
            let dy = if r + 1 < ny { u[i + nx] - u[i] } else { 0.0 };
            total += dx.hypot(dy);
        }
    }
    total
}

fn tv_prox_real(b: &[f64], nx: usize, ny: usize, tau: f64, opts: TvProxOptions) -> Vec<f64> {
    let n = b.len();
    let primal = |u: &[f64]| {
        0.5 * u.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() + tau * tv_real(u, nx, ny)
    };
    let b_sq: f64 = b.iter().map(|v| v * v).sum();

    let mut best = b.to_vec();
    let mut best_val = primal(b);
    if best_val == 0.0 {
        return best;
    }

    let mut p = DualField::zeros(n);
    let mut p_prev = DualField::zeros(n);
    let mut r = DualField::zeros(n);
    let mut u = vec![0.0; n];
    let mut adj = vec![0.0; n];
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let step = 1.0 / (8.0 * tau);
    let mut t = 1.0f64;

    for _ in 0..opts.max_iter {
        // u = b - tau * D^T r, then projected ascent on the dual.
        gradient_adjoint(&r, nx, ny, &mut adj);
        for i in 0..n {
            u[i] = b[i] - tau * adj[i];
        }
        gradient(&u, nx, ny, &mut gx, &mut gy);
        std::mem::swap(&mut p, &mut p_prev);
        for i in 0..n {
            let qx = r.px[i] + step * gx[i];
            let qy = r.py[i] + step * gy[i];
            let scale = qx.hypot(qy).max(1.0);
            p.px[i] = qx / scale;
            p.py[i] = qy / scale;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            r.px[i] = p.px[i] + beta * (p.px[i] - p_prev.px[i]);
            r.py[i] = p.py[i] + beta * (p.py[i] - p_prev.py[i]);
        }
        t = t_next;

        gradient_adjoint(&p, nx, ny, &mut adj);
        for i in 0..n {
            u[i] = b[i] - tau * adj[i];
        }
        let val = primal(&u);
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&u);
        }
        let dual = 0.5 * b_sq - 0.5 * u.iter().map(|v| v * v).sum::<f64>();
        if best_val - dual <= opts.tol * best_val.abs() {
            break;
        }
    }
    best
}

/// Isotropic TV of a complex image (real and imaginary parts summed).
pub fn tv_norm(image: &ComplexImage) -> f64 {
    let (nx, ny) = (image.grid().nx(), image.grid().ny());
    let re: Vec<f64> = image.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = image.values().iter().map(|v| v.im).collect();
    tv_real(&re, nx, ny) + tv_real(&im, nx, ny)
}

pub fn l1_norm(image: &ComplexImage) -> f64 {
    image.values().iter().map(|v| v.norm()).sum()
}

/// `F(x)` given the precomputed residual `Phi x - y`.
pub(crate) fn objective_from_residual(residual: &[Complex64], x: &ComplexImage, w: &RegWeights) -> f64 {
    let data = 0.5 * residual.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let mut value = data;
    if w.lambda1 != 0.0 {
        value += w.lambda1 * l1_norm(x);
    }
    if w.lambda_tv != 0.0 {
        value += w.lambda_tv * tv_norm(x);
    }
    value
}

/// `F(x) = 1/2 ||y - Phi x||^2 + lambda1 ||x||_1 + lambda_tv TV(x)`.
pub fn objective<O: LinearOperator + ?Sized>(
    op: &O,
    y: &[Complex64],
    x: &ComplexImage,
    w: &RegWeights,
) -> Result<f64> {
    op.grid().check_same(x.grid(), "objective")?;
    if y.len() != op.rows() {
        return Err(Error::invalid(format!(
            "objective: {} measurements for an operator with {} rows",
            y.len(),
            op.rows()
        )));
    }
    let mut residual = op.forward(x.values());
    for (r, &v) in residual.iter_mut().zip(y) {
        *r -= v;
    }
    Ok(objective_from_residual(&residual, x, w))
}
