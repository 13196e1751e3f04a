//! Image quality measures: magnitude RMSE and histogram entropy.

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, RealImage};

pub const DEFAULT_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// RMSE between peak-normalized magnitudes.
    pub rmse: f64,
    pub rmse_db: f64,
    pub entropy_bits: f64,
    pub bins: usize,
}

/// `sqrt(mean((reference - |estimate|)^2))` on raw magnitudes.
pub fn rmse(reference: &RealImage, estimate: &ComplexImage) -> Result<f64> {
    reference.grid().check_same(estimate.grid(), "rmse")?;
    let sum: f64 = reference
        .values()
        .iter()
        .zip(estimate.values())
        .map(|(r, e)| {
            let d = r - e.norm();
            d * d
        })
        .sum();
    Ok((sum / reference.values().len() as f64).sqrt())
}

/// RMSE after scaling both images so their peak magnitude is 1.
/// An all-zero image stays zero.
pub fn normalized_rmse(reference: &RealImage, estimate: &ComplexImage) -> Result<f64> {
    reference.grid().check_same(estimate.grid(), "normalized_rmse")?;
    let peak = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0, f64::max);
    let ref_peak = peak(&mut reference.values().iter().copied());
    let est_peak = peak(&mut estimate.values().iter().map(|v| v.norm()));
    let inv = |p: f64| if p > 0.0 { 1.0 / p } else { 0.0 };
    let (a, b) = (inv(ref_peak), inv(est_peak));
    let sum: f64 = reference
        .values()
        .iter()
        .zip(estimate.values())
        .map(|(r, e)| {
            let d = r * a - e.norm() * b;
            d * d
        })
        .sum();
    Ok((sum / reference.values().len() as f64).sqrt())
}

/// `20 log10(rmse)`.
pub fn rmse_db(rmse_linear: f64) -> Result<f64> {
    if !(rmse_linear > 0.0) {
        return Err(Error::Domain(format!(
            "RMSE must be positive to express in dB, got {rmse_linear}"
        )));
    }
    Ok(20.0 * rmse_linear.log10())
}

/// Shannon entropy (bits) of the histogram of peak-normalized magnitudes
/// over `bins` uniform bins on `[0, 1]`. An all-zero image has entropy 0.
pub fn entropy(image: &ComplexImage, bins: usize) -> Result<f64> {
    entropy_of_magnitudes(&image.magnitudes(), bins)
}

pub fn entropy_of_magnitudes(mags: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::invalid(format!("entropy needs at least 2 bins, got {bins}")));
    }
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 || mags.is_empty() {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; bins];
    for &m in mags {
        let k = ((m / peak) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let n = mags.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// Full report; `rmse_db` is `-inf` for a perfect reconstruction.
pub fn report(reference: &RealImage, estimate: &ComplexImage, bins: usize) -> Result<MetricReport> {
    let rmse = normalized_rmse(reference, estimate)?;
    let rmse_db = if rmse > 0.0 { rmse_db(rmse)? } else { f64::NEG_INFINITY };
    Ok(MetricReport {
        rmse,
        rmse_db,
        entropy_bits: entropy(estimate, bins)?,
        bins,
    })
}
