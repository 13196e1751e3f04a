//! Sampling masks over the (frequency, angle) grid and the measurement sets
//! they index.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::radar::RadarConfig;

/// Which cells of the `n_freq x n_angle` acquisition grid were measured.
/// Cells are addressed by the linear index `l = m * n_freq + n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    n_freq: usize,
    n_angle: usize,
    kept: Vec<bool>,
    indices: Vec<usize>,
}

impl SamplingMask {
    pub fn from_bits(n_freq: usize, n_angle: usize, kept: Vec<bool>) -> Result<Self> {
        if kept.len() != n_freq * n_angle {
            return Err(Error::invalid(format!(
                "mask has {} cells, expected {}",
                kept.len(),
                n_freq * n_angle
            )));
        }
        let indices: Vec<usize> = kept
            .iter()
            .enumerate()
            .filter_map(|(l, &k)| k.then_some(l))
            .collect();
        if indices.is_empty() {
            return Err(Error::invalid("sampling mask keeps no cells"));
        }
        Ok(Self {
            n_freq,
            n_angle,
            kept,
            indices,
        })
    }

    pub fn full(n_freq: usize, n_angle: usize) -> Result<Self> {
        Self::from_bits(n_freq, n_angle, vec![true; n_freq * n_angle])
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn n_angle(&self) -> usize {
        self.n_angle
    }

    pub fn bits(&self) -> &[bool] {
        &self.kept
    }

    pub fn is_kept(&self, l: usize) -> bool {
        self.kept.get(l).copied().unwrap_or(false)
    }

    /// Kept linear indices in ascending order.
    pub fn kept_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn kept_count(&self) -> usize {
        self.indices.len()
    }

    pub fn ratio(&self) -> f64 {
        self.indices.len() as f64 / self.kept.len() as f64
    }

    pub(crate) fn check_shape(&self, config: &RadarConfig) -> Result<()> {
        if self.n_freq != config.n_freq || self.n_angle != config.n_angle {
            return Err(Error::invalid(format!(
                "mask is {}x{} but radar grid is {}x{}",
                self.n_freq, self.n_angle, config.n_freq, config.n_angle
            )));
        }
        Ok(())
    }
}

/// Uniform random subsampling keeping exactly `round(ratio * N * M)` cells.
pub fn make_mask(n_freq: usize, n_angle: usize, ratio: f64, seed: u64) -> Result<SamplingMask> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "sampling ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let total = n_freq * n_angle;
    let keep = (ratio * total as f64).round() as usize;
    if keep == 0 {
        return Err(Error::invalid(format!(
            "ratio {ratio} keeps no cells of a {n_freq}x{n_angle} grid"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = vec![false; total];
    for l in rand::seq::index::sample(&mut rng, total, keep) {
        kept[l] = true;
    }
    SamplingMask::from_bits(n_freq, n_angle, kept)
}

/// Complex samples on the kept cells of a mask, ordered by linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    config: RadarConfig,
    mask: SamplingMask,
    samples: Vec<Complex64>,
}

impl MeasurementSet {
    pub fn new(config: RadarConfig, mask: SamplingMask, samples: Vec<Complex64>) -> Result<Self> {
        config.validate()?;
        mask.check_shape(&config)?;
        if samples.len() != mask.kept_count() {
            return Err(Error::invalid(format!(
                "{} samples for {} kept cells",
                samples.len(),
                mask.kept_count()
            )));
        }
        Ok(Self {
            config,
            mask,
            samples,
        })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.config
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Zero-padded full-grid data matrix, indexed by linear cell index.
    pub fn zero_filled(&self) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); self.config.cells()];
        for (&l, &v) in self.mask.kept_indices().iter().zip(&self.samples) {
            full[l] = v;
        }
        full
    }
}
