//! Stepped-frequency ISAR acquisition geometry.

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, SPEED_OF_LIGHT};

/// Waveform and rotation parameters of a turntable-style ISAR acquisition
/// after translational motion compensation.
///
/// Frequencies are `f_n = f0 + n * df` for `n in 0..n_freq`; slow times are
/// `t_m = m * dt` for `m in 0..n_angle`, and the aspect angle at slow time
/// `t_m` is `omega * t_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    pub f0: f64,
    pub df: f64,
    pub n_freq: usize,
    pub r0: f64,
    pub omega: f64,
    pub dt: f64,
    pub n_angle: usize,
}

impl RadarConfig {
    /// Full-data simulation scenario: 5 km standoff, 35-36 GHz in 64 steps,
    /// 1.7 degrees of rotation in 64 steps.
    pub fn desk() -> Self {
        Self::from_sweep(35e9, 36e9, 64, 1.7, 64, 5_000.0)
    }

    /// Preset mirroring the UAV acquisition: 34.5-35.3 GHz, 2 degrees,
    /// 128 steps in each dimension. The standoff is not published; 5 km is
    /// assumed.
    pub fn uav_preset() -> Self {
        Self::from_sweep(34.5e9, 35.3e9, 128, 2.0, 128, 5_000.0)
    }

    /// Builds a config from start/stop frequencies and a total rotation in
    /// degrees, with the last step landing exactly on the stop values.
    /// The rotation rate is `total_deg` per second.
    pub fn from_sweep(
        f_start: f64,
        f_stop: f64,
        n_freq: usize,
        total_deg: f64,
        n_angle: usize,
        r0: f64,
    ) -> Self {
        let df = if n_freq > 1 {
            (f_stop - f_start) / (n_freq - 1) as f64
        } else {
            0.0
        };
        let omega = total_deg.to_radians();
        let dt = if n_angle > 1 {
            1.0 / (n_angle - 1) as f64
        } else {
            0.0
        };
        Self {
            f0: f_start,
            df,
            n_freq,
            r0,
            omega,
            dt,
            n_angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.f0, self.df, self.r0, self.omega, self.dt]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("radar parameters must be finite"));
        }
        if self.f0 <= 0.0 {
            return Err(Error::invalid("start frequency f0 must be positive"));
        }
        if self.df < 0.0 {
            return Err(Error::invalid("frequency step df must be nonnegative"));
        }
        if self.n_freq == 0 || self.n_angle == 0 {
            return Err(Error::invalid("frequency and angle counts must be >= 1"));
        }
        if self.r0 <= 0.0 {
            return Err(Error::invalid("standoff distance r0 must be positive"));
        }
        if self.dt < 0.0 {
            return Err(Error::invalid("slow-time step dt must be nonnegative"));
        }
        if self.total_angle().abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("total rotation angle must be below pi/2"));
        }
        Ok(())
    }

    /// Number of cells in the full (frequency, angle) grid.
    pub fn cells(&self) -> usize {
        self.n_freq * self.n_angle
    }

    #[inline]
    pub fn frequency(&self, n: usize) -> f64 {
        self.f0 + n as f64 * self.df
    }

    #[inline]
    pub fn slow_time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    /// Aspect angle `omega * t_m` in radians.
    #[inline]
    pub fn angle(&self, m: usize) -> f64 {
        self.omega * self.slow_time(m)
    }

    /// `omega * dt * (n_angle - 1)`, radians.
    pub fn total_angle(&self) -> f64 {
        self.omega * self.dt * self.n_angle.saturating_sub(1) as f64
    }

    /// Swept bandwidth `f_{N-1} - f0`.
    pub fn bandwidth(&self) -> f64 {
        self.df * self.n_freq.saturating_sub(1) as f64
    }

    /// Splits a linear measurement index into `(n, m)` (frequency fastest).
    #[inline]
    pub fn split_index(&self, l: usize) -> (usize, usize) {
        (l % self.n_freq, l / self.n_freq)
    }

    #[inline]
    pub fn linear_index(&self, n: usize, m: usize) -> usize {
        m * self.n_freq + n
    }

    /// Image grid at the classical resolution of this acquisition.
    pub fn resolution_grid(&self, nx: usize, ny: usize) -> Result<ImageGrid> {
        ImageGrid::from_resolution(nx, ny, self.f0, self.bandwidth(), self.total_angle())
    }
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Exact distance between the radar and a scatterer at `(x, y)` in the
/// target frame, at slow time `t_m`.
pub fn instantaneous_range(config: &RadarConfig, x: f64, y: f64, t_m: f64) -> Result<f64> {
    let (s, c) = (config.omega * t_m).sin_cos();
    let r0 = config.r0;
    let arg = r0 * r0 + x * x + y * y + 2.0 * r0 * (-x * s + y * c);
    if !(arg > 0.0) {
        return Err(Error::Domain(format!(
            "scatterer at ({x}, {y}) has non-positive squared range {arg}"
        )));
    }
    Ok(arg.sqrt())
}

/// First-order range approximation valid when `r0` dominates the target size.
pub fn far_field_range(config: &RadarConfig, x: f64, y: f64, t_m: f64) -> f64 {
    let (s, c) = (config.omega * t_m).sin_cos();
    config.r0 - x * s + y * c
}

/// Round-trip phase constant `4 pi / c`.
pub(crate) const TWO_WAY_WAVENUMBER: f64 = 4.0 * std::f64::consts::PI / SPEED_OF_LIGHT;
