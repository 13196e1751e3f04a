//! Synthetic clustered targets used as ground truth.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, RealImage};

/// Descriptor of a synthetic target.
#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    /// `count` disks of `radius` pixels at random centers.
    Blobs {
        count: usize,
        radius: usize,
        amp_min: f64,
        amp_max: f64,
    },
    /// Fixed airplane-like layout of bars (fuselage, wings, tail) and two
    /// engine disks, scaled to the grid.
    Aircraft { amp_min: f64, amp_max: f64 },
}

impl PhantomSpec {
    pub fn shape_name(&self) -> &'static str {
        match self {
            PhantomSpec::Blobs { .. } => "blobs",
            PhantomSpec::Aircraft { .. } => "aircraft",
        }
    }

    /// Builds a descriptor from its shape name and parameters.
    pub fn from_parts(
        shape: &str,
        count: usize,
        radius: usize,
        amp_min: f64,
        amp_max: f64,
    ) -> Result<Self> {
        let spec = match shape {
            "blobs" => PhantomSpec::Blobs {
                count,
                radius,
                amp_min,
                amp_max,
            },
            "aircraft" => PhantomSpec::Aircraft { amp_min, amp_max },
            other => return Err(Error::invalid(format!("unknown phantom shape `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn amplitudes(&self) -> (f64, f64) {
        match *self {
            PhantomSpec::Blobs {
                amp_min, amp_max, ..
            }
            | PhantomSpec::Aircraft { amp_min, amp_max } => (amp_min, amp_max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.amplitudes();
        if !(lo > 0.0 && lo.is_finite() && hi >= lo && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "phantom amplitudes must satisfy 0 < amp_min <= amp_max, got [{lo}, {hi}]"
            )));
        }
        if let PhantomSpec::Blobs { count, .. } = self {
            if *count == 0 {
                return Err(Error::invalid("blobs phantom needs at least one blob"));
            }
        }
        Ok(())
    }
}

impl Default for PhantomSpec {
    /// Three radius-2 disks of unit amplitude.
    fn default() -> Self {
        PhantomSpec::Blobs {
            count: 3,
            radius: 2,
            amp_min: 1.0,
            amp_max: 1.0,
        }
    }
}

impl fmt::Display for PhantomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.shape_name())
    }
}

impl FromStr for PhantomSpec {
    type Err = Error;

    /// Parses a bare shape name with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "aircraft" => Ok(PhantomSpec::Aircraft {
                amp_min: 1.0,
                amp_max: 1.0,
            }),
            "blobs" => Ok(PhantomSpec::default()),
            other => Err(Error::invalid(format!("unknown phantom shape `{other}`"))),
        }
    }
}

/// Renders `spec` on `grid`. Deterministic in `(spec, seed)`; overlapping
/// components keep the larger amplitude.
pub fn make_phantom(grid: &ImageGrid, spec: &PhantomSpec, seed: u64) -> Result<RealImage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut canvas = Canvas::new(*grid);
    let (lo, hi) = spec.amplitudes();
    let draw_amp = |rng: &mut ChaCha8Rng| {
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };

    match *spec {
        PhantomSpec::Blobs { count, radius, .. } => {
            for _ in 0..count {
                let col = pick_center(&mut rng, grid.nx(), radius);
                let row = pick_center(&mut rng, grid.ny(), radius);
                let amp = draw_amp(&mut rng);
                canvas.disk(col as i64, row as i64, radius as i64, amp);
            }
        }
        PhantomSpec::Aircraft { .. } => {
            // Layout in units of a 64x64 grid; rows run along range.
            let bars: [(f64, f64, f64, f64); 3] = [
                (31.0, 32.0, 14.0, 49.0), // fuselage
                (16.0, 47.0, 28.0, 30.0), // wings
                (25.0, 38.0, 44.0, 45.0), // tail plane
            ];
            for (c0, c1, r0, r1) in bars {
                let amp = draw_amp(&mut rng);
                canvas.bar(c0, c1, r0, r1, amp);
            }
            let sx = grid.nx() as f64 / 64.0;
            let sy = grid.ny() as f64 / 64.0;
            for (c, r) in [(22.0, 32.0), (41.0, 32.0)] {
                let amp = draw_amp(&mut rng);
                let col = (c * sx).floor() as i64;
                let row = (r * sy).floor() as i64;
                canvas.disk(col, row, 1, amp);
            }
        }
    }
    RealImage::new(*grid, canvas.values)
}

fn pick_center(rng: &mut ChaCha8Rng, n: usize, radius: usize) -> usize {
    let margin = n / 8;
    let (lo, hi) = if n > 2 * (radius + margin) {
        (radius + margin, n - 1 - radius - margin)
    } else if n > 2 * radius {
        (radius, n - 1 - radius)
    } else {
        (n / 2, n / 2)
    };
    rng.random_range(lo..=hi)
}

struct Canvas {
    grid: ImageGrid,
    values: Vec<f64>,
}

impl Canvas {
    fn new(grid: ImageGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    fn set(&mut self, col: i64, row: i64, amp: f64) {
        let (nx, ny) = (self.grid.nx() as i64, self.grid.ny() as i64);
        if (0..nx).contains(&col) && (0..ny).contains(&row) {
            let i = self.grid.index(col as usize, row as usize);
            self.values[i] = self.values[i].max(amp);
        }
    }

    fn disk(&mut self, col: i64, row: i64, radius: i64, amp: f64) {
        for dr in -radius..=radius {
            for dc in -radius..=radius {
                if dr * dr + dc * dc <= radius * radius {
                    self.set(col + dc, row + dr, amp);
                }
            }
        }
    }

    /// Inclusive box given in 64-grid units.
    fn bar(&mut self, c0: f64, c1: f64, r0: f64, r1: f64, amp: f64) {
        let sx = self.grid.nx() as f64 / 64.0;
        let sy = self.grid.ny() as f64 / 64.0;
        let (c0, r0) = ((c0 * sx).floor() as i64, (r0 * sy).floor() as i64);
        let c1 = ((c1 * sx).floor() as i64).max(c0);
        let r1 = ((r1 * sy).floor() as i64).max(r0);
        for row in r0..=r1 {
            for col in c0..=c1 {
                self.set(col, row, amp);
            }
        }
    }
}
