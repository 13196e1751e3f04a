//! Image grid geometry and the real/complex image containers defined on it.
//!
//! Pixels are linearized row-major, `i = row * nx + col`, where `col` runs
//! along cross-range (x) and `row` along range (y). Pixel `(col, row)` sits at
//! `x = (col - nx/2) * dx`, `y = (row - ny/2) * dy`, so the grid is centered on
//! the target's rotation centroid.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl ImageGrid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && dy > 0.0 && dy.is_finite()) {
            return Err(Error::invalid(format!(
                "pixel spacing must be positive and finite, got dx={dx}, dy={dy}"
            )));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Grid whose spacing equals the classical resolution cells of a
    /// stepped-frequency ISAR acquisition: `c / (2B)` in range and
    /// `lambda0 / (2 * aperture)` in cross-range.
    pub fn from_resolution(
        nx: usize,
        ny: usize,
        f0: f64,
        bandwidth: f64,
        aperture_rad: f64,
    ) -> Result<Self> {
        if !(f0 > 0.0 && bandwidth > 0.0 && aperture_rad > 0.0) {
            return Err(Error::invalid(
                "carrier, bandwidth and aperture must be positive",
            ));
        }
        let dy = SPEED_OF_LIGHT / (2.0 * bandwidth);
        let dx = (SPEED_OF_LIGHT / f0) / (2.0 * aperture_rad);
        Self::new(nx, ny, dx, dy)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Total pixel count.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.nx + col
    }

    /// `(col, row)` of a linear pixel index.
    pub fn col_row(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    pub fn pixel_coords(&self, i: usize) -> Result<(f64, f64)> {
        if i >= self.len() {
            return Err(Error::invalid(format!(
                "pixel index {i} out of range for {} pixels",
                self.len()
            )));
        }
        Ok(self.coords_unchecked(i))
    }

    #[inline]
    pub(crate) fn coords_unchecked(&self, i: usize) -> (f64, f64) {
        let (col, row) = self.col_row(i);
        let x = (col as f64 - self.nx as f64 / 2.0) * self.dx;
        let y = (row as f64 - self.ny as f64 / 2.0) * self.dy;
        (x, y)
    }

    /// Inverse of [`pixel_coords`](Self::pixel_coords) for coordinates that
    /// lie on pixel centers (up to rounding).
    pub fn pixel_at(&self, x: f64, y: f64) -> Option<usize> {
        let col = (x / self.dx + self.nx as f64 / 2.0).round();
        let row = (y / self.dy + self.ny as f64 / 2.0).round();
        if col < 0.0 || row < 0.0 || col >= self.nx as f64 || row >= self.ny as f64 {
            return None;
        }
        Some(self.index(col as usize, row as usize))
    }

    pub(crate) fn check_same(&self, other: &ImageGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::invalid(format!(
                "{what}: grid mismatch ({}x{} vs {}x{})",
                self.nx, self.ny, other.nx, other.ny
            )));
        }
        Ok(())
    }
}

/// Nonnegative real reflectivity map, used as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    grid: ImageGrid,
    values: Vec<f64>,
}

impl RealImage {
    pub fn new(grid: ImageGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "reflectivity must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: ImageGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn nonzero_fraction(&self) -> f64 {
        self.nonzero_count() as f64 / self.values.len() as f64
    }

    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// Complex reflectivity map: the unknown of the inverse problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    grid: ImageGrid,
    values: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(grid: ImageGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: ImageGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn zeros(grid: ImageGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Euclidean norm over all pixels.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_pixel_maps_to_origin() {
        let g = ImageGrid::new(64, 64, 0.15, 0.15).unwrap();
        let i = g.index(32, 32);
        assert_eq!(g.pixel_coords(i).unwrap(), (0.0, 0.0));
        assert_eq!(g.nx(), 64);
        assert_eq!(g.dx(), 0.15);
    }

    #[test]
    fn single_pixel_grid() {
        let g = ImageGrid::new(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(g.pixel_coords(0).unwrap(), (-0.5, -0.5));
    }

    #[test]
    fn corner_of_two_by_two() {
        let g = ImageGrid::new(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(g.pixel_coords(0).unwrap(), (-1.0, -1.0));
    }

    #[test]
    fn resolution_cells_for_table_scene() {
        let aperture = 1.7f64.to_radians();
        let g = ImageGrid::from_resolution(64, 64, 35e9, 1e9, aperture).unwrap();
        // c / (2 * 1 GHz) and (c / 35 GHz) / (2 * 1.7 deg), 50-digit reference.
        assert!((g.dy() - 0.149_896_229).abs() < 1e-9);
        assert!((g.dx() - 0.144_343_214_901_285_6).abs() < 1e-12, "dx = {}", g.dx());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(ImageGrid::new(0, 4, 1.0, 1.0).is_err());
        assert!(ImageGrid::new(4, 4, 0.0, 1.0).is_err());
        assert!(ImageGrid::new(4, 4, 1.0, -1.0).is_err());
        let g = ImageGrid::new(2, 2, 1.0, 1.0).unwrap();
        assert!(matches!(g.pixel_coords(4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn coordinate_mapping_is_a_bijection() {
        let g = ImageGrid::new(4, 4, 0.3, 0.7).unwrap();
        let mut seen = std::collections::HashSet::new();
        for i in 0..g.len() {
            let (x, y) = g.pixel_coords(i).unwrap();
            assert!(seen.insert((x.to_bits(), y.to_bits())));
            assert_eq!(g.pixel_at(x, y), Some(i));
        }
    }

    #[test]
    fn real_image_rejects_negative_values() {
        let g = ImageGrid::new(2, 1, 1.0, 1.0).unwrap();
        assert!(RealImage::new(g, vec![0.0, -1.0]).is_err());
        assert!(RealImage::new(g, vec![0.0]).is_err());
    }
}
