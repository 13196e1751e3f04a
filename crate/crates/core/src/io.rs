//! File formats: measurement sets, lossless images, PGM previews and CSV
//! tables.
//!
//! Measurement file (all integers and floats little-endian):
//!
//! ```text
//! offset  size        field
//! 0       8           magic "ISARMEAS"
//! 8       2           version (u16) = 1
//! 10      4           N, frequency count (u32)
//! 14      4           M, angle count (u32)
//! 18      5 x 8       f0, df, r0, omega, dt (f64)
//! 58      ceil(NM/8)  mask bits; cell l is bit (l % 8) of byte (l / 8)
//! ...     16 x K      kept samples as (re, im) f64 pairs, ascending l
//! ```
//!
//! Image file:
//!
//! ```text
//! 0   8   magic "ISARIMAG"
//! 8   2   version (u16) = 1
//! 10  1   kind: 0 = real, 1 = complex
//! 11  4   nx (u32)
//! 15  4   ny (u32)
//! 19  8   dx (f64)
//! 27  8   dy (f64)
//! 35  ..  pixel values in row-major order: f64, or (re, im) f64 pairs
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, ImageGrid, RealImage};
use crate::measurement::{MeasurementSet, SamplingMask};
use crate::radar::RadarConfig;

pub const MEAS_MAGIC: &[u8; 8] = b"ISARMEAS";
pub const IMAGE_MAGIC: &[u8; 8] = b"ISARIMAG";
pub const FORMAT_VERSION: u16 = 1;

pub fn encode_measurements(meas: &MeasurementSet) -> Vec<u8> {
    let cfg = meas.config();
    let mask = meas.mask();
    let cells = cfg.cells();
    let mut out = Vec::with_capacity(58 + cells.div_ceil(8) + 16 * meas.len());
    out.extend_from_slice(MEAS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.n_freq as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.n_angle as u32).to_le_bytes());
    for v in [cfg.f0, cfg.df, cfg.r0, cfg.omega, cfg.dt] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut packed = vec![0u8; cells.div_ceil(8)];
    for (l, &kept) in mask.bits().iter().enumerate() {
        if kept {
            packed[l / 8] |= 1 << (l % 8);
        }
    }
    out.extend_from_slice(&packed);
    for s in meas.samples() {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!(
                    "truncated {what}: need {n} bytes, {} remain",
                    self.data.len() - self.pos
                ),
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn expect_end(&self, what: &str) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!("{} trailing bytes after {what}", self.data.len() - self.pos),
            });
        }
        Ok(())
    }

    fn fail(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Format {
            offset: offset as u64,
            message: message.into(),
        }
    }
}

pub fn decode_measurements(data: &[u8]) -> Result<MeasurementSet> {
    let mut r = Reader::new(data);
    if r.take(8, "magic")? != MEAS_MAGIC {
        return Err(r.fail(0, "bad magic, expected ISARMEAS"));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(r.fail(8, format!("unsupported version {version}")));
    }
    let dims_at = r.pos;
    let n_freq = r.u32("frequency count")? as usize;
    let n_angle = r.u32("angle count")? as usize;
    let config = RadarConfig {
        f0: r.f64("f0")?,
        df: r.f64("df")?,
        r0: r.f64("r0")?,
        omega: r.f64("omega")?,
        dt: r.f64("dt")?,
        n_freq,
        n_angle,
    };
    config
        .validate()
        .map_err(|e| r.fail(dims_at, format!("invalid radar parameters: {e}")))?;
    let cells = n_freq
        .checked_mul(n_angle)
        .ok_or_else(|| r.fail(dims_at, "grid size overflows"))?;
    let mask_at = r.pos;
    let packed = r.take(cells.div_ceil(8), "mask")?;
    let kept: Vec<bool> = (0..cells).map(|l| packed[l / 8] >> (l % 8) & 1 == 1).collect();
    let count = kept.iter().filter(|k| **k).count();
    if count == 0 {
        return Err(r.fail(mask_at, "mask keeps no cells"));
    }
    let samples_at = r.pos;
    let available = data.len() - samples_at;
    if available > 16 * count {
        return Err(r.fail(
            samples_at + 16 * count,
            format!("mask keeps {count} cells but {} bytes of samples follow", available),
        ));
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos;
        let re = r.f64("sample");
        let im = r.f64("sample");
        match (re, im) {
            (Ok(re), Ok(im)) => samples.push(Complex64::new(re, im)),
            _ => {
                return Err(r.fail(
                    at,
                    format!("truncated sample {} of {count}", samples.len()),
                ))
            }
        }
    }
    r.expect_end("samples")?;
    let mask = SamplingMask::from_bits(n_freq, n_angle, kept).map_err(|e| r.fail(mask_at, e.to_string()))?;
    MeasurementSet::new(config, mask, samples).map_err(|e| r.fail(samples_at, e.to_string()))
}

pub fn write_measurements(meas: &MeasurementSet, path: &Path) -> Result<()> {
    fs::write(path, encode_measurements(meas)).map_err(|e| Error::io(path, e))
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_measurements(&data)
}

/// Image stored in the lossless image format.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredImage {
    Real(RealImage),
    Complex(ComplexImage),
}

impl StoredImage {
    pub fn grid(&self) -> &ImageGrid {
        match self {
            StoredImage::Real(r) => r.grid(),
            StoredImage::Complex(c) => c.grid(),
        }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        match self {
            StoredImage::Real(r) => r.values().iter().map(|v| v.abs()).collect(),
            StoredImage::Complex(c) => c.magnitudes(),
        }
    }

    pub fn to_complex(&self) -> ComplexImage {
        match self {
            StoredImage::Real(r) => r.to_complex(),
            StoredImage::Complex(c) => c.clone(),
        }
    }

    /// Magnitude image, usable as a reference.
    pub fn to_real(&self) -> RealImage {
        match self {
            StoredImage::Real(r) => r.clone(),
            StoredImage::Complex(c) => RealImage::new(*c.grid(), c.magnitudes()).expect("magnitudes are valid"),
        }
    }
}

pub fn encode_image(image: &StoredImage) -> Vec<u8> {
    let g = image.grid();
    let mut out = Vec::new();
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(matches!(image, StoredImage::Complex(_)) as u8);
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.dx().to_le_bytes());
    out.extend_from_slice(&g.dy().to_le_bytes());
    match image {
        StoredImage::Real(r) => r.values().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        StoredImage::Complex(c) => c.values().iter().for_each(|v| {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }),
    }
    out
}

pub fn decode_image(data: &[u8]) -> Result<StoredImage> {
    let mut r = Reader::new(data);
    if r.take(8, "magic")? != IMAGE_MAGIC {
        return Err(r.fail(0, "bad magic, expected ISARIMAG"));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(r.fail(8, format!("unsupported version {version}")));
    }
    let kind = r.u8("kind")?;
    if kind > 1 {
        return Err(r.fail(10, format!("unknown image kind {kind}")));
    }
    let nx = r.u32("nx")? as usize;
    let ny = r.u32("ny")? as usize;
    let dx = r.f64("dx")?;
    let dy = r.f64("dy")?;
    let grid = ImageGrid::new(nx, ny, dx, dy).map_err(|e| r.fail(11, e.to_string()))?;
    let values_at = r.pos;
    let image = if kind == 0 {
        let vals = (0..grid.len()).map(|_| r.f64("pixel")).collect::<Result<Vec<_>>>()?;
        StoredImage::Real(RealImage::new(grid, vals).map_err(|e| r.fail(values_at, e.to_string()))?)
    } else {
        let vals = (0..grid.len())
            .map(|_| Ok(Complex64::new(r.f64("pixel")?, r.f64("pixel")?)))
            .collect::<Result<Vec<_>>>()?;
        StoredImage::Complex(ComplexImage::new(grid, vals).map_err(|e| r.fail(values_at, e.to_string()))?)
    };
    r.expect_end("pixels")?;
    Ok(image)
}

pub fn write_image(image: &StoredImage, path: &Path) -> Result<()> {
    fs::write(path, encode_image(image)).map_err(|e| Error::io(path, e))
}

pub fn read_image(path: &Path) -> Result<StoredImage> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&data)
}

/// Gray-level mapping for PGM previews.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PgmScale {
    /// `round(255 * |v| / peak)`.
    Linear,
    /// `20 log10(|v| / peak)` clipped to `[floor_db, 0]`, mapped onto 0..=255.
    Decibel { floor_db: f64 },
}

impl PgmScale {
    pub const DEFAULT_DB: PgmScale = PgmScale::Decibel { floor_db: -40.0 };
}

/// 8-bit binary PGM bytes for a magnitude image (`nx` wide, row-major).
/// An all-zero image maps to all-zero bytes.
pub fn encode_pgm(magnitudes: &[f64], nx: usize, ny: usize, scale: PgmScale) -> Vec<u8> {
    assert_eq!(magnitudes.len(), nx * ny);
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    let peak = magnitudes.iter().copied().fold(0.0, f64::max);
    out.extend(magnitudes.iter().map(|&m| {
        if peak <= 0.0 {
            return 0u8;
        }
        let v = m / peak;
        let level = match scale {
            PgmScale::Linear => v,
            PgmScale::Decibel { floor_db } => {
                if v <= 0.0 {
                    0.0
                } else {
                    let db = (20.0 * v.log10()).max(floor_db);
                    (db - floor_db) / -floor_db
                }
            }
        };
        (255.0 * level).round().clamp(0.0, 255.0) as u8
    }));
    out
}

pub fn emit_pgm(magnitudes: &[f64], grid: &ImageGrid, path: &Path, scale: PgmScale) -> Result<()> {
    if magnitudes.len() != grid.len() {
        return Err(Error::invalid("magnitude count does not match the grid"));
    }
    fs::write(path, encode_pgm(magnitudes, grid.nx(), grid.ny(), scale)).map_err(|e| Error::io(path, e))
}

/// Formats a float with 9 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.8e}")
    }
}

/// Writes a header line plus one line per row. Fields must not contain
/// commas or newlines.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", header.join(",")).expect("write to Vec");
    for row in rows {
        writeln!(buf, "{}", row.join(",")).expect("write to Vec");
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::make_mask;
    use proptest::prelude::*;

    fn sample_set(seed: u64) -> MeasurementSet {
        let cfg = RadarConfig::from_sweep(35e9, 36e9, 7, 1.7, 5, 5_000.0);
        let mask = make_mask(7, 5, 0.4, seed).unwrap();
        let samples = (0..mask.kept_count())
            .map(|k| Complex64::new(k as f64 * 0.37 - 1.0, (seed as f64).sin() + k as f64))
            .collect();
        MeasurementSet::new(cfg, mask, samples).unwrap()
    }

    #[test]
    fn truncation_reports_sample_offset() {
        let meas = sample_set(1);
        let bytes = encode_measurements(&meas);
        let header = 58 + 35usize.div_ceil(8);
        // Cut in the middle of the third sample.
        let cut = header + 2 * 16 + 5;
        match decode_measurements(&bytes[..cut]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset as usize, header + 32),
            other => panic!("unexpected {other:?}"),
        }
        match decode_measurements(&bytes[..20]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 18),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_measurements(&sample_set(2));
        bytes[8] = 9;
        assert!(matches!(decode_measurements(&bytes), Err(Error::Format { offset: 8, .. })));
        bytes[0] = b'X';
        assert!(matches!(decode_measurements(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn sample_count_must_match_mask_bits() {
        let meas = sample_set(3);
        let mut bytes = encode_measurements(&meas);
        bytes.extend_from_slice(&[0u8; 16]);
        assert!(matches!(decode_measurements(&bytes), Err(Error::Format { .. })));
        // Dropping a mask bit leaves one sample too many.
        let mut bytes = encode_measurements(&meas);
        let first = meas.mask().kept_indices()[0];
        bytes[58 + first / 8] &= !(1 << (first % 8));
        assert!(matches!(decode_measurements(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn pgm_levels() {
        let bytes = encode_pgm(&[0.0, 0.5, 0.75, 1.0], 2, 2, PgmScale::Linear);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 128, 191, 255]);
        let flat = encode_pgm(&[3.0; 6], 3, 2, PgmScale::DEFAULT_DB);
        assert!(flat[flat.len() - 6..].iter().all(|&b| b == 255));
        let zero = encode_pgm(&[0.0; 6], 3, 2, PgmScale::DEFAULT_DB);
        assert!(zero[zero.len() - 6..].iter().all(|&b| b == 0));
        // -20 dB sits halfway between the -40 dB floor and the peak.
        let db = encode_pgm(&[0.1, 1.0, 0.0, 1e-4], 2, 2, PgmScale::DEFAULT_DB);
        assert_eq!(&db[db.len() - 4..], &[128, 255, 0, 0]);
    }

    #[test]
    fn image_codec_rejects_garbage() {
        let g = ImageGrid::new(3, 2, 0.1, 0.2).unwrap();
        let img = StoredImage::Real(RealImage::new(g, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap());
        let bytes = encode_image(&img);
        assert_eq!(decode_image(&bytes).unwrap(), img);
        assert!(decode_image(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_image(&bytes[1..]).is_err());
    }

    #[test]
    fn float_format_has_nine_digits() {
        assert_eq!(fmt_float(1.0), "1.00000000e0");
        assert_eq!(fmt_float(-0.0123456789), "-1.23456789e-2");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        let v: f64 = fmt_float(std::f64::consts::PI).parse().unwrap();
        assert!((v - std::f64::consts::PI).abs() < 5e-9);
    }

    proptest! {
        #[test]
        fn measurement_roundtrip_is_bit_exact(
            n in 1usize..12, m in 1usize..12, ratio in 0.1f64..=1.0, seed: u64,
            f0 in 1e9f64..1e11, r0 in 100.0f64..1e5,
        ) {
            let want = (ratio * (n * m) as f64).round() as usize;
            prop_assume!(want >= 1);
            let cfg = RadarConfig { n_freq: n, n_angle: m, f0, r0, ..RadarConfig::desk() };
            let mask = make_mask(n, m, ratio, seed).unwrap();
            let samples = (0..mask.kept_count())
                .map(|k| Complex64::new(f64::from_bits(seed ^ k as u64).abs().min(1e300), -(k as f64) / 3.0))
                .map(|c| if c.re.is_finite() { c } else { Complex64::new(0.0, c.im) })
                .collect();
            let meas = MeasurementSet::new(cfg, mask, samples).unwrap();
            let back = decode_measurements(&encode_measurements(&meas)).unwrap();
            prop_assert_eq!(back, meas);
        }

        #[test]
        fn complex_image_roundtrip(vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 12)) {
            let g = ImageGrid::new(4, 3, 0.15, 0.2).unwrap();
            let img = StoredImage::Complex(ComplexImage::new(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap());
            prop_assert_eq!(decode_image(&encode_image(&img)).unwrap(), img);
        }
    }
}
