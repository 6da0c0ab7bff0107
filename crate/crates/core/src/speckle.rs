//! Convolutional speckle baseline.
//!
//! A 2D scatterer phantom (lateral x axial, in mm) is binned onto the
//! output grid, convolved with a Gaussian-windowed axial cosine PSF,
//! envelope-detected column by column through the analytic signal and
//! log-compressed. Anechoic regions are made by zeroing the amplitude of
//! scatterers that fall inside a binary mask.
//!
//! Rows of the output grid are axial (depth), columns are lateral.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{ensure_even, RealImage};

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width_mm: f64,
    pub depth_mm: f64,
    pub num_scatterers: usize,
    pub grid_width: usize,
    pub grid_height: usize,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width_mm: 50.0,
            depth_mm: 50.0,
            num_scatterers: 100_000,
            grid_width: 256,
            grid_height: 256,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_mm > 0.0 && self.width_mm.is_finite())
            || !(self.depth_mm > 0.0 && self.depth_mm.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "phantom extent {}x{} mm must be positive",
                self.width_mm, self.depth_mm
            )));
        }
        if self.grid_width < 2 || self.grid_height < 2 {
            return Err(Error::InvalidParameter("grid must be at least 2x2".into()));
        }
        ensure_even(self.grid_width, self.grid_height)
    }

    /// Grid cell `(column, row)` containing a position.
    #[inline]
    pub fn pixel_of(&self, x_mm: f64, z_mm: f64) -> (usize, usize) {
        let col = (x_mm / self.width_mm * self.grid_width as f64).floor();
        let row = (z_mm / self.depth_mm * self.grid_height as f64).floor();
        (
            (col.max(0.0) as usize).min(self.grid_width - 1),
            (row.max(0.0) as usize).min(self.grid_height - 1),
        )
    }

    /// Center of grid cell `(column, row)` in mm.
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            (col as f64 + 0.5) / self.grid_width as f64 * self.width_mm,
            (row as f64 + 0.5) / self.grid_height as f64 * self.depth_mm,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub x_mm: f64,
    pub z_mm: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScattererField {
    pub scatterers: Vec<Scatterer>,
}

impl ScattererField {
    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scatterers: self
                .scatterers
                .iter()
                .map(|s| Scatterer {
                    amplitude: s.amplitude * factor,
                    ..*s
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfSpec {
    /// Axial carrier, cycles per pixel.
    pub center_freq: f64,
    pub sigma_axial: f64,
    pub sigma_lateral: f64,
    /// Kernel spans `-half_extent..=half_extent` pixels on both axes.
    pub half_extent: usize,
}

impl Default for PsfSpec {
    fn default() -> Self {
        Self::new(0.25, 3.0, 6.0)
    }
}

impl PsfSpec {
    /// PSF with the smallest kernel that covers three standard deviations.
    pub fn new(center_freq: f64, sigma_axial: f64, sigma_lateral: f64) -> Self {
        Self {
            center_freq,
            sigma_axial,
            sigma_lateral,
            half_extent: (3.0 * sigma_axial.max(sigma_lateral)).ceil().max(0.0) as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_axial > 0.0 && self.sigma_lateral > 0.0) {
            return Err(Error::InvalidParameter("PSF widths must be positive".into()));
        }
        if !(self.center_freq >= 0.0 && self.center_freq <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "carrier {} outside [0, 0.5] cycles/px",
                self.center_freq
            )));
        }
        if (self.half_extent as f64) < 3.0 * self.sigma_axial.max(self.sigma_lateral) {
            return Err(Error::InvalidParameter(format!(
                "kernel half-extent {} below 3 sigma",
                self.half_extent
            )));
        }
        Ok(())
    }

    /// Row-major `(2e + 1)^2` kernel, rows axial.
    pub fn kernel(&self) -> Vec<f64> {
        let e = self.half_extent as isize;
        let (sa2, sl2) = (
            2.0 * self.sigma_axial * self.sigma_axial,
            2.0 * self.sigma_lateral * self.sigma_lateral,
        );
        let mut k = Vec::with_capacity(((2 * e + 1) * (2 * e + 1)) as usize);
        for dz in -e..=e {
            let dz = dz as f64;
            let axial = (-dz * dz / sa2).exp() * (2.0 * PI * self.center_freq * dz).cos();
            for dx in -e..=e {
                let dx = dx as f64;
                k.push(axial * (-dx * dx / sl2).exp());
            }
        }
        k
    }
}

/// Positions uniform over the phantom, amplitudes standard normal.
pub fn sample_scatterers(spec: &PhantomSpec, seed: u64) -> ScattererField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scatterers = (0..spec.num_scatterers)
        .map(|_| {
            let x_mm = rng.random::<f64>() * spec.width_mm;
            let z_mm = rng.random::<f64>() * spec.depth_mm;
            let amplitude: f64 = rng.sample(StandardNormal);
            Scatterer {
                x_mm,
                z_mm,
                amplitude,
            }
        })
        .collect();
    ScattererField { scatterers }
}

/// Zeroes the amplitude of every scatterer whose grid cell is 1 in `mask`.
pub fn apply_anechoic_mask(
    field: &ScattererField,
    mask: &RealImage,
    spec: &PhantomSpec,
) -> Result<ScattererField> {
    let grid = (spec.grid_width, spec.grid_height);
    if mask.dims() != grid {
        return Err(Error::DimensionMismatch {
            left: mask.dims(),
            right: grid,
        });
    }
    if mask.data().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::NonBinaryMask);
    }
    let scatterers = field
        .scatterers
        .iter()
        .map(|s| {
            let (col, row) = spec.pixel_of(s.x_mm, s.z_mm);
            if mask.get(col, row) == 1.0 {
                Scatterer { amplitude: 0.0, ..*s }
            } else {
                *s
            }
        })
        .collect();
    Ok(ScattererField { scatterers })
}

/// Scatterer amplitudes summed into their grid cells.
pub fn bin_scatterers(field: &ScattererField, spec: &PhantomSpec) -> Vec<f64> {
    let mut grid = vec![0.0; spec.grid_width * spec.grid_height];
    for s in &field.scatterers {
        let (col, row) = spec.pixel_of(s.x_mm, s.z_mm);
        grid[row * spec.grid_width + col] += s.amplitude;
    }
    grid
}

/// RF image: binned scatterers convolved with the PSF, zero outside the
/// grid.
pub fn rf_image(field: &ScattererField, spec: &PhantomSpec, psf: &PsfSpec) -> Result<RealImage> {
    spec.validate()?;
    psf.validate()?;
    let (w, h) = (spec.grid_width, spec.grid_height);
    let binned = bin_scatterers(field, spec);
    let kernel = psf.kernel();
    let e = psf.half_extent as isize;
    let kw = (2 * e + 1) as usize;

    let mut out = vec![0.0; w * h];
    for row in 0..h as isize {
        for col in 0..w as isize {
            let a = binned[row as usize * w + col as usize];
            if a == 0.0 {
                continue;
            }
            let x0 = (col - e).max(0);
            let x1 = (col + e).min(w as isize - 1);
            let k0 = (x0 - (col - e)) as usize;
            let span = (x1 - x0 + 1) as usize;
            for dz in -e..=e {
                let r = row + dz;
                if r < 0 || r >= h as isize {
                    continue;
                }
                let krow = &kernel[(dz + e) as usize * kw + k0..][..span];
                let orow = &mut out[r as usize * w + x0 as usize..][..span];
                for (o, k) in orow.iter_mut().zip(krow) {
                    *o += a * k;
                }
            }
        }
    }
    RealImage::new(w, h, out)
}

/// Magnitude of the analytic signal of every column (axial lines).
pub fn envelope(rf: &RealImage) -> Result<RealImage> {
    let (w, h) = rf.dims();
    ensure_even(w, h)?;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(h);
    let inv = planner.plan_fft_inverse(h);

    // One column per contiguous chunk.
    let mut cols: Vec<Complex64> = (0..w)
        .flat_map(|x| (0..h).map(move |y| (x, y)))
        .map(|(x, y)| Complex64::new(rf.get(x, y), 0.0))
        .collect();
    fwd.process(&mut cols);
    for col in cols.chunks_exact_mut(h) {
        for (k, c) in col.iter_mut().enumerate() {
            let gain = match k {
                0 => 1.0,
                k if k == h / 2 => 1.0,
                k if k < h / 2 => 2.0,
                _ => 0.0,
            };
            *c *= gain;
        }
    }
    inv.process(&mut cols);

    let scale = 1.0 / h as f64;
    RealImage::from_fn(w, h, |x, y| cols[x * h + y].norm() * scale)
}

/// Decibel compression of an envelope onto `[0, 1]`: the envelope peak maps
/// to 1 and `dynamic_range_db` below it (or less) to 0. An all-zero
/// envelope stays all-zero.
pub fn log_compress(env: &RealImage, dynamic_range_db: f64) -> Result<RealImage> {
    if !(dynamic_range_db > 0.0 && dynamic_range_db.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dynamic range {dynamic_range_db} dB must be positive"
        )));
    }
    let peak = env.data().iter().fold(0.0f64, |m, &v| m.max(v));
    if peak <= 0.0 {
        return RealImage::filled(env.width(), env.height(), 0.0);
    }
    env.map(|v| {
        if v <= 0.0 {
            0.0
        } else {
            ((20.0 * (v / peak).log10() + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0)
        }
    })
}

pub fn render_envelope(field: &ScattererField, spec: &PhantomSpec, psf: &PsfSpec) -> Result<RealImage> {
    envelope(&rf_image(field, spec, psf)?)
}

/// Full B-mode render: RF convolution, envelope detection, log compression.
pub fn render_bmode(
    field: &ScattererField,
    spec: &PhantomSpec,
    psf: &PsfSpec,
    dynamic_range_db: f64,
) -> Result<RealImage> {
    log_compress(&render_envelope(field, spec, psf)?, dynamic_range_db)
}
