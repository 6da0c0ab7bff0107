//! 2D discrete Fourier analysis and synthesis.
//!
//! Spectra are always stored DC-centered: the zero-frequency bin sits at
//! `(width / 2, height / 2)` and bin `(x, y)` holds frequency
//! `(x - width / 2, y - height / 2)`. The forward transform is unnormalized,
//! the inverse carries the `1 / (width * height)` factor.
//!
//! Both dimensions must be even. On even grids the conjugate mirror of a
//! centered bin `(x, y)` is `((W - x) mod W, (H - y) mod H)`, the same map
//! that fixes the elliptical low-frequency mask, which is what keeps the
//! phase-substituted spectrum Hermitian.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Imaginary residual tolerated by [`inverse_transform`], relative to the
/// largest real output magnitude.
pub const NON_REAL_TOLERANCE: f64 = 1e-6;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    // Grid-sized buffers kept per thread; fresh large allocations cost a
    // page fault per 4 KiB on every call.
    static POOL: RefCell<Vec<Vec<Complex64>>> = const { RefCell::new(Vec::new()) };
}

/// Zeroed buffer of `len` values, reusing a pooled allocation if possible.
pub(crate) fn take_buffer(len: usize) -> Vec<Complex64> {
    let mut buf = POOL.with(|p| p.borrow_mut().pop()).unwrap_or_default();
    buf.clear();
    buf.resize(len, Complex64::default());
    buf
}

/// Returns a buffer to the per-thread pool.
pub(crate) fn recycle(buf: Vec<Complex64>) {
    POOL.with(|p| {
        let mut p = p.borrow_mut();
        if p.len() < 4 {
            p.push(buf);
        }
    });
}

/// A `width x height` grid of finite real values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidImage(format!(
                "image must be at least 2x2, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Returns a new image with `f` applied to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn ensure_even(&self) -> Result<()> {
        ensure_even(self.width, self.height)
    }
}

pub(crate) fn ensure_even(width: usize, height: usize) -> Result<()> {
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::OddDimension { width, height });
    }
    Ok(())
}

/// Index of the conjugate partner of bin `(x, y)` in a DC-centered even grid.
#[inline]
pub fn mirror_index(width: usize, height: usize, x: usize, y: usize) -> usize {
    ((height - y) % height) * width + (width - x) % width
}

/// Complex spectrum in DC-centered layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} bins for a {width}x{height} spectrum",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    /// Value at the zero-frequency bin.
    pub fn dc(&self) -> Complex64 {
        self.get(self.width / 2, self.height / 2)
    }
}

/// Magnitude and principal phase of a spectrum, in the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSpectrum {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    /// Principal argument in `(-pi, pi]`; zero wherever the magnitude is zero.
    pub phase: Vec<f64>,
}

impl PolarSpectrum {
    pub fn new(width: usize, height: usize, magnitude: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if n == 0 || magnitude.len() != n || phase.len() != n {
            return Err(Error::InvalidImage(format!(
                "polar spectrum {width}x{height} with {} magnitudes and {} phases",
                magnitude.len(),
                phase.len()
            )));
        }
        Ok(Self {
            width,
            height,
            magnitude,
            phase,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Forward 2D DFT of a real image, returned DC-centered.
pub fn forward_transform(img: &RealImage) -> Result<Spectrum> {
    img.ensure_even()?;
    let (w, h) = img.dims();
    let mut t: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_transposed(w, h, &mut t);

    // The transform of real data is exactly Hermitian; project onto that
    // subspace so rounding never breaks the symmetry. `t` is column-major.
    let (hw, hh) = (w / 2, h / 2);
    let mut out = vec![Complex64::default(); w * h];
    for x in 0..w {
        let mx = (w - x) % w;
        let cx = (x + hw) % w;
        for y in 0..h {
            let my = (h - y) % h;
            let v = (t[x * h + y] + t[mx * h + my].conj()) * 0.5;
            out[((y + hh) % h) * w + cx] = v;
        }
    }
    Spectrum::new(w, h, out)
}

/// Inverse 2D DFT; returns the real part.
///
/// Fails with [`Error::NonRealResult`] when the imaginary part is not
/// negligible, which means the spectrum was not Hermitian.
pub fn inverse_transform(spec: &Spectrum) -> Result<RealImage> {
    inverse_transform_with_residual(spec).map(|(img, _)| img)
}

/// Like [`inverse_transform`] but also reports the largest absolute
/// imaginary component of the inverse.
pub fn inverse_transform_with_residual(spec: &Spectrum) -> Result<(RealImage, f64)> {
    let (w, h) = spec.dims();
    ensure_even(w, h)?;
    let (hw, hh) = (w / 2, h / 2);
    // Undo the centering straight into column-major natural order.
    let mut t = vec![Complex64::default(); w * h];
    for y in 0..h {
        let ny = (y + hh) % h;
        for x in 0..w {
            t[((x + hw) % w) * h + ny] = spec.data[y * w + x];
        }
    }
    ifft2_from_transposed(w, h, &mut t);
    real_part(w, h, &t)
}

/// Scales by `1 / (w * h)`, keeps the real part and checks the imaginary
/// residual.
pub(crate) fn real_part(w: usize, h: usize, buf: &[Complex64]) -> Result<(RealImage, f64)> {
    let scale = 1.0 / (w * h) as f64;
    let mut residual = 0.0f64;
    let mut peak = 0.0f64;
    let data: Vec<f64> = buf
        .iter()
        .map(|c| {
            let re = c.re * scale;
            residual = residual.max((c.im * scale).abs());
            peak = peak.max(re.abs());
            re
        })
        .collect();

    let limit = NON_REAL_TOLERANCE * peak;
    if residual > limit {
        return Err(Error::NonRealResult { residual, limit });
    }
    Ok((RealImage::new(w, h, data)?, residual))
}

pub fn to_polar(spec: &Spectrum) -> PolarSpectrum {
    let (magnitude, phase) = spec
        .data()
        .iter()
        .map(|c| {
            let m = c.norm();
            let p = if m == 0.0 {
                0.0
            } else {
                let p = c.im.atan2(c.re);
                // atan2(-0, x<0) lands on -pi, outside the principal range.
                if p == -PI {
                    PI
                } else {
                    p
                }
            };
            (m, p)
        })
        .unzip();
    PolarSpectrum {
        width: spec.width(),
        height: spec.height(),
        magnitude,
        phase,
    }
}

pub fn from_polar(p: &PolarSpectrum) -> Result<Spectrum> {
    if let Some((index, &value)) = p
        .magnitude
        .iter()
        .enumerate()
        .find(|(_, m)| m.is_nan() || **m < 0.0)
    {
        return Err(Error::NegativeMagnitude { index, value });
    }
    let data = p
        .magnitude
        .iter()
        .zip(&p.phase)
        .map(|(&m, &ph)| {
            if m == 0.0 {
                Complex64::default()
            } else {
                let (s, c) = ph.sin_cos();
                Complex64::new(m * c, m * s)
            }
        })
        .collect();
    Spectrum::new(p.width, p.height, data)
}

/// Unnormalized forward 2D FFT of a row-major `w x h` buffer. On return
/// the buffer holds the spectrum column-major (bin `(kx, ky)` at
/// `kx * h + ky`), natural frequency order.
pub(crate) fn fft2_transposed(w: usize, h: usize, buf: &mut Vec<Complex64>) {
    let (row_fft, col_fft) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(w), p.plan_fft_forward(h))
    });
    row_fft.process(buf);
    let mut t = take_buffer(buf.len());
    transpose_into(w, h, buf, &mut t);
    col_fft.process(&mut t);
    recycle(std::mem::replace(buf, t));
}

/// Inverse of [`fft2_transposed`] without the `1 / (w * h)` factor: takes a
/// column-major spectrum and leaves a row-major image in the buffer.
pub(crate) fn ifft2_from_transposed(w: usize, h: usize, buf: &mut Vec<Complex64>) {
    let (row_fft, col_fft) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_inverse(w), p.plan_fft_inverse(h))
    });
    col_fft.process(buf);
    let mut t = take_buffer(buf.len());
    transpose_into(h, w, buf, &mut t);
    row_fft.process(&mut t);
    recycle(std::mem::replace(buf, t));
}

/// Row-major `w x h` into row-major `h x w`, in cache-sized tiles.
fn transpose_into(w: usize, h: usize, src: &[Complex64], dst: &mut [Complex64]) {
    const TILE: usize = 8;
    for y0 in (0..h).step_by(TILE) {
        for x0 in (0..w).step_by(TILE) {
            for y in y0..(y0 + TILE).min(h) {
                for x in x0..(x0 + TILE).min(w) {
                    dst[x * h + y] = src[y * w + x];
                }
            }
        }
    }
}
