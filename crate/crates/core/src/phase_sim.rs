//! Low-frequency phase substitution.
//!
//! The simulated image keeps the Fourier magnitude of a real ultrasound
//! image everywhere, keeps its phase outside a centered ellipse, and takes
//! the phase inside the ellipse from a mask image. The ellipse has
//! semi-axes `alpha * W / 2` and `alpha * H / 2` in bins.

use std::f64::consts::SQRT_2;
use std::fmt;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, ensure_even, RealImage};

/// Default fraction of the half-spectrum whose phase is replaced.
pub const DEFAULT_ALPHA: f64 = 0.11;

/// Ellipse scale, restricted to `[0, sqrt(2)]`. At `sqrt(2)` the ellipse
/// reaches the corner bins of an even grid and covers everything.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AlphaParam(f64);

impl AlphaParam {
    pub const MAX: f64 = SQRT_2;

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=Self::MAX).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for AlphaParam {
    fn default() -> Self {
        Self(DEFAULT_ALPHA)
    }
}

impl TryFrom<f64> for AlphaParam {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AlphaParam> for f64 {
    fn from(a: AlphaParam) -> f64 {
        a.0
    }
}

impl fmt::Display for AlphaParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Binary selection grid over a DC-centered spectrum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl PhaseMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Number of selected bins.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Builds a mask from raw values. Used for hand-made selections in
    /// tests and tooling; values must be 0 or 1.
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} values for a {width}x{height} mask",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::NonBinaryMask);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

/// Closed ellipse of scale `alpha` centered on the zero-frequency bin.
///
/// `alpha == 0` yields the empty mask.
pub fn build_lowfreq_mask(width: usize, height: usize, alpha: AlphaParam) -> Result<PhaseMask> {
    ensure_even(width, height)?;
    let alpha = alpha.value();
    let mut data = vec![0u8; width * height];
    if alpha > 0.0 {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let (ax, ay) = (alpha * cx, alpha * cy);
        let (ax2, ay2) = (ax * ax, ay * ay);
        for y in 0..height {
            let dy = y as f64 - cy;
            let ty = dy * dy / ay2;
            for x in 0..width {
                let dx = x as f64 - cx;
                if dx * dx / ax2 + ty <= 1.0 {
                    data[y * width + x] = 1;
                }
            }
        }
    }
    Ok(PhaseMask {
        width,
        height,
        data,
    })
}

/// Per-bin selection: `phase_mask_img` where the mask is set, `phase_real`
/// elsewhere.
pub fn blend_phase(phase_real: &[f64], phase_mask_img: &[f64], m: &PhaseMask) -> Result<Vec<f64>> {
    let n = m.data.len();
    for len in [phase_real.len(), phase_mask_img.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                left: (len, 1),
                right: (n, 1),
            });
        }
    }
    Ok(m.data
        .iter()
        .zip(phase_real.iter().zip(phase_mask_img))
        .map(|(&sel, (&pr, &pm))| if sel == 1 { pm } else { pr })
        .collect())
}

/// Output of the simulator before display normalization.
#[derive(Debug, Clone)]
pub struct RawSimulation {
    pub image: RealImage,
    /// Largest absolute imaginary component left by the inverse transform.
    pub imag_residual: f64,
}

/// Simulates an image and min-max normalizes it to `[0, 1]`.
pub fn simulate(real_img: &RealImage, mask_img: &RealImage, alpha: AlphaParam) -> Result<RealImage> {
    let m = build_lowfreq_mask(real_img.width(), real_img.height(), alpha)?;
    simulate_with_mask(real_img, mask_img, &m)
}

/// Same as [`simulate`] with a prebuilt phase mask, for batch use.
pub fn simulate_with_mask(real_img: &RealImage, mask_img: &RealImage, m: &PhaseMask) -> Result<RealImage> {
    simulate_raw(real_img, mask_img, m).map(|raw| normalize_owned(raw.image))
}

fn check_inputs(real_img: &RealImage, mask_img: &RealImage, m: &PhaseMask) -> Result<()> {
    if real_img.dims() != mask_img.dims() {
        return Err(Error::DimensionMismatch {
            left: real_img.dims(),
            right: mask_img.dims(),
        });
    }
    ensure_even(real_img.width(), real_img.height())?;
    if real_img.dims() != m.dims() {
        return Err(Error::DimensionMismatch {
            left: real_img.dims(),
            right: m.dims(),
        });
    }
    Ok(())
}

/// Pre-normalization simulation.
///
/// Both images go through one complex FFT (real image in the real part,
/// mask image in the imaginary part) and are separated through Hermitian
/// symmetry. Unselected bins keep the real image's value as is; selected
/// bins get its magnitude with the mask image's unit phasor, or phase 0
/// where the mask spectrum vanishes. The result equals the polar
/// composition in [`simulate_raw_reference`] up to rounding.
pub fn simulate_raw(real_img: &RealImage, mask_img: &RealImage, m: &PhaseMask) -> Result<RawSimulation> {
    check_inputs(real_img, mask_img, m)?;
    let (w, h) = real_img.dims();
    let mut z = fft::take_buffer(w * h);
    for ((c, &r), &i) in z.iter_mut().zip(real_img.data()).zip(mask_img.data()) {
        *c = Complex64::new(r, i);
    }
    fft::fft2_transposed(w, h, &mut z);

    // Column-major natural order from here on: bin (kx, ky) at kx * h + ky.
    // Each bin and its mirror are rewritten together, in place.
    let (hw, hh) = (w / 2, h / 2);
    let selected = |kx: usize, ky: usize| m.get((kx + hw) % w, (ky + hh) % h) == 1;
    for kx in 0..w {
        let mx = (w - kx) % w;
        for ky in 0..h {
            let my = (h - ky) % h;
            let (i, j) = (kx * h + ky, mx * h + my);
            if j < i {
                continue;
            }
            let (zi, zj) = (z[i], z[j]);
            z[i] = substitute(zi, zj, selected(kx, ky));
            if j != i {
                z[j] = substitute(zj, zi, selected(mx, my));
            }
        }
    }

    fft::ifft2_from_transposed(w, h, &mut z);
    let (image, imag_residual) = fft::real_part(w, h, &z)?;
    fft::recycle(z);
    Ok(RawSimulation {
        image,
        imag_residual,
    })
}

/// New value of a bin given the packed spectrum at the bin (`z`) and at its
/// mirror (`zm`).
#[inline]
fn substitute(z: Complex64, zm: Complex64, selected: bool) -> Complex64 {
    // Real image: (Z(k) + conj Z(-k)) / 2.
    let real_bin = (z + zm.conj()) * 0.5;
    if !selected {
        return real_bin;
    }
    // Mask image: (Z(k) - conj Z(-k)) / 2i.
    let d = z - zm.conj();
    let mask_bin = Complex64::new(0.5 * d.im, -0.5 * d.re);
    let magnitude = real_bin.norm();
    let mask_norm = mask_bin.norm();
    if mask_norm == 0.0 {
        Complex64::new(magnitude, 0.0)
    } else {
        mask_bin * (magnitude / mask_norm)
    }
}

/// Literal composition through the polar representation: forward
/// transforms of both images, [`blend_phase`], [`fft::from_polar`] and the
/// inverse transform. Slower than [`simulate_raw`]; kept as the reference
/// route.
pub fn simulate_raw_reference(real_img: &RealImage, mask_img: &RealImage, m: &PhaseMask) -> Result<RawSimulation> {
    check_inputs(real_img, mask_img, m)?;
    let real_polar = fft::to_polar(&fft::forward_transform(real_img)?);
    let mask_polar = fft::to_polar(&fft::forward_transform(mask_img)?);
    let phase = blend_phase(&real_polar.phase, &mask_polar.phase, m)?;

    let blended = fft::PolarSpectrum {
        phase,
        ..real_polar
    };
    let (image, imag_residual) = fft::inverse_transform_with_residual(&fft::from_polar(&blended)?)?;
    Ok(RawSimulation {
        image,
        imag_residual,
    })
}

/// Affine min-max map onto `[0, 1]`; constant images map to zeros.
pub fn normalize_output(img: &RealImage) -> RealImage {
    normalize_owned(img.clone())
}

fn normalize_owned(img: RealImage) -> RealImage {
    let (lo, hi) = img.min_max();
    let range = hi - lo;
    let (w, h) = img.dims();
    let mut data = img.into_data();
    for v in &mut data {
        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
    }
    RealImage::new(w, h, data).expect("normalization keeps values finite")
}
