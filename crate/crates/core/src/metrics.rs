//! Dice similarity coefficient.

use crate::error::{Error, Result};
use crate::fft::RealImage;

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// A `{0, 1}` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} values for a {width}x{height} mask",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Accepts images whose values are exactly 0 or 1.
    pub fn from_image(img: &RealImage) -> Result<Self> {
        let data = img
            .data()
            .iter()
            .map(|&v| match v {
                0.0 => Ok(false),
                1.0 => Ok(true),
                _ => Err(Error::NonBinaryMask),
            })
            .collect::<Result<_>>()?;
        Self::new(img.width(), img.height(), data)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

/// `(2|S ∩ Ŝ| + ε) / (|S| + |Ŝ| + ε)`.
pub fn dsc(s: &BinaryMask, s_hat: &BinaryMask, epsilon: f64) -> Result<f64> {
    if s.dims() != s_hat.dims() {
        return Err(Error::DimensionMismatch {
            left: s.dims(),
            right: s_hat.dims(),
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    let overlap = s.data.iter().zip(&s_hat.data).filter(|(a, b)| **a && **b).count();
    let total = s.count() + s_hat.count();
    Ok((2.0 * overlap as f64 + epsilon) / (total as f64 + epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(n: usize, on: impl Fn(usize) -> bool) -> BinaryMask {
        BinaryMask::new(n, 1, (0..n).map(on).collect()).unwrap()
    }

    #[test]
    fn identical_masks() {
        let a = mask(400, |i| i < 100);
        assert_eq!(dsc(&a, &a, DEFAULT_EPSILON).unwrap(), 1.0);
        let empty = mask(400, |_| false);
        assert_eq!(dsc(&empty, &empty, DEFAULT_EPSILON).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_masks() {
        let eps = DEFAULT_EPSILON;
        let a = mask(400, |i| i < 50);
        let b = mask(400, |i| (100..150).contains(&i));
        assert_eq!(dsc(&a, &b, eps).unwrap(), eps / (100.0 + eps));
    }

    #[test]
    fn half_overlap() {
        let eps = DEFAULT_EPSILON;
        let a = mask(400, |i| i < 100);
        let b = mask(400, |i| (50..150).contains(&i));
        assert_eq!(dsc(&a, &b, eps).unwrap(), (100.0 + eps) / (200.0 + eps));
    }

    #[test]
    fn mismatch_and_bad_epsilon() {
        let a = mask(4, |_| true);
        let b = mask(6, |_| true);
        assert!(matches!(dsc(&a, &b, 1e-6), Err(Error::DimensionMismatch { .. })));
        assert!(dsc(&a, &a, 0.0).is_err());
    }

    #[test]
    fn from_image_requires_binary() {
        let ok = RealImage::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(BinaryMask::from_image(&ok).unwrap().count(), 2);
        let bad = RealImage::new(2, 2, vec![0.0, 0.5, 1.0, 0.0]).unwrap();
        assert!(BinaryMask::from_image(&bad).is_err());
    }
}
