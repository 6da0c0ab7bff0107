//! Grayscale image files (PNG, binary PGM) to and from [`RealImage`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, GrayImage, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::fft::RealImage;

/// File extensions accepted when scanning input directories.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "pgm"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
        .unwrap_or(false)
}

/// Loads an image as grayscale with values in `[0, 1]`.
pub fn read_gray(path: &Path) -> Result<RealImage> {
    let unreadable = |reason: String| Error::UnreadableImage {
        path: path.to_path_buf(),
        reason,
    };
    let img = ImageReader::open(path)
        .map_err(|e| unreadable(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| unreadable(e.to_string()))?
        .decode()
        .map_err(|e| unreadable(e.to_string()))?;

    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        other => other
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
    };
    RealImage::new(w, h, data).map_err(|e| unreadable(e.to_string()))
}

/// Quantizes `[0, 1]` values to 8 bits; out-of-range values are clamped.
pub fn quantize(img: &RealImage) -> Vec<u8> {
    img.data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Writes an 8-bit grayscale image. The format follows the extension
/// (`.pgm` gives binary P5), PNG otherwise.
pub fn write_gray(path: &Path, img: &RealImage) -> Result<()> {
    write_bytes(path, img.width(), img.height(), quantize(img))
}

/// Writes a binary mask as `{0, 255}`.
pub fn write_mask(path: &Path, mask: &RealImage) -> Result<()> {
    let bytes = mask
        .data()
        .iter()
        .map(|&v| if v > 0.5 { 255 } else { 0 })
        .collect();
    write_bytes(path, mask.width(), mask.height(), bytes)
}

fn write_bytes(path: &Path, width: usize, height: usize, bytes: Vec<u8>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let buf = GrayImage::from_raw(width as u32, height as u32, bytes)
        .expect("buffer length matches dimensions");
    let encode_err = |reason: String| Error::Encode {
        path: path.to_path_buf(),
        reason,
    };
    match ImageFormat::from_path(path) {
        Ok(ImageFormat::Pnm) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            PnmEncoder::new(&mut w)
                .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                .write_image(buf.as_raw(), buf.width(), buf.height(), ExtendedColorType::L8)
                .map_err(|e| encode_err(e.to_string()))?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        _ => buf
            .save_with_format(path, ImageFormat::Png)
            .map_err(|e| encode_err(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_pgm_round_trip_8bit_values() {
        let dir = tempfile::tempdir().unwrap();
        let img = RealImage::from_fn(6, 4, |x, y| ((x * 4 + y) * 10) as f64 / 255.0).unwrap();
        for name in ["a.png", "b.pgm"] {
            let p = dir.path().join(name);
            write_gray(&p, &img).unwrap();
            let back = read_gray(&p).unwrap();
            assert_eq!(back.dims(), (6, 4));
            for (a, b) in back.data().iter().zip(img.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let pgm = std::fs::read(dir.path().join("b.pgm")).unwrap();
        assert_eq!(&pgm[..2], b"P5");
    }

    #[test]
    fn corrupt_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        std::fs::write(&p, b"not an image").unwrap();
        match read_gray(&p) {
            Err(Error::UnreadableImage { path, .. }) => assert_eq!(path, p),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quantize_clamps() {
        let img = RealImage::new(2, 2, vec![-0.5, 0.5, 1.0, 3.0]).unwrap();
        assert_eq!(quantize(&img), vec![0, 128, 255, 255]);
    }
}
