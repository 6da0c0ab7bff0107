//! Synthetic dataset generation.
//!
//! Masks and real images are read from two directories, resampled to a
//! common even size and paired at random with a seeded generator. Each
//! pair is run through the phase-substitution simulator, and the outputs
//! are written as
//!
//! ```text
//! <out>/images/NNNN.png   simulated image, 8-bit grayscale
//! <out>/masks/NNNN.png    ground truth, {0, 255}
//! <out>/manifest.json
//! <out>/split.csv         filename,split
//! ```
//!
//! Everything is a function of the inputs and the global seed: pairing and
//! the train/val shuffle are drawn up front, so the per-record work can run
//! on any number of threads without changing a byte of output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{ensure_even, RealImage};
use crate::io;
use crate::phase_sim::{self, AlphaParam};

/// Threshold used when binarizing mask files.
pub const MASK_THRESHOLD: f64 = 0.5;

/// Stream ids for the two independent draws made from the global seed.
const PAIRING_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub path: PathBuf,
    pub image: RealImage,
}

/// Image files (PNG/PGM) in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && io::is_image_path(&path) {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every image in `dir` as grayscale in `[0, 1]`, in file-name order.
pub fn ingest_images(dir: &Path) -> Result<Vec<LoadedImage>> {
    list_images(dir)?
        .into_iter()
        .map(|path| {
            let image = io::read_gray(&path)?;
            Ok(LoadedImage { path, image })
        })
        .collect()
}

/// 1 where the input is strictly above `threshold`, 0 elsewhere.
pub fn binarize_mask(img: &RealImage, threshold: f64) -> RealImage {
    img.map(|v| if v > threshold { 1.0 } else { 0.0 })
        .expect("binary values are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    Bilinear,
    Nearest,
}

/// Resizes to `width x height` (both even) with pixel-center alignment and
/// edge clamping.
pub fn resample(img: &RealImage, width: usize, height: usize, mode: ResampleMode) -> Result<RealImage> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidParameter(format!(
            "target size {width}x{height} below 2x2"
        )));
    }
    ensure_even(width, height)?;
    if img.dims() == (width, height) {
        return Ok(img.clone());
    }

    let (sw, sh) = img.dims();
    let (scale_x, scale_y) = (sw as f64 / width as f64, sh as f64 / height as f64);
    match mode {
        ResampleMode::Nearest => {
            let xs: Vec<usize> = (0..width)
                .map(|x| (((x as f64 + 0.5) * scale_x) as usize).min(sw - 1))
                .collect();
            RealImage::from_fn(width, height, |x, y| {
                let sy = (((y as f64 + 0.5) * scale_y) as usize).min(sh - 1);
                img.get(xs[x], sy)
            })
        }
        ResampleMode::Bilinear => {
            let taps = |d: usize, scale: f64, n: usize| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
                let i0 = s.floor() as usize;
                (i0, (i0 + 1).min(n - 1), s - i0 as f64)
            };
            let xs: Vec<_> = (0..width).map(|x| taps(x, scale_x, sw)).collect();
            RealImage::from_fn(width, height, |x, y| {
                let (y0, y1, fy) = taps(y, scale_y, sh);
                let (x0, x1, fx) = xs[x];
                let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
                let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
                top * (1.0 - fy) + bottom * fy
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

/// Provenance of one simulated image. Output paths are relative to the
/// dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub mask_path: PathBuf,
    pub image_path: PathBuf,
    pub alpha: AlphaParam,
    pub seed: u64,
    pub output_image_path: PathBuf,
    pub output_mask_path: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_count: usize,
    pub val_count: usize,
}

impl SplitSpec {
    pub fn new(train_count: usize, val_count: usize) -> Self {
        Self {
            train_count,
            val_count,
        }
    }

    pub fn check(&self, total: usize) -> Result<()> {
        if self.train_count + self.val_count != total {
            return Err(Error::SplitMismatch {
                train: self.train_count,
                val: self.val_count,
                total,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub records: Vec<PairRecord>,
    pub target_width: usize,
    pub target_height: usize,
    pub global_seed: u64,
    /// Seconds since the Unix epoch, supplied by the caller.
    pub created_at: u64,
}

impl DatasetManifest {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn split_csv(&self) -> String {
        let mut out = String::from("filename,split\n");
        for r in &self.records {
            let name = r
                .output_image_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push_str(&format!("{name},{}\n", r.split));
        }
        out
    }

    pub fn count(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }
}

fn index_width(total: usize) -> usize {
    total.saturating_sub(1).to_string().len().max(4)
}

/// Pairs every mask with a real image drawn uniformly, with replacement,
/// from a generator seeded by `global_seed`. Records start in the train
/// split; [`generate_dataset`] assigns the final split.
pub fn pair_random(
    masks: &[PathBuf],
    images: &[PathBuf],
    global_seed: u64,
    alpha: AlphaParam,
) -> Result<Vec<PairRecord>> {
    if masks.is_empty() {
        return Err(Error::EmptyList("masks"));
    }
    if images.is_empty() {
        return Err(Error::EmptyList("images"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(global_seed);
    rng.set_stream(PAIRING_STREAM);
    let width = index_width(masks.len());

    Ok(masks
        .iter()
        .enumerate()
        .map(|(i, mask)| {
            let pick = rng.random_range(0..images.len());
            let seed = rng.next_u64();
            let name = format!("{i:0width$}.png");
            PairRecord {
                mask_path: mask.clone(),
                image_path: images[pick].clone(),
                alpha,
                seed,
                output_image_path: Path::new("images").join(&name),
                output_mask_path: Path::new("masks").join(&name),
                split: Split::Train,
            }
        })
        .collect())
}

/// Seeded train/val assignment: a shuffled permutation of the record
/// indices, the first `train_count` of which go to train.
pub fn assign_splits(records: &mut [PairRecord], split: SplitSpec, global_seed: u64) -> Result<()> {
    split.check(records.len())?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(global_seed);
    rng.set_stream(SPLIT_STREAM);
    order.shuffle(&mut rng);
    for (rank, &i) in order.iter().enumerate() {
        records[i].split = if rank < split.train_count {
            Split::Train
        } else {
            Split::Val
        };
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub out_dir: PathBuf,
    pub target_width: usize,
    pub target_height: usize,
    pub global_seed: u64,
    /// Use the binarized mask directly as the phase source instead of its
    /// complement. By default lesions (mask = 1) are simulated dark.
    pub invert_mask_polarity: bool,
    pub jobs: usize,
    pub created_at: u64,
}

impl DatasetOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            target_width: 256,
            target_height: 256,
            global_seed: 0,
            invert_mask_polarity: false,
            jobs: 1,
            created_at: 0,
        }
    }
}

/// Resampled binary ground truth for a mask image.
pub fn ground_truth(mask: &RealImage, width: usize, height: usize) -> Result<RealImage> {
    Ok(binarize_mask(
        &resample(mask, width, height, ResampleMode::Nearest)?,
        MASK_THRESHOLD,
    ))
}

/// Phase source for the simulator: lesion interior 0, background 1, unless
/// the polarity is inverted.
pub fn phase_source(ground_truth: &RealImage, invert_mask_polarity: bool) -> RealImage {
    if invert_mask_polarity {
        ground_truth.clone()
    } else {
        ground_truth.map(|v| 1.0 - v).expect("binary values are finite")
    }
}

/// Simulates and writes every record, then writes the manifest and split
/// file. The records' split fields are (re)assigned from the seed.
pub fn generate_dataset(
    records: Vec<PairRecord>,
    split: SplitSpec,
    opts: &DatasetOptions,
) -> Result<DatasetManifest> {
    generate_dataset_with_progress(records, split, opts, |_, _| {})
}

pub fn generate_dataset_with_progress(
    mut records: Vec<PairRecord>,
    split: SplitSpec,
    opts: &DatasetOptions,
    on_progress: impl Fn(usize, usize) + Sync,
) -> Result<DatasetManifest> {
    let (tw, th) = (opts.target_width, opts.target_height);
    if tw < 2 || th < 2 {
        return Err(Error::InvalidParameter(format!("target size {tw}x{th} below 2x2")));
    }
    ensure_even(tw, th)?;
    if opts.jobs == 0 {
        return Err(Error::InvalidParameter("jobs must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(Error::EmptyList("records"));
    }
    assign_splits(&mut records, split, opts.global_seed)?;

    // Each distinct real image is loaded and resampled once.
    let mut sources: BTreeMap<&Path, RealImage> = BTreeMap::new();
    for r in &records {
        if !sources.contains_key(r.image_path.as_path()) {
            let img = io::read_gray(&r.image_path)?;
            let img = resample(&img, tw, th, ResampleMode::Bilinear)?;
            sources.insert(r.image_path.as_path(), img);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let written = AtomicUsize::new(0);
    let total = records.len();

    let outcome: Result<()> = pool.install(|| {
        records.par_iter().try_for_each(|r| {
            let gt = ground_truth(&io::read_gray(&r.mask_path)?, tw, th)?;
            let phase_img = phase_source(&gt, opts.invert_mask_polarity);
            let m = phase_sim::build_lowfreq_mask(tw, th, r.alpha)?;
            let sim = phase_sim::simulate_with_mask(&sources[r.image_path.as_path()], &phase_img, &m)?;
            io::write_gray(&opts.out_dir.join(&r.output_image_path), &sim)?;
            io::write_mask(&opts.out_dir.join(&r.output_mask_path), &gt)?;
            let done = written.fetch_add(1, Ordering::Relaxed) + 1;
            on_progress(done, total);
            Ok(())
        })
    });
    if let Err(e) = outcome {
        return Err(Error::PartialOutput {
            written: written.load(Ordering::Relaxed),
            total,
            source: Box::new(e),
        });
    }

    let manifest = DatasetManifest {
        records,
        target_width: tw,
        target_height: th,
        global_seed: opts.global_seed,
        created_at: opts.created_at,
    };
    let manifest_path = opts.out_dir.join("manifest.json");
    std::fs::write(&manifest_path, manifest.to_json()?).map_err(|e| Error::io(&manifest_path, e))?;
    let split_path = opts.out_dir.join("split.csv");
    std::fs::write(&split_path, manifest.split_csv()).map_err(|e| Error::io(&split_path, e))?;
    Ok(manifest)
}

/// Full pipeline from two input directories.
pub fn run_dataset(
    masks_dir: &Path,
    images_dir: &Path,
    split: SplitSpec,
    alpha: AlphaParam,
    opts: &DatasetOptions,
    on_progress: impl Fn(usize, usize) + Sync,
) -> Result<DatasetManifest> {
    let masks = list_images(masks_dir)?;
    let images = list_images(images_dir)?;
    split.check(masks.len())?;
    let records = pair_random(&masks, &images, opts.global_seed, alpha)?;
    generate_dataset_with_progress(records, split, opts, on_progress)
}
