use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use phaseswap::bench::{self, BenchConfig};
use phaseswap::dataset::{self, DatasetOptions, ResampleMode, SplitSpec};
use phaseswap::metrics::{self, BinaryMask};
use phaseswap::speckle::{self, PhantomSpec, PsfSpec};
use phaseswap::{io, phase_sim, AlphaParam, RealImage};

use crate::config::{parse_size, resolve_seed, FileConfig};
use crate::{BenchArgs, Cli, CliError, Command, DatasetArgs, DscArgs, MaskArgs, SimulateArgs, SpeckleArgs};

const DEFAULT_SIZE: (usize, usize) = (256, 256);

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Simulate(a) => simulate(a, &file),
        Command::Dataset(a) => dataset(a, &file),
        Command::Mask(a) => mask(a, &file),
        Command::Speckle(a) => speckle(a, &file),
        Command::Dsc(a) => dsc(a, &file),
        Command::Bench(a) => bench(a, &file),
    }
}

fn alpha(flag: Option<f64>, file: &FileConfig) -> Result<AlphaParam, CliError> {
    let v = flag.or(file.alpha).unwrap_or(phaseswap::DEFAULT_ALPHA);
    Ok(AlphaParam::new(v)?)
}

fn size(flag: Option<&str>, file: &FileConfig) -> Result<(usize, usize), CliError> {
    let (w, h) = match flag {
        Some(s) => parse_size(s).map_err(CliError::Validation)?,
        None => file.size.unwrap_or(DEFAULT_SIZE),
    };
    if w < 2 || h < 2 || w % 2 != 0 || h % 2 != 0 {
        return Err(CliError::Validation(format!(
            "size {w}x{h} must be even and at least 2x2"
        )));
    }
    Ok((w, h))
}

fn scatterer_count(n: i64) -> Result<usize, CliError> {
    usize::try_from(n).map_err(|_| CliError::Validation(format!("scatterer count {n} is negative")))
}

/// Seconds since the epoch for manifests; taken from `SOURCE_DATE_EPOCH`
/// so reruns stay byte-identical.
fn created_at() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn simulate(a: SimulateArgs, file: &FileConfig) -> Result<(), CliError> {
    let alpha = alpha(a.alpha, file)?;
    let invert = a.invert_mask || file.invert_mask_polarity.unwrap_or(false);
    let mut real = io::read_gray(&a.real)?;
    let mut mask = io::read_gray(&a.mask)?;

    if a.resize {
        let (w, h) = size(a.size.as_deref(), file)?;
        real = dataset::resample(&real, w, h, ResampleMode::Bilinear)?;
        mask = dataset::resample(&mask, w, h, ResampleMode::Nearest)?;
    } else if real.dims() != mask.dims() {
        return Err(CliError::Validation(format!(
            "real image is {}x{} but mask is {}x{}; pass --resize",
            real.width(),
            real.height(),
            mask.width(),
            mask.height()
        )));
    }

    let gt = dataset::binarize_mask(&mask, dataset::MASK_THRESHOLD);
    let source = dataset::phase_source(&gt, invert);
    let out = phase_sim::simulate(&real, &source, alpha)?;
    io::write_gray(&a.out, &out)?;
    Ok(())
}

fn dataset(a: DatasetArgs, file: &FileConfig) -> Result<(), CliError> {
    let alpha = alpha(a.alpha, file)?;
    let (w, h) = size(a.size.as_deref(), file)?;
    let seed = resolve_seed(a.seed, file)?;
    let out_dir = a
        .out_dir
        .clone()
        .or_else(|| file.output_dir.clone())
        .ok_or_else(|| CliError::Validation("no output directory given".into()))?;
    if a.jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }

    let masks = dataset::list_images(&a.masks_dir)?;
    let images = dataset::list_images(&a.images_dir)?;
    let split = match a.split.as_deref() {
        Some([train, val]) => SplitSpec::new(*train, *val),
        _ => SplitSpec::new(masks.len(), 0),
    };
    split.check(masks.len())?;

    let opts = DatasetOptions {
        out_dir: out_dir.clone(),
        target_width: w,
        target_height: h,
        global_seed: seed,
        invert_mask_polarity: a.invert_mask || file.invert_mask_polarity.unwrap_or(false),
        jobs: a.jobs,
        created_at: created_at(),
    };
    let records = dataset::pair_random(&masks, &images, seed, alpha)?;

    let last_pct = AtomicUsize::new(0);
    let quiet = a.quiet;
    let result = dataset::generate_dataset_with_progress(records, split, &opts, |done, total| {
        let pct = done * 100 / total;
        if !quiet && pct / 10 > last_pct.fetch_max(pct / 10, Ordering::Relaxed) {
            eprintln!("dataset: {pct}% ({done}/{total})");
        }
    });
    match result {
        Ok(m) => {
            println!(
                "wrote {} records ({} train, {} val) to {}",
                m.records.len(),
                m.count(dataset::Split::Train),
                m.count(dataset::Split::Val),
                out_dir.display()
            );
            Ok(())
        }
        Err(e) => {
            if let phaseswap::Error::PartialOutput { written, total, .. } = &e {
                eprintln!(
                    "partial output: {written} of {total} records written under {}",
                    out_dir.display()
                );
            }
            Err(e.into())
        }
    }
}

fn mask(a: MaskArgs, file: &FileConfig) -> Result<(), CliError> {
    let alpha = alpha(a.alpha, file)?;
    let (w, h) = size(a.size.as_deref(), file)?;
    let m = phase_sim::build_lowfreq_mask(w, h, alpha)?;
    let img = RealImage::new(w, h, m.data().iter().map(|&v| v as f64).collect())?;
    io::write_mask(&a.out, &img)?;
    println!("{} of {} bins selected", m.count(), w * h);
    Ok(())
}

fn speckle(a: SpeckleArgs, file: &FileConfig) -> Result<(), CliError> {
    let (w, h) = size(a.size.as_deref(), file)?;
    let spec = PhantomSpec {
        width_mm: a.width_mm,
        depth_mm: a.depth_mm,
        num_scatterers: scatterer_count(a.scatterers)?,
        grid_width: w,
        grid_height: h,
    };
    spec.validate()?;
    let psf = PsfSpec::new(a.center_freq, a.sigma_axial, a.sigma_lateral);
    psf.validate()?;
    let seed = resolve_seed(a.seed, file)?;

    let mut field = speckle::sample_scatterers(&spec, seed);
    if let Some(path) = &a.mask {
        let gt = dataset::ground_truth(&io::read_gray(path)?, w, h)?;
        field = speckle::apply_anechoic_mask(&field, &gt, &spec)?;
    }
    let img = speckle::render_bmode(&field, &spec, &psf, a.dynamic_range_db)?;
    io::write_gray(&a.out, &img)?;
    Ok(())
}

fn read_binary(path: &Path) -> Result<BinaryMask, CliError> {
    let img = io::read_gray(path)?;
    Ok(BinaryMask::from_image(&dataset::binarize_mask(
        &img,
        dataset::MASK_THRESHOLD,
    ))?)
}

fn dsc(a: DscArgs, file: &FileConfig) -> Result<(), CliError> {
    let eps = a.epsilon.or(file.epsilon).unwrap_or(metrics::DEFAULT_EPSILON);
    let value = metrics::dsc(&read_binary(&a.a)?, &read_binary(&a.b)?, eps)?;
    println!("{value:.6}");
    Ok(())
}

fn bench(a: BenchArgs, file: &FileConfig) -> Result<(), CliError> {
    let sizes = if a.size.is_empty() { vec![DEFAULT_SIZE.0] } else { a.size.clone() };
    let cfg = BenchConfig {
        iterations: a.iters,
        baseline_iterations: a.baseline_iters,
        warmup: a.warmup,
        scatterers: scatterer_count(a.scatterers)?,
        seed: resolve_seed(a.seed, file)?,
        alpha: alpha(a.alpha, file)?,
        jobs: a.jobs,
    };
    let report = bench::compare(&sizes, &cfg)?;
    print!("{}", report.table());
    if let Some(path) = &a.json {
        std::fs::write(path, report.to_json()?)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
