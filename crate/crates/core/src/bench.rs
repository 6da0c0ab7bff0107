//! Per-image latency of the phase-substitution simulator and the speckle
//! baseline.
//!
//! Inputs are generated from the seed before timing starts; the timed
//! closure only runs the simulation itself.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{ensure_even, RealImage};
use crate::phase_sim::{self, AlphaParam};
use crate::speckle::{self, PhantomSpec, PsfSpec, DEFAULT_DYNAMIC_RANGE_DB};

pub const DEFAULT_WARMUP: usize = 5;

/// What the speedup is measured against.
pub const BASELINE_LABEL: &str = "vs. in-repo convolutional baseline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PhaseSim,
    SpeckleBaseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PhaseSim => "phase_sim",
            Method::SpeckleBaseline => "speckle_baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub p95: f64,
}

impl Timings {
    /// Summary of per-iteration times in milliseconds. Median averages the
    /// two middle samples for even counts; p95 is nearest-rank.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2.0
        };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Some(Self {
            min: s[0],
            median,
            mean: s.iter().sum::<f64>() / n as f64,
            p95: s[rank - 1],
        })
    }

    fn scaled(self, k: f64) -> Self {
        Self {
            min: self.min * k,
            median: self.median * k,
            mean: self.mean * k,
            p95: self.p95 * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub method: Method,
    pub image_size: usize,
    pub iterations: usize,
    pub warmup: usize,
    /// Threads the timed batches ran on; 1 is plain single-image latency.
    #[serde(default = "one")]
    pub jobs: usize,
    pub per_image_ms: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speedup_vs_baseline: Option<f64>,
    pub host: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub iterations: usize,
    pub baseline_iterations: usize,
    pub warmup: usize,
    pub scatterers: usize,
    pub seed: u64,
    pub alpha: AlphaParam,
    /// Above 1, each timed iteration runs a batch of `jobs` images on
    /// `jobs` threads and per-image time is the batch time over `jobs`.
    pub jobs: usize,
}

fn one() -> usize {
    1
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            baseline_iterations: 10,
            warmup: DEFAULT_WARMUP,
            scatterers: 100_000,
            seed: 0,
            alpha: AlphaParam::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub image_size: usize,
    pub phase_sim: BenchmarkReport,
    pub baseline: BenchmarkReport,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label: String,
    pub seed: u64,
    pub comparisons: Vec<Comparison>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Plain-text table, one row per size.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>6}  {:>14}  {:>14}  {:>10}\n",
            "size", "phase_sim ms", "baseline ms", "speedup"
        );
        for c in &self.comparisons {
            out.push_str(&format!(
                "{:>6}  {:>14.3}  {:>14.3}  {:>9.1}x\n",
                c.image_size, c.phase_sim.per_image_ms.median, c.baseline.per_image_ms.median, c.speedup
            ));
        }
        out.push_str(&format!("speedup {}\n", self.label));
        if let Some(c) = self.comparisons.first().filter(|c| c.phase_sim.jobs > 1) {
            out.push_str(&format!("per-image times from batches on {} threads\n", c.phase_sim.jobs));
        }
        out
    }
}

pub fn host_fingerprint() -> String {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    format!(
        "{}-{}, {cpu}, {threads} threads",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Runs `warmup` untimed then `iterations` timed calls of `f`.
pub fn time_closure<T>(iterations: usize, warmup: usize, mut f: impl FnMut() -> Result<T>) -> Result<Timings> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be at least 1".into()));
    }
    for _ in 0..warmup {
        std::hint::black_box(f()?);
    }
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        std::hint::black_box(f()?);
        // Clamp to one nanosecond so every sample is strictly positive.
        samples.push(start.elapsed().as_secs_f64().max(1e-9) * 1e3);
    }
    Ok(Timings::from_samples(&samples).expect("at least one sample"))
}

fn time_per_image<T: Send>(iterations: usize, cfg: &BenchConfig, f: impl Fn() -> Result<T> + Sync) -> Result<Timings> {
    match cfg.jobs {
        0 => Err(Error::InvalidParameter("jobs must be at least 1".into())),
        1 => time_closure(iterations, cfg.warmup, &f),
        jobs => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            let batch = || pool.install(|| (0..jobs).into_par_iter().map(|_| f()).collect::<Result<Vec<T>>>());
            Ok(time_closure(iterations, cfg.warmup, batch)?.scaled(1.0 / jobs as f64))
        }
    }
}

/// Deterministic benchmark inputs for the phase simulator: a uniform noise
/// "real" image and an elliptical lesion phase source (lesion 0).
pub fn phase_sim_inputs(size: usize, seed: u64) -> Result<(RealImage, RealImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = RealImage::new(size, size, (0..size * size).map(|_| rng.random::<f64>()).collect())?;
    let mask = lesion_mask(size, &mut rng)?.map(|v| 1.0 - v)?;
    Ok((real, mask))
}

/// Deterministic baseline inputs: a phantom with an elliptical anechoic
/// lesion already applied.
pub fn baseline_inputs(size: usize, scatterers: usize, seed: u64) -> Result<(speckle::ScattererField, PhantomSpec)> {
    let spec = PhantomSpec {
        num_scatterers: scatterers,
        grid_width: size,
        grid_height: size,
        ..PhantomSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lesion = lesion_mask(size, &mut rng)?;
    let field = speckle::sample_scatterers(&spec, seed);
    Ok((speckle::apply_anechoic_mask(&field, &lesion, &spec)?, spec))
}

fn lesion_mask(size: usize, rng: &mut ChaCha8Rng) -> Result<RealImage> {
    let s = size as f64;
    let (cx, cy) = (s * rng.random_range(0.35..0.65), s * rng.random_range(0.35..0.65));
    let (rx, ry) = (s * rng.random_range(0.1..0.25), s * rng.random_range(0.1..0.25));
    RealImage::from_fn(size, size, |x, y| {
        let (dx, dy) = ((x as f64 + 0.5 - cx) / rx, (y as f64 + 0.5 - cy) / ry);
        if dx * dx + dy * dy <= 1.0 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn time_method(method: Method, size: usize, iterations: usize, cfg: &BenchConfig) -> Result<BenchmarkReport> {
    if size < 2 {
        return Err(Error::InvalidParameter(format!("image size {size} below 2")));
    }
    ensure_even(size, size)?;
    let per_image_ms = match method {
        Method::PhaseSim => {
            let (real, mask) = phase_sim_inputs(size, cfg.seed)?;
            time_per_image(iterations, cfg, || phase_sim::simulate(&real, &mask, cfg.alpha))?
        }
        Method::SpeckleBaseline => {
            let (field, spec) = baseline_inputs(size, cfg.scatterers, cfg.seed)?;
            let psf = PsfSpec::default();
            time_per_image(iterations, cfg, || {
                speckle::render_bmode(&field, &spec, &psf, DEFAULT_DYNAMIC_RANGE_DB)
            })?
        }
    };
    Ok(BenchmarkReport {
        method,
        image_size: size,
        iterations,
        warmup: cfg.warmup,
        jobs: cfg.jobs,
        per_image_ms,
        speedup_vs_baseline: None,
        host: host_fingerprint(),
    })
}

/// Times both methods at every size; speedup is baseline median over
/// phase-sim median.
pub fn compare(sizes: &[usize], cfg: &BenchConfig) -> Result<ComparisonReport> {
    if sizes.is_empty() {
        return Err(Error::EmptyList("sizes"));
    }
    let comparisons = sizes
        .iter()
        .map(|&size| {
            let mut phase = time_method(Method::PhaseSim, size, cfg.iterations, cfg)?;
            let baseline = time_method(Method::SpeckleBaseline, size, cfg.baseline_iterations, cfg)?;
            let speedup = baseline.per_image_ms.median / phase.per_image_ms.median;
            phase.speedup_vs_baseline = Some(speedup);
            Ok(Comparison {
                image_size: size,
                phase_sim: phase,
                baseline,
                speedup,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonReport {
        label: BASELINE_LABEL.into(),
        seed: cfg.seed,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_stats_collapse() {
        let t = Timings::from_samples(&[3.5]).unwrap();
        assert_eq!((t.min, t.median, t.mean, t.p95), (3.5, 3.5, 3.5, 3.5));
    }

    #[test]
    fn stats_order() {
        let samples: Vec<f64> = (1..=20).map(f64::from).collect();
        let t = Timings::from_samples(&samples).unwrap();
        assert_eq!(t.min, 1.0);
        assert_eq!(t.median, 10.5);
        assert_eq!(t.mean, 10.5);
        assert_eq!(t.p95, 19.0);
        assert!(Timings::from_samples(&[]).is_none());
    }

    #[test]
    fn one_iteration_no_warmup() {
        let cfg = BenchConfig {
            warmup: 0,
            ..BenchConfig::default()
        };
        let r = time_method(Method::PhaseSim, 32, 1, &cfg).unwrap();
        let t = r.per_image_ms;
        assert!(t.min > 0.0);
        assert_eq!((t.min, t.median, t.mean), (t.p95, t.p95, t.p95));
    }

    #[test]
    fn batched_timing_reports_jobs() {
        let cfg = BenchConfig {
            warmup: 0,
            jobs: 3,
            ..BenchConfig::default()
        };
        let r = time_method(Method::PhaseSim, 16, 2, &cfg).unwrap();
        assert_eq!(r.jobs, 3);
        assert!(r.per_image_ms.min > 0.0);
        let zero = BenchConfig { jobs: 0, ..cfg };
        assert!(time_method(Method::PhaseSim, 16, 1, &zero).is_err());
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(time_closure(0, 0, || Ok(())).is_err());
    }

    #[test]
    fn empty_sizes_rejected() {
        assert!(matches!(compare(&[], &BenchConfig::default()), Err(Error::EmptyList(_))));
    }

    #[test]
    fn inputs_are_deterministic() {
        assert_eq!(phase_sim_inputs(64, 4).unwrap(), phase_sim_inputs(64, 4).unwrap());
        assert_eq!(baseline_inputs(64, 1000, 4).unwrap(), baseline_inputs(64, 1000, 4).unwrap());
    }
}
