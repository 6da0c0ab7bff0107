//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Criteria run one after another so the
//! timing checks do not compete for the CPU.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use phaseswap::bench::ComparisonReport;
use phaseswap::fft::{self, mirror_index, RealImage};
use phaseswap::metrics::{dsc, BinaryMask, DEFAULT_EPSILON};
use phaseswap::phase_sim::{self, build_lowfreq_mask, normalize_output, AlphaParam};
use phaseswap::speckle::{self, PhantomSpec, PsfSpec};
use phaseswap::io;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn random_image(w: usize, h: usize, seed: u64) -> RealImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RealImage::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn random_phase_source(w: usize, h: usize, seed: u64) -> RealImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let (cx, cy) = (rng.random_range(0.3..0.7) * w as f64, rng.random_range(0.3..0.7) * h as f64);
    let (rx, ry) = (rng.random_range(0.05..0.3) * w as f64, rng.random_range(0.05..0.3) * h as f64);
    RealImage::from_fn(w, h, |x, y| {
        let (u, v) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
        if u * u + v * v <= 1.0 {
            0.0
        } else {
            1.0
        }
    })
    .unwrap()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let img = random_image(256, 256, seed);
        let expected = normalize_output(&img);
        for a in [0.0, 0.11, 0.5, SQRT_2] {
            let out = phase_sim::simulate(&img, &img, AlphaParam::new(a).unwrap()).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs(out.data(), expected.data()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 10.0,
        format!("80 runs, max error {worst:.2e} (limit 1e-6), {secs:.2} s (limit 10 s)"),
    )
}

fn mask_geometry() -> Outcome {
    let (w, h) = (256usize, 256usize);
    let r = 0.11 * 128.0;
    let mut brute = 0;
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - 128.0, y as f64 - 128.0);
            if (dx / r).powi(2) + (dy / r).powi(2) <= 1.0 {
                brute += 1;
            }
        }
    }
    let built = build_lowfreq_mask(w, h, AlphaParam::new(0.11).unwrap()).unwrap().count();
    let (lo, hi) = (PI * r * r - 2.0 * PI * r, PI * r * r + 2.0 * PI * r);
    let in_band = (lo..=hi).contains(&(built as f64));

    let masks: Vec<_> = [0.05, 0.11, 0.3, 1.0, SQRT_2]
        .iter()
        .map(|&a| build_lowfreq_mask(w, h, AlphaParam::new(a).unwrap()).unwrap())
        .collect();
    let nested = masks
        .windows(2)
        .all(|p| p[0].data().iter().zip(p[1].data()).all(|(s, b)| s <= b));
    check(
        brute == built && in_band && nested,
        format!("popcount {built} (brute force {brute}), band [{lo:.1}, {hi:.1}], nested {nested}"),
    )
}

fn fft_correctness() -> Outcome {
    let start = Instant::now();
    let (mut round, mut parseval, mut herm) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 100..110 {
        let img = random_image(256, 256, seed);
        let spec = fft::forward_transform(&img).map_err(|e| e.to_string())?;
        let back = fft::inverse_transform(&spec).map_err(|e| e.to_string())?;
        round = round.max(max_abs(img.data(), back.data()));

        let energy: f64 = img.data().iter().map(|v| v * v).sum();
        let spectral = spec.data().iter().map(|c| c.norm_sqr()).sum::<f64>() / (256.0 * 256.0);
        parseval = parseval.max(((energy - spectral) / energy).abs());

        let scale = spec.data().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for y in 0..256 {
            for x in 0..256 {
                let partner = spec.data()[mirror_index(256, 256, x, y)];
                herm = herm.max((spec.get(x, y) - partner.conj()).norm() / scale);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        round <= 1e-9 && parseval <= 1e-9 && herm <= 1e-9 && secs < 5.0,
        format!("round trip {round:.2e}, Parseval {parseval:.2e}, Hermitian {herm:.2e} (limits 1e-9), {secs:.2} s"),
    )
}

fn realness_and_magnitude() -> Outcome {
    let m = build_lowfreq_mask(256, 256, AlphaParam::default()).unwrap();
    let (mut residual_ratio, mut magnitude_err) = (0.0f64, 0.0f64);
    for seed in 0..50 {
        let real = random_image(256, 256, 1000 + seed);
        let source = random_phase_source(256, 256, seed);
        let raw = phase_sim::simulate_raw(&real, &source, &m).map_err(|e| e.to_string())?;
        let peak = raw.image.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        residual_ratio = residual_ratio.max(raw.imag_residual / peak);

        let target = fft::to_polar(&fft::forward_transform(&real).unwrap()).magnitude;
        let got = fft::to_polar(&fft::forward_transform(&raw.image).unwrap()).magnitude;
        let scale = target.iter().fold(0.0f64, |a, &v| a.max(v));
        magnitude_err = magnitude_err.max(max_abs(&got, &target) / scale);
    }
    check(
        residual_ratio <= 1e-9 && magnitude_err <= 1e-9,
        format!("50 pairs, imaginary residual {residual_ratio:.2e} of peak, magnitude error {magnitude_err:.2e} (limits 1e-9)"),
    )
}

fn tree_bytes(root: &Path) -> Vec<(std::path::PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let (masks, images) = (dir.path().join("masks"), dir.path().join("images"));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..100 {
        let (cx, cy, r) = (rng.random_range(40.0..88.0), rng.random_range(40.0..88.0), rng.random_range(8.0..30.0));
        let img = RealImage::from_fn(128, 128, |x, y| {
            if f64::hypot(x as f64 - cx, y as f64 - cy) <= r {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        io::write_mask(&masks.join(format!("mask_{i:03}.png")), &img).map_err(|e| e.to_string())?;
    }
    for i in 0..10 {
        io::write_gray(&images.join(format!("us_{i:02}.png")), &random_image(200, 160, 500 + i))
            .map_err(|e| e.to_string())?;
    }

    let start = Instant::now();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_phaseswap"))
            .args(["dataset", "--split", "80", "20", "--seed", "7", "-q"])
            .args([&masks, &images, &out])
            .env_remove("SOURCE_DATE_EPOCH")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("dataset exited with {}", status.status));
        }
        trees.push(tree_bytes(&out));
    }
    let secs = start.elapsed().as_secs_f64();
    let files = trees[0].len();
    check(
        trees[0] == trees[1] && files == 202 && secs < 60.0,
        format!("{files} files, identical {}, two runs in {secs:.2} s (limit 60 s)", trees[0] == trees[1]),
    )
}

fn speed() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let json = dir.path().join("bench.json");
    let out = Command::new(env!("CARGO_BIN_EXE_phaseswap"))
        .args(["bench", "--size", "256", "--iters", "100", "--baseline-iters", "10", "--scatterers", "100000"])
        .arg("--json")
        .arg(&json)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("bench exited with {}", out.status));
    }
    let text = std::fs::read_to_string(&json).map_err(|e| e.to_string())?;
    let report = ComparisonReport::from_json(&text).map_err(|e| e.to_string())?;
    let c = &report.comparisons[0];
    let median = c.phase_sim.per_image_ms.median;
    let reported = c.phase_sim.speedup_vs_baseline.unwrap_or(0.0);
    check(
        median < 50.0 && c.speedup > 10.0 && reported == c.speedup,
        format!(
            "phase_sim median {median:.3} ms (limit 50), baseline median {:.3} ms, speedup {:.1}x (limit 10x)",
            c.baseline.per_image_ms.median, c.speedup
        ),
    )
}

fn dsc_oracle() -> Outcome {
    let eps = DEFAULT_EPSILON;
    let n = 64;
    let make = |f: &dyn Fn(usize) -> bool| BinaryMask::new(n, 1, (0..n).map(f).collect()).unwrap();
    let a = make(&|i| i < 16);
    let b = make(&|i| i >= 48);
    let half = make(&|i| (8..24).contains(&i));

    let identity = dsc(&a, &a, eps).unwrap() == 1.0;
    let disjoint = dsc(&a, &b, eps).unwrap() == eps / (32.0 + eps);
    let half_overlap = dsc(&a, &half, eps).unwrap() == (2.0 * 8.0 + eps) / (32.0 + eps);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut symmetric = true;
    for _ in 0..100 {
        let p = rng.random_range(0.0..1.0);
        let q = rng.random_range(0.0..1.0);
        let s = BinaryMask::new(32, 32, (0..1024).map(|_| rng.random_bool(p)).collect()).unwrap();
        let t = BinaryMask::new(32, 32, (0..1024).map(|_| rng.random_bool(q)).collect()).unwrap();
        symmetric &= dsc(&s, &t, eps).unwrap() == dsc(&t, &s, eps).unwrap();
    }
    check(
        identity && disjoint && half_overlap && symmetric,
        format!("identity {identity}, disjoint {disjoint}, half overlap {half_overlap}, symmetric over 100 pairs {symmetric}"),
    )
}

fn speckle_statistics() -> Outcome {
    let spec = PhantomSpec::default();
    let psf = PsfSpec::default();
    let env = speckle::render_envelope(&speckle::sample_scatterers(&spec, 1), &spec, &psf).map_err(|e| e.to_string())?;
    let margin = psf.half_extent;
    let vals: Vec<f64> = (margin..256 - margin)
        .flat_map(|y| (margin..256 - margin).map(move |x| (x, y)))
        .map(|(x, y)| env.get(x, y))
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let snr = mean / sd;

    let dr = 60.0;
    let disc = RealImage::from_fn(256, 256, |x, y| {
        if f64::hypot(x as f64 + 0.5 - 128.0, y as f64 + 0.5 - 128.0) <= 50.0 {
            1.0
        } else {
            0.0
        }
    })
    .unwrap();
    let field = speckle::apply_anechoic_mask(&speckle::sample_scatterers(&spec, 11), &disc, &spec).unwrap();
    let img = speckle::render_bmode(&field, &spec, &psf, dr).map_err(|e| e.to_string())?;
    let (mut inside, mut n_in, mut outside, mut n_out) = (0.0, 0, 0.0, 0);
    for y in margin..256 - margin {
        for x in margin..256 - margin {
            if disc.get(x, y) == 1.0 {
                inside += img.get(x, y);
                n_in += 1;
            } else {
                outside += img.get(x, y);
                n_out += 1;
            }
        }
    }
    let contrast = (outside / n_out as f64 - inside / n_in as f64) * dr;
    check(
        (snr - 1.91).abs() <= 0.15 && vals.len() >= 10_000 && contrast >= 20.0,
        format!("SNR {snr:.3} over {} pixels (1.91 +/- 0.15), disc {contrast:.1} dB below background (limit 20)", vals.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("identity suite", identity_suite),
        ("mask geometry", mask_geometry),
        ("fft correctness", fft_correctness),
        ("realness and magnitude preservation", realness_and_magnitude),
        ("pipeline determinism", pipeline_determinism),
        ("speed", speed),
        ("dsc oracle", dsc_oracle),
        ("speckle statistics", speckle_statistics),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "EXCLUDED  segmentation DSC gains: needs network training on in vivo data; not reproducible here"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
