//! Optional `key = value` config file and seed resolution.

use std::path::{Path, PathBuf};

use crate::CliError;

pub const SEED_ENV: &str = "PHASESWAP_SEED";

/// Values read from a config file. Every field is optional; command-line
/// flags take precedence.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub size: Option<(usize, usize)>,
    pub seed: Option<u64>,
    pub invert_mask_polarity: Option<bool>,
    pub output_dir: Option<PathBuf>,
    pub epsilon: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CliError::Validation(format!("config line {}: {msg}", n + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "alpha" => cfg.alpha = Some(value.parse().map_err(|_| bad("alpha must be a number"))?),
                "size" | "target_size" => cfg.size = Some(parse_size(value).map_err(|e| bad(&e))?),
                "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("seed must be a u64"))?),
                "invert_mask_polarity" => {
                    cfg.invert_mask_polarity =
                        Some(value.parse().map_err(|_| bad("expected true or false"))?)
                }
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                "epsilon" => cfg.epsilon = Some(value.parse().map_err(|_| bad("epsilon must be a number"))?),
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }
}

/// Parses `N` (square) or `WxH`.
pub fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid size `{s}`, expected N or WxH"))
    };
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok((parse(w)?, parse(h)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

/// Flag, then config file, then `PHASESWAP_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV}=`{v}` is not a u64"))),
        Err(_) => Ok(0),
    }
}
