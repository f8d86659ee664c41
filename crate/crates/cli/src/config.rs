//! Run configuration: flat `key = value` text, overridable by flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Memory budget for the default fixtures, in bytes.
pub const MEMORY_BUDGET: f64 = 8.0 * (1u64 << 30) as f64;

/// Configuration problems; the binary maps these to exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Line that is not `key = value`.
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    /// Key outside the documented set.
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    /// Value that does not parse or violates an invariant.
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: String, reason: String },
    /// Config file could not be read.
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Parameters shared by all checks. Defaults are the desk scale: `d = 1`,
/// `N_max = 32`, a `64³` grid on `[−6, 6]³` and 128 λ-nodes per sign on `[1e−3, 8]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Dimension `d` of `H^d`.
    pub d: usize,
    /// Fock truncation `N_max`.
    pub n_max: usize,
    /// Half width of the sample box in every coordinate.
    pub half_width: f64,
    /// Points per axis of the sample box.
    pub points: usize,
    /// Geometric λ-nodes per sign.
    pub lambda_nodes: usize,
    /// Smallest `|λ|`.
    pub lambda_min: f64,
    /// Largest `|λ|`.
    pub lambda_max: f64,
    /// Seed of every random draw.
    pub seed: u64,
    /// Tolerance overrides, keyed `check.metric`.
    pub tolerances: BTreeMap<String, f64>,
    /// Output directory for reports.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 1,
            n_max: 32,
            half_width: 6.0,
            points: 64,
            lambda_nodes: 128,
            lambda_min: 1e-3,
            lambda_max: 8.0,
            seed: 20_240_601,
            tolerances: BTreeMap::new(),
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::Invalid { key: key.into(), reason: e.to_string() })
}

impl RunConfig {
    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.into() })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a config file.
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Sets one key; `tol.<check>.<metric>` overrides a tolerance.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "d" => self.d = parse_num(key, value)?,
            "n_max" => self.n_max = parse_num(key, value)?,
            "half_width" => self.half_width = parse_num(key, value)?,
            "points" => self.points = parse_num(key, value)?,
            "lambda_nodes" => self.lambda_nodes = parse_num(key, value)?,
            "lambda_min" => self.lambda_min = parse_num(key, value)?,
            "lambda_max" => self.lambda_max = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => match key.strip_prefix("tol.") {
                Some(rest) if rest.contains('.') => {
                    self.tolerances.insert(rest.into(), parse_num(key, value)?);
                }
                _ => return Err(ConfigError::UnknownKey(key.into())),
            },
        }
        Ok(())
    }

    /// Applies `key=value` overrides and revalidates.
    pub fn with_overrides<'a, I: IntoIterator<Item = &'a str>>(mut self, overrides: I) -> Result<Self, ConfigError> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: o.into() })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    /// All sizes positive, `λ_min < λ_max`, and the fixture estimate within [`MEMORY_BUDGET`].
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| Err(ConfigError::Invalid { key: key.into(), reason });
        if self.d == 0 {
            return bad("d", "must be positive".into());
        }
        if self.n_max == 0 || self.points < 4 || self.lambda_nodes < 2 {
            return bad("n_max/points/lambda_nodes", "need n_max ≥ 1, points ≥ 4, lambda_nodes ≥ 2".into());
        }
        if !(self.half_width > 0.0) || !(self.lambda_min > 0.0) || !(self.lambda_max > self.lambda_min) {
            return bad("half_width/lambda_min/lambda_max", "need positive sizes and lambda_min < lambda_max".into());
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return bad(&format!("tol.{k}"), format!("tolerance must be positive, got {v}"));
        }
        let est = self.memory_estimate();
        if est > MEMORY_BUDGET {
            return bad("points/n_max", format!("fixture estimate {:.1} GiB exceeds the {:.0} GiB budget", est / (1u64 << 30) as f64, MEMORY_BUDGET / (1u64 << 30) as f64));
        }
        Ok(())
    }

    /// Bytes held by the shared fixtures: grid samples (a few copies) and spectral matrices.
    pub fn memory_estimate(&self) -> f64 {
        let grid = (self.points as f64).powi((2 * self.d + 1) as i32) * 16.0 * 8.0;
        let dim = binomial(self.n_max + self.d, self.d);
        let spec = 2.0 * self.lambda_nodes as f64 * dim * dim * 16.0 * 4.0;
        grid + spec
    }

    /// Tolerance for `check.metric`, falling back to `default`.
    pub fn tol(&self, check: &str, metric: &str, default: f64) -> f64 {
        self.tolerances.get(&format!("{check}.{metric}")).copied().unwrap_or(default)
    }

    /// Canonical `key = value` text; equal configs give equal text.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "n_max = {}", self.n_max);
        let _ = writeln!(s, "half_width = {:?}", self.half_width);
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(s, "lambda_nodes = {}", self.lambda_nodes);
        let _ = writeln!(s, "lambda_min = {:?}", self.lambda_min);
        let _ = writeln!(s, "lambda_max = {:?}", self.lambda_max);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (k, v) in &self.tolerances {
            let _ = writeln!(s, "tol.{k} = {v:?}");
        }
        s
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded. The output directory is excluded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Whether this is the desk-scale configuration the acceptance tolerances refer to.
    pub fn is_default_scale(&self) -> bool {
        let d = Self::default();
        (self.d, self.n_max, self.points, self.lambda_nodes) == (d.d, d.n_max, d.points, d.lambda_nodes)
            && self.half_width == d.half_width
            && self.lambda_min == d.lambda_min
            && self.lambda_max == d.lambda_max
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
