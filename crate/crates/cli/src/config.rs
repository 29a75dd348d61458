//! Run configuration: command-line flags layered over an optional flat
//! `key=value` file, resolved into validated core parameters.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use prost_core::cost::mu_heuristic;
use prost_core::imageio::{discover_sequence, FramePattern};
use prost_core::pipeline::PipelineOptions;
use prost_core::tracker::tau_from_init;
use prost_core::{CgOptions, Error, LpConfig, ProstParams, SequenceSpec};

use crate::error::{usage, CliResult};

/// `auto` or an explicit smoothing constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuSetting {
    Auto,
    Value(f64),
}

impl FromStr for MuSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(MuSetting::Auto);
        }
        s.parse()
            .map(MuSetting::Value)
            .map_err(|_| format!("expected a number or `auto`, got {s:?}"))
    }
}

impl fmt::Display for MuSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuSetting::Auto => f.write_str("auto"),
            MuSetting::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Working resolution, written `WxH`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected WxH, got {s:?}");
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        let height: usize = h.trim().parse().map_err(|_| bad())?;
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Resolution { width, height })
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Inclusive frame range, written `A:B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameRange(pub u64, pub u64);

impl FromStr for FrameRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected FIRST:LAST, got {s:?}");
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(format!("empty frame range {s:?}"));
        }
        Ok(FrameRange(a, b))
    }
}

/// Comma-separated list of numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberList(pub Vec<f64>);

impl FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| format!("not a number: {t:?}")))
            .collect::<Result<_, _>>()
            .map(NumberList)
    }
}

/// `LO:HI:N`, `N` evenly spaced values including both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberRange(pub Vec<f64>);

impl FromStr for NumberRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected LO:HI:N, got {s:?}");
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let values = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Ok(NumberRange(values))
    }
}

/// A flat `key=value` file. Blank lines and `#` comments are ignored;
/// keys accept `-` or `_`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut file =
            ConfigFile::parse(&text).map_err(|msg| usage(format!("{}: {msg}", path.display())))?;
        file.path = Some(path.to_path_buf());
        Ok(file)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
            values.insert(normalize_key(k), v.trim().to_string());
        }
        Ok(ConfigFile {
            path: None,
            values,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    /// Typed lookup; marks the key as consumed.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        self.used.borrow_mut().insert(key.to_string());
        raw.parse::<T>()
            .map(Some)
            .map_err(|e| usage(format!("config key {key}: {e}")))
    }

    /// `flag` if given, else the file's value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        let from_file = self.get(key)?;
        Ok(flag.or(from_file))
    }

    /// Fails on keys no resolver asked for.
    pub fn reject_unknown(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let origin = self
                .path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "config".into());
            Err(usage(format!(
                "{origin}: unknown key(s) {}",
                unknown.join(", ")
            )))
        }
    }
}

/// Tracker and preprocessing flags shared by every command.
#[derive(Args, Clone, Debug, Default)]
pub struct TrackerArgs {
    /// Flat key=value file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Subspace dimension k.
    #[arg(long = "subspace-dim", value_name = "K")]
    pub k: Option<usize>,
    /// Exponent of the smoothed ℓp cost, in (0, 2].
    #[arg(long)]
    pub p: Option<f64>,
    /// Smoothing constant, or `auto` for δ²(1 − p).
    #[arg(long, value_name = "MU|auto")]
    pub mu: Option<MuSetting>,
    /// Foreground threshold on the normalized residual.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Weight of pixels labelled foreground in the previous frame.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "t-init")]
    pub t_init: Option<f64>,
    #[arg(long = "t-min")]
    pub t_min: Option<f64>,
    /// Step-size decay rate; derived from --i-init when omitted.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Initialization frames (normalization window and step-size decay).
    #[arg(long = "i-init")]
    pub i_init: Option<u64>,
    /// Conjugate-gradient iteration cap.
    #[arg(long = "cg-iters")]
    pub cg_iters: Option<u32>,
    #[arg(long = "cg-tol")]
    pub cg_tol: Option<f64>,
    /// Working resolution, e.g. 160x120.
    #[arg(long, value_name = "WxH")]
    pub resolution: Option<Resolution>,
    /// Track luma only.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub grayscale: Option<bool>,
    /// Seed for the random initial basis.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Defaults that differ between commands.
#[derive(Clone, Copy, Debug)]
pub struct Defaults {
    pub k: usize,
    pub p: f64,
    pub t_init: f64,
    pub t_min: f64,
    pub i_init: u64,
    /// Exponent used by `--mu auto`; `None` means the configured `p`.
    pub mu_reference_p: Option<f64>,
}

impl Defaults {
    /// The benchmark configuration; `i_init` comes from the sequence.
    pub fn benchmark(i_init: u64) -> Self {
        Defaults {
            k: 15,
            p: 0.25,
            t_init: 5e-3,
            t_min: 1e-4,
            i_init,
            mu_reference_p: None,
        }
    }
}

/// Fully resolved tracker and pipeline settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ProstParams,
    pub mu: MuSetting,
    pub pipeline: PipelineOptions,
}

impl RunConfig {
    /// One line with every setting materialized.
    pub fn describe(&self) -> String {
        format!(
            "{} mu_mode={} i_init={} resolution={}x{} grayscale={} seed={}",
            self.params.describe(),
            self.mu,
            self.pipeline.i_init,
            self.pipeline.width,
            self.pipeline.height,
            self.pipeline.grayscale,
            self.pipeline.seed
        )
    }
}

impl TrackerArgs {
    pub fn resolve(&self, file: &ConfigFile, defaults: Defaults) -> CliResult<RunConfig> {
        let k = file.pick(self.k, "subspace-dim")?.unwrap_or(defaults.k);
        let p = file.pick(self.p, "p")?.unwrap_or(defaults.p);
        let delta = file.pick(self.delta, "delta")?.unwrap_or(0.35);
        let omega = file.pick(self.omega, "omega")?.unwrap_or(5e-5);
        let t_init = file.pick(self.t_init, "t-init")?.unwrap_or(defaults.t_init);
        let t_min = file.pick(self.t_min, "t-min")?.unwrap_or(defaults.t_min);
        let i_init = file
            .pick(self.i_init, "i-init")?
            .unwrap_or(defaults.i_init)
            .max(1);
        let tau = match file.pick(self.tau, "tau")? {
            Some(tau) => tau,
            None => tau_from_init(t_init, t_min, i_init)?,
        };
        let mu_setting = file.pick(self.mu, "mu")?.unwrap_or(MuSetting::Auto);
        let mu = match mu_setting {
            MuSetting::Value(v) => v,
            MuSetting::Auto => {
                let reference = defaults.mu_reference_p.unwrap_or(p);
                mu_heuristic(delta, reference).map_err(|_| {
                    Error::InvalidParameter(format!(
                        "--mu auto needs 0 < p < 1, got p = {reference}; pass an explicit --mu"
                    ))
                })?
            }
        };
        let mut cg = CgOptions::default();
        if let Some(n) = file.pick(self.cg_iters, "cg-iters")? {
            cg.max_iters = n;
        }
        if let Some(tol) = file.pick(self.cg_tol, "cg-tol")? {
            cg.grad_tol = tol;
        }
        let resolution = file
            .pick(self.resolution, "resolution")?
            .unwrap_or(Resolution {
                width: 160,
                height: 120,
            });
        let grayscale = file.pick(self.grayscale, "grayscale")?.unwrap_or(false);
        let seed = file.pick(self.seed, "seed")?.unwrap_or(0);

        let params = ProstParams {
            k,
            lp: LpConfig::new(p, mu)?,
            delta,
            omega,
            t_init,
            t_min,
            tau,
            cg,
        };
        params.validate()?;
        Ok(RunConfig {
            params,
            mu: mu_setting,
            pipeline: PipelineOptions {
                width: resolution.width,
                height: resolution.height,
                grayscale,
                i_init,
                seed,
            },
        })
    }
}

/// Where frames come from.
#[derive(Args, Clone, Debug, Default)]
pub struct SequenceArgs {
    /// Sequence root (with input/, groundtruth/, temporalROI.txt) or a bare
    /// directory of numbered frames.
    #[arg(long, alias = "sequence", value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Ground-truth directory; defaults to <input>/groundtruth when present.
    #[arg(long, value_name = "DIR")]
    pub groundtruth: Option<PathBuf>,
    /// Evaluated frames, inclusive.
    #[arg(long = "eval-range", value_name = "FIRST:LAST")]
    pub eval_range: Option<FrameRange>,
    /// First frame to read.
    #[arg(long = "first-frame")]
    pub first_frame: Option<u64>,
    #[arg(long = "input-pattern", value_name = "PATTERN")]
    pub input_pattern: Option<String>,
    #[arg(long = "groundtruth-pattern", value_name = "PATTERN")]
    pub groundtruth_pattern: Option<String>,
}

impl SequenceArgs {
    pub fn input_dir(&self, file: &ConfigFile) -> CliResult<Option<PathBuf>> {
        file.pick(self.input.clone(), "input")
    }

    /// Resolves the sequence rooted at `root` with these overrides.
    pub fn resolve_at(&self, root: &Path, file: &ConfigFile) -> CliResult<SequenceSpec> {
        let input_pattern = file
            .pick(self.input_pattern.clone(), "input-pattern")?
            .unwrap_or_else(|| "in%06d.ppm".into());
        let input_pattern = FramePattern::parse(&input_pattern)?;
        let mut spec = discover_sequence(root, &input_pattern)?;

        if let Some(gt) = file.pick(self.groundtruth.clone(), "groundtruth")? {
            spec.groundtruth_dir = Some(gt);
        }
        if let Some(pattern) = file.pick(self.groundtruth_pattern.clone(), "groundtruth-pattern")? {
            spec.groundtruth_pattern = FramePattern::parse(&pattern)?;
        }
        let range = file.pick(self.eval_range, "eval-range")?;
        let first = file.pick(self.first_frame, "first-frame")?;
        if let Some(FrameRange(a, b)) = range {
            spec.eval_range = (a, b);
            spec.first_frame = spec.first_frame.min(a);
        }
        if let Some(first) = first {
            spec.first_frame = first;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn resolve(&self, file: &ConfigFile) -> CliResult<SequenceSpec> {
        let root = self
            .input_dir(file)?
            .ok_or_else(|| usage("--input is required"))?;
        self.resolve_at(&root, file)
    }
}

/// One-line description of a sequence for the config echo.
pub fn describe_sequence(spec: &SequenceSpec) -> String {
    format!(
        "sequence={} input={} groundtruth={} first_frame={} eval_range={}:{} input_pattern={} groundtruth_pattern={}",
        spec.name(),
        spec.input_dir.display(),
        spec.groundtruth_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "none".into()),
        spec.first_frame,
        spec.eval_range.0,
        spec.eval_range.1,
        spec.input_pattern,
        spec.groundtruth_pattern
    )
}
