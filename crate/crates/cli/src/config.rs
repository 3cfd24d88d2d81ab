//! Run configuration: a flat TOML file, overridden by command-line flags,
//! completed with per-subcommand defaults and validated.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use maxdg::LiftMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Cavity,
    Polynomial,
    Lowreg,
    Cfl,
    Selftest,
}

impl Subcommand {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subcommand::Cavity => "cavity",
            Subcommand::Polynomial => "polynomial",
            Subcommand::Lowreg => "lowreg",
            Subcommand::Cfl => "cfl",
            Subcommand::Selftest => "selftest",
        }
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

/// Keys accepted in the config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub degree: Option<OneOrMany<usize>>,
    pub meshes: Option<OneOrMany<usize>>,
    pub alternation: Option<f64>,
    pub tau: Option<OneOrMany<f64>>,
    pub theta: Option<f64>,
    pub lift: Option<LiftMode>,
    pub alpha: Option<OneOrMany<f64>>,
    pub modes: Option<usize>,
    pub end_time: Option<f64>,
    pub samples: Option<usize>,
    pub reference_mesh: Option<usize>,
    pub reference_degree: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("config parse error: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}

fn parse_lift(s: &str) -> std::result::Result<LiftMode, String> {
    s.parse().map_err(|e: maxdg::Error| e.to_string())
}

/// Flags that override file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Polynomial degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub degree: Option<Vec<usize>>,
    /// Cells per unit length, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub meshes: Option<Vec<usize>>,
    /// Step sizes, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub tau: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// quadrature | interp
    #[arg(long, value_parser = parse_lift)]
    pub lift: Option<LiftMode>,
    /// Regularity indices, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha: Option<Vec<f64>>,
    /// Number of Fourier modes M (power of two).
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub end_time: Option<f64>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub out: PathBuf,
    pub seed: u64,
    pub degrees: Vec<usize>,
    pub meshes: Vec<usize>,
    /// Cell-width alternation of the cavity and cfl meshes; 0 is uniform.
    pub alternation: f64,
    pub taus: Vec<f64>,
    pub theta: f64,
    /// Lift modes to run; both for the cavity sweep unless one is chosen.
    pub lift_modes: Vec<LiftMode>,
    pub alphas: Vec<f64>,
    pub modes: usize,
    pub end_time: f64,
    /// Cavity errors are sampled at `i T / samples`.
    pub samples: usize,
    pub reference_mesh: usize,
    pub reference_degree: usize,
}

pub const DEFAULT_SEED: u64 = 20240229;

impl RunConfig {
    /// Defaults for `sub` when no key is given.
    pub fn defaults(sub: Subcommand) -> Self {
        use maxdg::harness::{RegularityConfig, SpatialConfig, TemporalConfig};
        let (s, t, r) = (SpatialConfig::default(), TemporalConfig::default(), RegularityConfig::default());
        let base = RunConfig {
            subcommand: sub,
            out: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            degrees: s.degrees.clone(),
            meshes: s.meshes.clone(),
            alternation: s.alternation,
            taus: vec![s.tau],
            theta: t.theta,
            lift_modes: s.lift_modes.clone(),
            alphas: r.alphas.clone(),
            modes: r.modes,
            end_time: s.end_time,
            samples: s.samples,
            reference_mesh: r.reference_mesh,
            reference_degree: r.reference_degree,
        };
        match sub {
            Subcommand::Cavity | Subcommand::Selftest => base,
            Subcommand::Polynomial => RunConfig {
                degrees: vec![t.degree],
                meshes: t.meshes,
                alternation: 0.0,
                taus: t.taus,
                end_time: t.end_time,
                lift_modes: vec![LiftMode::Quadrature],
                ..base
            },
            Subcommand::Lowreg => RunConfig {
                degrees: vec![r.degree],
                meshes: r.meshes,
                alternation: 0.0,
                taus: vec![r.tau],
                end_time: r.end_time,
                lift_modes: vec![LiftMode::Quadrature],
                ..base
            },
            Subcommand::Cfl => RunConfig {
                degrees: vec![1, 2],
                meshes: vec![20],
                ..base
            },
        }
    }

    /// File values over defaults, flags over file values.
    pub fn resolve(sub: Subcommand, file: FileConfig, flags: &Overrides) -> Result<Self> {
        let mut c = Self::defaults(sub);
        if let Some(v) = file.out {
            c.out = v;
        }
        if let Some(v) = file.seed {
            c.seed = v;
        }
        if let Some(v) = file.degree {
            c.degrees = v.into();
        }
        if let Some(v) = file.meshes {
            c.meshes = v.into();
        }
        if let Some(v) = file.alternation {
            c.alternation = v;
        }
        if let Some(v) = file.tau {
            c.taus = v.into();
        }
        if let Some(v) = file.theta {
            c.theta = v;
        }
        if let Some(v) = file.lift {
            c.lift_modes = vec![v];
        }
        if let Some(v) = file.alpha {
            c.alphas = v.into();
        }
        if let Some(v) = file.modes {
            c.modes = v;
        }
        if let Some(v) = file.end_time {
            c.end_time = v;
        }
        if let Some(v) = file.samples {
            c.samples = v;
        }
        if let Some(v) = file.reference_mesh {
            c.reference_mesh = v;
        }
        if let Some(v) = file.reference_degree {
            c.reference_degree = v;
        }

        if let Some(v) = &flags.out {
            c.out = v.clone();
        }
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = &flags.degree {
            c.degrees = v.clone();
        }
        if let Some(v) = &flags.meshes {
            c.meshes = v.clone();
        }
        if let Some(v) = &flags.tau {
            c.taus = v.clone();
        }
        if let Some(v) = flags.theta {
            c.theta = v;
        }
        if let Some(v) = flags.lift {
            c.lift_modes = vec![v];
        }
        if let Some(v) = &flags.alpha {
            c.alphas = v.clone();
        }
        if let Some(v) = flags.modes {
            c.modes = v;
        }
        if let Some(v) = flags.end_time {
            c.end_time = v;
        }
        c.validate()?;
        Ok(c)
    }

    /// Reads `flags.config` if given and resolves.
    pub fn from_flags(sub: Subcommand, flags: &Overrides) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::resolve(sub, file, flags)
    }

    pub fn validate(&self) -> Result<()> {
        fn nonempty<T>(key: &str, v: &[T]) -> Result<()> {
            if v.is_empty() {
                bail!("invalid value for `{key}`: list must not be empty");
            }
            Ok(())
        }
        nonempty("degree", &self.degrees)?;
        nonempty("meshes", &self.meshes)?;
        nonempty("tau", &self.taus)?;
        nonempty("lift", &self.lift_modes)?;
        if let Some(k) = self.degrees.iter().find(|&&k| !(1..=8).contains(&k)) {
            bail!("invalid value for `degree`: must lie in 1..=8, got {k}");
        }
        if let Some(n) = self.meshes.iter().find(|&&n| !(1..=512).contains(&n)) {
            bail!("invalid value for `meshes`: cells per unit length must lie in 1..=512, got {n}");
        }
        if let Some(t) = self.taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            bail!("invalid value for `tau`: must be positive, got {t}");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            bail!("invalid value for `theta`: must lie in (0, 1), got {}", self.theta);
        }
        if !(self.end_time.is_finite() && self.end_time > 0.0) {
            bail!("invalid value for `end_time`: must be positive, got {}", self.end_time);
        }
        if !(0.0..1.0).contains(&self.alternation) {
            bail!("invalid value for `alternation`: must lie in [0, 1), got {}", self.alternation);
        }
        if self.alternation != 0.0 && matches!(self.subcommand, Subcommand::Polynomial | Subcommand::Lowreg) {
            bail!("invalid value for `alternation`: {} runs use square meshes", self.subcommand.as_str());
        }
        if self.samples == 0 {
            bail!("invalid value for `samples`: must be at least 1");
        }
        if self.subcommand == Subcommand::Lowreg {
            nonempty("alpha", &self.alphas)?;
            if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                bail!("invalid value for `alpha`: must be nonnegative, got {a}");
            }
            if !(self.modes >= 4 && self.modes.is_power_of_two()) {
                bail!("invalid value for `modes`: must be a power of two >= 4, got {}", self.modes);
            }
            if self.meshes.len() < 3 {
                bail!("invalid value for `meshes`: the order fit needs at least 3 meshes");
            }
            if !(1..=8).contains(&self.reference_degree) || self.reference_mesh == 0 {
                bail!("invalid value for `reference_mesh`/`reference_degree`");
            }
            if let Some(&n) = self.meshes.iter().find(|&&n| n > self.reference_mesh) {
                bail!("invalid value for `reference_mesh`: must be at least the finest mesh {n}");
            }
        }
        Ok(())
    }
}
