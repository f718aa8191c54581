//! Sweep configuration files (TOML).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;

pub const MIN_RESOLUTION: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Eigenvalue,
    GlEnergy,
    Classify,
    Constants,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Eigenvalue => "eigenvalue",
            Task::GlEnergy => "gl_energy",
            Task::Classify => "classify",
            Task::Constants => "constants",
        }
    }
}

/// Domain entry of a config file; `square` expands to a sampled star domain.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DomainEntry {
    Disc {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Star {
        radii: Vec<f64>,
    },
    Square {
        side: f64,
        #[serde(default = "default_square_samples")]
        samples: usize,
    },
}

fn default_square_samples() -> usize {
    64
}

impl From<DomainEntry> for DomainSpec {
    fn from(entry: DomainEntry) -> Self {
        match entry {
            DomainEntry::Disc { radius } => DomainSpec::disc(radius),
            DomainEntry::Ellipse { a, b } => DomainSpec::ellipse(a, b),
            DomainEntry::Star { radii } => DomainSpec::Star { radii },
            DomainEntry::Square { side, samples } => DomainSpec::square(side, samples),
        }
    }
}

/// A flux value: a number or an expression such as `"3pi/2"` or `"-pi"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum FluxEntry {
    Number(f64),
    Expr(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: DomainEntry,
    resolution: usize,
    h_values: Vec<FluxEntry>,
    #[serde(default)]
    epsilon_values: Vec<f64>,
    #[serde(default)]
    kappa_values: Vec<f64>,
    tasks: Vec<Task>,
    output_path: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub domain: DomainSpec,
    pub resolution: usize,
    pub h_values: Vec<f64>,
    /// Step radii; `0` stands for the pure Aharonov-Bohm field.
    pub epsilon_values: Vec<f64>,
    pub kappa_values: Vec<f64>,
    pub tasks: Vec<Task>,
    pub output_path: PathBuf,
    /// Recorded in the output header only; the computation is deterministic.
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let h_values = raw
            .h_values
            .into_iter()
            .map(|v| match v {
                FluxEntry::Number(x) => Ok(x),
                FluxEntry::Expr(s) => parse_flux(&s),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tasks = raw.tasks;
        tasks.sort();
        tasks.dedup();
        let config = SweepConfig {
            domain: raw.domain.into(),
            resolution: raw.resolution,
            h_values,
            epsilon_values: if raw.epsilon_values.is_empty() { vec![0.0] } else { raw.epsilon_values },
            kappa_values: raw.kappa_values,
            tasks,
            output_path: raw.output_path,
            seed: raw.seed,
            workers: raw.workers,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        // relative output paths are taken relative to the config file
        if config.output_path.is_relative() {
            if let Some(dir) = path.parent() {
                config.output_path = dir.join(&config.output_path);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.domain.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.resolution < MIN_RESOLUTION {
            return bad(format!("resolution must be at least {MIN_RESOLUTION}, got {}", self.resolution));
        }
        if self.h_values.is_empty() {
            return bad("h_values must not be empty".into());
        }
        if let Some(h) = self.h_values.iter().find(|h| !h.is_finite()) {
            return bad(format!("h value {h} is not finite"));
        }
        if self.tasks.is_empty() {
            return bad("tasks must not be empty".into());
        }
        let inradius = self.domain.inradius();
        for &e in &self.epsilon_values {
            if !(e >= 0.0 && e < inradius) {
                return bad(format!("epsilon {e} must lie in [0, {inradius}) for this domain"));
            }
        }
        if self.needs_gl() && self.kappa_values.is_empty() {
            return bad("gl_energy and classify need kappa_values".into());
        }
        if let Some(k) = self.kappa_values.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return bad(format!("kappa {k} must be positive"));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    pub fn needs_gl(&self) -> bool {
        self.has(Task::GlEnergy) || self.has(Task::Classify)
    }
}

/// Parses `[c][*]pi[/d]`, a plain number, or `c/d`.
pub fn parse_flux(text: &str) -> Result<f64> {
    let err = || Error::Config(format!("cannot parse flux value {text:?}"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| err())?),
        None => (s.as_str(), 1.0),
    };
    let value = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some(coef) => {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| err())?,
            };
            c * PI
        }
        None => num.parse::<f64>().map_err(|_| err())?,
    };
    let v = value / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err())
    }
}
