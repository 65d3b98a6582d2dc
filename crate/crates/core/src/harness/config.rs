use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::letor::Dataset;
use crate::sim::{Mode, SimVariant};

/// Which learning rule drives the shared layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Coagent,
    CoordinateDescent,
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agent::Coagent => "coagent",
            Agent::CoordinateDescent => "coordinate-descent",
        })
    }
}

impl FromStr for Agent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "coagent" => Ok(Agent::Coagent),
            "coordinate-descent" | "cd" | "baseline" => Ok(Agent::CoordinateDescent),
            other => Err(Error::Config(format!("unknown agent {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    pub mode: Mode,
    /// LETOR file; a synthetic corpus seeded from `base_seed` when absent.
    pub dataset_path: Option<PathBuf>,
    /// Binary pool cache, read if present and written otherwise.
    pub cache_path: Option<PathBuf>,
    pub agent: Agent,
    pub unreliability_levels: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub smoothing_window: usize,
    pub units: usize,
    pub fixed_query: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: Dataset::Mq2008,
            mode: Mode::Bandit,
            dataset_path: None,
            cache_path: None,
            agent: Agent::Coagent,
            unreliability_levels: vec![0.0],
            alpha: 0.01,
            gamma: 1.0,
            episodes: 200_000,
            trials: 30,
            base_seed: 0,
            smoothing_window: 10_000,
            units: crate::coagent::DEFAULT_UNITS,
            fixed_query: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

pub(crate) fn parse_levels(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid unreliability level {t:?}")))
        })
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("invalid boolean {other:?}"))),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "dataset_path" => self.dataset_path = Some(PathBuf::from(value)),
            "cache_path" => self.cache_path = Some(PathBuf::from(value)),
            "agent" => self.agent = value.parse()?,
            "unreliability_levels" | "levels" => self.unreliability_levels = parse_levels(value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "episodes" => self.episodes = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "base_seed" | "seed" => self.base_seed = parse_num(key, value)?,
            "smoothing_window" => self.smoothing_window = parse_num(key, value)?,
            "units" => self.units = parse_num(key, value)?,
            "fixed_query" => self.fixed_query = parse_bool(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.episodes == 0 {
            return fail("episodes must be at least 1".into());
        }
        if self.smoothing_window == 0 {
            return fail("smoothing_window must be at least 1".into());
        }
        if self.units == 0 {
            return fail("units must be at least 1".into());
        }
        if self.unreliability_levels.is_empty() {
            return fail("no unreliability levels".into());
        }
        if let Some(p) = self
            .unreliability_levels
            .iter()
            .find(|p| !(0.0..=1.0).contains(*p))
        {
            return fail(format!("unreliability level {p} outside [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        Ok(())
    }

    pub fn variant(&self) -> SimVariant {
        let mut v = SimVariant::new(self.dataset, self.mode);
        v.fixed_query = self.fixed_query;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "
            # sweep
            dataset = mslr
            mode = rl
            dataset_path = /data/train.txt
            agent = coordinate-descent
            levels = 0.0, 0.25,0.5
            alpha = 0.05
            gamma = 0.9
            episodes = 1000
            trials = 3
            base_seed = 42
            smoothing_window = 100
            units = 16
            fixed_query = true
            output_dir = /tmp/x
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.dataset, Dataset::Mslr);
        assert_eq!(cfg.mode, Mode::Rl);
        assert_eq!(cfg.agent, Agent::CoordinateDescent);
        assert_eq!(cfg.unreliability_levels, vec![0.0, 0.25, 0.5]);
        assert_eq!((cfg.episodes, cfg.trials, cfg.base_seed), (1000, 3, 42));
        assert_eq!(cfg.units, 16);
        assert!(cfg.fixed_query && cfg.variant().fixed_query);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("alpha 0.1").is_err());
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("episodes = many").is_err());
        for text in ["trials = 0", "episodes = 0", "levels = 0.5, 1.5", "alpha = 0", "gamma = 2"] {
            let cfg = ExperimentConfig::parse(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.gamma, 1.0);
        assert_eq!(cfg.episodes, 200_000);
        assert_eq!(cfg.smoothing_window, 10_000);
        assert_eq!(cfg.units, 32);
        cfg.validate().unwrap();
    }
}
