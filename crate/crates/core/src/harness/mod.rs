//! Experiment orchestration: seeded multi-trial sweeps over unreliability
//! levels, learning-curve smoothing and CSV output.

mod config;
mod plot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baseline::{cd_schedule, cd_update, EdgeAssignment};
use crate::coagent::{reinforce_update, CoagentLayer};
use crate::error::{Error, Result};
use crate::letor::synthetic::SyntheticConfig;
use crate::letor::{self, QueryPool, SLATE_SIZE};
use crate::sim::{run_episode, run_uniform_episode, SimVariant};

pub use config::{Agent, ExperimentConfig};
pub use plot::{emit_plot, read_aggregate_csv, render_svg, AggregateRow};

pub const RAW_HEADER: [&str; 4] = ["level", "trial", "episode", "return"];
pub const AGGREGATE_HEADER: [&str; 4] = ["level", "episode", "mean_smoothed", "std_smoothed"];

/// Running mean over the previous `window` points. Points before the first
/// full window all equal the mean of the first `window` returns (or of every
/// return, if there are fewer).
pub fn smooth_curve(returns: &[f64], window: usize) -> Result<Vec<f64>> {
    if returns.is_empty() {
        return Err(Error::Empty("returns"));
    }
    if window == 0 {
        return Err(Error::Config("smoothing window must be at least 1".into()));
    }
    let head = window.min(returns.len());
    let mut sum: f64 = returns[..head].iter().sum();
    let head_mean = sum / head as f64;
    let mut out = vec![head_mean; head];
    for k in head..returns.len() {
        sum += returns[k] - returns[k - window];
        out.push(sum / window as f64);
    }
    Ok(out)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the generator for one (level, trial) cell.
pub fn trial_seed(base_seed: u64, level_index: usize, trial_index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ level_index as u64) ^ trial_index as u64)
}

/// Everything one training run needs besides the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub variant: SimVariant,
    pub agent: Agent,
    pub unreliability: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub units: usize,
    pub seed: u64,
}

/// Trains a fresh layer with per-episode updates and returns each episode's
/// undiscounted return. The layer is initialized from the same generator that
/// drives the episodes.
pub fn train_trial(pool: &QueryPool, spec: &TrialSpec) -> Result<Vec<f64>> {
    train_trial_with_layer(pool, spec).map(|(returns, _)| returns)
}

pub fn train_trial_with_layer(pool: &QueryPool, spec: &TrialSpec) -> Result<(Vec<f64>, CoagentLayer)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut layer = CoagentLayer::random(spec.units, pool.feature_dim(), &mut rng);
    let assignment = EdgeAssignment::identity(SLATE_SIZE);
    let mut returns = Vec::with_capacity(spec.episodes);
    for episode in 0..spec.episodes {
        let trace = run_episode(pool, &layer, &spec.variant, spec.unreliability, spec.gamma, &mut rng)?;
        returns.push(trace.total_reward());
        layer = match spec.agent {
            Agent::Coagent => reinforce_update(&layer, trace.records(), &trace.returns, spec.alpha, spec.gamma)?,
            Agent::CoordinateDescent => {
                let edge = cd_schedule(episode as u64, assignment.n_edges());
                cd_update(&layer, &trace, edge, &assignment, spec.alpha, spec.gamma)?
            }
        };
    }
    Ok((returns, layer))
}

/// Monte-Carlo mean return of the uniform-random recommender.
pub fn uniform_policy_mean(
    pool: &QueryPool,
    variant: &SimVariant,
    unreliability: f64,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..episodes {
        total += run_uniform_episode(pool, variant, unreliability, &mut rng)?;
    }
    Ok(total / episodes as f64)
}

/// Smoothed mean and spread across trials for one unreliability level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve {
    pub level: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub levels: Vec<f64>,
    /// `raw[level][trial][episode]`.
    pub raw: Vec<Vec<Vec<f64>>>,
    pub curves: Vec<LevelCurve>,
}

impl RunResult {
    /// Final smoothed value of each trial at `level_index`.
    pub fn final_smoothed(&self, level_index: usize, window: usize) -> Result<Vec<f64>> {
        self.raw[level_index]
            .iter()
            .map(|r| smooth_curve(r, window).map(|s| s[s.len() - 1]))
            .collect()
    }
}

/// Mean and sample standard deviation (zero for a single trial) of the
/// smoothed trial curves, pointwise.
pub fn aggregate_trials(trials: &[Vec<f64>], window: usize, level: f64) -> Result<LevelCurve> {
    let smoothed = trials
        .iter()
        .map(|t| smooth_curve(t, window))
        .collect::<Result<Vec<_>>>()?;
    let n = smoothed.len();
    let len = smoothed.first().map_or(0, Vec::len);
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for k in 0..len {
        let m = smoothed.iter().map(|s| s[k]).sum::<f64>() / n as f64;
        let var = if n > 1 {
            smoothed.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(LevelCurve { level, mean, std })
}

/// Runs every (level, trial) cell in parallel and aggregates. Results do not
/// depend on scheduling: each cell owns its generator.
pub fn run_trials(config: &ExperimentConfig, pool: &QueryPool) -> Result<RunResult> {
    config.validate()?;
    let variant = config.variant();
    let cells: Vec<(usize, usize)> = (0..config.unreliability_levels.len())
        .flat_map(|l| (0..config.trials).map(move |t| (l, t)))
        .collect();
    let results: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(l, t)| {
            train_trial(
                pool,
                &TrialSpec {
                    variant: variant.clone(),
                    agent: config.agent,
                    unreliability: config.unreliability_levels[l],
                    alpha: config.alpha,
                    gamma: config.gamma,
                    episodes: config.episodes,
                    units: config.units,
                    seed: trial_seed(config.base_seed, l, t),
                },
            )
        })
        .collect::<Result<_>>()?;

    let mut raw: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(config.trials); config.unreliability_levels.len()];
    for (&(l, _), r) in cells.iter().zip(results) {
        raw[l].push(r);
    }
    let curves = config
        .unreliability_levels
        .iter()
        .zip(&raw)
        .map(|(&level, trials)| aggregate_trials(trials, config.smoothing_window, level))
        .collect::<Result<_>>()?;
    Ok(RunResult {
        levels: config.unreliability_levels.clone(),
        raw,
        curves,
    })
}

/// Loads the configured dataset (through the cache when configured) or
/// generates the synthetic stand-in.
pub fn load_pool(config: &ExperimentConfig) -> Result<QueryPool> {
    if let Some(cache) = &config.cache_path {
        if cache.exists() {
            let file = File::open(cache).map_err(|source| Error::Dataset {
                path: cache.clone(),
                source,
            })?;
            let pool = letor::read_pool_cache(std::io::BufReader::new(file))?;
            if pool.dataset() != config.dataset {
                return Err(Error::Config(format!(
                    "cache {} holds {}, config asks for {}",
                    cache.display(),
                    pool.dataset(),
                    config.dataset
                )));
            }
            return Ok(pool);
        }
    }
    let records = match &config.dataset_path {
        Some(path) => letor::read_letor_file(path)?,
        None => SyntheticConfig::for_dataset(config.dataset, config.base_seed).generate(),
    };
    let pool = QueryPool::build(&records, config.dataset, SLATE_SIZE)?;
    if pool.is_empty() {
        return Err(Error::Empty("query pool after filtering"));
    }
    if let Some(cache) = &config.cache_path {
        let file = File::create(cache).map_err(|source| Error::Output {
            path: cache.clone(),
            source,
        })?;
        letor::write_pool_cache(&pool, BufWriter::new(file))?;
    }
    Ok(pool)
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub raw: PathBuf,
    pub aggregate: PathBuf,
}

fn create_output(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Validates the config, loads the pool, opens both output files, and only
/// then trains. Writes `raw.csv` and `aggregate.csv` into `output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(RunResult, OutputFiles)> {
    config.validate()?;
    if let Some(path) = &config.dataset_path {
        if let Err(source) = File::open(path) {
            return Err(Error::Dataset {
                path: path.clone(),
                source,
            });
        }
    }
    std::fs::create_dir_all(&config.output_dir).map_err(|source| Error::Output {
        path: config.output_dir.clone(),
        source,
    })?;
    let files = OutputFiles {
        raw: config.output_dir.join("raw.csv"),
        aggregate: config.output_dir.join("aggregate.csv"),
    };
    let raw_file = create_output(&files.raw)?;
    let agg_file = create_output(&files.aggregate)?;

    let pool = load_pool(config)?;
    let result = run_trials(config, &pool)?;
    write_raw_csv(&result, BufWriter::new(raw_file))?;
    write_aggregate_csv(&result, BufWriter::new(agg_file))?;
    Ok((result, files))
}

pub fn write_raw_csv<W: Write>(result: &RunResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RAW_HEADER)?;
    for (level, trials) in result.levels.iter().zip(&result.raw) {
        let level = level.to_string();
        for (t, returns) in trials.iter().enumerate() {
            let trial = t.to_string();
            for (e, r) in returns.iter().enumerate() {
                out.write_record([level.as_str(), &trial, &e.to_string(), &r.to_string()])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(result: &RunResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AGGREGATE_HEADER)?;
    for curve in &result.curves {
        let level = curve.level.to_string();
        for (e, (m, s)) in curve.mean.iter().zip(&curve.std).enumerate() {
            out.write_record([level.as_str(), &e.to_string(), &m.to_string(), &s.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a raw CSV back into `(level, trial) -> returns`, in file order.
pub fn read_raw_csv<R: std::io::Read>(r: R) -> Result<Vec<(f64, usize, Vec<f64>)>> {
    let mut reader = csv::Reader::from_reader(r);
    if reader.headers()?.iter().ne(RAW_HEADER) {
        return Err(Error::Schema(format!("expected header {}", RAW_HEADER.join(","))));
    }
    let mut out: Vec<(f64, usize, Vec<f64>)> = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).ok_or_else(|| Error::Schema("short row".into()));
        let bad = |what: &str| Error::Schema(format!("invalid {what}"));
        let level: f64 = field(0)?.parse().map_err(|_| bad("level"))?;
        let trial: usize = field(1)?.parse().map_err(|_| bad("trial"))?;
        let ret: f64 = field(3)?.parse().map_err(|_| bad("return"))?;
        match out.last_mut() {
            Some((l, t, v)) if *l == level && *t == trial => v.push(ret),
            _ => out.push((level, trial, vec![ret])),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth_curve(&[1.0, 2.0, 3.0], 1).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            smooth_curve(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            vec![1.5, 1.5, 2.5, 3.5]
        );
        assert_eq!(smooth_curve(&[2.5; 7], 3).unwrap(), vec![2.5; 7]);
        assert_eq!(smooth_curve(&[1.0, 2.0], 10).unwrap(), vec![1.5, 1.5]);
        assert!(smooth_curve(&[], 3).is_err());
        assert!(smooth_curve(&[1.0], 0).is_err());
    }

    #[test]
    fn seeds_differ_per_cell() {
        let mut seen = std::collections::HashSet::new();
        for l in 0..5 {
            for t in 0..30 {
                assert!(seen.insert(trial_seed(7, l, t)));
            }
        }
        assert_eq!(trial_seed(7, 1, 2), trial_seed(7, 1, 2));
        assert_ne!(trial_seed(7, 1, 2), trial_seed(8, 1, 2));
    }

    #[test]
    fn aggregate_single_trial_has_zero_spread() {
        let curve = aggregate_trials(&[vec![1.0, 3.0]], 1, 0.5).unwrap();
        assert_eq!(curve.mean, vec![1.0, 3.0]);
        assert_eq!(curve.std, vec![0.0, 0.0]);
        let two = aggregate_trials(&[vec![1.0], vec![3.0]], 1, 0.5).unwrap();
        assert_eq!(two.mean, vec![2.0]);
        assert!((two.std[0] - 2f64.sqrt()).abs() < 1e-15);
    }
}
