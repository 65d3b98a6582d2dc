use std::path::Path;
use std::process::Command;

use coagent_edge::harness::*;
use coagent_edge::Error;

fn small_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        unreliability_levels: vec![0.0, 1.0],
        episodes: 300,
        trials: 2,
        smoothing_window: 50,
        units: 4,
        base_seed: 11,
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn same_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = run_experiment(&small_config(&dir.path().join("a"))).unwrap();
    let (_, b) = run_experiment(&small_config(&dir.path().join("b"))).unwrap();
    assert_eq!(std::fs::read(&a.raw).unwrap(), std::fs::read(&b.raw).unwrap());
    assert_eq!(std::fs::read(&a.aggregate).unwrap(), std::fs::read(&b.aggregate).unwrap());
}

#[test]
fn fully_unreliable_level_is_flat_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (result, _) = run_experiment(&small_config(dir.path())).unwrap();
    assert!(result.raw[1].iter().flatten().all(|&r| r == 0.0));
    assert!(result.curves[1].mean.iter().all(|&m| m == 0.0));
    assert!(result.curves[1].std.iter().all(|&s| s == 0.0));
    assert!(result.curves[0].mean.iter().any(|&m| m > 0.0));
}

#[test]
fn aggregate_recomputes_from_raw() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (_, files) = run_experiment(&cfg).unwrap();
    let raw = read_raw_csv(std::fs::File::open(&files.raw).unwrap()).unwrap();
    let agg = read_aggregate_csv(std::fs::File::open(&files.aggregate).unwrap()).unwrap();
    assert_eq!(raw.len(), 4);
    for &level in &cfg.unreliability_levels {
        let trials: Vec<Vec<f64>> = raw.iter().filter(|r| r.0 == level).map(|r| r.2.clone()).collect();
        assert_eq!(trials.len(), 2);
        let smoothed: Vec<Vec<f64>> = trials.iter().map(|t| smooth_curve(t, cfg.smoothing_window).unwrap()).collect();
        let rows: Vec<&AggregateRow> = agg.iter().filter(|r| r.level == level).collect();
        assert_eq!(rows.len(), cfg.episodes);
        for row in rows {
            let (a, b) = (smoothed[0][row.episode], smoothed[1][row.episode]);
            let mean = (a + b) / 2.0;
            let std = ((a - mean).powi(2) + (b - mean).powi(2)).sqrt();
            assert!((row.mean - mean).abs() < 1e-12);
            assert!((row.std - std).abs() < 1e-12);
        }
    }
}

#[test]
fn errors_are_distinct_and_early() {
    let dir = tempfile::tempdir().unwrap();

    let mut bad = small_config(&dir.path().join("bad_config"));
    bad.trials = 0;
    assert!(matches!(run_experiment(&bad), Err(Error::Config(_))));
    assert!(!dir.path().join("bad_config").exists());

    let mut missing = small_config(&dir.path().join("missing"));
    missing.dataset_path = Some(dir.path().join("nope.txt"));
    assert!(matches!(run_experiment(&missing), Err(Error::Dataset { .. })));
    assert!(!dir.path().join("missing").exists());

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let unwritable = small_config(&blocker.join("sub"));
    assert!(matches!(run_experiment(&unwritable), Err(Error::Output { .. })));
}

#[test]
fn dataset_file_and_cache_give_same_pool() {
    use coagent_edge::letor::synthetic::{to_letor_text, SyntheticConfig};
    use coagent_edge::letor::Dataset;
    let dir = tempfile::tempdir().unwrap();
    let mut syn = SyntheticConfig::for_dataset(Dataset::Mq2008, 3);
    syn.queries = 20;
    let path = dir.path().join("train.txt");
    std::fs::write(&path, to_letor_text(&syn.generate())).unwrap();
    let mut cfg = small_config(&dir.path().join("out"));
    cfg.dataset_path = Some(path);
    cfg.cache_path = Some(dir.path().join("pool.bin"));
    let fresh = load_pool(&cfg).unwrap();
    assert!(dir.path().join("pool.bin").exists());
    let cached = load_pool(&cfg).unwrap();
    assert_eq!(fresh, cached);
    cfg.dataset = Dataset::Mslr;
    assert!(load_pool(&cfg).is_err());
}

#[test]
fn cli_run_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.conf");
    std::fs::write(&config, "# small\nmode = bandit\nunits = 4\nsmoothing_window = 20\nalpha = 0.02\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_coagent-edge"))
        .args(["run", "--config"])
        .arg(&config)
        .args(["--agent", "cd", "--levels", "0,0.5", "--episodes", "100", "--trials", "2", "--seed", "4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let agg = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("level,episode,mean_smoothed,std_smoothed\n"));
    assert_eq!(agg.lines().count(), 1 + 2 * 100);
    let raw = std::fs::read_to_string(out.join("raw.csv")).unwrap();
    assert!(raw.starts_with("level,trial,episode,return\n"));
    assert_eq!(raw.lines().count(), 1 + 2 * 2 * 100);

    let svg = dir.path().join("curves.svg");
    let status = Command::new(env!("CARGO_BIN_EXE_coagent-edge"))
        .args(["plot", "--in"])
        .arg(out.join("aggregate.csv"))
        .arg("--out")
        .arg(&svg)
        .output()
        .unwrap();
    assert!(status.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("class=\"curve\"").count(), 2);

    let failed = Command::new(env!("CARGO_BIN_EXE_coagent-edge"))
        .args(["plot", "--in"])
        .arg(out.join("raw.csv"))
        .arg("--out")
        .arg(dir.path().join("bad.svg"))
        .output()
        .unwrap();
    assert!(!failed.status.success());
    assert!(!dir.path().join("bad.svg").exists());
}
