//! A small sweep over unreliability levels: trains, writes `raw.csv` and
//! `aggregate.csv`, and renders `curves.svg`.
//!
//! ```bash
//! cargo run --release --example unreliability_sweep -- [output_dir]
//! ```

use std::path::PathBuf;

use coagent_edge::harness::{emit_plot, run_experiment, ExperimentConfig};

fn main() -> coagent_edge::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into()));
    let config = ExperimentConfig::parse(&format!(
        "
        dataset = mq2008
        mode = bandit
        levels = 0, 0.25, 0.5, 0.75, 1
        episodes = 20000
        trials = 4
        smoothing_window = 2000
        output_dir = {}
        ",
        out.display()
    ))?;
    let (result, files) = run_experiment(&config)?;
    for (i, level) in result.levels.iter().enumerate() {
        let finals = result.final_smoothed(i, config.smoothing_window)?;
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("p = {level:<4}  final smoothed return {mean:.3}");
    }
    let svg = out.join("curves.svg");
    emit_plot(&files.aggregate, &svg)?;
    println!("wrote {}, {} and {}", files.raw.display(), files.aggregate.display(), svg.display());
    Ok(())
}
