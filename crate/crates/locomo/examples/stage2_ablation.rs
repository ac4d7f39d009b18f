//! Trains the three Stage-II reward modes on the same seeds and compares the
//! final curriculum level.
//!
//! `cargo run --release --example stage2_ablation -- configs/stage2-ablation.toml dataset.bin [out_dir]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use locomo::pipeline::{run_stage2, RunConfig};
use locomo::rewards::RewardSet;

fn main() -> locomo::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(config), Some(dataset)) = (args.first(), args.get(1)) else {
        eprintln!("usage: stage2_ablation <config.toml> <dataset.bin> [out_dir]");
        std::process::exit(2);
    };
    let base = RunConfig::load(config.as_ref())?;
    let out = args.get(2).map(PathBuf::from).unwrap_or_else(|| base.paths.out.clone());
    let mut table: BTreeMap<u64, Vec<(String, f64)>> = BTreeMap::new();
    for mode in [RewardSet::Basic, RewardSet::BasicGait, RewardSet::BasicExperience] {
        let mut cfg = base.clone();
        cfg.reward_mode = Some(mode);
        cfg.paths.dataset = Some(dataset.into());
        cfg.paths.out = out.join(mode.label().replace('+', "-"));
        for o in run_stage2(&cfg)?.outcomes {
            table.entry(o.seed).or_default().push((mode.label().to_string(), o.metrics["final_terrain_level"]));
        }
    }
    for (seed, row) in table {
        let cells: Vec<String> = row.iter().map(|(m, l)| format!("{m} {l:.2}")).collect();
        println!("seed {seed}: {}", cells.join("  "));
    }
    Ok(())
}
