//! Stage I from a run config: PPO with gait rewards on flat ground, then the
//! deterministic evaluation of each seed.
//!
//! `cargo run --release --example stage1_train -- configs/stage1.toml [out_dir]`

use locomo::pipeline::{run_stage1, RunConfig};

fn main() -> locomo::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = match args.next() {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig { iterations: 20, ..RunConfig::default() },
    };
    if let Some(out) = args.next() {
        cfg.paths.out = out.into();
    }
    let report = run_stage1(&cfg)?;
    for o in &report.outcomes {
        println!("seed {}: {:?}", o.seed, o.metrics);
    }
    println!("log {}", report.log.display());
    Ok(())
}
