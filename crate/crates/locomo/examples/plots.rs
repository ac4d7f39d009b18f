//! Renders the SVG charts for any run log.
//!
//! `cargo run --release --example plots -- runs/train-stage2.jsonl [out_dir]`

use std::path::PathBuf;

use locomo::pipeline::{emit_plots, read_log};

fn main() -> locomo::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(log) = args.first() else {
        eprintln!("usage: plots <log.jsonl> [out_dir]");
        std::process::exit(2);
    };
    let dir = args.get(1).map(PathBuf::from).unwrap_or_else(|| "plots".into());
    let (records, skipped) = read_log(log.as_ref())?;
    for f in emit_plots(&records, &dir)? {
        println!("{:<48} {:>3} series {:>6} points", f.path.display(), f.series, f.points);
    }
    if skipped > 0 {
        println!("skipped {skipped} malformed line(s)");
    }
    Ok(())
}
