//! Generates every terrain type at a few difficulty levels, prints the height
//! range and writes each heightfield as CSV.
//!
//! `cargo run --release --example terrain_gallery -- [out_dir]`

use std::path::PathBuf;

use locomo::terrain::{generate, height_scan, TerrainType, MAX_LEVEL};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "terrain".into()));
    std::fs::create_dir_all(&dir)?;
    for t in TerrainType::ALL {
        for level in [0, MAX_LEVEL / 2, MAX_LEVEL] {
            let map = generate(t, level, 7)?;
            let (lo, hi) = map.min_max();
            let [cx, cy] = map.center();
            let scan = height_scan(&map, &Vector3::new(cx, cy, hi + 0.3), 0.0);
            let spread = scan.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - scan.iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "{:<12} level {level}  {} {:>7.3} {}  heights [{lo:+.3}, {hi:+.3}] m  scan spread {spread:.3} m",
                t.name(),
                "property",
                t.property(level)?,
                t.property_unit()
            );
            map.write_csv(&dir.join(format!("{}-{level}.csv", t.name())))?;
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}
