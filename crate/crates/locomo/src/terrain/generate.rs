use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::TerrainMap;
use crate::error::{Error, Result};

pub const LEVELS: u8 = 10;
pub const MAX_LEVEL: u8 = LEVELS - 1;
pub const RESOLUTION: f64 = 0.05;
/// Side of one pyramid tile, m.
pub const TILE_SIZE: f64 = 5.0;
/// Tiles per map side; the robot spawns on the central tile.
pub const TILES: usize = 5;
/// Half-width of the flat platform at each tile center, m.
pub const PLATFORM_HALF_WIDTH: f64 = 0.5;
pub const STAIR_WIDTH: f64 = 0.30;
pub const WAVELENGTH: f64 = 2.0;
pub const BLOCK_SIZE: f64 = 0.5;
/// Rough-slope noise half-range is this times `1 + level`, m.
pub const ROUGH_NOISE_PER_LEVEL: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainType {
    SlopeNormal,
    SlopeRough,
    StairsUp,
    StairsDown,
    Waves,
    DiscreteSteps,
}

impl TerrainType {
    pub const ALL: [TerrainType; 6] = [
        TerrainType::SlopeNormal,
        TerrainType::SlopeRough,
        TerrainType::StairsUp,
        TerrainType::StairsDown,
        TerrainType::Waves,
        TerrainType::DiscreteSteps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TerrainType::SlopeNormal => "slope_normal",
            TerrainType::SlopeRough => "slope_rough",
            TerrainType::StairsUp => "stairs_up",
            TerrainType::StairsDown => "stairs_down",
            TerrainType::Waves => "waves",
            TerrainType::DiscreteSteps => "discrete_steps",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).expect("listed")
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown terrain type '{s}'")))
    }

    /// Governing property range: degrees for slopes, meters otherwise.
    pub fn property_range(self) -> (f64, f64) {
        match self {
            TerrainType::SlopeNormal | TerrainType::SlopeRough => (0.0, 25.0),
            TerrainType::StairsUp | TerrainType::StairsDown => (0.05, 0.2),
            TerrainType::Waves => (0.2, 0.5),
            TerrainType::DiscreteSteps => (0.05, 0.15),
        }
    }

    pub fn property_unit(self) -> &'static str {
        match self {
            TerrainType::SlopeNormal | TerrainType::SlopeRough => "deg",
            _ => "m",
        }
    }

    /// Linear interpolation of the property range across levels 0..=9.
    pub fn property(self, level: u8) -> Result<f64> {
        check_level(level)?;
        let (lo, hi) = self.property_range();
        Ok(lo + (level as f64 / MAX_LEVEL as f64) * (hi - lo))
    }
}

fn check_level(level: u8) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!("terrain level {level} outside 0..={MAX_LEVEL}")));
    }
    Ok(())
}

/// Offset from the nearest tile center and the square-pyramid radius there.
fn tile_local(x: f64, y: f64) -> (f64, f64, f64) {
    let u = x - (x / TILE_SIZE).floor() * TILE_SIZE - TILE_SIZE / 2.0;
    let v = y - (y / TILE_SIZE).floor() * TILE_SIZE - TILE_SIZE / 2.0;
    (u, v, u.abs().max(v.abs()))
}

/// Distance from the platform edge out to the tile border, 0 on the platform.
fn run_to_border(d: f64) -> f64 {
    (TILE_SIZE / 2.0 - d.max(PLATFORM_HALF_WIDTH)).max(0.0)
}

/// Procedural map of `TILES × TILES` pyramids (or a wave field) for one
/// terrain type and difficulty level. Deterministic for a given seed.
pub fn generate(terrain_type: TerrainType, level: u8, seed: u64) -> Result<TerrainMap> {
    let property = terrain_type.property(level)?;
    let n = (TILES as f64 * TILE_SIZE / RESOLUTION).round() as usize + 1;
    let origin = [0.0, 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((terrain_type.index() as u64) << 32) ^ ((level as u64) << 40));
    match terrain_type {
        TerrainType::SlopeNormal => {
            let grade = property.to_radians().tan();
            TerrainMap::from_fn(n, n, RESOLUTION, origin, terrain_type, level, |x, y| grade * run_to_border(tile_local(x, y).2))
        }
        TerrainType::SlopeRough => {
            let grade = property.to_radians().tan();
            let amp = ROUGH_NOISE_PER_LEVEL * (1.0 + level as f64);
            let noise: Vec<f64> = (0..n * n).map(|_| rng.random_range(-amp..=amp)).collect();
            let map = TerrainMap::from_fn(n, n, RESOLUTION, origin, terrain_type, level, |x, y| grade * run_to_border(tile_local(x, y).2))?;
            let heights: Vec<f64> = map.heights().iter().zip(&noise).map(|(h, e)| h + e).collect();
            TerrainMap::from_fn(n, n, RESOLUTION, origin, terrain_type, level, |x, y| {
                let c = ((x - origin[0]) / RESOLUTION).round() as usize;
                let r = ((y - origin[1]) / RESOLUTION).round() as usize;
                heights[r * n + c]
            })
        }
        TerrainType::StairsUp | TerrainType::StairsDown => {
            let sign = if terrain_type == TerrainType::StairsUp { -1.0 } else { 1.0 };
            TerrainMap::from_fn(n, n, RESOLUTION, origin, terrain_type, level, |x, y| {
                // small epsilon keeps nodes lying on a riser on the upper tread
                let steps = ((run_to_border(tile_local(x, y).2) + 1e-9) / STAIR_WIDTH).floor();
                sign * property * steps
            })
        }
        TerrainType::Waves => {
            let k = 2.0 * std::f64::consts::PI / WAVELENGTH;
            TerrainMap::from_fn(n, n, RESOLUTION, origin, terrain_type, level, |x, y| property / 4.0 * ((k * x).sin() + (k * y).sin()))
        }
        TerrainType::DiscreteSteps => {
            let blocks = (TILES as f64 * TILE_SIZE / BLOCK_SIZE).ceil() as usize + 1;
            let picks: Vec<f64> = (0..blocks * blocks).map(|_| property * rng.random_range(-1i32..=1) as f64).collect();
            TerrainMap::from_fn(n, n, RESOLUTION, origin, terrain_type, level, |x, y| {
                let (u, v, _) = tile_local(x, y);
                if u.abs() <= PLATFORM_HALF_WIDTH && v.abs() <= PLATFORM_HALF_WIDTH {
                    return 0.0;
                }
                let bx = ((x - origin[0]) / BLOCK_SIZE).floor() as usize;
                let by = ((y - origin[1]) / BLOCK_SIZE).floor() as usize;
                picks[by.min(blocks - 1) * blocks + bx.min(blocks - 1)]
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stairs_level_nine_step_height() {
        assert!((TerrainType::StairsUp.property(9).unwrap() - 0.2).abs() < 1e-15);
        let m = generate(TerrainType::StairsUp, 9, 1).unwrap();
        // walk outward from the central platform along +x: every rise is one step
        let c = m.center();
        let mut last = m.height_at(c[0], c[1]).0;
        let mut rises = Vec::new();
        let mut x = c[0];
        while x < c[0] + TILE_SIZE / 2.0 - 0.01 {
            x += RESOLUTION;
            let h = m.height_at(x, c[1]).0;
            if (h - last).abs() > 1e-9 {
                rises.push(h - last);
            }
            last = h;
        }
        assert!(!rises.is_empty());
        assert!(rises.iter().all(|r| (r - 0.2).abs() < 1e-9), "{rises:?}");
    }

    #[test]
    fn slope_level_zero_is_flat() {
        let m = generate(TerrainType::SlopeNormal, 0, 5).unwrap();
        let (lo, hi) = m.min_max();
        assert_eq!((lo, hi), (0.0, 0.0));
    }

    #[test]
    fn waves_level_nine_peak_to_trough() {
        let m = generate(TerrainType::Waves, 9, 5).unwrap();
        let (lo, hi) = m.min_max();
        assert!((hi - lo - 0.5).abs() < 1e-9, "{}", hi - lo);
    }

    #[test]
    fn slope_inclination_matches_level() {
        let m = generate(TerrainType::SlopeNormal, 9, 0).unwrap();
        let c = m.center();
        let x = c[0] + 1.5;
        let grade = (m.height_at(x - 0.1, c[1]).0 - m.height_at(x + 0.1, c[1]).0) / 0.2;
        assert!((grade.atan().to_degrees() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn rough_noise_is_bounded() {
        let smooth = generate(TerrainType::SlopeNormal, 4, 2).unwrap();
        let rough = generate(TerrainType::SlopeRough, 4, 2).unwrap();
        let amp = ROUGH_NOISE_PER_LEVEL * 5.0;
        let diffs: Vec<f64> = smooth.heights().iter().zip(rough.heights()).map(|(a, b)| b - a).collect();
        assert!(diffs.iter().all(|d| d.abs() <= amp + 1e-12));
        assert!(diffs.iter().any(|d| d.abs() > amp / 2.0));
    }

    #[test]
    fn discrete_steps_use_three_heights_and_flat_spawn() {
        let m = generate(TerrainType::DiscreteSteps, 9, 3).unwrap();
        let h = 0.15;
        assert!(m.heights().iter().all(|v| [0.0, h, -h].iter().any(|c| (v - c).abs() < 1e-12)));
        let c = m.center();
        assert_eq!(m.height_at(c[0], c[1]).0, 0.0);
    }

    #[test]
    fn level_out_of_range_rejected() {
        assert!(generate(TerrainType::Waves, 10, 0).is_err());
    }

    #[test]
    fn spawn_tile_center_is_a_platform() {
        for t in TerrainType::ALL {
            let m = generate(t, 5, 9).unwrap();
            let c = m.center();
            let (u, v, _) = tile_local(c[0], c[1]);
            assert!(u.abs() < 1e-9 && v.abs() < 1e-9, "{t:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn property_monotone_in_level(t in 0usize..6, level in 0u8..9) {
            let tt = TerrainType::ALL[t];
            prop_assert!(tt.property(level + 1).unwrap() >= tt.property(level).unwrap());
        }

        #[test]
        fn generation_is_reproducible(t in 0usize..6, level in 0u8..10, seed in 0u64..100) {
            let tt = TerrainType::ALL[t];
            let a = generate(tt, level, seed).unwrap();
            let b = generate(tt, level, seed).unwrap();
            prop_assert!(a == b);
            prop_assert!(a.heights().iter().all(|h| h.is_finite()));
        }
    }
}
