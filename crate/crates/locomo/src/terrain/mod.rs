//! Procedural heightfields, the 187-point height scan and the difficulty
//! curriculum.

mod curriculum;
mod generate;
mod map;

pub use curriculum::{curriculum_update, level_histogram, CurriculumState, TerrainSet, YawMode, DEMOTE_BELOW, PROMOTE_ABOVE};
pub use generate::{generate, TerrainType, LEVELS, MAX_LEVEL, PLATFORM_HALF_WIDTH, RESOLUTION, ROUGH_NOISE_PER_LEVEL, STAIR_WIDTH, TILE_SIZE};
pub use map::{height_scan, scan_offsets, TerrainMap, SCAN_COLS, SCAN_LEN, SCAN_ROWS, SCAN_SPACING};
