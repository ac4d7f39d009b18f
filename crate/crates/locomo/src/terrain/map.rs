use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::TerrainType;
use crate::dynamics::Heightfield;
use crate::error::{Error, Result};

/// Rows of the scan grid, along the base heading.
pub const SCAN_ROWS: usize = 17;
/// Columns of the scan grid, across the base heading.
pub const SCAN_COLS: usize = 11;
pub const SCAN_SPACING: f64 = 0.1;
pub const SCAN_LEN: usize = SCAN_ROWS * SCAN_COLS;

/// Heightfield sampled on a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainMap {
    /// Row-major, `rows × cols`; row index follows y, column index follows x.
    heights: Vec<f64>,
    rows: usize,
    cols: usize,
    pub resolution: f64,
    /// World `(x, y)` of grid node `(0, 0)`.
    pub origin: [f64; 2],
    pub terrain_type: TerrainType,
    pub level: u8,
}

impl TerrainMap {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        resolution: f64,
        origin: [f64; 2],
        terrain_type: TerrainType,
        level: u8,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if rows < 2 || cols < 2 || !(resolution > 0.0) {
            return Err(Error::InvalidArgument(format!("terrain grid {rows}x{cols} at {resolution} m")));
        }
        let mut heights = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                heights.push(f(origin[0] + c as f64 * resolution, origin[1] + r as f64 * resolution));
            }
        }
        if !heights.iter().all(|h| h.is_finite()) {
            return Err(Error::NonFinite("terrain heights".into()));
        }
        Ok(Self { heights, rows, cols, resolution, origin, terrain_type, level })
    }

    pub fn flat(size: f64, height: f64) -> Self {
        let n = (size / 0.05).round() as usize + 1;
        Self::from_fn(n, n, 0.05, [0.0, 0.0], TerrainType::SlopeNormal, 0, |_, _| height).expect("valid flat grid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn node(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.cols + col]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.heights.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)))
    }

    /// World extent `[x_min, x_max, y_min, y_max]`.
    pub fn bounds(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[0] + (self.cols - 1) as f64 * self.resolution,
            self.origin[1],
            self.origin[1] + (self.rows - 1) as f64 * self.resolution,
        ]
    }

    pub fn center(&self) -> [f64; 2] {
        let b = self.bounds();
        [(b[0] + b[1]) / 2.0, (b[2] + b[3]) / 2.0]
    }

    /// Cell indices and fractional offsets; coordinates are clamped to the grid.
    fn locate(&self, x: f64, y: f64) -> (usize, usize, f64, f64, bool) {
        let fx = (x - self.origin[0]) / self.resolution;
        let fy = (y - self.origin[1]) / self.resolution;
        let max_x = (self.cols - 1) as f64;
        let max_y = (self.rows - 1) as f64;
        let eps = 1e-9;
        let inside = fx >= -eps && fy >= -eps && fx <= max_x + eps && fy <= max_y + eps;
        let fx = if fx.is_nan() { 0.0 } else { fx.clamp(0.0, max_x) };
        let fy = if fy.is_nan() { 0.0 } else { fy.clamp(0.0, max_y) };
        let c = (fx.floor() as usize).min(self.cols - 2);
        let r = (fy.floor() as usize).min(self.rows - 2);
        (r, c, fx - c as f64, fy - r as f64, inside)
    }

    /// Bilinear height; the flag is false when `(x, y)` was clamped to the edge.
    pub fn height_at(&self, x: f64, y: f64) -> (f64, bool) {
        let (r, c, tx, ty, inside) = self.locate(x, y);
        let h00 = self.node(r, c);
        let h01 = self.node(r, c + 1);
        let h10 = self.node(r + 1, c);
        let h11 = self.node(r + 1, c + 1);
        let h = (1.0 - ty) * ((1.0 - tx) * h00 + tx * h01) + ty * ((1.0 - tx) * h10 + tx * h11);
        (h, inside)
    }

    /// Upward normal of the bilinear patch at `(x, y)`.
    pub fn normal_at(&self, x: f64, y: f64) -> Vector3<f64> {
        let (r, c, tx, ty, _) = self.locate(x, y);
        let h00 = self.node(r, c);
        let h01 = self.node(r, c + 1);
        let h10 = self.node(r + 1, c);
        let h11 = self.node(r + 1, c + 1);
        let dx = ((1.0 - ty) * (h01 - h00) + ty * (h11 - h10)) / self.resolution;
        let dy = ((1.0 - tx) * (h10 - h00) + tx * (h11 - h01)) / self.resolution;
        Vector3::new(-dx, -dy, 1.0).normalize()
    }

    /// Heightfield CSV: one line per grid row (y), one column per grid x, meters.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.heights.len() * 8);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    out.push(',');
                }
                write!(out, "{}", self.node(r, c)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

impl Heightfield for TerrainMap {
    fn surface(&self, x: f64, y: f64) -> (f64, Vector3<f64>) {
        (self.height_at(x, y).0, self.normal_at(x, y))
    }

    fn height(&self, x: f64, y: f64) -> f64 {
        self.height_at(x, y).0
    }
}

/// Scan point offsets in the yaw-aligned base frame, row-major.
pub fn scan_offsets() -> impl Iterator<Item = (f64, f64)> {
    let half_r = (SCAN_ROWS / 2) as f64;
    let half_c = (SCAN_COLS / 2) as f64;
    (0..SCAN_ROWS).flat_map(move |r| (0..SCAN_COLS).map(move |c| ((r as f64 - half_r) * SCAN_SPACING, (c as f64 - half_c) * SCAN_SPACING)))
}

/// Vertical distance from the base down to the terrain at 187 points on a
/// yaw-aligned 17×11 grid centered under the base.
pub fn height_scan<H: Heightfield + ?Sized>(map: &H, base_position: &Vector3<f64>, base_yaw: f64) -> Vec<f64> {
    let (s, c) = base_yaw.sin_cos();
    scan_offsets()
        .map(|(dx, dy)| {
            let x = base_position.x + c * dx - s * dy;
            let y = base_position.y + s * dx + c * dy;
            base_position.z - map.height(x, y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(a: f64, b: f64, c0: f64) -> TerrainMap {
        TerrainMap::from_fn(41, 61, 0.05, [-1.0, -0.5], TerrainType::SlopeNormal, 0, |x, y| a * x + b * y + c0).unwrap()
    }

    #[test]
    fn grid_nodes_return_stored_values() {
        let m = TerrainMap::from_fn(5, 7, 0.1, [0.0, 0.0], TerrainType::Waves, 0, |x, y| (x * 13.0).sin() + y * y).unwrap();
        for r in 0..5 {
            for c in 0..7 {
                let (h, inside) = m.height_at(c as f64 * 0.1, r as f64 * 0.1);
                assert!(inside);
                assert!((h - m.node(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_bounds_is_clamped_and_flagged() {
        let m = plane(0.3, 0.0, 0.0);
        let (h, inside) = m.height_at(100.0, 0.0);
        assert!(!inside);
        assert!((h - 0.3 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_scan_is_constant() {
        let m = TerrainMap::flat(4.0, 0.0);
        let scan = height_scan(&m, &Vector3::new(2.0, 2.0, 0.3), 0.7);
        assert_eq!(scan.len(), 187);
        assert!(scan.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn step_edge_scan_matches_pointwise_queries() {
        let m = TerrainMap::from_fn(81, 81, 0.05, [0.0, 0.0], TerrainType::DiscreteSteps, 0, |x, _| if x >= 2.0 { 0.1 } else { 0.0 }).unwrap();
        let base = Vector3::new(2.02, 2.0, 0.4);
        let scan = height_scan(&m, &base, 0.0);
        let mut values: Vec<f64> = scan.clone();
        values.sort_by(f64::total_cmp);
        values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(values.len(), 2, "{values:?}");
        for ((dx, dy), v) in scan_offsets().zip(&scan) {
            assert_eq!(*v, base.z - m.height_at(base.x + dx, base.y + dy).0);
        }
    }

    #[test]
    fn csv_shape() {
        let m = TerrainMap::flat(1.0, 0.5);
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), m.rows());
        assert_eq!(csv.lines().next().unwrap().split(',').count(), m.cols());
    }

    proptest! {
        #[test]
        fn bilinear_reproduces_planes(a in -1.0f64..1.0, b in -1.0f64..1.0, x in -1.0f64..2.0, y in -0.5f64..1.5) {
            let m = plane(a, b, 0.2);
            let (h, inside) = m.height_at(x, y);
            prop_assert!(inside);
            prop_assert!((h - (a * x + b * y + 0.2)).abs() < 1e-12);
            let n = m.normal_at(x, y);
            let expected = Vector3::new(-a, -b, 1.0).normalize();
            prop_assert!((n - expected).norm() < 1e-9);
        }

        #[test]
        fn scan_equals_independent_queries(x in 0.5f64..1.5, y in 0.2f64..1.0, yaw in -3.2f64..3.2) {
            let m = TerrainMap::from_fn(41, 61, 0.05, [-1.0, -0.5], TerrainType::Waves, 3, |x, y| (3.0 * x).sin() * (2.0 * y).cos()).unwrap();
            let base = Vector3::new(x, y, 0.5);
            let scan = height_scan(&m, &base, yaw);
            prop_assert_eq!(scan.len(), SCAN_LEN);
            let mut i = 0;
            for r in 0..SCAN_ROWS {
                for c in 0..SCAN_COLS {
                    let dx = (r as f64 - 8.0) * 0.1;
                    let dy = (c as f64 - 5.0) * 0.1;
                    let wx = x + yaw.cos() * dx - yaw.sin() * dy;
                    let wy = y + yaw.sin() * dx + yaw.cos() * dy;
                    prop_assert!((scan[i] - (0.5 - m.height_at(wx, wy).0)).abs() < 1e-12);
                    i += 1;
                }
            }
        }
    }
}
