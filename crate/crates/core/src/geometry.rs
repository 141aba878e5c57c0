//! Rectangular target region, its uniform grid decomposition, and the
//! distance/disc primitives the rest of the simulator is built on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the {width}x{height} region")]
    PointOutsideRegion {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("cell index ({col}, {row}) out of range for a {n_cols}x{n_rows} grid")]
    InvalidCellIndex {
        col: u32,
        row: u32,
        n_cols: u32,
        n_rows: u32,
    },
}

/// A point in the plane, in the same distance units as the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Axis-aligned rectangular target region with its origin at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn new(width: f64, height: f64) -> Self {
        assert!(
            width > 0.0 && height > 0.0,
            "region dimensions must be positive"
        );
        Region { width, height }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    /// Clamps a point component-wise onto the region.
    pub fn clamp(&self, p: Point) -> Point {
        Point {
            x: p.x.clamp(0.0, self.width),
            y: p.y.clamp(0.0, self.height),
        }
    }
}

/// Index of one grid cell: `col` counts cells along x, `row` along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub col: u32,
    pub row: u32,
}

impl CellIndex {
    pub fn new(col: u32, row: u32) -> Self {
        CellIndex { col, row }
    }
}

/// Decomposition of a region into square cells of side `delta`.
///
/// Cells are left-closed/right-open; points on the region's max edges fold
/// into the last row/column so every point maps to exactly one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub region: Region,
    pub delta: f64,
    pub n_cols: u32,
    pub n_rows: u32,
}

impl Grid {
    pub fn new(region: Region, delta: f64) -> Self {
        assert!(delta > 0.0, "cell side must be positive");
        let n_cols = (region.width / delta).ceil() as u32;
        let n_rows = (region.height / delta).ceil() as u32;
        Grid {
            region,
            delta,
            n_cols,
            n_rows,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cols as usize * self.n_rows as usize
    }

    /// Row-major linear index of a cell.
    pub fn linear_index(&self, c: CellIndex) -> usize {
        c.row as usize * self.n_cols as usize + c.col as usize
    }

    pub fn is_valid(&self, c: CellIndex) -> bool {
        c.col < self.n_cols && c.row < self.n_rows
    }

    /// Cell containing point `p`.
    pub fn cell_of(&self, p: Point) -> Result<CellIndex, GeometryError> {
        if !self.region.contains(p) {
            return Err(GeometryError::PointOutsideRegion {
                x: p.x,
                y: p.y,
                width: self.region.width,
                height: self.region.height,
            });
        }
        let col = ((p.x / self.delta).floor() as u32).min(self.n_cols - 1);
        let row = ((p.y / self.delta).floor() as u32).min(self.n_rows - 1);
        Ok(CellIndex { col, row })
    }

    /// Central point of a cell.
    pub fn cell_center(&self, c: CellIndex) -> Result<Point, GeometryError> {
        if !self.is_valid(c) {
            return Err(GeometryError::InvalidCellIndex {
                col: c.col,
                row: c.row,
                n_cols: self.n_cols,
                n_rows: self.n_rows,
            });
        }
        Ok(Point {
            x: (c.col as f64 + 0.5) * self.delta,
            y: (c.row as f64 + 0.5) * self.delta,
        })
    }

    /// All cells whose center lies within `radius` of `center`, in row-major
    /// order. Cell membership uses the center-in-disc test, consistent with
    /// treating each cell as a point mass at its center.
    pub fn cells_in_disc(&self, center: Point, radius: f64) -> Vec<CellIndex> {
        assert!(radius > 0.0, "disc radius must be positive");
        // Bounding box of candidate columns/rows, clamped to the grid.
        let lo_col = (((center.x - radius) / self.delta).floor().max(0.0)) as u32;
        let hi_col = ((((center.x + radius) / self.delta).ceil()) as i64)
            .clamp(0, self.n_cols as i64) as u32;
        let lo_row = (((center.y - radius) / self.delta).floor().max(0.0)) as u32;
        let hi_row = ((((center.y + radius) / self.delta).ceil()) as i64)
            .clamp(0, self.n_rows as i64) as u32;

        let mut cells = Vec::new();
        for row in lo_row..hi_row {
            let cy = (row as f64 + 0.5) * self.delta;
            for col in lo_col..hi_col {
                let cx = (col as f64 + 0.5) * self.delta;
                if (cx - center.x).hypot(cy - center.y) <= radius {
                    cells.push(CellIndex { col, row });
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn grid_1000(delta: f64) -> Grid {
        Grid::new(Region::new(1000.0, 1000.0), delta)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Point::new(0.0, 0.0), Point::new(0.0, 0.0)), 0.0);
        assert_eq!(distance(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        assert_eq!(
            distance(Point::new(10.0, 10.0), Point::new(10.0, 110.0)),
            100.0
        );
    }

    #[test]
    fn distance_triangle_inequality() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p: Vec<Point> = (0..3)
                .map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
                .collect();
            let ab = distance(p[0], p[1]);
            let bc = distance(p[1], p[2]);
            let ac = distance(p[0], p[2]);
            assert!(ac <= ab + bc + 1e-9);
            assert_eq!(ab, distance(p[1], p[0]));
        }
    }

    #[test]
    fn cell_of_examples() {
        let g = grid_1000(10.0);
        assert_eq!(g.cell_of(Point::new(0.0, 0.0)).unwrap(), CellIndex::new(0, 0));
        assert_eq!(
            g.cell_of(Point::new(999.9, 5.0)).unwrap(),
            CellIndex::new(99, 0)
        );
        assert_eq!(
            g.cell_of(Point::new(10.0, 10.0)).unwrap(),
            CellIndex::new(1, 1)
        );
        // Max edges fold into the last row/column.
        assert_eq!(
            g.cell_of(Point::new(1000.0, 1000.0)).unwrap(),
            CellIndex::new(99, 99)
        );
    }

    #[test]
    fn cell_of_outside_region_errors() {
        let g = grid_1000(10.0);
        assert!(g.cell_of(Point::new(-0.1, 5.0)).is_err());
        assert!(g.cell_of(Point::new(5.0, 1000.1)).is_err());
    }

    #[test]
    fn cell_center_examples() {
        let g = grid_1000(10.0);
        assert_eq!(
            g.cell_center(CellIndex::new(0, 0)).unwrap(),
            Point::new(5.0, 5.0)
        );
        assert_eq!(
            g.cell_center(CellIndex::new(99, 99)).unwrap(),
            Point::new(995.0, 995.0)
        );
        let g25 = grid_1000(25.0);
        assert_eq!(
            g25.cell_center(CellIndex::new(1, 2)).unwrap(),
            Point::new(37.5, 62.5)
        );
        assert!(g.cell_center(CellIndex::new(100, 0)).is_err());
    }

    #[test]
    fn cell_of_cell_center_roundtrip() {
        let g = grid_1000(10.0);
        for row in 0..g.n_rows {
            for col in 0..g.n_cols {
                let c = CellIndex::new(col, row);
                let center = g.cell_center(c).unwrap();
                assert_eq!(g.cell_of(center).unwrap(), c);
            }
        }
    }

    #[test]
    fn cells_in_disc_single_cell_and_all_cells() {
        let g = grid_1000(10.0);
        let center = g.cell_center(CellIndex::new(42, 17)).unwrap();
        assert_eq!(
            g.cells_in_disc(center, 2.5),
            vec![CellIndex::new(42, 17)]
        );
        let diag = (1000.0f64.powi(2) * 2.0).sqrt();
        assert_eq!(
            g.cells_in_disc(Point::new(0.0, 0.0), diag + 1.0).len(),
            g.n_cells()
        );
    }

    /// Exhaustive scan over every cell center; the independent oracle for
    /// `cells_in_disc`.
    fn brute_force_disc(g: &Grid, center: Point, radius: f64) -> Vec<CellIndex> {
        let mut out = Vec::new();
        for row in 0..g.n_rows {
            for col in 0..g.n_cols {
                let c = CellIndex::new(col, row);
                if distance(g.cell_center(c).unwrap(), center) <= radius {
                    out.push(c);
                }
            }
        }
        out
    }

    #[test]
    fn cells_in_disc_matches_brute_force_scan() {
        let g = grid_1000(10.0);
        let fast = g.cells_in_disc(Point::new(500.0, 500.0), 100.0);
        let brute = brute_force_disc(&g, Point::new(500.0, 500.0), 100.0);
        assert_eq!(fast, brute);

        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let center = Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0));
            let radius = rng.gen_range(1.0..300.0);
            assert_eq!(
                g.cells_in_disc(center, radius),
                brute_force_disc(&g, center, radius),
                "center {:?} radius {}",
                center,
                radius
            );
        }
    }

    #[test]
    fn cells_in_disc_is_row_major() {
        let g = grid_1000(10.0);
        let cells = g.cells_in_disc(Point::new(500.0, 500.0), 55.0);
        let mut sorted = cells.clone();
        sorted.sort_by_key(|c| (c.row, c.col));
        assert_eq!(cells, sorted);
    }

    #[test]
    fn grid_dimensions_cover_region() {
        let g = Grid::new(Region::new(995.0, 1000.0), 10.0);
        assert_eq!(g.n_cols, 100);
        assert_eq!(g.n_rows, 100);
        // Every corner of the region maps to a cell.
        for p in [
            Point::new(0.0, 0.0),
            Point::new(995.0, 0.0),
            Point::new(0.0, 1000.0),
            Point::new(995.0, 1000.0),
        ] {
            assert!(g.cell_of(p).is_ok());
        }
    }
}
