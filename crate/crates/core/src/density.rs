//! Grid-based event density estimation and the detection-objective gradient.
//!
//! Each agent bins the events it knows about into grid cells over a recent
//! time window and max-normalizes the counts. The resulting estimate feeds a
//! discrete objective (density-weighted joint detection probability summed
//! over cell centers) whose analytic gradient steers gradient-mode movement.

use crate::geometry::{distance, GeometryError, Grid, Point};
use crate::sensing::{detection_prob, joint_detection_prob, SensingParams};

/// Cells whose center is closer to the agent than this contribute nothing to
/// the gradient; the `1/d` factor diverges there and the limit is
/// direction-dependent.
const SINGULARITY_EPS: f64 = 1e-9;

pub type Tick = u64;

/// A per-cell density estimate, max-normalized so the largest value is 1
/// whenever any cell is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Grid,
    values: Vec<f64>,
    pub built_at: Tick,
}

impl DensityEstimate {
    /// Builds an estimate from arbitrary nonnegative per-cell weights
    /// (row-major, one entry per cell), normalizing by the maximum.
    pub fn from_weights(grid: Grid, weights: &[f64], built_at: Tick) -> Self {
        assert_eq!(weights.len(), grid.n_cells(), "one weight per cell");
        let max = weights.iter().cloned().fold(0.0, f64::max);
        let values = if max > 0.0 {
            weights.iter().map(|w| w / max).collect()
        } else {
            vec![0.0; weights.len()]
        };
        DensityEstimate {
            grid,
            values,
            built_at,
        }
    }

    pub fn value(&self, col: u32, row: u32) -> f64 {
        self.values[row as usize * self.grid.n_cols as usize + col as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Components of the objective gradient with respect to one agent's position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientVector {
    pub gx: f64,
    pub gy: f64,
}

impl GradientVector {
    pub const ZERO: GradientVector = GradientVector { gx: 0.0, gy: 0.0 };

    pub fn magnitude(&self) -> f64 {
        self.gx.hypot(self.gy)
    }
}

/// Euclidean norm of a gradient vector.
pub fn gradient_magnitude(g: &GradientVector) -> f64 {
    g.magnitude()
}

/// Bins the known events whose occurrence tick falls in the closed interval
/// `[now - time_window, now]` into grid cells and max-normalizes the counts.
pub fn estimate_density<I>(
    known_events: I,
    now: Tick,
    time_window: Tick,
    grid: &Grid,
) -> Result<DensityEstimate, GeometryError>
where
    I: IntoIterator<Item = (Point, Tick)>,
{
    assert!(time_window > 0, "time window must be positive");
    let window_start = now.saturating_sub(time_window);
    let mut counts = vec![0u32; grid.n_cells()];
    let mut max = 0u32;
    for (pos, tick) in known_events {
        if tick < window_start || tick > now {
            continue;
        }
        let cell = grid.cell_of(pos)?;
        let idx = grid.linear_index(cell);
        counts[idx] += 1;
        max = max.max(counts[idx]);
    }
    let values = if max > 0 {
        counts.iter().map(|&c| c as f64 / max as f64).collect()
    } else {
        vec![0.0; counts.len()]
    };
    Ok(DensityEstimate {
        grid: *grid,
        values,
        built_at: now,
    })
}

/// Discrete detection objective: the cell sum of density value times the
/// joint detection probability at the cell center. This is the function the
/// analytic gradient is checked against by finite differences.
pub fn discrete_objective(
    positions: &[Point],
    density: &DensityEstimate,
    params: &SensingParams,
) -> f64 {
    let grid = &density.grid;
    let mut total = 0.0;
    for row in 0..grid.n_rows {
        for col in 0..grid.n_cols {
            let v = density.value(col, row);
            if v == 0.0 {
                continue;
            }
            let q = grid
                .cell_center(crate::geometry::CellIndex::new(col, row))
                .expect("cell index from grid iteration");
            total += v * joint_detection_prob(positions, q, params);
        }
    }
    total
}

/// Analytic gradient of the discrete objective with respect to `self_pos`.
///
/// Sums over cells whose center lies within the sensing disc of `self_pos`.
/// The survival product runs over neighbors within `2 * r_s` of `self_pos`;
/// more distant agents have zero detection probability everywhere in the
/// disc, so the cutoff is exact. `neighbor_positions` must not contain the
/// computing agent itself.
pub fn gradient(
    self_pos: Point,
    neighbor_positions: &[Point],
    density: &DensityEstimate,
    params: &SensingParams,
) -> GradientVector {
    gradient_with_own_magnitude(self_pos, neighbor_positions, density, params).0
}

/// Computes the full gradient together with the magnitude the same agent
/// would see with no neighbors at all, sharing one cell scan. The plain
/// magnitude drives mode switching: it reflects the event density an agent
/// detects around itself, not the marginal gain after discounting cells
/// other agents already cover.
pub(crate) fn gradient_with_own_magnitude(
    self_pos: Point,
    neighbor_positions: &[Point],
    density: &DensityEstimate,
    params: &SensingParams,
) -> (GradientVector, f64) {
    let r_s = params.r_s;
    let near: Vec<Point> = neighbor_positions
        .iter()
        .copied()
        .filter(|&n| distance(self_pos, n) <= 2.0 * r_s)
        .collect();

    let grid = &density.grid;
    let mut gx = 0.0;
    let mut gy = 0.0;
    let mut own_x = 0.0;
    let mut own_y = 0.0;
    for cell in grid.cells_in_disc(self_pos, r_s) {
        let v = density.value(cell.col, cell.row);
        if v == 0.0 {
            continue;
        }
        let q = grid.cell_center(cell).expect("cell from cells_in_disc");
        let d = distance(self_pos, q);
        if d < SINGULARITY_EPS {
            continue;
        }
        let base = v * (2.0 / r_s) * (1.0 / r_s - 1.0 / d);
        own_x += base * (self_pos.x - q.x);
        own_y += base * (self_pos.y - q.y);
        let survival: f64 = near
            .iter()
            .map(|&k| 1.0 - detection_prob(k, q, params))
            .product();
        gx += base * survival * (self_pos.x - q.x);
        gy += base * survival * (self_pos.y - q.y);
    }
    (GradientVector { gx, gy }, own_x.hypot(own_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CellIndex, Region};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn grid(delta: f64) -> Grid {
        Grid::new(Region::new(1000.0, 1000.0), delta)
    }

    const PARAMS: SensingParams = SensingParams { r_s: 100.0, r_c: 200.0 };

    #[test]
    fn estimate_density_no_events_is_zero() {
        let g = grid(10.0);
        let est = estimate_density(std::iter::empty(), 100, 50, &g).unwrap();
        assert!(est.is_all_zero());
    }

    #[test]
    fn estimate_density_max_normalizes() {
        let g = grid(10.0);
        // Four events in one cell, two in another.
        let a = Point::new(105.0, 105.0);
        let b = Point::new(205.0, 205.0);
        let events = vec![
            (a, 90),
            (a, 91),
            (a, 92),
            (a, 93),
            (b, 94),
            (b, 95),
        ];
        let est = estimate_density(events, 100, 50, &g).unwrap();
        assert_eq!(est.value(10, 10), 1.0);
        assert_eq!(est.value(20, 20), 0.5);
        assert_eq!(est.value(0, 0), 0.0);
    }

    #[test]
    fn estimate_density_window_is_closed() {
        let g = grid(10.0);
        let p = Point::new(5.0, 5.0);
        // Exactly at now - time_window: included.
        let est = estimate_density(vec![(p, 50)], 100, 50, &g).unwrap();
        assert_eq!(est.value(0, 0), 1.0);
        // One tick older: excluded.
        let est = estimate_density(vec![(p, 49)], 100, 50, &g).unwrap();
        assert!(est.is_all_zero());
        // Exactly at now: included.
        let est = estimate_density(vec![(p, 100)], 100, 50, &g).unwrap();
        assert_eq!(est.value(0, 0), 1.0);
    }

    #[test]
    fn estimate_density_ignores_events_outside_window() {
        let g = grid(10.0);
        let p = Point::new(5.0, 5.0);
        let q = Point::new(15.0, 15.0);
        let base = vec![(p, 80), (q, 90)];
        let with_old: Vec<(Point, Tick)> =
            base.iter().cloned().chain([(q, 10)]).collect();
        let a = estimate_density(base, 100, 50, &g).unwrap();
        let b = estimate_density(with_old, 100, 50, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_density_rejects_outside_region() {
        let g = grid(10.0);
        let err = estimate_density(vec![(Point::new(-1.0, 5.0), 100)], 100, 50, &g);
        assert!(err.is_err());
    }

    #[test]
    fn objective_zero_density_and_perfect_agent() {
        let g = grid(10.0);
        let zero = DensityEstimate::from_weights(g, &vec![0.0; g.n_cells()], 0);
        assert_eq!(discrete_objective(&[Point::new(5.0, 5.0)], &zero, &PARAMS), 0.0);

        let mut w = vec![0.0; g.n_cells()];
        let cell = CellIndex::new(50, 50);
        w[g.linear_index(cell)] = 1.0;
        let est = DensityEstimate::from_weights(g, &w, 0);
        let center = g.cell_center(cell).unwrap();
        assert_eq!(discrete_objective(&[center], &est, &PARAMS), 1.0);
    }

    /// Straight-line re-summation over every cell, kept independent of the
    /// production implementation.
    fn objective_oracle(positions: &[Point], density: &DensityEstimate, params: &SensingParams) -> f64 {
        let g = &density.grid;
        let mut sum = 0.0;
        for row in 0..g.n_rows {
            for col in 0..g.n_cols {
                let q = Point::new(
                    (col as f64 + 0.5) * g.delta,
                    (row as f64 + 0.5) * g.delta,
                );
                let mut miss = 1.0;
                for &s in positions {
                    let d = distance(s, q);
                    let p = if d <= params.r_s {
                        (1.0 - d / params.r_s).powi(2)
                    } else {
                        0.0
                    };
                    miss *= 1.0 - p;
                }
                sum += density.value(col, row) * (1.0 - miss);
            }
        }
        sum
    }

    fn random_density(g: Grid, rng: &mut ChaCha12Rng) -> DensityEstimate {
        let w: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen::<f64>()).collect();
        DensityEstimate::from_weights(g, &w, 0)
    }

    #[test]
    fn objective_matches_re_summation_oracle() {
        let g = grid(50.0);
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..20 {
            let density = random_density(g, &mut rng);
            let positions: Vec<Point> = (0..5)
                .map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
                .collect();
            let fast = discrete_objective(&positions, &density, &PARAMS);
            let oracle = objective_oracle(&positions, &density, &PARAMS);
            assert!((fast - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }
    }

    #[test]
    fn objective_monotone_in_agents_and_bounded() {
        let g = grid(50.0);
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let density = random_density(g, &mut rng);
        let mass: f64 = density.values().iter().sum();
        let mut positions: Vec<Point> = Vec::new();
        let mut prev = 0.0;
        for _ in 0..6 {
            positions.push(Point::new(
                rng.gen_range(0.0..1000.0),
                rng.gen_range(0.0..1000.0),
            ));
            let f = discrete_objective(&positions, &density, &PARAMS);
            assert!(f >= prev - 1e-12);
            assert!(f >= 0.0 && f <= mass + 1e-9);
            prev = f;
        }
    }

    #[test]
    fn gradient_zero_density_is_zero() {
        let g = grid(10.0);
        let zero = DensityEstimate::from_weights(g, &vec![0.0; g.n_cells()], 0);
        let grad = gradient(Point::new(500.0, 500.0), &[], &zero, &PARAMS);
        assert_eq!(grad, GradientVector::ZERO);
    }

    #[test]
    fn gradient_symmetric_ring_cancels_in_x() {
        let g = grid(10.0);
        let me = g.cell_center(CellIndex::new(50, 50)).unwrap();
        // A ring of cells at fixed distance, symmetric about the agent in x.
        let mut w = vec![0.0; g.n_cells()];
        for (dc, dr) in [(3i32, 0i32), (-3, 0), (0, 3), (0, -3), (2, 2), (-2, 2), (2, -2), (-2, -2)] {
            let c = CellIndex::new((50 + dc) as u32, (50 + dr) as u32);
            w[g.linear_index(c)] = 1.0;
        }
        let grad = gradient(me, &[], &DensityEstimate::from_weights(g, &w, 0), &PARAMS);
        assert!(grad.gx.abs() < 1e-12, "gx = {}", grad.gx);
        assert!(grad.gy.abs() < 1e-12, "gy = {}", grad.gy);
    }

    #[test]
    fn gradient_points_toward_density() {
        let g = grid(10.0);
        let mut w = vec![0.0; g.n_cells()];
        // Mass to the right of the agent.
        w[g.linear_index(CellIndex::new(55, 50))] = 1.0;
        let est = DensityEstimate::from_weights(g, &w, 0);
        let me = g.cell_center(CellIndex::new(50, 50)).unwrap();
        let grad = gradient(me, &[], &est, &PARAMS);
        assert!(grad.gx > 0.0);
        assert!(grad.gy.abs() < 1e-15);
    }

    #[test]
    fn gradient_singularity_cell_contributes_zero() {
        let g = grid(10.0);
        let cell = CellIndex::new(50, 50);
        let mut w = vec![0.0; g.n_cells()];
        w[g.linear_index(cell)] = 1.0;
        let est = DensityEstimate::from_weights(g, &w, 0);
        let center = g.cell_center(cell).unwrap();
        let grad = gradient(center, &[], &est, &PARAMS);
        assert_eq!(grad, GradientVector::ZERO);
    }

    /// Central finite differences of the discrete objective with respect to
    /// the first position.
    fn fd_gradient(
        self_pos: Point,
        neighbors: &[Point],
        density: &DensityEstimate,
        params: &SensingParams,
        h: f64,
    ) -> GradientVector {
        let eval = |p: Point| {
            let mut positions = vec![p];
            positions.extend_from_slice(neighbors);
            discrete_objective(&positions, density, params)
        };
        let gx = (eval(Point::new(self_pos.x + h, self_pos.y))
            - eval(Point::new(self_pos.x - h, self_pos.y)))
            / (2.0 * h);
        let gy = (eval(Point::new(self_pos.x, self_pos.y + h))
            - eval(Point::new(self_pos.x, self_pos.y - h)))
            / (2.0 * h);
        GradientVector { gx, gy }
    }

    fn min_cell_center_distance(g: &Grid, p: Point) -> f64 {
        g.cells_in_disc(p, 2.0 * g.delta)
            .into_iter()
            .map(|c| distance(g.cell_center(c).unwrap(), p))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = grid(50.0);
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let mut checked = 0;
        while checked < 40 {
            let density = random_density(g, &mut rng);
            let me = Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0));
            if min_cell_center_distance(&g, me) < 1.0 {
                continue;
            }
            let neighbors: Vec<Point> = (0..3)
                .map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
                .collect();
            let analytic = gradient(me, &neighbors, &density, &PARAMS);
            let fd = fd_gradient(me, &neighbors, &density, &PARAMS, 1e-4);
            let err = (analytic.gx - fd.gx).hypot(analytic.gy - fd.gy);
            let scale = fd.magnitude();
            assert!(
                err <= 1e-5 * scale.max(1e-12),
                "relative error {} at {:?}",
                err / scale,
                me
            );
            checked += 1;
        }
    }

    #[test]
    fn gradient_ignores_far_neighbors() {
        let g = grid(10.0);
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..20 {
            let density = random_density(g, &mut rng);
            let me = Point::new(rng.gen_range(200.0..800.0), rng.gen_range(200.0..800.0));
            let neighbors: Vec<Point> = (0..4)
                .map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
                .collect();
            let base = gradient(me, &neighbors, &density, &PARAMS);
            // Add a neighbor just beyond the 2 r_s cutoff.
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let far = Point::new(
                (me.x + (2.0 * PARAMS.r_s + 0.001) * angle.cos()).clamp(0.0, 1000.0),
                (me.y + (2.0 * PARAMS.r_s + 0.001) * angle.sin()).clamp(0.0, 1000.0),
            );
            if distance(me, far) <= 2.0 * PARAMS.r_s {
                continue; // clamped inside the cutoff; skip
            }
            let mut extended = neighbors.clone();
            extended.push(far);
            let with_far = gradient(me, &extended, &density, &PARAMS);
            assert_eq!(base, with_far);
        }
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(gradient_magnitude(&GradientVector::ZERO), 0.0);
        assert_eq!(gradient_magnitude(&GradientVector { gx: 3.0, gy: 4.0 }), 5.0);
        assert_eq!(
            gradient_magnitude(&GradientVector { gx: -0.01, gy: 0.0 }),
            0.01
        );
    }

    #[test]
    fn own_magnitude_equals_neighbor_free_gradient() {
        let g = grid(10.0);
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for _ in 0..20 {
            let density = random_density(g, &mut rng);
            let me = Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0));
            let neighbors: Vec<Point> = (0..5)
                .map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
                .collect();
            let (full, own_mag) =
                gradient_with_own_magnitude(me, &neighbors, &density, &PARAMS);
            assert_eq!(full, gradient(me, &neighbors, &density, &PARAMS));
            assert_eq!(own_mag, gradient(me, &[], &density, &PARAMS).magnitude());
        }
    }
}
