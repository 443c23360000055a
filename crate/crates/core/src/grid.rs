//! Uniform spatial grid for fixed-radius neighbor queries.
//!
//! Cells are at least as wide as the query radius, so every point within
//! range of a query lies in the 3x3 cell neighborhood. The grid only
//! produces candidates; callers apply the exact distance test.

use crate::world::SensorSite;

/// Cap on cells per axis; a radius far below the site spacing would
/// otherwise allocate an absurdly fine grid.
const MAX_CELLS_PER_AXIS: usize = 512;

pub struct SpatialGrid {
    cell_size: f64,
    min_x: f64,
    min_y: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<u32>>,
}

impl SpatialGrid {
    /// Build over the disc `[-R, R]^2` with cell size `radius` (floored so
    /// the axis stays under [`MAX_CELLS_PER_AXIS`] cells).
    pub fn build(sites: &[SensorSite], radius: f64, disc_radius: f64) -> Self {
        assert!(radius > 0.0 && disc_radius > 0.0);
        let span = 2.0 * disc_radius;
        let cell_size = radius.max(span / MAX_CELLS_PER_AXIS as f64);
        let per_axis = ((span / cell_size).ceil() as usize).max(1);
        let mut grid = Self {
            cell_size,
            min_x: -disc_radius,
            min_y: -disc_radius,
            cols: per_axis,
            rows: per_axis,
            cells: vec![Vec::new(); per_axis * per_axis],
        };
        for site in sites {
            let (cx, cy) = grid.cell_of(site.x, site.y);
            grid.cells[cy * grid.cols + cx].push(site.id as u32);
        }
        grid
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = ((x - self.min_x) / self.cell_size).floor() as isize;
        let cy = ((y - self.min_y) / self.cell_size).floor() as isize;
        (
            cx.clamp(0, self.cols as isize - 1) as usize,
            cy.clamp(0, self.rows as isize - 1) as usize,
        )
    }

    /// Candidate site ids in the 3x3 cell neighborhood around `(x, y)`.
    pub fn candidates(&self, x: f64, y: f64, mut visit: impl FnMut(u32)) {
        let (cx, cy) = self.cell_of(x, y);
        let x0 = cx.saturating_sub(1);
        let x1 = (cx + 1).min(self.cols - 1);
        let y0 = cy.saturating_sub(1);
        let y1 = (cy + 1).min(self.rows - 1);
        for gy in y0..=y1 {
            for gx in x0..=x1 {
                for &id in &self.cells[gy * self.cols + gx] {
                    visit(id);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{sample_deployment, WorldConfig};

    fn brute_force(sites: &[SensorSite], x: f64, y: f64, r: f64) -> Vec<u32> {
        sites
            .iter()
            .filter(|s| ((s.x - x).powi(2) + (s.y - y).powi(2)).sqrt() <= r)
            .map(|s| s.id as u32)
            .collect()
    }

    #[test]
    fn candidates_cover_all_in_range_sites() {
        for seed in 0..10u64 {
            let config = WorldConfig::canonical(300, 5, 0.3, 11.0, seed);
            let d = sample_deployment(&config).unwrap();
            let grid = SpatialGrid::build(&d.sites, d.broadcast_radius, 1.0);
            for probe in d.sites.iter().step_by(17) {
                let mut got = Vec::new();
                grid.candidates(probe.x, probe.y, |id| {
                    let s = &d.sites[id as usize];
                    if ((s.x - probe.x).powi(2) + (s.y - probe.y).powi(2)).sqrt()
                        <= d.broadcast_radius
                    {
                        got.push(id);
                    }
                });
                got.sort_unstable();
                assert_eq!(got, brute_force(&d.sites, probe.x, probe.y, d.broadcast_radius));
            }
        }
    }

    #[test]
    fn huge_radius_returns_everything() {
        let config = WorldConfig::canonical(50, 1, 0.0, 50.0, 3);
        let d = sample_deployment(&config).unwrap();
        let grid = SpatialGrid::build(&d.sites, 10.0, 1.0);
        let mut seen = Vec::new();
        grid.candidates(0.0, 0.0, |id| seen.push(id));
        seen.sort_unstable();
        assert_eq!(seen.len(), 50);
    }

    #[test]
    fn tiny_radius_stays_bounded_and_exact() {
        let config = WorldConfig::canonical(200, 1, 0.0, 0.001, 9);
        let d = sample_deployment(&config).unwrap();
        let grid = SpatialGrid::build(&d.sites, d.broadcast_radius, 1.0);
        assert!(grid.cols <= MAX_CELLS_PER_AXIS);
        for probe in d.sites.iter().step_by(13) {
            let mut got = Vec::new();
            grid.candidates(probe.x, probe.y, |id| {
                let s = &d.sites[id as usize];
                if s.distance_to(probe) <= d.broadcast_radius {
                    got.push(id);
                }
            });
            got.sort_unstable();
            assert_eq!(got, brute_force(&d.sites, probe.x, probe.y, d.broadcast_radius));
        }
    }
}
