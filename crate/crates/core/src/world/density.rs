use serde::{Deserialize, Serialize};

use crate::apf::Obstacle;
use crate::geom::Vec2;

use super::WorldMap;

/// Subcells per cell edge used to rasterize obstacle coverage.
pub const SUBCELLS: usize = 64;
const SUBCELL_COUNT: u32 = (SUBCELLS * SUBCELLS) as u32;

/// Obstacle area fraction per 1 m cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, row `j` covers `y ∈ [j, j+1)·cell`.
    pub cells: Vec<f64>,
    pub mean: f64,
    /// Population variance of `cells`.
    pub variance: f64,
}

impl DensityGrid {
    pub fn from_cells(cell: f64, nx: usize, ny: usize, cells: Vec<f64>) -> Self {
        let (mean, variance) = mean_variance(&cells);
        Self {
            cell,
            nx,
            ny,
            cells,
            mean,
            variance,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[j * self.nx + i]
    }
}

pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

pub(crate) fn grid_dims(extent: f64) -> usize {
    (extent.ceil() as usize).max(1)
}

/// Covered-subcell count per cell for one disk, only for cells its
/// bounding box touches.
pub(crate) fn disk_cell_counts(ob: &Obstacle, n: usize) -> Vec<(usize, u32)> {
    let h = 1.0 / SUBCELLS as f64;
    let r2 = ob.radius * ob.radius;
    let lo = |v: f64| ((v - ob.radius).floor().max(0.0) as usize).min(n - 1);
    let hi = |v: f64| ((v + ob.radius).floor().max(0.0) as usize).min(n - 1);
    let mut out = Vec::new();
    for j in lo(ob.center.y)..=hi(ob.center.y) {
        for i in lo(ob.center.x)..=hi(ob.center.x) {
            let mut count = 0u32;
            for sj in 0..SUBCELLS {
                let y = j as f64 + (sj as f64 + 0.5) * h - ob.center.y;
                let y2 = y * y;
                if y2 > r2 {
                    continue;
                }
                for si in 0..SUBCELLS {
                    let x = i as f64 + (si as f64 + 0.5) * h - ob.center.x;
                    if x * x + y2 <= r2 {
                        count += 1;
                    }
                }
            }
            if count > 0 {
                out.push((j * n + i, count));
            }
        }
    }
    out
}

/// Per-cell obstacle density on 1 m cells covering the map extent. Overlap
/// is estimated by testing subcell centers, so overlapping obstacles are
/// counted once.
pub fn obstacle_density(map: &WorldMap) -> DensityGrid {
    let n = grid_dims(map.extent);
    let h = 1.0 / SUBCELLS as f64;
    let mut cells = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let lo = Vec2::new(i as f64, j as f64);
            let near: Vec<&Obstacle> = map
                .obstacles
                .iter()
                .filter(|o| {
                    let cx = o.center.x.clamp(lo.x, lo.x + 1.0);
                    let cy = o.center.y.clamp(lo.y, lo.y + 1.0);
                    Vec2::new(cx, cy).distance(o.center) <= o.radius
                })
                .collect();
            if near.is_empty() {
                continue;
            }
            let mut count = 0u32;
            for sj in 0..SUBCELLS {
                for si in 0..SUBCELLS {
                    let p = lo + Vec2::new((si as f64 + 0.5) * h, (sj as f64 + 0.5) * h);
                    if near.iter().any(|o| p.distance(o.center) <= o.radius) {
                        count += 1;
                    }
                }
            }
            cells[j * n + i] = count as f64 / SUBCELL_COUNT as f64;
        }
    }
    DensityGrid::from_cells(1.0, n, n, cells)
}

pub(crate) fn counts_to_density(counts: &[u32]) -> Vec<f64> {
    counts.iter().map(|c| *c as f64 / SUBCELL_COUNT as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn map(obstacles: Vec<Obstacle>) -> WorldMap {
        WorldMap::new(10.0, obstacles, Vec2::new(0.5, 0.5), Vec2::new(9.5, 9.5))
    }

    #[test]
    fn empty_map_is_zero() {
        let d = obstacle_density(&map(vec![]));
        assert_eq!((d.mean, d.variance), (0.0, 0.0));
        assert_eq!(d.cells.len(), 100);
    }

    #[test]
    fn single_disk_in_one_cell() {
        let r = (0.25 / PI).sqrt();
        let d = obstacle_density(&map(vec![Obstacle::new(Vec2::new(3.5, 6.5), r)]));
        assert!((d.at(3, 6) - 0.25).abs() < 0.005);
        let others: f64 = d.cells.iter().sum::<f64>() - d.at(3, 6);
        assert_eq!(others, 0.0);
    }

    #[test]
    fn corner_disk_splits_evenly() {
        let d = obstacle_density(&map(vec![Obstacle::new(Vec2::new(5.0, 5.0), 0.6)]));
        let q = [d.at(4, 4), d.at(5, 4), d.at(4, 5), d.at(5, 5)];
        assert!(q.iter().all(|v| *v == q[0]));
        assert!((q[0] * 4.0 - PI * 0.36).abs() < 0.01);
    }

    #[test]
    fn incremental_counts_agree_with_grid() {
        let obs = vec![Obstacle::new(Vec2::new(2.3, 4.1), 0.7), Obstacle::new(Vec2::new(6.0, 6.0), 0.45)];
        let full = obstacle_density(&map(obs.clone()));
        let mut counts = vec![0u32; 100];
        for o in &obs {
            for (k, c) in disk_cell_counts(o, 10) {
                counts[k] += c;
            }
        }
        assert_eq!(counts_to_density(&counts), full.cells);
    }
}
