//! Brute-force voxel hashing over the octree's leaf grid.

use std::collections::HashMap;

use nalgebra::Vector3;

pub struct Grid {
    pub origin: Vector3<f64>,
    pub cells_per_axis: u64,
    pub resolution: f64,
}

/// Leaf grid of a cube `resolution·2^D` (smallest `D >= 1` strictly covering
/// the extent) centered on the bounding box.
pub fn grid_for(points: &[Vector3<f64>], resolution: f64) -> Grid {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let extent = (0..3).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let mut cells = 2u64;
    while resolution * cells as f64 <= extent {
        cells *= 2;
    }
    let size = resolution * cells as f64;
    let origin = Vector3::from_fn(|i, _| (lo[i] + hi[i]) * 0.5 - 0.5 * size);
    Grid { origin, cells_per_axis: cells, resolution }
}

pub fn voxel_counts(points: &[Vector3<f64>], resolution: f64) -> HashMap<[u32; 3], u64> {
    let g = grid_for(points, resolution);
    let mut map = HashMap::new();
    for p in points {
        let key: [u32; 3] = std::array::from_fn(|i| {
            let c = ((p[i] - g.origin[i]) / g.resolution).floor();
            c.clamp(0.0, (g.cells_per_axis - 1) as f64) as u32
        });
        *map.entry(key).or_insert(0) += 1;
    }
    map
}
