//! Sparse occupancy octree over a point cloud.
//!
//! The root cube is centered on the cloud's bounding box and its edge is
//! `resolution · 2^depth` for the smallest `depth >= 1` that covers the box, so
//! leaves at `depth` have edge exactly `resolution`. Cells are half-open,
//! `[min, max)` on every axis. Leaves store the number of points they hold.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "OCT1" | origin: 3×f64 | root_size: f64 | max_depth: u8 | nodes...
//! ```
//!
//! followed by a depth-first walk in child order. Every internal node writes
//! one byte whose bit `i` marks child `i` as present; every leaf writes its
//! point count as `u32`. Child `i` has offset `(i & 1, (i >> 1) & 1, (i >> 2) & 1)`
//! in units of the child edge.

use std::collections::HashMap;

use nalgebra::Vector3;
use thiserror::Error;

use crate::projection::PointCloud;

pub const MAGIC: &[u8; 4] = b"OCT1";
pub const MAX_DEPTH: u8 = 21;
const HEADER_LEN: usize = 4 + 8 * 4 + 1;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OctreeError {
    #[error("cannot build an octree from an empty cloud")]
    EmptyCloud,
    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),
    #[error("point {0} has non-finite coordinates")]
    NonFinitePoint(usize),
    #[error("cloud extent {extent} needs more than {MAX_DEPTH} levels at resolution {resolution}")]
    TooDeep { extent: f64, resolution: f64 },
    #[error("leaf count {0} does not fit the u32 serialization field")]
    CountOverflow(u64),
    #[error("malformed octree data: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Internal([u32; 8]),
    Leaf(u64),
}

/// Axis-aligned box with inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    /// `None` unless `min <= max` on every axis and all bounds are finite.
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Option<Self> {
        let ok = (0..3).all(|i| min[i].is_finite() && max[i].is_finite() && min[i] <= max[i]);
        ok.then_some(Self { min, max })
    }

    /// Whether the half-open cube `[lo, lo + edge)` meets this box.
    pub fn intersects_cell(&self, lo: &Vector3<f64>, edge: f64) -> bool {
        (0..3).all(|i| lo[i] <= self.max[i] && self.min[i] < lo[i] + edge)
    }
}

/// An occupied leaf: integer cell coordinates at the leaf level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafKey(pub [u32; 3]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    pub key: LeafKey,
    pub center: Vector3<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeStats {
    pub leaf_count: usize,
    pub node_count: usize,
    pub depth: u8,
    pub point_count: u64,
    pub memory_estimate_bytes: usize,
}

/// Equality is structural: same root cube, depth, and occupied leaves with
/// the same counts, regardless of internal node order.
#[derive(Debug, Clone)]
pub struct OccupancyOctree {
    root_origin: Vector3<f64>,
    root_size: f64,
    max_depth: u8,
    nodes: Vec<Node>,
}

impl PartialEq for OccupancyOctree {
    fn eq(&self, other: &Self) -> bool {
        self.root_origin == other.root_origin
            && self.root_size == other.root_size
            && self.max_depth == other.max_depth
            && self.leaves() == other.leaves()
    }
}

impl OccupancyOctree {
    pub fn root_origin(&self) -> &Vector3<f64> {
        &self.root_origin
    }

    pub fn root_size(&self) -> f64 {
        self.root_size
    }

    pub fn max_depth(&self) -> u8 {
        self.max_depth
    }

    pub fn leaf_edge(&self) -> f64 {
        self.root_size / (1u64 << self.max_depth) as f64
    }

    /// Leaf cell index of a point, clamped into the root cube.
    pub fn cell_of(&self, p: &Vector3<f64>) -> LeafKey {
        let edge = self.leaf_edge();
        let cells = (1u64 << self.max_depth) as f64;
        LeafKey(std::array::from_fn(|i| {
            let c = ((p[i] - self.root_origin[i]) / edge).floor();
            c.clamp(0.0, cells - 1.0) as u32
        }))
    }

    pub fn cell_min(&self, key: &LeafKey) -> Vector3<f64> {
        let edge = self.leaf_edge();
        self.root_origin + Vector3::new(key.0[0] as f64, key.0[1] as f64, key.0[2] as f64) * edge
    }

    pub fn cell_center(&self, key: &LeafKey) -> Vector3<f64> {
        self.cell_min(key) + Vector3::repeat(0.5 * self.leaf_edge())
    }

    fn insert(&mut self, key: LeafKey) {
        let mut node = 0usize;
        for level in 0..self.max_depth {
            let shift = self.max_depth - 1 - level;
            let child = (0..3).fold(0usize, |acc, a| acc | ((((key.0[a] >> shift) & 1) as usize) << a));
            let next = match self.nodes[node] {
                Node::Internal(ref c) => c[child],
                Node::Leaf(_) => unreachable!("leaves only at max depth"),
            };
            node = if next == NONE {
                let id = self.nodes.len() as u32;
                self.nodes.push(if level + 1 == self.max_depth { Node::Leaf(0) } else { Node::Internal([NONE; 8]) });
                if let Node::Internal(ref mut c) = self.nodes[node] {
                    c[child] = id;
                }
                id as usize
            } else {
                next as usize
            };
        }
        if let Node::Leaf(ref mut count) = self.nodes[node] {
            *count += 1;
        }
    }

    /// Visits nodes depth-first in child order, calling `f(node, depth, cell
    /// coordinates at that depth)`. Returning `false` skips the subtree.
    fn walk(&self, mut f: impl FnMut(&Node, u8, [u32; 3]) -> bool) {
        let mut stack = vec![(0u32, 0u8, [0u32; 3])];
        while let Some((id, depth, key)) = stack.pop() {
            let node = &self.nodes[id as usize];
            if !f(node, depth, key) {
                continue;
            }
            if let Node::Internal(children) = node {
                for i in (0..8).rev() {
                    if children[i] != NONE {
                        let k = std::array::from_fn(|a| key[a] * 2 + ((i >> a) & 1) as u32);
                        stack.push((children[i], depth + 1, k));
                    }
                }
            }
        }
    }

    /// Occupied leaves in depth-first child order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.walk(|node, _, key| {
            if let Node::Leaf(count) = node {
                let key = LeafKey(key);
                out.push(Leaf { key, center: self.cell_center(&key), count: *count });
            }
            true
        });
        out
    }

    /// Leaf counts keyed by cell.
    pub fn leaf_map(&self) -> HashMap<LeafKey, u64> {
        self.leaves().into_iter().map(|l| (l.key, l.count)).collect()
    }

    pub fn leaf_centers(&self) -> PointCloud {
        PointCloud::new(self.leaves().into_iter().map(|l| l.center).collect())
    }

    /// Centers of occupied leaves whose cells intersect `aabb`, each once.
    pub fn query_occupied(&self, aabb: &Aabb) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        self.walk(|node, depth, key| {
            let edge = self.root_size / (1u64 << depth) as f64;
            let lo = self.root_origin + Vector3::new(key[0] as f64, key[1] as f64, key[2] as f64) * edge;
            if !aabb.intersects_cell(&lo, edge) {
                return false;
            }
            if let Node::Leaf(_) = node {
                out.push(lo + Vector3::repeat(0.5 * edge));
            }
            true
        });
        out
    }

    pub fn stats(&self) -> TreeStats {
        let mut leaf_count = 0;
        let mut node_count = 0;
        let mut point_count = 0;
        let mut depth = 0;
        self.walk(|node, d, _| {
            node_count += 1;
            depth = depth.max(d);
            if let Node::Leaf(c) = node {
                leaf_count += 1;
                point_count += c;
            }
            true
        });
        TreeStats {
            leaf_count,
            node_count,
            depth,
            point_count,
            memory_estimate_bytes: std::mem::size_of::<Self>() + self.nodes.len() * std::mem::size_of::<Node>(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, OctreeError> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.nodes.len() * 2);
        out.extend_from_slice(MAGIC);
        for c in self.root_origin.iter() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.root_size.to_le_bytes());
        out.push(self.max_depth);
        let mut overflow = None;
        self.walk(|node, _, _| {
            match node {
                Node::Internal(children) => {
                    let mask = (0..8).fold(0u8, |m, i| if children[i] != NONE { m | (1 << i) } else { m });
                    out.push(mask);
                }
                Node::Leaf(count) => match u32::try_from(*count) {
                    Ok(c) => out.extend_from_slice(&c.to_le_bytes()),
                    Err(_) => overflow = Some(*count),
                },
            }
            true
        });
        match overflow {
            Some(c) => Err(OctreeError::CountOverflow(c)),
            None => Ok(out),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, OctreeError> {
        let bad = |m: &str| OctreeError::Malformed(m.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("missing OCT1 magic"));
        }
        let f = |i: usize| f64::from_le_bytes(bytes[4 + 8 * i..12 + 8 * i].try_into().unwrap());
        let root_origin = Vector3::new(f(0), f(1), f(2));
        let root_size = f(3);
        let max_depth = bytes[HEADER_LEN - 1];
        if !root_origin.iter().all(|c| c.is_finite()) {
            return Err(bad("non-finite root origin"));
        }
        if !(root_size > 0.0 && root_size.is_finite()) {
            return Err(bad("root size must be positive and finite"));
        }
        if !(1..=MAX_DEPTH).contains(&max_depth) {
            return Err(bad("depth outside 1..=21"));
        }
        let mut tree = Self { root_origin, root_size, max_depth, nodes: vec![Node::Internal([NONE; 8])] };
        let mut pos = HEADER_LEN;
        // (node id, depth); children are pushed in reverse to pop in order.
        let mut stack = vec![(0u32, 0u8)];
        while let Some((id, depth)) = stack.pop() {
            if depth == max_depth {
                let raw = bytes.get(pos..pos + 4).ok_or_else(|| bad("truncated leaf count"))?;
                let count = u32::from_le_bytes(raw.try_into().unwrap());
                if count == 0 {
                    return Err(bad("leaf with zero count"));
                }
                tree.nodes[id as usize] = Node::Leaf(count as u64);
                pos += 4;
                continue;
            }
            let mask = *bytes.get(pos).ok_or_else(|| bad("truncated child mask"))?;
            pos += 1;
            if mask == 0 {
                return Err(bad("internal node without children"));
            }
            let mut children = [NONE; 8];
            for (i, child) in children.iter_mut().enumerate() {
                if mask & (1 << i) != 0 {
                    *child = tree.nodes.len() as u32;
                    tree.nodes.push(Node::Internal([NONE; 8]));
                }
            }
            tree.nodes[id as usize] = Node::Internal(children);
            for i in (0..8).rev() {
                if children[i] != NONE {
                    stack.push((children[i], depth + 1));
                }
            }
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes after node stream"));
        }
        Ok(tree)
    }
}

/// Voxelizes `cloud` with leaves of edge `resolution` (same units as the cloud).
pub fn build_octree(cloud: &PointCloud, resolution: f64) -> Result<OccupancyOctree, OctreeError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(OctreeError::InvalidResolution(resolution));
    }
    if cloud.is_empty() {
        return Err(OctreeError::EmptyCloud);
    }
    if let Some(i) = cloud.points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(OctreeError::NonFinitePoint(i));
    }
    let (mut lo, mut hi) = (cloud.points[0], cloud.points[0]);
    for p in &cloud.points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = (hi - lo).max();
    let mut depth = 1u8;
    while resolution * (1u64 << depth) as f64 <= extent {
        depth += 1;
        if depth > MAX_DEPTH {
            return Err(OctreeError::TooDeep { extent, resolution });
        }
    }
    let root_size = resolution * (1u64 << depth) as f64;
    let center = (lo + hi) * 0.5;
    let mut tree = OccupancyOctree {
        root_origin: center - Vector3::repeat(0.5 * root_size),
        root_size,
        max_depth: depth,
        nodes: vec![Node::Internal([NONE; 8])],
    };
    for p in &cloud.points {
        let key = tree.cell_of(p);
        tree.insert(key);
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut impl Rng, n: usize, extent: f64) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| Vector3::new(rng.random_range(0.0..extent), rng.random_range(0.0..extent), rng.random_range(0.0..extent)))
                .collect(),
        )
    }

    fn octant_centers() -> PointCloud {
        PointCloud::new(
            (0..8)
                .map(|i| Vector3::new(0.25 + 0.5 * (i & 1) as f64, 0.25 + 0.5 * ((i >> 1) & 1) as f64, 0.25 + 0.5 * ((i >> 2) & 1) as f64))
                .collect(),
        )
    }

    #[test]
    fn single_point() {
        let t = build_octree(&PointCloud::new(vec![Vector3::new(1.0, 2.0, 3.0)]), 0.1).unwrap();
        let s = t.stats();
        assert_eq!(s.leaf_count, 1);
        assert_eq!(s.point_count, 1);
        assert_eq!(t.leaves()[0].count, 1);
        assert_eq!(t.max_depth(), 1);
    }

    #[test]
    fn eight_octants() {
        let t = build_octree(&octant_centers(), 0.5).unwrap();
        assert_eq!(t.stats().leaf_count, 8);
        assert_eq!(t.root_size(), 1.0);
        assert_eq!(*t.root_origin(), Vector3::zeros());
        assert!(t.leaves().iter().all(|l| l.count == 1));
    }

    #[test]
    fn errors() {
        assert_eq!(build_octree(&PointCloud::default(), 0.1), Err(OctreeError::EmptyCloud));
        let one = PointCloud::new(vec![Vector3::zeros()]);
        assert!(matches!(build_octree(&one, 0.0), Err(OctreeError::InvalidResolution(_))));
        assert!(matches!(build_octree(&one, -1.0), Err(OctreeError::InvalidResolution(_))));
        let nan = PointCloud::new(vec![Vector3::zeros(), Vector3::new(f64::NAN, 0.0, 0.0)]);
        assert_eq!(build_octree(&nan, 0.1), Err(OctreeError::NonFinitePoint(1)));
        let wide = PointCloud::new(vec![Vector3::zeros(), Vector3::new(1e9, 0.0, 0.0)]);
        assert!(matches!(build_octree(&wide, 1e-3), Err(OctreeError::TooDeep { .. })));
    }

    #[test]
    fn matches_voxel_hashing() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let cloud = random_cloud(&mut rng, 10_000, 1.0);
        let t = build_octree(&cloud, 0.25).unwrap();
        // Root sizing rule, checked independently.
        assert_eq!(t.leaf_edge(), 0.25);
        let (mut lo, mut hi) = (Vector3::repeat(f64::MAX), Vector3::repeat(f64::MIN));
        for p in &cloud.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max();
        assert!(t.root_size() > extent);
        assert!(t.root_size() / 2.0 <= extent || t.max_depth() == 1);
        let mut oracle: HashMap<LeafKey, u64> = HashMap::new();
        for p in &cloud.points {
            let key = LeafKey(std::array::from_fn(|i| ((p[i] - t.root_origin()[i]) / 0.25).floor() as u32));
            *oracle.entry(key).or_default() += 1;
        }
        assert_eq!(t.leaf_map(), oracle);
    }

    #[test]
    fn points_lie_in_their_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let cloud = random_cloud(&mut rng, 2000, 3.7);
        let t = build_octree(&cloud, 0.13).unwrap();
        let edge = t.leaf_edge();
        for p in &cloud.points {
            let lo = t.cell_min(&t.cell_of(p));
            for i in 0..3 {
                assert!(p[i] >= lo[i] - 1e-12 && p[i] < lo[i] + edge + 1e-12);
            }
        }
        assert_eq!(t.stats().point_count, 2000);
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let cloud = random_cloud(&mut rng, 3000, 2.0);
        let mut shuffled = cloud.clone();
        shuffled.points.shuffle(&mut rng);
        let a = build_octree(&cloud, 0.1).unwrap();
        let b = build_octree(&shuffled, 0.1).unwrap();
        assert_eq!(a.leaves(), b.leaves());
        assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    }

    #[test]
    fn coarser_resolution_never_adds_leaves() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..20 {
            let extent = rng.random_range(0.1..10.0);
            let cloud = random_cloud(&mut rng, 500, extent);
            let r = rng.random_range(0.01..1.0);
            let fine = build_octree(&cloud, r).unwrap().stats().leaf_count;
            let coarse = build_octree(&cloud, 2.0 * r).unwrap().stats().leaf_count;
            assert!(coarse <= fine, "{coarse} > {fine}");
        }
    }

    #[test]
    fn query_examples() {
        let t = build_octree(&octant_centers(), 0.5).unwrap();
        let all = Aabb::new(Vector3::repeat(-1.0), Vector3::repeat(2.0)).unwrap();
        assert_eq!(t.query_occupied(&all).len(), 8);
        let away = Aabb::new(Vector3::repeat(5.0), Vector3::repeat(6.0)).unwrap();
        assert!(t.query_occupied(&away).is_empty());
        // Touching the shared face at x = 0.5 picks the higher cells only.
        let face = Aabb::new(Vector3::new(0.5, 0.0, 0.0), Vector3::new(0.5, 0.1, 0.1)).unwrap();
        assert_eq!(t.query_occupied(&face), vec![Vector3::new(0.75, 0.25, 0.25)]);
        assert!(Aabb::new(Vector3::repeat(1.0), Vector3::zeros()).is_none());
    }

    #[test]
    fn query_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..20 {
            let cloud = random_cloud(&mut rng, 1000, 4.0);
            let t = build_octree(&cloud, rng.random_range(0.05..0.8)).unwrap();
            let edge = t.leaf_edge();
            for _ in 0..20 {
                let a = Vector3::new(rng.random_range(-1.0..5.0), rng.random_range(-1.0..5.0), rng.random_range(-1.0..5.0));
                let b = a + Vector3::new(rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
                let bx = Aabb::new(a, b).unwrap();
                let mut got = t.query_occupied(&bx);
                let mut want: Vec<_> = t
                    .leaves()
                    .into_iter()
                    .filter(|l| bx.intersects_cell(&t.cell_min(&l.key), edge))
                    .map(|l| l.center)
                    .collect();
                let cmp = |x: &Vector3<f64>, y: &Vector3<f64>| x.as_slice().partial_cmp(y.as_slice()).unwrap();
                got.sort_by(cmp);
                want.sort_by(cmp);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn stats_match_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let cloud = random_cloud(&mut rng, 5000, 1.0);
        let t = build_octree(&cloud, 0.05).unwrap();
        let s = t.stats();
        assert_eq!(s.leaf_count, t.leaves().len());
        // Internal nodes = distinct cell prefixes at every level above the leaves.
        let keys: Vec<LeafKey> = t.leaves().iter().map(|l| l.key).collect();
        let mut internal = 0;
        for level in 0..t.max_depth() {
            let shift = t.max_depth() - level;
            let prefixes: std::collections::HashSet<[u32; 3]> = keys.iter().map(|k| k.0.map(|c| c >> shift)).collect();
            internal += prefixes.len();
        }
        assert_eq!(s.node_count, internal + s.leaf_count);
        assert_eq!(s.depth, t.max_depth());
        assert_eq!(s.point_count, 5000);
        assert!(s.memory_estimate_bytes > 0);
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let cloud = random_cloud(&mut rng, 4000, 2.0);
        let t = build_octree(&cloud, 0.07).unwrap();
        let bytes = t.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"OCT1");
        assert_eq!(bytes[HEADER_LEN - 1], t.max_depth());
        let back = OccupancyOctree::from_bytes(&bytes).unwrap();
        assert_eq!(back.leaves(), t.leaves());
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn single_leaf_layout() {
        let t = build_octree(&PointCloud::new(vec![Vector3::zeros()]), 1.0).unwrap();
        let bytes = t.to_bytes().unwrap();
        // header, one mask byte (the point sits in the +x+y+z child), one count.
        assert_eq!(bytes.len(), HEADER_LEN + 1 + 4);
        assert_eq!(bytes[HEADER_LEN], 0b1000_0000);
        assert_eq!(&bytes[HEADER_LEN + 1..], &1u32.to_le_bytes());
    }

    #[test]
    fn rejects_malformed_streams() {
        let t = build_octree(&octant_centers(), 0.5).unwrap();
        let bytes = t.to_bytes().unwrap();
        assert!(OccupancyOctree::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(OccupancyOctree::from_bytes(&extra).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(OccupancyOctree::from_bytes(&bad_magic).is_err());
        let mut zero_mask = bytes.clone();
        zero_mask[HEADER_LEN] = 0;
        assert!(OccupancyOctree::from_bytes(&zero_mask).is_err());
        let mut deep = bytes;
        deep[HEADER_LEN - 1] = 22;
        assert!(OccupancyOctree::from_bytes(&deep).is_err());
    }
}
