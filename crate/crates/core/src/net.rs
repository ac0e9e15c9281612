//! Maximal δ-nets on `S^{d-1}` and the companion disjoint cell partitions.
//!
//! A maximal δ-net is a point set with pairwise geodesic separation ≥ δ whose
//! δ-caps cover the sphere. Nets are built by a greedy scan over a dense
//! quasi-uniform candidate pool: a candidate is accepted iff it is ≥ δ from
//! everything accepted so far. When no candidate remains, maximality holds
//! with respect to the pool, and the pool is oversampled enough (64× the
//! packing bound) that covering holds on fresh samples too.

use crate::sphere::{
    cap_area, equispaced_circle_point, fibonacci_lattice_point, geodesic_distance, sphere_area,
    Rotation, SpherePoint,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unsupported ambient dimension {0}, expected 2 or 3")]
    UnsupportedDim(u8),
    #[error("net mesh delta {0} outside (0, π]")]
    InvalidDelta(f64),
    #[error("sample {index} has no net point within δ (nearest at {nearest_dist}): net does not cover")]
    NotCovered { index: usize, nearest_dist: f64 },
    #[error("sample areas sum to {got}, expected the sphere area {want} (relative error > {tol})")]
    BadSampleAreas { got: f64, want: f64, tol: f64 },
}

/// One maximal δ-net: level index `level`, mesh `delta`, and the points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelNet {
    pub d: u8,
    pub level: u32,
    pub delta: f64,
    pub points: Vec<SpherePoint>,
}

/// Voronoi-style partition of the sphere among net points, represented by a
/// sample assignment: `cell_of[i]` owns sample `i`, `cell_area[z]` is the sum
/// of the quadrature areas of the samples owned by net point `z`.
#[derive(Debug, Clone)]
pub struct CellPartition {
    pub net: LevelNet,
    pub cell_of: Vec<u32>,
    pub cell_area: Vec<f64>,
}

impl CellPartition {
    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }
}

/// Hash a packed cell key with a splitmix64 finisher; the default SipHash is
/// measurably slow at the ~10^8 probes the tree builder performs.
#[derive(Default)]
pub(crate) struct CellKeyHasher(u64);

impl Hasher for CellKeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x100_0000_01b3);
        }
    }
    fn write_u64(&mut self, k: u64) {
        let mut z = k.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        self.0 = z ^ (z >> 31);
    }
}

/// Uniform-bin spatial hash over `R^3` sized so that any two points at
/// geodesic distance < the design radius fall in adjacent bins: one 27-bin
/// probe sees every candidate.
pub(crate) struct NeighborGrid {
    cell: f64,
    cos_radius: f64,
    bins: HashMap<u64, Vec<u32>, BuildHasherDefault<CellKeyHasher>>,
    pts: Vec<[f64; 3]>,
}

const KEY_BIAS: i64 = 1 << 20;

impl NeighborGrid {
    /// `radius` is the largest geodesic query radius this grid supports.
    pub fn new(radius: f64) -> Self {
        debug_assert!(radius > 0.0 && radius <= std::f64::consts::PI);
        // Chord length of the geodesic radius; chord and geodesic distance are
        // strictly monotone in each other, so bin geometry is exact.
        let cell = (2.0 * (radius / 2.0).sin()).max(1e-9);
        Self {
            cell,
            cos_radius: radius.cos(),
            bins: HashMap::default(),
            pts: Vec::new(),
        }
    }

    fn key(&self, c: [f64; 3]) -> u64 {
        let ix = ((c[0] / self.cell).floor() as i64 + KEY_BIAS) as u64;
        let iy = ((c[1] / self.cell).floor() as i64 + KEY_BIAS) as u64;
        let iz = ((c[2] / self.cell).floor() as i64 + KEY_BIAS) as u64;
        (ix << 42) | (iy << 21) | iz
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn point(&self, id: u32) -> [f64; 3] {
        self.pts[id as usize]
    }

    pub fn insert(&mut self, p: &SpherePoint) -> u32 {
        let c = p.coords();
        let id = self.pts.len() as u32;
        self.pts.push(c);
        self.bins.entry(self.key(c)).or_default().push(id);
        id
    }

    /// True iff some stored point lies at geodesic distance < the design
    /// radius from `p`. Exact: tested as `dot > cos(radius)`, the same
    /// predicate in chord space, with no inverse trig.
    pub fn has_within_radius(&self, p: &SpherePoint) -> bool {
        let c = p.coords();
        let bx = (c[0] / self.cell).floor() as i64;
        let by = (c[1] / self.cell).floor() as i64;
        let bz = (c[2] / self.cell).floor() as i64;
        // Probe the candidate's own bin first: in the dense phase of a greedy
        // scan, most rejections are found there.
        for (dx, dy, dz) in PROBE_ORDER {
            let key = ((bx + dx + KEY_BIAS) as u64) << 42
                | ((by + dy + KEY_BIAS) as u64) << 21
                | (bz + dz + KEY_BIAS) as u64;
            if let Some(ids) = self.bins.get(&key) {
                for &id in ids {
                    let q = self.pts[id as usize];
                    let dot = c[0] * q[0] + c[1] * q[1] + c[2] * q[2];
                    if dot > self.cos_radius {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Nearest stored point at geodesic distance < the design radius, ties by
    /// smallest id. Returns `(id, dot)`.
    pub fn nearest_within_radius(&self, p: &SpherePoint) -> Option<(u32, f64)> {
        let c = p.coords();
        let bx = (c[0] / self.cell).floor() as i64;
        let by = (c[1] / self.cell).floor() as i64;
        let bz = (c[2] / self.cell).floor() as i64;
        let mut best: Option<(u32, f64)> = None;
        for (dx, dy, dz) in PROBE_ORDER {
            let key = ((bx + dx + KEY_BIAS) as u64) << 42
                | ((by + dy + KEY_BIAS) as u64) << 21
                | (bz + dz + KEY_BIAS) as u64;
            if let Some(ids) = self.bins.get(&key) {
                for &id in ids {
                    let q = self.pts[id as usize];
                    let dot = c[0] * q[0] + c[1] * q[1] + c[2] * q[2];
                    if dot > self.cos_radius {
                        let better = match best {
                            None => true,
                            Some((bid, bdot)) => dot > bdot || (dot == bdot && id < bid),
                        };
                        if better {
                            best = Some((id, dot));
                        }
                    }
                }
            }
        }
        best
    }
}

/// 27 neighbor offsets with the center bin first.
const PROBE_ORDER: [(i64, i64, i64); 27] = {
    let mut out = [(0i64, 0i64, 0i64); 27];
    let mut n = 1;
    let mut i = 0i64;
    while i < 27 {
        let (dx, dy, dz) = (i / 9 - 1, (i / 3) % 3 - 1, i % 3 - 1);
        if !(dx == 0 && dy == 0 && dz == 0) {
            out[n] = (dx, dy, dz);
            n += 1;
        }
        i += 1;
    }
    out
};

/// Size of the quasi-uniform candidate pool for mesh `delta`: 64× the cap
/// packing bound `ω_d / |B(δ/2)|`.
pub(crate) fn pool_size(d: u8, delta: f64) -> usize {
    let est = sphere_area(d) / cap_area(d, delta / 2.0).expect("delta validated");
    ((est.ceil() as usize) * 64).max(4096)
}

/// The `i`-th pool candidate: a seeded rotation of the Fibonacci lattice
/// (`d = 3`) or of equispaced circle points (`d = 2`).
pub(crate) fn pool_point(d: u8, i: usize, n: usize, rot: &Rotation) -> SpherePoint {
    let p = match d {
        2 => equispaced_circle_point(i, n),
        _ => fibonacci_lattice_point(i, n),
    };
    rot.apply(&p)
}

fn validate(d: u8, delta: f64) -> Result<(), NetError> {
    if d != 2 && d != 3 {
        return Err(NetError::UnsupportedDim(d));
    }
    if !(delta > 0.0 && delta <= std::f64::consts::PI) {
        return Err(NetError::InvalidDelta(delta));
    }
    Ok(())
}

/// Greedy maximal δ-net: scan the pool in order, accept every candidate at
/// distance ≥ δ from all previously accepted points. On return no pool point
/// is ≥ δ from the net (maximality), and separation ≥ δ holds pairwise.
pub fn build_maximal_net(d: u8, delta: f64, seed: u64) -> Result<LevelNet, NetError> {
    validate(d, delta)?;
    let n = pool_size(d, delta);
    let rot = Rotation::random(d, seed);
    let mut grid = NeighborGrid::new(delta);
    let mut points = Vec::new();
    for i in 0..n {
        let p = pool_point(d, i, n, &rot);
        if !grid.has_within_radius(&p) {
            grid.insert(&p);
            points.push(p);
        }
    }
    Ok(LevelNet {
        d,
        level: 0,
        delta,
        points,
    })
}

/// Largest distance from any probe to its nearest net point. Covering means
/// this stays below the net's δ.
pub fn covering_radius(net: &LevelNet, probes: &[SpherePoint]) -> f64 {
    probes
        .iter()
        .map(|p| {
            net.points
                .iter()
                .map(|z| geodesic_distance(p, z))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Assign each weighted sample to its nearest net point among those at
/// distance < δ (ties by smallest net index) and accumulate cell areas.
///
/// The sample areas must sum to `ω_d` within 1% — they are meant to be a
/// quadrature set for the whole sphere, so the cell areas sum to exactly the
/// same total.
pub fn build_partition(
    net: &LevelNet,
    samples: &[(SpherePoint, f64)],
) -> Result<CellPartition, NetError> {
    validate(net.d, net.delta)?;
    let want = sphere_area(net.d);
    let got: f64 = samples.iter().map(|(_, a)| a).sum();
    let tol = 0.01;
    if ((got - want) / want).abs() > tol {
        return Err(NetError::BadSampleAreas { got, want, tol });
    }
    let mut grid = NeighborGrid::new(net.delta);
    for p in &net.points {
        grid.insert(p);
    }
    let mut cell_of = Vec::with_capacity(samples.len());
    let mut cell_area = vec![0.0; net.points.len()];
    for (i, (p, a)) in samples.iter().enumerate() {
        match grid.nearest_within_radius(p) {
            Some((id, _)) => {
                cell_of.push(id);
                cell_area[id as usize] += a;
            }
            None => {
                let nearest_dist = net
                    .points
                    .iter()
                    .map(|z| geodesic_distance(p, z))
                    .fold(f64::INFINITY, f64::min);
                return Err(NetError::NotCovered {
                    index: i,
                    nearest_dist,
                });
            }
        }
    }
    Ok(CellPartition {
        net: net.clone(),
        cell_of,
        cell_area,
    })
}
