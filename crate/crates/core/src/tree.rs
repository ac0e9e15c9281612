//! Hierarchical nested "cube" structures.
//!
//! On the sphere, levels are maximal δ_j-nets (δ_j = γ·b^{-j}) linked by a
//! nearest-parent partial order; each node ξ at level n carries an implicit
//! region Q_ξ (the union of caps B(η, β̄·γ·b^{-m}) over descendants η at
//! levels m ≥ n) and a measure |Q_ξ|. Regions are never materialized: only
//! membership queries and bottom-up additive measures are exposed, so the
//! additivity identity |Q_ξ| = Σ_children |Q_η| holds bit-exactly.
//!
//! Euclidean dyadic cubes over [0,1]^dim (and a two-sided variant over
//! [-1,1]) are provided as exactly-computable oracle instances of the same
//! abstract structure: one root (or one root per side), every node splits
//! into 2^dim children of equal measure, same-level measures within a global
//! factor κ = 1, child/parent measure ratio λ = 2^{-dim}.

use crate::net::{pool_point, pool_size, CellPartition, LevelNet, NeighborGrid, NetError};
use crate::sphere::{sphere_area, Rotation, SpherePoint};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported ambient dimension {0}, expected 2 or 3")]
    UnsupportedDim(u8),
    #[error("node (level {level}, index {index}) has no candidate parent within {radius}: level {} net is not maximal", level - 1)]
    OrphanNode { level: u32, index: u32, radius: f64 },
    #[error("level {position} net has delta {got}, expected γ·b^{{-j}} = {want}")]
    MismatchedDelta { position: usize, got: f64, want: f64 },
    #[error("leaf partition has {got} cells, tree has {want} leaves")]
    WrongLeafCount { got: usize, want: usize },
    #[error("cell {index} has non-positive area {area}; refine the sample set")]
    EmptyCell { index: usize, area: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Scale parameters of the spherical construction. The mesh at level j is
/// δ_j = gamma · b^{-j}; beta_bar fixes the core-cap radius β̄·δ_j of each
/// node's own contribution to its region.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TreeParams {
    pub b: u32,
    pub beta_bar: f64,
    pub gamma: f64,
    pub j_max: u32,
}

impl TreeParams {
    /// b = 4, β̄ = 1/12 — the smallest admissible integer base with its
    /// standard companion satisfying 1/(b−1) + 2β̄ ≤ 1/2 with equality.
    pub fn standard(j_max: u32) -> Self {
        Self {
            b: 4,
            beta_bar: 1.0 / 12.0,
            gamma: 0.25,
            j_max,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn delta(&self, j: u32) -> f64 {
        self.gamma * (self.b as f64).powi(-(j as i32))
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        if self.b < 4 {
            return Err(TreeError::InvalidParams(format!(
                "base b = {} must be ≥ 4",
                self.b
            )));
        }
        if self.beta_bar.is_nan() || self.beta_bar <= 0.0 {
            return Err(TreeError::InvalidParams("beta_bar must be > 0".into()));
        }
        let lhs = 1.0 / (self.b as f64 - 1.0) + 2.0 * self.beta_bar;
        if lhs > 0.5 + 1e-12 {
            return Err(TreeError::InvalidParams(format!(
                "1/(b−1) + 2β̄ = {lhs} exceeds 1/2; shrink beta_bar or grow b"
            )));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(TreeError::InvalidParams("gamma must be > 0".into()));
        }
        if self.j_max < 1 {
            return Err(TreeError::InvalidParams("need at least one level".into()));
        }
        if self.delta(1) > std::f64::consts::PI {
            return Err(TreeError::InvalidParams(format!(
                "level-1 mesh γ/b = {} exceeds π",
                self.delta(1)
            )));
        }
        Ok(())
    }
}

/// Which geometry the tree lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Sphere { d: u8 },
    Cube { dim: u8, two_sided: bool },
}

/// Node handle: level and index within the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub level: u32,
    pub index: u32,
}

impl NodeId {
    pub fn new(level: u32, index: u32) -> Self {
        Self { level, index }
    }
}

struct TreeLevel {
    delta: f64,
    sites: Vec<[f64; 3]>,
    /// Parent index one level up; empty at level 0.
    parent: Vec<u32>,
    child_off: Vec<u32>,
    child_idx: Vec<u32>,
    measure: Vec<f64>,
    /// cos of the core-cap radius β̄·δ (sphere only).
    cos_core: f64,
    /// cos of the subtree-reach radius (b/(b−1) + β̄)·δ, if < π (sphere only).
    cos_prune: Option<f64>,
}

pub struct NestedTree {
    pub space: Space,
    /// Scale base: level-j nodes have scale N = b^j. b = 2 for dyadic cubes.
    pub b: u32,
    pub params: Option<TreeParams>,
    levels: Vec<TreeLevel>,
    flat_offset: Vec<usize>,
}

impl NestedTree {
    pub fn n_levels(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Deepest level index J.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn level_size(&self, j: u32) -> usize {
        self.levels[j as usize].sites.len()
    }

    pub fn node_count(&self) -> usize {
        *self.flat_offset.last().unwrap()
    }

    pub fn delta(&self, j: u32) -> f64 {
        self.levels[j as usize].delta
    }

    pub fn site(&self, id: NodeId) -> [f64; 3] {
        self.levels[id.level as usize].sites[id.index as usize]
    }

    pub fn sphere_site(&self, id: NodeId) -> SpherePoint {
        debug_assert!(matches!(self.space, Space::Sphere { .. }));
        SpherePoint::new(self.site(id)).expect("tree sites are unit vectors")
    }

    pub fn level_sites(&self, j: u32) -> &[[f64; 3]] {
        &self.levels[j as usize].sites
    }

    pub fn level_measures(&self, j: u32) -> &[f64] {
        &self.levels[j as usize].measure
    }

    pub fn measure(&self, id: NodeId) -> f64 {
        self.levels[id.level as usize].measure[id.index as usize]
    }

    /// Scale N_ξ = b^level.
    pub fn n_scale(&self, level: u32) -> f64 {
        (self.b as f64).powi(level as i32)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        if id.level == 0 {
            None
        } else {
            Some(NodeId::new(
                id.level - 1,
                self.levels[id.level as usize].parent[id.index as usize],
            ))
        }
    }

    pub fn child_indices(&self, id: NodeId) -> &[u32] {
        let lvl = &self.levels[id.level as usize];
        if id.level as usize + 1 >= self.levels.len() {
            return &[];
        }
        let a = lvl.child_off[id.index as usize] as usize;
        let b = lvl.child_off[id.index as usize + 1] as usize;
        &lvl.child_idx[a..b]
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.child_indices(id)
            .iter()
            .map(move |&i| NodeId::new(id.level + 1, i))
    }

    pub fn roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.level_size(0) as u32).map(|i| NodeId::new(0, i))
    }

    /// Position of a node in the flat level-major layout.
    pub fn flat_index(&self, id: NodeId) -> usize {
        self.flat_offset[id.level as usize] + id.index as usize
    }

    pub fn id_from_flat(&self, flat: usize) -> NodeId {
        let level = match self.flat_offset.binary_search(&flat) {
            Ok(j) if j < self.levels.len() => j,
            Ok(j) => j - 1,
            Err(j) => j - 1,
        };
        NodeId::new(level as u32, (flat - self.flat_offset[level]) as u32)
    }

    pub fn level_offset(&self, j: u32) -> usize {
        self.flat_offset[j as usize]
    }

    /// Parent in flat indexing.
    pub fn flat_parent(&self, flat: usize) -> Option<usize> {
        let id = self.id_from_flat(flat);
        self.parent(id).map(|p| self.flat_index(p))
    }

    pub fn is_leaf_flat(&self, flat: usize) -> bool {
        self.id_from_flat(flat).level == self.depth()
    }

    /// For every node, the sum of `values` over its full subtree (itself
    /// included), in the flat layout. Accumulation follows child order, the
    /// same order used to define measures, so `subtree_sums(leaf areas)`
    /// reproduces the measures bit for bit.
    pub fn subtree_sums(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.node_count());
        let mut out = values.to_vec();
        for j in (0..self.depth()).rev() {
            let off = self.flat_offset[j as usize];
            let off_child = self.flat_offset[j as usize + 1];
            let lvl = &self.levels[j as usize];
            for i in 0..lvl.sites.len() {
                let a = lvl.child_off[i] as usize;
                let b = lvl.child_off[i + 1] as usize;
                let mut acc = out[off + i];
                for &c in &lvl.child_idx[a..b] {
                    acc += out[off_child + c as usize];
                }
                out[off + i] = acc;
            }
        }
        out
    }

    fn sum_measures_bottom_up(&mut self) {
        for j in (0..self.depth()).rev() {
            let (upper, lower) = {
                let (a, b) = self.levels.split_at_mut(j as usize + 1);
                (&mut a[j as usize], &b[0])
            };
            for i in 0..upper.sites.len() {
                let s = upper.child_off[i] as usize;
                let e = upper.child_off[i + 1] as usize;
                let mut acc = 0.0;
                for &c in &upper.child_idx[s..e] {
                    acc += lower.measure[c as usize];
                }
                upper.measure[i] = acc;
            }
        }
    }

    /// Install leaf measures from a cell partition of the deepest net and
    /// define every interior measure as the ordered sum of its children.
    pub fn compute_measures(&mut self, leaf_partition: &CellPartition) -> Result<(), TreeError> {
        let want = self.level_size(self.depth());
        if leaf_partition.cell_area.len() != want {
            return Err(TreeError::WrongLeafCount {
                got: leaf_partition.cell_area.len(),
                want,
            });
        }
        for (i, &a) in leaf_partition.cell_area.iter().enumerate() {
            if a.is_nan() || a <= 0.0 {
                return Err(TreeError::EmptyCell { index: i, area: a });
            }
        }
        let depth = self.depth() as usize;
        self.levels[depth].measure = leaf_partition.cell_area.clone();
        self.sum_measures_bottom_up();
        Ok(())
    }

    /// True iff `x` lies in the (depth-truncated) region Q_ξ: some descendant
    /// η of ξ at level m has ρ(x, η) < β̄·γ·b^{-m}. Truncation at the tree
    /// depth makes this an inner approximation of the untruncated region.
    pub fn q_membership(&self, xi: NodeId, x: &SpherePoint) -> bool {
        debug_assert!(matches!(self.space, Space::Sphere { .. }));
        let xc = x.coords();
        let deepest = self.depth();
        let mut stack = vec![xi];
        while let Some(id) = stack.pop() {
            let lvl = &self.levels[id.level as usize];
            let s = lvl.sites[id.index as usize];
            let dot = xc[0] * s[0] + xc[1] * s[1] + xc[2] * s[2];
            if dot > lvl.cos_core {
                return true;
            }
            if id.level < deepest {
                // Every descendant cap of this node lies inside the cap of
                // radius (b/(b−1) + β̄)·δ_level around it; skip the subtree
                // when x is provably outside.
                if let Some(cp) = lvl.cos_prune {
                    if dot <= cp {
                        continue;
                    }
                }
                stack.extend(self.children(id));
            }
        }
        false
    }

    /// Exact membership for dyadic-cube trees: the open cube of side
    /// 2^{-level} centered at the node site.
    pub fn cube_contains(&self, xi: NodeId, x: &[f64; 3]) -> bool {
        let dim = match self.space {
            Space::Cube { dim, .. } => dim as usize,
            _ => panic!("cube_contains requires a cube-space tree"),
        };
        let c = self.site(xi);
        let half = 0.5 * self.levels[xi.level as usize].delta;
        (0..dim).all(|i| (x[i] - c[i]).abs() < half)
    }

    /// Global same-level measure-comparability constant: the largest ratio
    /// |Q_η| / |Q_ζ| over same-level pairs, maximized over levels.
    pub fn kappa(&self) -> f64 {
        self.levels
            .iter()
            .map(|lvl| {
                let mx = lvl.measure.iter().cloned().fold(f64::MIN, f64::max);
                let mn = lvl.measure.iter().cloned().fold(f64::MAX, f64::min);
                mx / mn
            })
            .fold(1.0, f64::max)
    }

    /// Largest child/parent measure ratio — the contraction factor λ < 1.
    pub fn lambda(&self) -> f64 {
        let mut lam: f64 = 0.0;
        for j in 1..=self.depth() {
            let lvl = &self.levels[j as usize];
            let up = &self.levels[j as usize - 1];
            for (i, &p) in lvl.parent.iter().enumerate() {
                lam = lam.max(lvl.measure[i] / up.measure[p as usize]);
            }
        }
        lam
    }

    pub fn min_children(&self) -> usize {
        (0..self.depth())
            .flat_map(|j| {
                let lvl = &self.levels[j as usize];
                (0..lvl.sites.len()).map(move |i| {
                    (lvl.child_off[i + 1] - lvl.child_off[i]) as usize
                })
            })
            .min()
            .unwrap_or(0)
    }

    pub fn max_children(&self) -> usize {
        (0..self.depth())
            .flat_map(|j| {
                let lvl = &self.levels[j as usize];
                (0..lvl.sites.len()).map(move |i| {
                    (lvl.child_off[i + 1] - lvl.child_off[i]) as usize
                })
            })
            .max()
            .unwrap_or(0)
    }

    /// Structural audit of the abstract nested-structure axioms that are
    /// decidable from combinatorics and measures: positive measures, exact
    /// additivity, branching ≥ 2 above the leaves, contraction λ < 1, and a
    /// finite same-level comparability constant. Returns human-readable
    /// violations (empty = pass).
    pub fn validate_nested_structure(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (j, lvl) in self.levels.iter().enumerate() {
            for (i, &m) in lvl.measure.iter().enumerate() {
                if m.is_nan() || m <= 0.0 {
                    bad.push(format!("measure of ({j},{i}) is {m}, not positive"));
                }
            }
        }
        for j in 0..self.depth() {
            let off_child = self.flat_offset[j as usize + 1];
            let lvl = &self.levels[j as usize];
            let lower = &self.levels[j as usize + 1];
            let _ = off_child;
            for i in 0..lvl.sites.len() {
                let s = lvl.child_off[i] as usize;
                let e = lvl.child_off[i + 1] as usize;
                if e - s < 2 {
                    bad.push(format!("node ({j},{i}) has {} children, expected ≥ 2", e - s));
                }
                let sum: f64 = {
                    let mut acc = 0.0;
                    for &c in &lvl.child_idx[s..e] {
                        acc += lower.measure[c as usize];
                    }
                    acc
                };
                if sum != lvl.measure[i] {
                    bad.push(format!(
                        "additivity broken at ({j},{i}): {} vs children sum {sum}",
                        lvl.measure[i]
                    ));
                }
            }
        }
        let lam = self.lambda();
        if lam.is_nan() || lam >= 1.0 {
            bad.push(format!("child/parent measure ratio λ = {lam} is not < 1"));
        }
        if !self.kappa().is_finite() {
            bad.push("same-level measure ratio κ is not finite".into());
        }
        // Parent links must point one level up and stay in range; child lists
        // must be the exact inverse of the parent map.
        for j in 1..=self.depth() {
            let lvl = &self.levels[j as usize];
            let up = &self.levels[j as usize - 1];
            for (i, &p) in lvl.parent.iter().enumerate() {
                if p as usize >= up.sites.len() {
                    bad.push(format!("parent of ({j},{i}) out of range"));
                } else {
                    let s = up.child_off[p as usize] as usize;
                    let e = up.child_off[p as usize + 1] as usize;
                    if !up.child_idx[s..e].contains(&(i as u32)) {
                        bad.push(format!("child list of ({},{p}) misses {i}", j - 1));
                    }
                }
            }
        }
        bad
    }

    /// JSON artifact: parameters, per-level sites and meshes, parent links,
    /// and measures.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "space": self.space,
            "b": self.b,
            "params": self.params,
            "levels": self
                .levels
                .iter()
                .enumerate()
                .map(|(j, lvl)| {
                    json!({
                        "level": j,
                        "delta": lvl.delta,
                        "points": lvl.sites,
                    })
                })
                .collect::<Vec<_>>(),
            "parents": self.levels.iter().map(|l| &l.parent).collect::<Vec<_>>(),
            "measures": self.levels.iter().map(|l| &l.measure).collect::<Vec<_>>(),
        })
    }
}

fn cos_or_none(r: f64) -> Option<f64> {
    (r < std::f64::consts::PI).then(|| r.cos())
}

fn make_level(
    delta: f64,
    sites: Vec<[f64; 3]>,
    beta_bar: f64,
    b: f64,
) -> TreeLevel {
    let core = beta_bar * delta;
    let reach = (b / (b - 1.0) + beta_bar) * delta;
    TreeLevel {
        delta,
        measure: vec![0.0; sites.len()],
        parent: Vec::new(),
        child_off: Vec::new(),
        child_idx: Vec::new(),
        cos_core: core.min(std::f64::consts::PI).cos(),
        cos_prune: cos_or_none(reach),
        sites,
    }
}

/// Fill child CSR arrays of `upper` from the parent links of `lower`.
fn link_children(upper: &mut TreeLevel, lower: &[u32]) {
    let mut counts = vec![0u32; upper.sites.len()];
    for &p in lower {
        counts[p as usize] += 1;
    }
    let mut off = vec![0u32; upper.sites.len() + 1];
    for i in 0..counts.len() {
        off[i + 1] = off[i] + counts[i];
    }
    let mut cursor = off.clone();
    let mut idx = vec![0u32; lower.len()];
    for (child, &p) in lower.iter().enumerate() {
        idx[cursor[p as usize] as usize] = child as u32;
        cursor[p as usize] += 1;
    }
    upper.child_off = off;
    upper.child_idx = idx;
}

fn flat_offsets(levels: &[TreeLevel]) -> Vec<usize> {
    let mut off = vec![0usize];
    for l in levels {
        off.push(off.last().unwrap() + l.sites.len());
    }
    off
}

/// Assign each level-(n+1) site its parent in the level-n grid: the unique
/// level-n point within δ_n/2 when one exists (separation makes it unique),
/// otherwise the nearest point within δ_n, ties by smallest index. Both rules
/// collapse to one nearest-neighbor query.
fn assign_parents(
    grid: &NeighborGrid,
    delta_n: f64,
    level: u32,
    sites: &[[f64; 3]],
) -> Result<Vec<u32>, TreeError> {
    let mut parent = Vec::with_capacity(sites.len());
    for (i, &s) in sites.iter().enumerate() {
        let p = SpherePoint::new(s).expect("unit site");
        match grid.nearest_within_radius(&p) {
            Some((pid, _)) => parent.push(pid),
            None => {
                return Err(TreeError::OrphanNode {
                    level,
                    index: i as u32,
                    radius: delta_n,
                })
            }
        }
    }
    Ok(parent)
}

/// Build the spherical nested structure of depth `params.j_max` on `S^{d-1}`.
///
/// All level nets are carved out of one shared candidate pool sized for the
/// finest mesh. Maximality of the level-n net relative to that pool then
/// guarantees every level-(n+1) point (itself a pool point) lies within δ_n
/// of the level-n net, so the nearest-parent rule cannot orphan anyone.
/// Level 0 is the single root e1 with Q = S; all of X_1 attaches to it.
/// Leaf cell areas come from assigning every pool point (weight ω_d/pool) to
/// its nearest leaf; interior measures are ordered sums of children.
pub fn build_spherical(d: u8, params: &TreeParams, seed: u64) -> Result<NestedTree, TreeError> {
    if d != 2 && d != 3 {
        return Err(TreeError::UnsupportedDim(d));
    }
    params.validate()?;
    let jmax = params.j_max;
    let delta_leaf = params.delta(jmax);
    let pool_n = pool_size(d, delta_leaf);
    let rot = Rotation::random(d, seed);
    let bf = params.b as f64;

    // Carve every level out of the same pool.
    let mut grids: Vec<NeighborGrid> = Vec::with_capacity(jmax as usize);
    for j in 1..=jmax {
        let delta = params.delta(j);
        let mut grid = NeighborGrid::new(delta);
        for i in 0..pool_n {
            let p = pool_point(d, i, pool_n, &rot);
            if !grid.has_within_radius(&p) {
                grid.insert(&p);
            }
        }
        grids.push(grid);
    }

    let mut levels: Vec<TreeLevel> = Vec::with_capacity(jmax as usize + 1);
    levels.push(make_level(
        params.delta(0),
        vec![SpherePoint::e1().coords()],
        params.beta_bar,
        bf,
    ));
    for (j, grid) in grids.iter().enumerate() {
        let sites: Vec<[f64; 3]> = (0..grid.len() as u32).map(|i| grid.point(i)).collect();
        levels.push(make_level(params.delta(j as u32 + 1), sites, params.beta_bar, bf));
    }

    // Parent links: level 1 adopts the root; deeper levels use the nearest
    // rule against the grid one level up.
    levels[1].parent = vec![0; levels[1].sites.len()];
    for j in 2..=jmax as usize {
        let parent = assign_parents(
            &grids[j - 2],
            params.delta(j as u32 - 1),
            j as u32,
            &levels[j].sites,
        )?;
        levels[j].parent = parent;
    }
    for j in 0..jmax as usize {
        let lower = std::mem::take(&mut levels[j + 1].parent);
        link_children(&mut levels[j], &lower);
        levels[j + 1].parent = lower;
    }

    // Leaf areas: every pool point is within δ_J of the leaf net it came
    // from, so assignment cannot fail; each leaf owns at least itself.
    let leaf_grid = &grids[jmax as usize - 1];
    let w = sphere_area(d) / pool_n as f64;
    let mut areas = vec![0.0; levels[jmax as usize].sites.len()];
    for i in 0..pool_n {
        let p = pool_point(d, i, pool_n, &rot);
        match leaf_grid.nearest_within_radius(&p) {
            Some((id, _)) => areas[id as usize] += w,
            None => {
                return Err(TreeError::OrphanNode {
                    level: jmax,
                    index: i as u32,
                    radius: delta_leaf,
                })
            }
        }
    }
    levels[jmax as usize].measure = areas;

    let flat_offset = flat_offsets(&levels);
    let mut tree = NestedTree {
        space: Space::Sphere { d },
        b: params.b,
        params: Some(*params),
        levels,
        flat_offset,
    };
    tree.sum_measures_bottom_up();
    Ok(tree)
}

/// Assemble the nested structure from caller-provided nets for levels
/// 1..=J (level j must have mesh γ·b^{-j}; the single-root level 0 at e1 is
/// injected). Measures are left at zero — install them with
/// [`NestedTree::compute_measures`] and a partition of the deepest net.
pub fn build_partial_order(
    nets: Vec<LevelNet>,
    params: &TreeParams,
) -> Result<NestedTree, TreeError> {
    params.validate()?;
    if nets.is_empty() {
        return Err(TreeError::InvalidParams("need at least one net".into()));
    }
    let d = nets[0].d;
    if d != 2 && d != 3 {
        return Err(TreeError::UnsupportedDim(d));
    }
    for (pos, net) in nets.iter().enumerate() {
        let want = params.delta(pos as u32 + 1);
        if ((net.delta - want) / want).abs() > 1e-9 {
            return Err(TreeError::MismatchedDelta {
                position: pos,
                got: net.delta,
                want,
            });
        }
    }
    let bf = params.b as f64;
    let mut levels = vec![make_level(
        params.delta(0),
        vec![SpherePoint::e1().coords()],
        params.beta_bar,
        bf,
    )];
    for net in &nets {
        levels.push(make_level(
            net.delta,
            net.points.iter().map(|p| p.coords()).collect(),
            params.beta_bar,
            bf,
        ));
    }
    levels[1].parent = vec![0; levels[1].sites.len()];
    for j in 2..levels.len() {
        let mut grid = NeighborGrid::new(levels[j - 1].delta);
        for s in &levels[j - 1].sites {
            grid.insert(&SpherePoint::new(*s).expect("unit site"));
        }
        levels[j].parent = assign_parents(
            &grid,
            levels[j - 1].delta,
            j as u32,
            &levels[j].sites,
        )?;
    }
    for j in 0..levels.len() - 1 {
        let lower = std::mem::take(&mut levels[j + 1].parent);
        link_children(&mut levels[j], &lower);
        levels[j + 1].parent = lower;
    }
    let flat_offset = flat_offsets(&levels);
    Ok(NestedTree {
        space: Space::Sphere { d },
        b: params.b,
        params: Some(*params),
        levels,
        flat_offset,
    })
}

/// Exact dyadic-cube nested structure over [0,1]^dim, `dim ∈ {1, 2}`:
/// level n holds the 2^{n·dim} open cubes of side 2^{-n}, each with measure
/// exactly 2^{-n·dim} and 2^dim children. Satisfies the abstract axioms with
/// κ = 1 and λ = 2^{-dim}.
pub fn dyadic_cube_oracle(dim: u8, depth: u32) -> NestedTree {
    assert!(dim == 1 || dim == 2, "dyadic oracle supports dim 1 or 2");
    let mut levels = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let side = 0.5f64.powi(n as i32);
        let per_axis = 1usize << n;
        let count = per_axis.pow(dim as u32);
        let mut sites = Vec::with_capacity(count);
        for i in 0..count {
            let (ix, iy) = if dim == 1 {
                (i, 0)
            } else {
                (i % per_axis, i / per_axis)
            };
            sites.push([
                (ix as f64 + 0.5) * side,
                if dim == 2 { (iy as f64 + 0.5) * side } else { 0.0 },
                0.0,
            ]);
        }
        let mut lvl = TreeLevel {
            delta: side,
            measure: vec![side.powi(dim as i32); count],
            parent: Vec::new(),
            child_off: Vec::new(),
            child_idx: Vec::new(),
            cos_core: 1.0,
            cos_prune: None,
            sites,
        };
        if n > 0 {
            let per_axis_up = per_axis >> 1;
            lvl.parent = (0..count)
                .map(|i| {
                    if dim == 1 {
                        (i >> 1) as u32
                    } else {
                        let (ix, iy) = (i % per_axis, i / per_axis);
                        ((iy >> 1) * per_axis_up + (ix >> 1)) as u32
                    }
                })
                .collect();
        }
        levels.push(lvl);
    }
    for j in 0..depth as usize {
        let lower = std::mem::take(&mut levels[j + 1].parent);
        link_children(&mut levels[j], &lower);
        levels[j + 1].parent = lower;
    }
    let flat_offset = flat_offsets(&levels);
    NestedTree {
        space: Space::Cube {
            dim,
            two_sided: false,
        },
        b: 2,
        params: None,
        levels,
        flat_offset,
    }
}

/// Two-sided dyadic structure on [-1,1] ⊂ R: two roots [-1,0] and [0,1]
/// (the maximal cubes of the two sides), each carrying its own dyadic tree.
/// Level n holds the 2^{n+1} intervals of length 2^{-n}.
pub fn dyadic_forest_oracle(depth: u32) -> NestedTree {
    let mut levels = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let side = 0.5f64.powi(n as i32);
        let count = 2usize << n;
        let sites: Vec<[f64; 3]> = (0..count)
            .map(|i| [-1.0 + (i as f64 + 0.5) * side, 0.0, 0.0])
            .collect();
        let mut lvl = TreeLevel {
            delta: side,
            measure: vec![side; count],
            parent: Vec::new(),
            child_off: Vec::new(),
            child_idx: Vec::new(),
            cos_core: 1.0,
            cos_prune: None,
            sites,
        };
        if n > 0 {
            lvl.parent = (0..count).map(|i| (i >> 1) as u32).collect();
        }
        levels.push(lvl);
    }
    for j in 0..depth as usize {
        let lower = std::mem::take(&mut levels[j + 1].parent);
        link_children(&mut levels[j], &lower);
        levels[j + 1].parent = lower;
    }
    let flat_offset = flat_offsets(&levels);
    NestedTree {
        space: Space::Cube {
            dim: 1,
            two_sided: true,
        },
        b: 2,
        params: None,
        levels,
        flat_offset,
    }
}
