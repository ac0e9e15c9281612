//! Needlet frame on the sphere: per-level band-limited kernels
//! Ψ_j = Σ_k â(k/b^{j-1}) Z_k (with the raw projector Z_0 at the root
//! level), frame elements ψ_ξ = w_ξ^{1/2} Ψ_j(ξ·x) at the tree sites, and
//! the analysis/synthesis pair.
//!
//! Analysis goes through harmonic moments: one exact quadrature pass gives
//! f̃_{kν} = Σ_z w_z f(z) Y_{kν}(z), and every coefficient is then
//! ⟨f, ψ_ξ⟩ = w_ξ^{1/2} Σ_k λ_j(k) Σ_ν Y_{kν}(ξ) f̃_{kν}. For f band-limited
//! within the finest rule this is exact; for general f it is the analysis of
//! the rule's aliased projection of f — the approximation is in the moments,
//! nowhere else.

use crate::cubature::{integrate, solve_weights, CubatureError, CubatureRule};
use crate::harmonics::{enumerate_basis, eval_basis_all, poly_space_dim, CutoffPair, ZonalKernel};
use crate::net::LevelNet;
use crate::sphere::SpherePoint;
use crate::tree::{NestedTree, NodeId, Space};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeedletError {
    #[error("needlet systems require a spherical tree")]
    NotSpherical,
    #[error("tree carries no scale parameters (partial-order trees cannot host a frame)")]
    MissingParams,
    #[error(transparent)]
    Cubature(#[from] CubatureError),
}

/// Coefficient sequence over the nodes of a tree, stored level-major (flat
/// tree order). Every node has a value, default 0; all sequences handled
/// here are finitely supported by construction and `support()` reports the
/// current nonzero count.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq {
    level_offset: Vec<usize>,
    pub values: Vec<f64>,
}

impl CoeffSeq {
    pub fn zeros(tree: &NestedTree) -> Self {
        let level_offset: Vec<usize> = (0..=tree.n_levels())
            .map(|j| {
                (0..j)
                    .map(|l| tree.level_size(l))
                    .sum()
            })
            .collect();
        Self {
            values: vec![0.0; *level_offset.last().unwrap()],
            level_offset,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.level_offset.len() - 1
    }

    pub fn level_values(&self, j: u32) -> &[f64] {
        &self.values[self.level_offset[j as usize]..self.level_offset[j as usize + 1]]
    }

    pub fn get(&self, id: NodeId) -> f64 {
        self.values[self.level_offset[id.level as usize] + id.index as usize]
    }

    pub fn set(&mut self, id: NodeId, v: f64) {
        self.values[self.level_offset[id.level as usize] + id.index as usize] = v;
    }

    /// Count of nonzero entries.
    pub fn support(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        (0..self.n_levels()).flat_map(move |j| {
            self.level_values(j as u32)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(move |(i, v)| (NodeId::new(j as u32, i as u32), *v))
        })
    }

    /// One JSON object per nonzero coefficient, newline-separated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (id, v) in self.iter_nonzero() {
            out.push_str(
                &serde_json::json!({"level": id.level, "index": id.index, "value": v})
                    .to_string(),
            );
            out.push('\n');
        }
        out
    }
}

/// The frame: tree sites, per-level quadrature rules (degree 2b^j, degree 0
/// at the root level), and per-level kernels with coefficients â(k/b^{j-1})
/// supported in (b^{j-2}, b^j).
pub struct NeedletSystem {
    pub tree: NestedTree,
    pub cutoffs: CutoffPair,
    pub kernels: Vec<ZonalKernel>,
    pub rules: Vec<CubatureRule>,
    d: u8,
    /// Degree-k index of each basis position up to the moment degree.
    k_of: Vec<usize>,
}

/// Fixed reduction granularity: partial sums are produced per chunk and
/// folded in chunk order, so results are bitwise reproducible regardless of
/// how many workers run.
const CHUNK: usize = 2048;

impl NeedletSystem {
    pub fn build(tree: NestedTree) -> Result<Self, NeedletError> {
        let d = match tree.space {
            Space::Sphere { d } => d,
            _ => return Err(NeedletError::NotSpherical),
        };
        let params = tree.params.ok_or(NeedletError::MissingParams)?;
        let b = tree.b as f64;
        let cutoffs = CutoffPair::new(b);
        let mut kernels = Vec::new();
        let mut rules = Vec::new();
        for j in 0..=tree.depth() {
            let kern = if j == 0 {
                // Root band: the raw degree-0 projector.
                ZonalKernel::from_profile(d, 1.0, |t| if t < 0.5 { 1.0 } else { 0.0 }, 1.0)
            } else {
                ZonalKernel::from_profile(d, b.powi(j as i32 - 1), |t| cutoffs.ahat(t), b)
            };
            let net = LevelNet {
                d,
                level: j,
                delta: if j == 0 {
                    std::f64::consts::PI
                } else {
                    params.delta(j)
                },
                points: tree
                    .level_sites(j)
                    .iter()
                    .map(|c| SpherePoint::new(*c).expect("tree sites are unit vectors"))
                    .collect(),
            };
            let degree = if j == 0 {
                0
            } else {
                2 * (tree.b as usize).pow(j)
            };
            rules.push(solve_weights(&net, degree)?);
            kernels.push(kern);
        }
        let k_of = enumerate_basis(d, kernels.last().unwrap().degree())
            .into_iter()
            .map(|i| i.k)
            .collect();
        Ok(Self {
            tree,
            cutoffs,
            kernels,
            rules,
            d,
            k_of,
        })
    }

    pub fn dim(&self) -> u8 {
        self.d
    }

    /// Highest harmonic degree the analysis moments carry: b^J − 1.
    pub fn moment_degree(&self) -> usize {
        self.kernels.last().unwrap().degree()
    }

    pub fn node_weight(&self, id: NodeId) -> f64 {
        self.rules[id.level as usize].weights[id.index as usize]
    }

    /// ψ_ξ(x) = w_ξ^{1/2} Ψ_j(ξ·x).
    pub fn eval_psi(&self, id: NodeId, x: &SpherePoint) -> f64 {
        let site = self.tree.sphere_site(id);
        self.node_weight(id).sqrt() * self.kernels[id.level as usize].eval(site.dot(x))
    }

    /// ‖ψ_ξ‖²_{L²} = w_ξ Σ_k λ_j(k)² Z_k(1), closed form.
    pub fn psi_l2_sq(&self, id: NodeId) -> f64 {
        self.node_weight(id) * self.kernels[id.level as usize].l2_norm_sq()
    }

    /// Harmonic moments f̃_{kν} of f up to the moment degree, via the finest
    /// rule. Exact when deg f + moment degree ≤ 2b^J.
    pub fn harmonic_moments(&self, f: impl Fn(&SpherePoint) -> f64 + Sync) -> Vec<f64> {
        let rule = self.rules.last().unwrap();
        let deg = self.moment_degree();
        let dim = poly_space_dim(self.d, deg);
        let pts = &rule.net.points;
        let n_chunks = pts.len().div_ceil(CHUNK);
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * CHUNK;
                let hi = (lo + CHUNK).min(pts.len());
                let mut local = vec![0.0; dim];
                let mut basis = vec![0.0; dim];
                for i in lo..hi {
                    eval_basis_all(self.d, deg, &pts[i], &mut basis);
                    let wf = rule.weights[i] * f(&pts[i]);
                    for (m, b) in local.iter_mut().zip(&basis) {
                        *m += wf * b;
                    }
                }
                local
            })
            .collect();
        let mut moments = vec![0.0; dim];
        for local in partials {
            for (m, l) in moments.iter_mut().zip(&local) {
                *m += l;
            }
        }
        moments
    }

    /// All coefficients ⟨f, ψ_ξ⟩ from precomputed harmonic moments.
    pub fn coeffs_from_moments(&self, moments: &[f64]) -> CoeffSeq {
        let mut h = CoeffSeq::zeros(&self.tree);
        for j in 0..=self.tree.depth() {
            let kern = &self.kernels[j as usize];
            let dim_j = poly_space_dim(self.d, kern.degree());
            // Fused per-position weight λ_j(k)·f̃_{kν}.
            let lam_mom: Vec<f64> = moments[..dim_j]
                .iter()
                .zip(&self.k_of)
                .map(|(m, &k)| m * kern.coeffs.get(k).copied().unwrap_or(0.0))
                .collect();
            let weights = &self.rules[j as usize].weights;
            let sites = self.tree.level_sites(j);
            let d = self.d;
            let off = self.tree.level_offset(j);
            h.values[off..off + sites.len()]
                .par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(ci, out)| {
                    let lo = ci * CHUNK;
                    let mut basis = vec![0.0; dim_j];
                    for (t, slot) in out.iter_mut().enumerate() {
                        let i = lo + t;
                        let p = SpherePoint::new(sites[i]).expect("unit site");
                        eval_basis_all(d, kern.degree(), &p, &mut basis);
                        let dot: f64 = basis.iter().zip(&lam_mom).map(|(b, l)| b * l).sum();
                        *slot = weights[i].sqrt() * dot;
                    }
                });
        }
        h
    }

    /// S_ψ f = {⟨f, ψ_ξ⟩}.
    pub fn analyze(&self, f: impl Fn(&SpherePoint) -> f64 + Sync) -> CoeffSeq {
        let moments = self.harmonic_moments(f);
        self.coeffs_from_moments(&moments)
    }

    /// T_ψ h (x) = Σ_ξ h_ξ ψ_ξ(x).
    pub fn synthesize(&self, h: &CoeffSeq, x: &SpherePoint) -> f64 {
        let mut acc = 0.0;
        for j in 0..=self.tree.depth() {
            let kern = &self.kernels[j as usize];
            let weights = &self.rules[j as usize].weights;
            let sites = self.tree.level_sites(j);
            for (i, &hv) in h.level_values(j).iter().enumerate() {
                if hv != 0.0 {
                    let dot = sites[i][0] * x.coords()[0]
                        + sites[i][1] * x.coords()[1]
                        + sites[i][2] * x.coords()[2];
                    acc += hv * weights[i].sqrt() * kern.eval(dot);
                }
            }
        }
        acc
    }

    /// Pointwise synthesis at many probes, parallel over the probes.
    pub fn synthesize_many(&self, h: &CoeffSeq, xs: &[SpherePoint]) -> Vec<f64> {
        xs.par_iter().map(|x| self.synthesize(h, x)).collect()
    }

    /// Harmonic coefficients (in the real orthonormal basis, up to the
    /// moment degree) of T_ψ h: position p gets Σ_j λ_j(k_p) Σ_ξ h_ξ
    /// w_ξ^{1/2} Y_p(ξ). Lets reconstruction errors be measured in exact
    /// coefficient space instead of by sampling.
    pub fn harmonic_image(&self, h: &CoeffSeq) -> Vec<f64> {
        let deg = self.moment_degree();
        let dim = poly_space_dim(self.d, deg);
        let mut image = vec![0.0; dim];
        for j in 0..=self.tree.depth() {
            let kern = &self.kernels[j as usize];
            let dim_j = poly_space_dim(self.d, kern.degree());
            let weights = &self.rules[j as usize].weights;
            let sites = self.tree.level_sites(j);
            let hj = h.level_values(j);
            let d = self.d;
            let n_chunks = sites.len().div_ceil(CHUNK);
            let partials: Vec<Vec<f64>> = (0..n_chunks)
                .into_par_iter()
                .map(|ci| {
                    let lo = ci * CHUNK;
                    let hi = (lo + CHUNK).min(sites.len());
                    let mut local = vec![0.0; dim_j];
                    let mut basis = vec![0.0; dim_j];
                    for i in lo..hi {
                        if hj[i] == 0.0 {
                            continue;
                        }
                        let p = SpherePoint::new(sites[i]).expect("unit site");
                        eval_basis_all(d, kern.degree(), &p, &mut basis);
                        let c = hj[i] * weights[i].sqrt();
                        for (l, b) in local.iter_mut().zip(&basis) {
                            *l += c * b;
                        }
                    }
                    local
                })
                .collect();
            let mut proj = vec![0.0; dim_j];
            for local in partials {
                for (p, l) in proj.iter_mut().zip(&local) {
                    *p += l;
                }
            }
            for (pos, &pv) in proj.iter().enumerate() {
                let lam = kern.coeffs.get(self.k_of[pos]).copied().unwrap_or(0.0);
                image[pos] += lam * pv;
            }
        }
        image
    }

    /// ‖f‖²_{L²} by the finest rule (exact for deg f ≤ b^J).
    pub fn norm_l2_sq(&self, f: impl Fn(&SpherePoint) -> f64) -> f64 {
        integrate(self.rules.last().unwrap(), |p| {
            let v = f(p);
            v * v
        })
    }
}
