//! Constructive harmonic analysis on the unit sphere `S^{d-1}` for `d ∈ {2, 3}`.
//!
//! The crate builds, from scratch and with explicit constants:
//!
//! * maximal δ-nets and Voronoi-style cell partitions ([`net`]),
//! * hierarchies of nested "cubes" organized as a rooted tree, plus exact
//!   dyadic-cube model trees on `[0,1]^d` used as ground truth ([`tree`]),
//! * spherical harmonics, zonal kernels, smooth Littlewood–Paley cutoffs, and
//!   the Poisson kernel ([`harmonics`]),
//! * positive-weight cubature rules exact on polynomial spaces ([`cubature`]),
//! * a needlet frame with analysis and synthesis operators ([`needlet`]),
//! * discrete Besov / Triebel–Lizorkin / oscillation sequence norms on tree
//!   coefficients ([`norms`]),
//! * almost-diagonal matrix classes acting boundedly on those sequence spaces
//!   ([`almost_diag`]),
//! * greedy tree-structured n-term approximation with Jackson/Bernstein rate
//!   experiments ([`nterm`]),
//! * an oscillation-norm vs. sequence-norm equivalence experiment ([`bmo`]),
//! * harmonic test functions: Newtonian atoms and harmonic extensions
//!   ([`atoms`]).
//!
//! Conventions used throughout: the sphere is `S^{d-1} ⊂ R^d`, so `d = 2` is
//! the circle and `d = 3` the ordinary sphere; `ρ(x, y) = arccos(x·y)` is the
//! geodesic distance; `ω_d` denotes the total surface measure (`2π` for the
//! circle, `4π` for the sphere). Scales are indexed by a level `j ≥ 0` with
//! mesh `δ_j = γ · b^{-j}` for a fixed integer `b ≥ 4`.

pub mod almost_diag;
pub mod atoms;
pub mod bmo;
pub mod cubature;
pub mod harmonics;
pub mod needlet;
pub mod net;
pub mod norms;
pub mod nterm;
pub mod sphere;
pub mod tree;

pub use sphere::SpherePoint;
pub use tree::{NestedTree, NodeId, TreeParams};
