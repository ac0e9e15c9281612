//! Points, caps, geodesic distance, surface measure, and seeded sampling on
//! `S^{d-1}` for `d ∈ {2, 3}`.
//!
//! Points are stored as unit vectors in `R^3`; circle points (`d = 2`) live in
//! the `z = 0` plane. The ambient dimension is carried by the containers and
//! function arguments, not by the point itself.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitCircle, UnitSphere};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("unsupported ambient dimension {0}, expected 2 or 3")]
    UnsupportedDim(u8),
    #[error("cap radius {0} outside (0, π]")]
    RadiusOutOfRange(f64),
    #[error("cannot normalize a zero vector")]
    ZeroVector,
}

/// A point on the unit sphere, kept normalized to `|x| = 1` within 1e-12.
///
/// Serializes as a bare `[x, y, z]` array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    coords: [f64; 3],
}

impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpherePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let coords = <[f64; 3]>::deserialize(d)?;
        SpherePoint::new(coords).map_err(D::Error::custom)
    }
}

impl SpherePoint {
    /// Normalizes an arbitrary nonzero vector in `R^3` onto the sphere.
    pub fn new(coords: [f64; 3]) -> Result<Self, GeomError> {
        let n = (coords[0] * coords[0] + coords[1] * coords[1] + coords[2] * coords[2]).sqrt();
        if !n.is_finite() || n <= 0.0 {
            return Err(GeomError::ZeroVector);
        }
        Ok(Self {
            coords: [coords[0] / n, coords[1] / n, coords[2] / n],
        })
    }

    /// Circle point at angle `theta` (lives in the `z = 0` plane).
    pub fn from_angle(theta: f64) -> Self {
        Self {
            coords: [theta.cos(), theta.sin(), 0.0],
        }
    }

    pub fn e1() -> Self {
        Self {
            coords: [1.0, 0.0, 0.0],
        }
    }

    pub fn coords(&self) -> [f64; 3] {
        self.coords
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.coords[0] * other.coords[0]
            + self.coords[1] * other.coords[1]
            + self.coords[2] * other.coords[2]
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint {
            coords: [-self.coords[0], -self.coords[1], -self.coords[2]],
        }
    }
}

/// Geodesic distance `ρ(x, y) = arccos(x·y)`, with the inner product clamped
/// to `[-1, 1]` so nearly-identical points never produce NaN.
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    x.dot(y).clamp(-1.0, 1.0).acos()
}

/// Total surface measure `ω_d` of `S^{d-1}`: `2π` for `d = 2`, `4π` for `d = 3`.
///
/// Panics on other dimensions; callers validate `d` at the API boundary.
pub fn sphere_area(d: u8) -> f64 {
    match d {
        2 => std::f64::consts::TAU,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

/// Surface measure of a geodesic cap of radius `r ∈ (0, π]`:
/// `2r` on the circle, `2π(1 - cos r)` on the sphere.
pub fn cap_area(d: u8, r: f64) -> Result<f64, GeomError> {
    if !(r > 0.0 && r <= std::f64::consts::PI) {
        return Err(GeomError::RadiusOutOfRange(r));
    }
    match d {
        2 => Ok(2.0 * r),
        3 => Ok(std::f64::consts::TAU * (1.0 - r.cos())),
        _ => Err(GeomError::UnsupportedDim(d)),
    }
}

/// Closed geodesic cap `B(center, radius) = {x : ρ(x, center) ≤ radius}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Cap {
    pub center: SpherePoint,
    pub radius: f64,
}

impl Cap {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0 && radius <= std::f64::consts::PI) {
            return Err(GeomError::RadiusOutOfRange(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, x: &SpherePoint) -> bool {
        geodesic_distance(&self.center, x) <= self.radius
    }

    pub fn area(&self, d: u8) -> Result<f64, GeomError> {
        cap_area(d, self.radius)
    }
}

/// `n` i.i.d. uniform points on `S^{d-1}`, deterministic in `seed`.
pub fn sample_uniform(d: u8, n: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    match d {
        2 => {
            for _ in 0..n {
                let [x, y]: [f64; 2] = UnitCircle.sample(&mut rng);
                out.push(SpherePoint { coords: [x, y, 0.0] });
            }
        }
        3 => {
            for _ in 0..n {
                let coords: [f64; 3] = UnitSphere.sample(&mut rng);
                out.push(SpherePoint { coords });
            }
        }
        _ => panic!("unsupported ambient dimension {d}"),
    }
    out
}

/// Point `i` of the `n`-point Fibonacci (golden-angle) lattice on `S^2`.
///
/// Quasi-uniform: covering radius is `O(1/√n)`, which is what the net and
/// partition builders need from their candidate pools.
pub fn fibonacci_lattice_point(i: usize, n: usize) -> SpherePoint {
    debug_assert!(i < n && n > 0);
    // Golden angle 2π(1 - 1/φ) = π(3 - √5).
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    SpherePoint {
        coords: [r * phi.cos(), r * phi.sin(), z],
    }
}

/// Point `i` of `n` equispaced points on the circle.
pub fn equispaced_circle_point(i: usize, n: usize) -> SpherePoint {
    debug_assert!(i < n && n > 0);
    SpherePoint::from_angle(std::f64::consts::TAU * i as f64 / n as f64)
}

/// A rotation of `R^3` that fixes the circle plane when `d = 2`.
///
/// Used to decouple deterministic candidate lattices from a seed: the rotated
/// lattice is still quasi-uniform but its alignment varies with the seed.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Seed-deterministic rotation: uniform (Haar) on SO(3) for `d = 3`, a
    /// uniform rotation about the z-axis for `d = 2`.
    pub fn random(d: u8, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x526f_7461_7465_3364);
        match d {
            2 => {
                let theta: f64 = rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU;
                let (s, c) = theta.sin_cos();
                Self {
                    m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
                }
            }
            3 => {
                // Normalized 4-Gaussian quaternion is Haar-uniform on SO(3).
                let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
                Self {
                    m: [
                        [
                            1.0 - 2.0 * (y * y + z * z),
                            2.0 * (x * y - w * z),
                            2.0 * (x * z + w * y),
                        ],
                        [
                            2.0 * (x * y + w * z),
                            1.0 - 2.0 * (x * x + z * z),
                            2.0 * (y * z - w * x),
                        ],
                        [
                            2.0 * (x * z - w * y),
                            2.0 * (y * z + w * x),
                            1.0 - 2.0 * (x * x + y * y),
                        ],
                    ],
                }
            }
            _ => panic!("unsupported ambient dimension {d}"),
        }
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        let c = p.coords;
        let v = [
            self.m[0][0] * c[0] + self.m[0][1] * c[1] + self.m[0][2] * c[2],
            self.m[1][0] * c[0] + self.m[1][1] * c[1] + self.m[1][2] * c[2],
            self.m[2][0] * c[0] + self.m[2][1] * c[1] + self.m[2][2] * c[2],
        ];
        // Rows are orthonormal, so the result is already unit length.
        SpherePoint { coords: v }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }
}
