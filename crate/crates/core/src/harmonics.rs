//! Orthogonal-polynomial and kernel layer: Gegenbauer/Chebyshev/Legendre
//! recurrences, the zonal projector kernels Z_k, smooth Littlewood–Paley
//! cutoffs, band-limited zonal kernels Λ_N = Σ λ(k/N) Z_k, explicit real
//! orthonormal bases of the harmonic spaces, and the Poisson kernel on the
//! unit ball.
//!
//! Everything here is cross-checked against an independent quadrature oracle
//! (Gauss–Legendre × equispaced product rules) built in this module.

use crate::sphere::{sphere_area, SpherePoint};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HarmonicsError {
    #[error("unsupported ambient dimension {0}, expected 2 or 3")]
    UnsupportedDim(u8),
    #[error("evaluation point has |x| = {0}, need |x| < 1")]
    PointNotInterior(f64),
}

/// Gegenbauer (ultraspherical) polynomial C_k^μ(u) by the three-term
/// recurrence; C_k^μ(1) = binom(k + 2μ − 1, k).
pub fn gegenbauer(k: usize, mu: f64, u: f64) -> f64 {
    debug_assert!(mu > 0.0);
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * mu * u;
    for n in 2..=k {
        let nf = n as f64;
        let next = (2.0 * (nf + mu - 1.0) * u * cur - (nf + 2.0 * mu - 2.0) * prev) / nf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev polynomial of the first kind T_k(u).
pub fn chebyshev_t(k: usize, u: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = u;
    for _ in 2..=k {
        let next = 2.0 * u * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Legendre polynomial P_k(u) = C_k^{1/2}(u).
pub fn legendre(k: usize, u: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = u;
    for n in 2..=k {
        let nf = n as f64;
        let next = ((2.0 * nf - 1.0) * u * cur - (nf - 1.0) * prev) / nf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Dimension of the space of degree-k spherical harmonics on S^{d-1}.
pub fn harmonic_dim(d: u8, k: usize) -> usize {
    match (d, k) {
        (2, 0) => 1,
        (2, _) => 2,
        (3, _) => 2 * k + 1,
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

/// Dimension of the space of spherical polynomials of degree ≤ deg.
pub fn poly_space_dim(d: u8, deg: usize) -> usize {
    match d {
        2 => 2 * deg + 1,
        3 => (deg + 1) * (deg + 1),
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

/// Kernel of the orthogonal projector onto degree-k harmonics, as a function
/// of u = x·y: for the sphere ((2k+1)/ω_3)·P_k(u), for the circle 1/(2π)
/// at k = 0 and (1/π)·T_k(u) otherwise.
pub fn zonal_projector(d: u8, k: usize, u: f64) -> f64 {
    match d {
        2 => {
            if k == 0 {
                0.5 / std::f64::consts::PI
            } else {
                chebyshev_t(k, u) / std::f64::consts::PI
            }
        }
        3 => (2.0 * k as f64 + 1.0) / sphere_area(3) * legendre(k, u),
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

fn mollifier(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C^∞ transition: 0 for t ≤ 0, 1 for t ≥ 1, strictly increasing between.
fn transition(t: f64) -> f64 {
    let a = mollifier(t);
    let b = mollifier(1.0 - t);
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        1.0
    } else {
        a / (a + b)
    }
}

/// Smooth cutoff pair for base `b`: `ahat` is supported on [1/b, b], equals 1
/// at u = 1 only in the squared-sum sense — â²(u) + â²(u/b) = 1 on [1, b] —
/// which telescopes to the dyadic-type partition of unity
/// Σ_{ν≥0} â²(b^{-ν}u) = 1 for all u ≥ 1.
#[derive(Debug, Clone, Copy)]
pub struct CutoffPair {
    pub b: f64,
}

impl CutoffPair {
    pub fn new(b: f64) -> Self {
        assert!(b > 1.0, "cutoff base must exceed 1");
        Self { b }
    }

    /// The window â(u): sin((π/2)·s) on the rising edge [1/b, 1] and
    /// cos((π/2)·s) on the falling edge [1, b], with the same smooth
    /// transition s in matched parametrizations, so the two squared edges
    /// sum to 1 exactly where they overlap after dilation.
    pub fn ahat(&self, u: f64) -> f64 {
        let b = self.b;
        if u <= 1.0 / b || u >= b {
            0.0
        } else if u <= 1.0 {
            let t = (u - 1.0 / b) / (1.0 - 1.0 / b);
            (std::f64::consts::FRAC_PI_2 * transition(t)).sin()
        } else {
            let t = (u - 1.0) / (b - 1.0);
            (std::f64::consts::FRAC_PI_2 * transition(t)).cos()
        }
    }

    /// Low-pass complement: φ ≡ 1 on [0, 1/b], φ² = 1 − â² on [1/b, 1], and
    /// 0 above. Consequence of the matching condition: for 0 < u ≤ 1,
    /// φ(u)² = Σ_{ν≥1} â²(b^ν u), so φ² plus all higher bands is 1.
    pub fn phi(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        let a = self.ahat(u);
        (1.0 - a * a).max(0.0).sqrt()
    }

    /// Σ_{ν=0..terms} â²(b^{-ν} u).
    pub fn partition_sum(&self, u: f64, terms: usize) -> f64 {
        (0..=terms)
            .map(|v| {
                let a = self.ahat(u * self.b.powi(-(v as i32)));
                a * a
            })
            .sum()
    }
}

/// Band-limited zonal kernel Λ_N(u) = Σ_k λ(k/N)·Z_k(u): a polynomial kernel
/// of degree < support_hi·N with precomputed coefficients.
#[derive(Debug, Clone)]
pub struct ZonalKernel {
    pub d: u8,
    pub n_dilation: f64,
    pub coeffs: Vec<f64>,
}

impl ZonalKernel {
    /// Sample `profile` at k/N for k = 0..⌈support_hi·N⌉ and drop trailing
    /// zeros. Exact by construction: the profile has compact support, so the
    /// truncation loses nothing.
    pub fn from_profile(
        d: u8,
        n_dilation: f64,
        profile: impl Fn(f64) -> f64,
        support_hi: f64,
    ) -> Self {
        assert!(d == 2 || d == 3, "unsupported ambient dimension {d}");
        assert!(n_dilation > 0.0);
        let kmax = (support_hi * n_dilation).ceil() as usize;
        let mut coeffs: Vec<f64> = (0..=kmax)
            .map(|k| profile(k as f64 / n_dilation))
            .collect();
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Self {
            d,
            n_dilation,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Σ_k λ_k Z_k(u) in one pass of the underlying recurrence.
    pub fn eval(&self, u: f64) -> f64 {
        match self.d {
            2 => {
                let mut acc = self.coeffs[0] * 0.5 / std::f64::consts::PI;
                let mut prev = 1.0;
                let mut cur = u;
                for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
                    if k >= 2 {
                        let next = 2.0 * u * cur - prev;
                        prev = cur;
                        cur = next;
                    }
                    acc += c * cur / std::f64::consts::PI;
                }
                acc
            }
            _ => {
                let w = sphere_area(3);
                let mut acc = self.coeffs[0] / w;
                let mut prev = 1.0;
                let mut cur = u;
                for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
                    if k >= 2 {
                        let kf = k as f64;
                        let next = ((2.0 * kf - 1.0) * u * cur - (kf - 1.0) * prev) / kf;
                        prev = cur;
                        cur = next;
                    }
                    acc += c * (2.0 * k as f64 + 1.0) / w * cur;
                }
                acc
            }
        }
    }

    /// ∫_S Λ(x·y)² dσ(y) = Σ_k λ_k²·Z_k(1) by orthogonality of the
    /// projector kernels (independent of x).
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * c * zonal_projector(self.d, k, 1.0))
            .sum()
    }
}

/// Index of one real basis element of the degree-k harmonic space:
/// ν ∈ 1..=N(k,d). For d = 3: ν = 1 is the zonal (m = 0) element, ν = 2m and
/// ν = 2m+1 are the cos(mφ)/sin(mφ) pair. For d = 2 (k ≥ 1): ν = 1 is
/// cos(kθ), ν = 2 is sin(kθ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    pub k: usize,
    pub nu: usize,
}

/// All basis indices of degree ≤ deg, in evaluation order.
pub fn enumerate_basis(d: u8, deg: usize) -> Vec<BasisIndex> {
    let mut out = Vec::with_capacity(poly_space_dim(d, deg));
    for k in 0..=deg {
        for nu in 1..=harmonic_dim(d, k) {
            out.push(BasisIndex { k, nu });
        }
    }
    out
}

/// Evaluate every basis element of degree ≤ deg at `x`, in the order of
/// [`enumerate_basis`]. `out` must have length `poly_space_dim(d, deg)`.
///
/// One recurrence sweep per point: the bulk analysis path evaluates these at
/// every net node, so no per-(k,ν) dispatch.
pub fn eval_basis_all(d: u8, deg: usize, x: &SpherePoint, out: &mut [f64]) {
    assert_eq!(out.len(), poly_space_dim(d, deg));
    let c = x.coords();
    match d {
        2 => {
            let theta = c[1].atan2(c[0]);
            let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
            out[0] = 1.0 / std::f64::consts::TAU.sqrt();
            for k in 1..=deg {
                let (s, co) = (k as f64 * theta).sin_cos();
                out[2 * k - 1] = co * inv_sqrt_pi;
                out[2 * k] = s * inv_sqrt_pi;
            }
        }
        3 => {
            let z = c[2];
            let sin_theta = (c[0] * c[0] + c[1] * c[1]).sqrt();
            let phi = c[1].atan2(c[0]);
            let inv_sqrt_2pi = 1.0 / std::f64::consts::TAU.sqrt();
            let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
            // q_{k,m}(z): associated Legendre functions normalized to
            // ∫_{-1}^{1} q² dz = 1, by the stable normalized recurrences.
            // Y_{k,0} = q_{k,0}/√(2π); Y_{k,m}^{cos/sin} = q_{k,m}·cos/sin(mφ)/√π.
            let mut q_diag = std::f64::consts::FRAC_1_SQRT_2; // q_{0,0}
            let (sin_phi, cos_phi) = phi.sin_cos();
            let mut cos_m = 1.0; // cos(mφ)
            let mut sin_m = 0.0; // sin(mφ)
            for m in 0..=deg {
                if m > 0 {
                    let m_f = m as f64;
                    q_diag *= sin_theta * ((2.0 * m_f + 1.0) / (2.0 * m_f)).sqrt();
                    let (c_new, s_new) = (
                        cos_m * cos_phi - sin_m * sin_phi,
                        sin_m * cos_phi + cos_m * sin_phi,
                    );
                    cos_m = c_new;
                    sin_m = s_new;
                }
                let (cf, sf) = if m == 0 {
                    (inv_sqrt_2pi, 0.0)
                } else {
                    (cos_m * inv_sqrt_pi, sin_m * inv_sqrt_pi)
                };
                let write = |out: &mut [f64], k: usize, q: f64| {
                    let base = k * k;
                    if m == 0 {
                        out[base] = q * cf;
                    } else {
                        out[base + 2 * m - 1] = q * cf;
                        out[base + 2 * m] = q * sf;
                    }
                };
                let mut q_km2 = q_diag; // q_{m,m}
                write(out, m, q_km2);
                if m < deg {
                    let mut q_km1 = (2.0 * m as f64 + 3.0).sqrt() * z * q_diag; // q_{m+1,m}
                    write(out, m + 1, q_km1);
                    for k in m + 2..=deg {
                        let kf = k as f64;
                        let mf = m as f64;
                        let a = ((2.0 * kf + 1.0) * (2.0 * kf - 1.0)
                            / ((kf - mf) * (kf + mf)))
                            .sqrt();
                        let cc = ((2.0 * kf + 1.0) * (kf - 1.0 - mf) * (kf - 1.0 + mf)
                            / ((2.0 * kf - 3.0) * (kf - mf) * (kf + mf)))
                            .sqrt();
                        let q = a * z * q_km1 - cc * q_km2;
                        write(out, k, q);
                        q_km2 = q_km1;
                        q_km1 = q;
                    }
                }
            }
        }
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

/// Position of a basis index in the [`eval_basis_all`] output.
pub fn basis_position(d: u8, idx: &BasisIndex) -> usize {
    match d {
        2 => {
            if idx.k == 0 {
                0
            } else {
                2 * idx.k - 2 + idx.nu
            }
        }
        3 => idx.k * idx.k + idx.nu - 1,
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

/// Single basis element Y_{k,ν}(x). Convenience wrapper over the bulk
/// evaluator; hot paths should call [`eval_basis_all`] once per point.
pub fn sph_basis_eval(d: u8, idx: &BasisIndex, x: &SpherePoint) -> f64 {
    let mut buf = vec![0.0; poly_space_dim(d, idx.k)];
    eval_basis_all(d, idx.k, x, &mut buf);
    buf[basis_position(d, idx)]
}

/// Poisson kernel of the unit ball in R^d at boundary point `y` and interior
/// point `x`: (1/ω_d)·(1 − |x|²)/|x − y|^d.
pub fn poisson_kernel(d: u8, y: &SpherePoint, x: &[f64; 3]) -> Result<f64, HarmonicsError> {
    if d != 2 && d != 3 {
        return Err(HarmonicsError::UnsupportedDim(d));
    }
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if r2 >= 1.0 {
        return Err(HarmonicsError::PointNotInterior(r2.sqrt()));
    }
    let yc = y.coords();
    let diff2 = (x[0] - yc[0]).powi(2) + (x[1] - yc[1]).powi(2) + (x[2] - yc[2]).powi(2);
    Ok((1.0 - r2) / (sphere_area(d) * diff2.powf(d as f64 / 2.0)))
}

/// Truncated expansion Σ_{k≤kmax} |x|^k·Z_k(x̂·y) of the Poisson kernel.
pub fn poisson_series(d: u8, y: &SpherePoint, x: &[f64; 3], kmax: usize) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        return zonal_projector(d, 0, 1.0);
    }
    let yc = y.coords();
    let u = ((x[0] * yc[0] + x[1] * yc[1] + x[2] * yc[2]) / r).clamp(-1.0, 1.0);
    (0..=kmax)
        .map(|k| r.powi(k as i32) * zonal_projector(d, k, u))
        .sum()
}

/// Gauss–Legendre nodes and weights on [-1, 1]: exact for polynomials of
/// degree ≤ 2n−1. Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P'_n(x) together.
            let mut prev = 1.0;
            let mut cur = x;
            for k in 2..=n {
                let kf = k as f64;
                let next = ((2.0 * kf - 1.0) * x * cur - (kf - 1.0) * prev) / kf;
                prev = cur;
                cur = next;
            }
            dp = n as f64 * (x * cur - prev) / (x * x - 1.0);
            let dx = cur / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Independent quadrature oracle on S^{d-1}, exact for spherical polynomials
/// of degree ≤ 2·res − 1: equispaced points on the circle, Gauss–Legendre ×
/// equispaced product rule on the sphere.
pub fn sphere_quad_oracle(d: u8, res: usize) -> Vec<(SpherePoint, f64)> {
    match d {
        2 => {
            let n = 2 * res;
            let w = std::f64::consts::TAU / n as f64;
            (0..n)
                .map(|i| (crate::sphere::equispaced_circle_point(i, n), w))
                .collect()
        }
        3 => {
            let (zs, wz) = gauss_legendre(res);
            let n_phi = 2 * res + 1;
            let w_phi = std::f64::consts::TAU / n_phi as f64;
            let mut out = Vec::with_capacity(res * n_phi);
            for (z, wz) in zs.iter().zip(&wz) {
                let s = (1.0 - z * z).max(0.0).sqrt();
                for p in 0..n_phi {
                    let phi = std::f64::consts::TAU * p as f64 / n_phi as f64;
                    let pt = SpherePoint::new([s * phi.cos(), s * phi.sin(), *z])
                        .expect("nonzero by construction");
                    out.push((pt, wz * w_phi));
                }
            }
            out
        }
        _ => panic!("unsupported ambient dimension {d}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::sample_uniform;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn gegenbauer_values() {
        assert_eq!(gegenbauer(0, 0.7, 0.3), 1.0);
        // C_k^{1/2} = Legendre: value 1 at the right endpoint.
        assert!((gegenbauer(2, 0.5, 1.0) - 1.0).abs() < 1e-14);
        for k in 0..8 {
            assert!((gegenbauer(k, 0.5, 1.0) - 1.0).abs() < 1e-12);
            // C_k^1(1) = binom(k+1, k) = k+1.
            assert!((gegenbauer(k, 1.0, 1.0) - (k as f64 + 1.0)).abs() < 1e-10);
            assert!((legendre(k, 1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chebyshev_is_cosine() {
        for k in 0..20 {
            assert!((chebyshev_t(k, 1.0) - 1.0).abs() < 1e-12);
            for theta in [0.1f64, 0.7, 2.5] {
                assert!(
                    (chebyshev_t(k, theta.cos()) - (k as f64 * theta).cos()).abs() < 1e-11
                );
            }
        }
    }

    proptest! {
        #[test]
        fn prop_gegenbauer_parity(k in 0usize..12, mu in 0.3..2.0f64, u in -1.0..1.0f64) {
            let lhs = gegenbauer(k, mu, -u);
            let rhs = if k % 2 == 0 { gegenbauer(k, mu, u) } else { -gegenbauer(k, mu, u) };
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn zonal_projector_normalization() {
        assert!((zonal_projector(3, 1, 1.0) - 3.0 / (4.0 * PI)).abs() < 1e-14);
        assert!((zonal_projector(2, 2, 1.0) - 1.0 / PI).abs() < 1e-14);
        // Z_k(1) = N(k,d)/ω_d.
        for d in [2u8, 3] {
            for k in 0..10 {
                let want = harmonic_dim(d, k) as f64 / sphere_area(d);
                assert!((zonal_projector(d, k, 1.0) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn legendre_kernels_orthogonal_under_gl() {
        // ∫_{-1}^{1} Z_k(u) Z_m(u) du vanishes off the diagonal (d = 3):
        // Gauss–Legendre is exact for the degree-(k+m) integrand.
        let (x, w) = gauss_legendre(24);
        for k in 0..=10usize {
            for m in 0..=10usize {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&u, &wu)| wu * zonal_projector(3, k, u) * zonal_projector(3, m, u))
                    .sum();
                if k == m {
                    assert!(s > 1e-4);
                } else {
                    assert!(s.abs() < 1e-13, "k={k} m={m}: {s}");
                }
            }
        }
    }

    #[test]
    fn projector_kernels_reproduce_on_sphere() {
        // Σ_q w_q Z_k(x·q) Z_m(q·y) = δ_{km} Z_k(x·y): the defining
        // projector identity, via the independent product-rule oracle.
        for d in [2u8, 3] {
            let rule = sphere_quad_oracle(d, 12);
            let pts = sample_uniform(d, 3, 77);
            let (x, y) = (&pts[0], &pts[1]);
            for k in 0..=5usize {
                for m in 0..=5usize {
                    let s: f64 = rule
                        .iter()
                        .map(|(q, wq)| {
                            wq * zonal_projector(d, k, x.dot(q)) * zonal_projector(d, m, q.dot(y))
                        })
                        .sum();
                    let want = if k == m {
                        zonal_projector(d, k, x.dot(y))
                    } else {
                        0.0
                    };
                    assert!((s - want).abs() < 1e-12, "d={d} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn cutoff_support_and_matching() {
        let b = 4.0;
        let cp = CutoffPair::new(b);
        assert_eq!(cp.ahat(0.25), 0.0);
        assert_eq!(cp.ahat(0.1), 0.0);
        assert_eq!(cp.ahat(4.0), 0.0);
        assert_eq!(cp.ahat(9.0), 0.0);
        assert!(cp.ahat(1.0) > 0.9);
        // â²(u) + â²(u/b) = 1 on [1, b], including the spec'd probe point.
        let probe = b.sqrt() * b.powf(0.25);
        for u in (0..200)
            .map(|i| 1.0 + (b - 1.0) * i as f64 / 199.0)
            .chain(std::iter::once(probe))
        {
            let s = cp.ahat(u).powi(2) + cp.ahat(u / b).powi(2);
            assert!((s - 1.0).abs() < 1e-12, "u={u}: {s}");
        }
    }

    #[test]
    fn cutoff_partition_of_unity() {
        use rand::{Rng, SeedableRng};
        let cp = CutoffPair::new(4.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let u = 4.0f64.powf(rng.random::<f64>() * 10.0);
            let s = cp.partition_sum(u, 20);
            assert!((s - 1.0).abs() < 1e-12, "u={u}: {s}");
        }
        // φ closes the telescope below u = 1: φ² = Σ_{ν≥1} â²(b^ν u).
        for u in [0.03, 0.3, 0.8, 1.0] {
            let tail: f64 = (1..8).map(|v| cp.ahat(u * 4.0f64.powi(v)).powi(2)).sum();
            assert!((cp.phi(u).powi(2) - tail).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn degenerate_kernel_is_constant() {
        // A profile supported on [0,1) sampled at dilation 1 keeps only k=0,
        // so the kernel collapses to Z_0 = 1/ω_d everywhere.
        for d in [2u8, 3] {
            let kern = ZonalKernel::from_profile(d, 1.0, |t| if t < 1.0 { 1.0 } else { 0.0 }, 1.0);
            for u in [-1.0, -0.3, 0.5, 1.0] {
                assert!((kern.eval(u) - 1.0 / sphere_area(d)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn kernel_integral_is_dc_coefficient() {
        // ∫_S Λ_N(x·y) dσ(y) = λ(0): only the k = 0 projector survives.
        let cp = CutoffPair::new(4.0);
        for d in [2u8, 3] {
            let kern = ZonalKernel::from_profile(d, 4.0, |t| cp.ahat(t) + 0.7, 4.0);
            let rule = sphere_quad_oracle(d, kern.degree() + 2);
            let x = SpherePoint::e1();
            let s: f64 = rule.iter().map(|(q, w)| w * kern.eval(x.dot(q))).sum();
            assert!((s - 0.7).abs() < 1e-8, "d={d}: {s}");
        }
    }

    #[test]
    fn kernel_l2_norm_matches_quadrature() {
        let cp = CutoffPair::new(4.0);
        for d in [2u8, 3] {
            let kern = ZonalKernel::from_profile(d, 4.0, |t| cp.ahat(t), 4.0);
            let rule = sphere_quad_oracle(d, 2 * kern.degree() + 2);
            let x = SpherePoint::e1();
            let s: f64 = rule
                .iter()
                .map(|(q, w)| w * kern.eval(x.dot(q)).powi(2))
                .sum();
            assert!(
                ((s - kern.l2_norm_sq()) / kern.l2_norm_sq()).abs() < 1e-10,
                "d={d}"
            );
        }
    }

    #[test]
    fn kernel_localization_bound() {
        // max_θ |Λ_N(cos θ)|·(1 + Nθ)^M / N^{d-1} with M = 8 stays under a
        // frozen constant. The exp(−1/t) window has large high-order
        // derivatives, so the M = 8 constant is intrinsically big (the decay
        // constant scales with ‖â^{(M)}‖_∞); what matters is that it does not
        // grow with N. Frozen from calibration: max over this N range was
        // 6.96e9 (d=2) and 1.08e9 (d=3), worst case at θ = π.
        let cp = CutoffPair::new(4.0);
        let m_pow = 8;
        for (d, c) in [(2u8, 2.0e10), (3u8, 4.0e9)] {
            for n in [4.0, 16.0, 64.0] {
                let kern = ZonalKernel::from_profile(d, n, |t| cp.ahat(t), 4.0);
                let mut worst: f64 = 0.0;
                for i in 0..=2000 {
                    let theta = PI * i as f64 / 2000.0;
                    let v = kern.eval(theta.cos()).abs() * (1.0 + n * theta).powi(m_pow)
                        / n.powi(d as i32 - 1);
                    worst = worst.max(v);
                }
                assert!(worst <= c, "d={d} N={n}: localization ratio {worst}");
            }
        }
    }

    #[test]
    fn kernel_lipschitz_scale() {
        // Finite-difference derivative bound: |Λ_N(cos(θ+h)) − Λ_N(cos θ)|/h
        // ≤ c·N^d at h = 1/(100N); frozen c from calibration (measured max
        // 1.03 for d=2, 0.70 for d=3, flat across N).
        let cp = CutoffPair::new(4.0);
        for (d, c) in [(2u8, 1.2), (3u8, 0.8)] {
            for n in [4.0, 16.0, 64.0] {
                let kern = ZonalKernel::from_profile(d, n, |t| cp.ahat(t), 4.0);
                let h = 1.0 / (100.0 * n);
                let mut worst: f64 = 0.0;
                for i in 0..400 {
                    let theta = (PI - h) * i as f64 / 399.0;
                    let diff =
                        (kern.eval((theta + h).cos()) - kern.eval(theta.cos())).abs() / h;
                    worst = worst.max(diff / n.powi(d as i32));
                }
                assert!(worst <= c, "d={d} N={n}: Lipschitz ratio {worst}");
            }
        }
    }

    #[test]
    fn basis_constant_element() {
        for d in [2u8, 3] {
            let x = sample_uniform(d, 1, 3)[0];
            let v = sph_basis_eval(d, &BasisIndex { k: 0, nu: 1 }, &x);
            assert!((v - 1.0 / sphere_area(d).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn addition_formula() {
        for d in [2u8, 3] {
            let deg = if d == 2 { 40 } else { 16 };
            let pts = sample_uniform(d, 200, 8);
            let dim = poly_space_dim(d, deg);
            let mut bx = vec![0.0; dim];
            let mut by = vec![0.0; dim];
            for pair in pts.chunks(2) {
                let (x, y) = (&pair[0], &pair[1]);
                eval_basis_all(d, deg, x, &mut bx);
                eval_basis_all(d, deg, y, &mut by);
                for k in 0..=deg {
                    let idx = enumerate_basis(d, deg);
                    let s: f64 = idx
                        .iter()
                        .filter(|i| i.k == k)
                        .map(|i| bx[basis_position(d, i)] * by[basis_position(d, i)])
                        .sum();
                    let want = zonal_projector(d, k, x.dot(y));
                    assert!(
                        (s - want).abs() < 1e-10,
                        "d={d} k={k}: Σ Y(x)Y(y) = {s}, Z_k = {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn basis_gram_is_identity_under_oracle() {
        for d in [2u8, 3] {
            let deg = 8;
            let dim = poly_space_dim(d, deg);
            let rule = sphere_quad_oracle(d, deg + 1); // exact through degree 2·deg+1
            let mut gram = vec![0.0; dim * dim];
            let mut buf = vec![0.0; dim];
            for (q, w) in &rule {
                eval_basis_all(d, deg, q, &mut buf);
                for a in 0..dim {
                    for b in 0..dim {
                        gram[a * dim + b] += w * buf[a] * buf[b];
                    }
                }
            }
            for a in 0..dim {
                for b in 0..dim {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!(
                        (gram[a * dim + b] - want).abs() < 1e-8,
                        "d={d} ({a},{b}): {}",
                        gram[a * dim + b]
                    );
                }
            }
        }
    }

    #[test]
    fn poisson_kernel_basics() {
        for d in [2u8, 3] {
            let y = sample_uniform(d, 1, 21)[0];
            // Center of the ball: the constant 1/ω_d.
            let v = poisson_kernel(d, &y, &[0.0, 0.0, 0.0]).unwrap();
            assert!((v - 1.0 / sphere_area(d)).abs() < 1e-14);
            assert_eq!(
                poisson_kernel(d, &y, &[1.0, 0.0, 0.0]),
                Err(HarmonicsError::PointNotInterior(1.0))
            );
        }
    }

    #[test]
    fn poisson_closed_form_matches_series() {
        for d in [2u8, 3] {
            let pts = sample_uniform(d, 40, 33);
            for pair in pts.chunks(2) {
                let y = &pair[0];
                let dir = pair[1].coords();
                let x = [0.5 * dir[0], 0.5 * dir[1], 0.5 * dir[2]];
                let closed = poisson_kernel(d, y, &x).unwrap();
                let series = poisson_series(d, y, &x, 60);
                assert!((closed - series).abs() < 1e-9, "d={d}");
            }
        }
    }

    #[test]
    fn poisson_integrates_to_one() {
        for d in [2u8, 3] {
            let rule = sphere_quad_oracle(d, 64);
            for r in [0.2, 0.5] {
                let x = [r, 0.0, 0.0];
                let s: f64 = rule
                    .iter()
                    .map(|(q, w)| w * poisson_kernel(d, q, &x).unwrap())
                    .sum();
                assert!((s - 1.0).abs() < 1e-8, "d={d} r={r}: {s}");
            }
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(12);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        for p in 0..=23usize {
            let got: f64 = x
                .iter()
                .zip(&w)
                .map(|(&xi, &wi)| wi * xi.powi(p as i32))
                .sum();
            let want = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-12, "x^{p}");
        }
        // Nodes come out symmetric.
        for i in 0..x.len() {
            assert!((x[i] + x[x.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_rule_integrates_harmonics_to_zero() {
        for d in [2u8, 3] {
            let rule = sphere_quad_oracle(d, 10);
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((total - sphere_area(d)).abs() < 1e-10);
            let deg = 9;
            let dim = poly_space_dim(d, deg);
            let mut buf = vec![0.0; dim];
            let mut sums = vec![0.0; dim];
            for (q, w) in &rule {
                eval_basis_all(d, deg, q, &mut buf);
                for i in 0..dim {
                    sums[i] += w * buf[i];
                }
            }
            // ∫ Y_{kν} = 0 for k ≥ 1; ∫ Y_0 = √ω_d.
            assert!((sums[0] - sphere_area(d).sqrt()).abs() < 1e-10);
            for s in &sums[1..] {
                assert!(s.abs() < 1e-10);
            }
        }
    }
}
