//! Shifted fundamental solutions of the Laplacian ("Newtonian atoms") on the
//! unit ball, and harmonic extension of boundary data.
//!
//! An atom is `G(x) = a_0 + Σ_j a_j/|x−y_j|` in ambient dimension 3 and
//! `G(x) = a_0 + Σ_j a_j·ln(1/|x−y_j|)` in dimension 2, with every pole
//! `y_j` strictly outside the closed unit ball — so `G` is harmonic on the
//! open ball and smooth up to the boundary. Harmonicity is checked
//! numerically by finite-difference Laplacian stencils and the mean-value
//! property; boundary data is extended inward either by its spherical
//! harmonic series `Σ b_{kν} |x|^k Y_{kν}(x/|x|)` or by Poisson-kernel
//! quadrature, and the two routes agree.

use crate::harmonics::{
    enumerate_basis, poisson_kernel, poly_space_dim, sph_basis_eval, sphere_quad_oracle,
};
use crate::sphere::SpherePoint;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AtomError {
    #[error("pole {pole:?} has norm {norm} ≤ 1: inside the closed ball")]
    PoleInsideBall { pole: [f64; 3], norm: f64 },
    #[error("dimension-2 pole {pole:?} must lie in the plane (zero third coordinate)")]
    PoleOffPlane { pole: [f64; 3] },
    #[error("{poles} poles but {coeffs} coefficients")]
    MismatchedLengths { poles: usize, coeffs: usize },
    #[error("ambient dimension must be 2 or 3, got {0}")]
    BadDimension(u8),
}

/// `a_0 + Σ_j a_j·K(x − y_j)` with `K` the fundamental solution of the
/// Laplacian in the ambient dimension.
#[derive(Debug, Clone)]
pub struct NewtonianAtom {
    pub d: u8,
    pub a0: f64,
    poles: Vec<[f64; 3]>,
    coeffs: Vec<f64>,
}

impl NewtonianAtom {
    pub fn new(
        d: u8,
        a0: f64,
        poles: Vec<[f64; 3]>,
        coeffs: Vec<f64>,
    ) -> Result<Self, AtomError> {
        if d != 2 && d != 3 {
            return Err(AtomError::BadDimension(d));
        }
        if poles.len() != coeffs.len() {
            return Err(AtomError::MismatchedLengths {
                poles: poles.len(),
                coeffs: coeffs.len(),
            });
        }
        for &p in &poles {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if norm <= 1.0 {
                return Err(AtomError::PoleInsideBall { pole: p, norm });
            }
            if d == 2 && p[2] != 0.0 {
                return Err(AtomError::PoleOffPlane { pole: p });
            }
        }
        Ok(Self {
            d,
            a0,
            poles,
            coeffs,
        })
    }

    pub fn poles(&self) -> &[[f64; 3]] {
        &self.poles
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Pointwise value at `x` with `|x| ≤ 1` (the third coordinate must be 0
    /// in dimension 2). Exact formula evaluation; every `x − y_j` has
    /// positive length since the poles are outside the closed ball.
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        assert!(r2.sqrt() <= 1.0 + 1e-12, "|x| = {} > 1", r2.sqrt());
        if self.d == 2 {
            assert!(x[2] == 0.0, "dimension-2 evaluation off the plane");
        }
        let mut acc = self.a0;
        for (p, &a) in self.poles.iter().zip(&self.coeffs) {
            let dx = [x[0] - p[0], x[1] - p[1], x[2] - p[2]];
            let dist = (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt();
            acc += if self.d == 3 {
                a / dist
            } else {
                a * dist.recip().ln()
            };
        }
        acc
    }

    /// `{d, a0, poles, coeffs}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "d": self.d,
            "a0": self.a0,
            "poles": self.poles,
            "coeffs": self.coeffs,
        })
    }
}

/// Second-order finite-difference Laplacian: the 5-point stencil in the
/// plane for `dims = 2`, the 7-point stencil for `dims = 3`. For a function
/// harmonic near `x` the result is `O(h²)`.
pub fn laplacian_stencil(
    f: impl Fn(&[f64; 3]) -> f64,
    x: &[f64; 3],
    h: f64,
    dims: u8,
) -> f64 {
    assert!(dims == 2 || dims == 3);
    assert!(h > 0.0);
    let mut acc = -(2.0 * dims as f64) * f(x);
    for axis in 0..dims as usize {
        let mut xp = *x;
        xp[axis] += h;
        let mut xm = *x;
        xm[axis] -= h;
        acc += f(&xp) + f(&xm);
    }
    acc / (h * h)
}

/// Harmonic extension of boundary data given by spherical-harmonic
/// coefficients in [`enumerate_basis`] order:
/// `U(x) = Σ b_{kν} |x|^k Y_{kν}(x/|x|)`. The coefficient length must fill
/// the basis of some exact degree. At the origin only the constant term
/// survives.
pub fn harmonic_extension(d: u8, coeffs: &[f64], x: &[f64; 3]) -> f64 {
    let deg = (0..=2048)
        .find(|&k| poly_space_dim(d, k) == coeffs.len())
        .expect("coefficient count does not fill a basis");
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    assert!(r < 1.0 + 1e-12, "|x| = {r} outside the closed ball");
    let dir = if r == 0.0 {
        SpherePoint::e1()
    } else {
        SpherePoint::new([x[0] / r, x[1] / r, x[2] / r]).expect("normalized direction")
    };
    let basis = enumerate_basis(d, deg);
    let mut acc = 0.0;
    for (idx, &b) in basis.iter().zip(coeffs) {
        if b == 0.0 {
            continue;
        }
        let radial = if idx.k == 0 { 1.0 } else { r.powi(idx.k as i32) };
        acc += b * radial * sph_basis_eval(d, idx, &dir);
    }
    acc
}

/// Spherical-harmonic coefficients of `f` up to `deg`, by quadrature against
/// the orthonormal basis on an independent product rule of resolution `res`.
pub fn boundary_coeffs(
    d: u8,
    f: impl Fn(&SpherePoint) -> f64 + Sync,
    deg: usize,
    res: usize,
) -> Vec<f64> {
    let quad = sphere_quad_oracle(d, res);
    let basis = enumerate_basis(d, deg);
    let fw: Vec<f64> = quad.par_iter().map(|(p, w)| f(p) * w).collect();
    basis
        .iter()
        .map(|idx| {
            quad.iter()
                .zip(&fw)
                .map(|((p, _), &fwv)| fwv * sph_basis_eval(d, idx, p))
                .sum()
        })
        .collect()
}

/// Poisson integral `U(x) = ∫_S P(y, x) f(y) dσ(y)` on the same independent
/// quadrature oracle — the reference route for harmonic extension.
pub fn poisson_extension(
    d: u8,
    f: impl Fn(&SpherePoint) -> f64 + Sync,
    x: &[f64; 3],
    res: usize,
) -> f64 {
    let quad = sphere_quad_oracle(d, res);
    quad.par_iter()
        .map(|(y, w)| poisson_kernel(d, y, x).expect("interior point") * f(y) * w)
        .sum()
}
