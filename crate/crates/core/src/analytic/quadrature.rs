//! Direct numerical integration of the point-source Green's function over a
//! spherical receiver. This path never touches the error function and serves
//! as an independent check on the closed-form spherical count.

use crate::error::{domain, Error, Result};
use std::f64::consts::PI;

/// Gauss–Legendre nodes per panel along the radial and polar axes.
const NODES_PER_PANEL: usize = 12;

/// Panels per axis used when no resolution is requested explicitly.
pub const DEFAULT_RESOLUTION: usize = 4;

/// Largest resolution tried by [`sphere_count_quadrature_converged`].
pub const MAX_RESOLUTION: usize = 32;

/// Gauss–Legendre abscissae and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre nodes/weights on `[a, b]` with `panels` panels.
fn composite_rule(a: f64, b: f64, panels: usize, base: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * base.0.len());
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (x, w) in base.0.iter().zip(&base.1) {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Expected dimensionless count inside a sphere of radius `r_obs` whose
/// centre is `dist` away from a unit point release, at dimensionless time
/// `t`, by product quadrature over (ρ, θ, φ) with the source on the x-axis.
///
/// `resolution` is the number of panels per axis: each radial and polar panel
/// carries a 12-point Gauss–Legendre rule and the azimuth uses the periodic
/// trapezoid rule with `12·resolution` points.
pub fn sphere_count_quadrature(dist: f64, r_obs: f64, t: f64, resolution: usize) -> Result<f64> {
    check_args(dist, r_obs, t)?;
    if resolution == 0 {
        return domain("quadrature resolution must be >= 1");
    }
    let base = gauss_legendre(NODES_PER_PANEL);
    let radial = composite_rule(0.0, r_obs, resolution, &base);
    let polar = composite_rule(0.0, PI, resolution, &base);
    let n_phi = NODES_PER_PANEL * resolution;
    let dphi = 2.0 * PI / n_phi as f64;
    let cos_phi: Vec<f64> = (0..n_phi).map(|k| (k as f64 * dphi).cos()).collect();

    let inv4t = 1.0 / (4.0 * t);
    let prefactor = (4.0 * PI * t).powf(-1.5);
    let mut total = 0.0;
    for &(rho, wr) in &radial {
        let base_exp = -(rho * rho + dist * dist) * inv4t;
        let cross = 2.0 * rho * dist * inv4t;
        let mut shell = 0.0;
        for &(theta, wt) in &polar {
            let (s, _) = theta.sin_cos();
            let ring: f64 = cos_phi
                .iter()
                .map(|&c| (base_exp + cross * c * s).exp())
                .sum();
            shell += wt * s * ring * dphi;
        }
        total += wr * rho * rho * shell;
    }
    Ok(prefactor * total)
}

/// Converged quadrature estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub resolution: usize,
    /// |difference| between the last two resolutions, relative to `value`.
    pub rel_change: f64,
}

/// Doubles the resolution from 1 until two successive estimates agree within
/// `rel_tol`; fails with [`Error::Accuracy`] past [`MAX_RESOLUTION`].
pub fn sphere_count_quadrature_converged(
    dist: f64,
    r_obs: f64,
    t: f64,
    rel_tol: f64,
) -> Result<QuadratureEstimate> {
    if !(rel_tol > 0.0) {
        return domain("tolerance must be > 0");
    }
    let mut res = 1;
    let mut prev = sphere_count_quadrature(dist, r_obs, t, res)?;
    let mut change = f64::INFINITY;
    while res < MAX_RESOLUTION {
        res *= 2;
        let cur = sphere_count_quadrature(dist, r_obs, t, res)?;
        change = if cur != 0.0 {
            ((cur - prev) / cur).abs()
        } else {
            (cur - prev).abs()
        };
        if change <= rel_tol {
            return Ok(QuadratureEstimate {
                value: cur,
                resolution: res,
                rel_change: change,
            });
        }
        prev = cur;
    }
    Err(Error::Accuracy {
        estimate: prev,
        achieved: change,
        tolerance: rel_tol,
    })
}

fn check_args(dist: f64, r_obs: f64, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("dimensionless time must be > 0, got {t}"));
    }
    if !(r_obs > 0.0 && r_obs.is_finite()) {
        return domain(format!("receiver radius must be > 0, got {r_obs}"));
    }
    if !(dist >= 0.0 && dist.is_finite()) {
        return domain(format!("distance must be >= 0, got {dist}"));
    }
    Ok(())
}
