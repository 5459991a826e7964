//! Closed-form expected receiver counts for a unit impulsive release.
//!
//! All quantities here are dimensionless: distances are scaled by the
//! reference length, time by `L²/D_A`, and counts by the number of emitted
//! molecules, so one molecule is released in total.

mod quadrature;

pub use quadrature::{
    gauss_legendre, sphere_count_quadrature, sphere_count_quadrature_converged,
    QuadratureEstimate, DEFAULT_RESOLUTION, MAX_RESOLUTION,
};

use crate::error::{domain, Error, Result};
use crate::physchem::{
    dimensionless_constants, redim, Quantity, ReferenceSet, SpeciesTag, SystemParams,
};
use std::f64::consts::PI;

/// Exact counts below this are treated as underflowed when forming ratios.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

/// Coordinate used in place of an infinite box bound.
pub const INFINITE_BOUND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReceiverGeometry {
    /// Sphere of dimensionless `radius` whose centre lies `center_distance`
    /// from the transmitter.
    Sphere { radius: f64, center_distance: f64 },
    /// Axis-aligned box `[lo, hi]` per axis, transmitter at the origin.
    Box { bounds: [[f64; 2]; 3] },
}

impl ReceiverGeometry {
    pub fn sphere(radius: f64, center_distance: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return domain(format!("sphere radius must be > 0, got {radius}"));
        }
        if !(center_distance >= 0.0 && center_distance.is_finite()) {
            return domain(format!("centre distance must be >= 0, got {center_distance}"));
        }
        Ok(Self::Sphere {
            radius,
            center_distance,
        })
    }

    pub fn rect(bounds: [[f64; 2]; 3]) -> Result<Self> {
        for [lo, hi] in bounds {
            if !(lo < hi) || lo.is_nan() || hi.is_nan() {
                return domain(format!("box bounds must satisfy lo < hi, got [{lo}, {hi}]"));
            }
        }
        Ok(Self::Box { bounds })
    }

    /// Axis-aligned cube of edge `side` centred at `center`.
    pub fn cube(center: [f64; 3], side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return domain(format!("cube side must be > 0, got {side}"));
        }
        let h = 0.5 * side;
        Self::rect(center.map(|c| [c - h, c + h]))
    }

    /// Axis-aligned cube with the same volume as a sphere of `radius`.
    pub fn volume_matched_cube(center: [f64; 3], radius: f64) -> Result<Self> {
        let side = (4.0 / 3.0 * PI).cbrt() * radius;
        Self::cube(center, side)
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Self::Sphere { radius, .. } => 4.0 / 3.0 * PI * radius.powi(3),
            Self::Box { bounds } => bounds.iter().map(|[lo, hi]| hi - lo).product(),
        }
    }

    pub fn center_distance(&self) -> f64 {
        match *self {
            Self::Sphere {
                center_distance, ..
            } => center_distance,
            Self::Box { bounds } => bounds
                .iter()
                .map(|[lo, hi]| {
                    let c = 0.5 * (lo + hi);
                    c * c
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("dimensionless time must be > 0, got {t}"));
    }
    Ok(())
}

/// Free-space concentration at distance `dist` from a unit point release.
pub fn point_concentration(dist: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok((4.0 * PI * t).powf(-1.5) * (-dist * dist / (4.0 * t)).exp())
}

/// Count under the uniform-concentration approximation: the centre
/// concentration times the receiver volume.
pub fn uniform_count(geom: &ReceiverGeometry, t: f64) -> Result<f64> {
    Ok(point_concentration(geom.center_distance(), t)? * geom.volume())
}

/// `erf(hi) - erf(lo)` evaluated without cancellation in the tails.
fn erf_diff(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        libm::erfc(lo) - libm::erfc(hi)
    } else if hi <= 0.0 {
        libm::erfc(-hi) - libm::erfc(-lo)
    } else {
        libm::erf(hi) - libm::erf(lo)
    }
}

/// Exact count inside an axis-aligned box.
pub fn rect_count(bounds: &[[f64; 2]; 3], t: f64) -> Result<f64> {
    check_time(t)?;
    ReceiverGeometry::rect(*bounds)?;
    let s = 2.0 * t.sqrt();
    let prod: f64 = bounds
        .iter()
        .map(|[lo, hi]| erf_diff(lo / s, hi / s))
        .product();
    Ok((0.125 * prod).clamp(0.0, 1.0))
}

/// Exact count inside a sphere of radius `r_obs` centred `dist` from the
/// transmitter.
pub fn sphere_count(dist: f64, r_obs: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(r_obs > 0.0 && r_obs.is_finite()) {
        return domain(format!("receiver radius must be > 0, got {r_obs}"));
    }
    if !(dist > 0.0 && dist.is_finite()) {
        return domain(format!("centre distance must be > 0, got {dist}"));
    }
    let s = 2.0 * t.sqrt();
    let erf_part = 0.5 * erf_diff((dist - r_obs) / s, (dist + r_obs) / s);
    // e^{-(d+r)²/4t} - e^{-(d-r)²/4t} = e^{-(d-r)²/4t} · expm1(-d·r/t)
    let near = (-(dist - r_obs).powi(2) / (4.0 * t)).exp();
    let exp_part = (t / PI).sqrt() / dist * near * (-dist * r_obs / t).exp_m1();
    Ok((erf_part + exp_part).clamp(0.0, 1.0))
}

/// Exact count for either receiver shape.
pub fn exact_count(geom: &ReceiverGeometry, t: f64) -> Result<f64> {
    match geom {
        ReceiverGeometry::Sphere {
            radius,
            center_distance,
        } => sphere_count(*center_distance, *radius, t),
        ReceiverGeometry::Box { bounds } => rect_count(bounds, t),
    }
}

/// Relative error of the uniform-concentration approximation,
/// `(uniform - exact) / exact`.
pub fn uniform_deviation(geom: &ReceiverGeometry, t: f64) -> Result<f64> {
    let exact = exact_count(geom, t)?;
    if exact < UNDERFLOW_THRESHOLD {
        return Err(Error::Indeterminate(format!(
            "exact count {exact:e} underflows at t* = {t}"
        )));
    }
    Ok((uniform_count(geom, t)? - exact) / exact)
}

/// Parameters of the enzyme lower bound in dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundParams {
    /// Decay constant L²·k1·C_Etot/D_A.
    pub alpha: f64,
    /// Transmitter-to-receiver distance.
    pub dist_star: f64,
    /// Receiver volume.
    pub v_star: f64,
}

impl LowerBoundParams {
    pub fn new(alpha: f64, dist_star: f64, v_star: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return domain(format!("alpha must be >= 0, got {alpha}"));
        }
        if !(dist_star > 0.0 && dist_star.is_finite()) {
            return domain(format!("distance must be > 0, got {dist_star}"));
        }
        if !(v_star > 0.0 && v_star.is_finite()) {
            return domain(format!("receiver volume must be > 0, got {v_star}"));
        }
        Ok(Self {
            alpha,
            dist_star,
            v_star,
        })
    }

    pub fn from_system(params: &SystemParams, refs: &ReferenceSet) -> Result<Self> {
        let g = dimensionless_constants(params, refs)?;
        let geom = params.receiver.to_dimensionless(refs.length)?;
        Self::new(g.gamma_1a_bound, geom.center_distance(), geom.volume())
    }

    /// The same receiver without enzymes.
    pub fn without_enzymes(&self) -> Self {
        Self { alpha: 0.0, ..*self }
    }
}

/// Lower bound on the expected count with enzymes present. With
/// `alpha = 0` this is exactly the uniform-approximation count.
pub fn enzyme_lower_bound_count(p: &LowerBoundParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(point_concentration(p.dist_star, t)? * p.v_star * (-p.alpha * t).exp())
}

/// Maximum of the lower-bound curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundPeak {
    pub t_star: f64,
    pub t_seconds: f64,
    pub count_star: f64,
    /// Dimensional molecule count.
    pub count: f64,
}

/// Dimensionless time of the lower-bound maximum: the positive root of
/// `alpha·t² + (3/2)·t - d²/4 = 0`, written in a form that stays exact as
/// `alpha → 0`.
pub fn lower_bound_peak_time(p: &LowerBoundParams) -> f64 {
    let b = 0.25 * p.dist_star * p.dist_star;
    2.0 * b / (1.5 + (2.25 + 4.0 * p.alpha * b).sqrt())
}

pub fn lower_bound_peak(
    p: &LowerBoundParams,
    params: &SystemParams,
    refs: &ReferenceSet,
) -> Result<LowerBoundPeak> {
    let t_star = lower_bound_peak_time(p);
    let count_star = enzyme_lower_bound_count(p, t_star)?;
    Ok(LowerBoundPeak {
        t_star,
        t_seconds: redim(Quantity::Time, SpeciesTag::A, t_star, refs, params)?,
        count_star,
        count: redim(Quantity::Count, SpeciesTag::A, count_star, refs, params)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physchem::presets::{system1, system2};
    use approx::assert_relative_eq;

    fn sphere_volume(r: f64) -> f64 {
        4.0 / 3.0 * PI * r.powi(3)
    }

    #[test]
    fn point_concentration_values() {
        assert_relative_eq!(
            point_concentration(0.0, 1.0 / (4.0 * PI)).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        // (4π/6)^{-3/2}·e^{-3/2}
        assert_relative_eq!(
            point_concentration(1.0, 1.0 / 6.0).unwrap(),
            0.07361568484742567,
            max_relative = 1e-13
        );
        assert!(point_concentration(1.0, 0.0).is_err());
        assert!(point_concentration(1.0, -1.0).is_err());
    }

    #[test]
    fn point_concentration_integrates_to_one() {
        // Radial shells: ∫ 4πρ² c(ρ) dρ by composite Gauss–Legendre.
        let (x, w) = gauss_legendre(20);
        for t in [0.01f64, 0.3, 5.0] {
            let rmax = 20.0 * t.sqrt();
            let panels = 40;
            let h = rmax / panels as f64;
            let mut total = 0.0;
            for p in 0..panels {
                for (xi, wi) in x.iter().zip(&w) {
                    let rho = h * (p as f64 + 0.5 * (xi + 1.0));
                    total += 0.5 * h * wi * 4.0 * PI * rho * rho
                        * point_concentration(rho, t).unwrap();
                }
            }
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn uniform_count_values_and_limits() {
        let g = ReceiverGeometry::sphere(0.15, 1.0).unwrap();
        assert_relative_eq!(
            uniform_count(&g, 1.0 / 6.0).unwrap(),
            0.07361568484742567 * sphere_volume(0.15),
            max_relative = 1e-13
        );
        let tiny = ReceiverGeometry::sphere(1e-8, 1.0).unwrap();
        assert!(uniform_count(&tiny, 0.2).unwrap() < 1e-22);
        assert!(uniform_count(&g, 1e8).unwrap() < 1e-13);
    }

    #[test]
    fn rect_whole_space_is_unit_mass() {
        let b = [[-INFINITE_BOUND, INFINITE_BOUND]; 3];
        for t in [1e-3, 0.16, 1.0, 10.0] {
            assert_relative_eq!(rect_count(&b, t).unwrap(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn rect_symmetric_box_is_eight_octants() {
        for t in [0.05, 0.3, 2.0] {
            let full = rect_count(&[[-0.3, 0.3], [-0.2, 0.2], [-0.5, 0.5]], t).unwrap();
            let octant = rect_count(&[[0.0, 0.3], [0.0, 0.2], [0.0, 0.5]], t).unwrap();
            assert_relative_eq!(full, 8.0 * octant, max_relative = 1e-13);
        }
    }

    #[test]
    fn rect_rejects_unordered_bounds() {
        assert!(rect_count(&[[0.1, 0.0], [0.0, 1.0], [0.0, 1.0]], 1.0).is_err());
        assert!(rect_count(&[[0.0, 0.1], [0.0, 1.0], [0.0, 1.0]], 0.0).is_err());
    }

    #[test]
    fn volume_matched_cube_tracks_sphere() {
        let cube = ReceiverGeometry::volume_matched_cube([1.0, 0.0, 0.0], 0.15).unwrap();
        if let ReceiverGeometry::Box { bounds } = cube {
            assert_relative_eq!(bounds[0][1] - bounds[0][0], 0.24180, epsilon = 1e-4);
        }
        assert_relative_eq!(cube.volume(), sphere_volume(0.15), max_relative = 1e-13);
        let c = exact_count(&cube, 1.0 / 6.0).unwrap();
        let s = sphere_count(1.0, 0.15, 1.0 / 6.0).unwrap();
        assert!(((c - s) / s).abs() < 0.01);
    }

    #[test]
    fn sphere_count_limits() {
        assert_relative_eq!(sphere_count(1.0, 1e3, 1.0).unwrap(), 1.0, max_relative = 1e-9);
        assert!(sphere_count(1.0, 0.15, 1e9).unwrap() < 1e-13);
        assert!(sphere_count(0.0, 0.15, 1.0).is_err());
        assert!(sphere_count(1.0, 0.0, 1.0).is_err());
        assert!(sphere_count(1.0, 0.15, 0.0).is_err());
    }

    #[test]
    fn sphere_count_reference_point() {
        let s = sphere_count(1.0, 0.15, 1.0 / 6.0).unwrap();
        let q = sphere_count_quadrature(1.0, 0.15, 1.0 / 6.0, DEFAULT_RESOLUTION).unwrap();
        assert_relative_eq!(s, q, max_relative = 1e-8);
        assert_relative_eq!(s, 1.04e-3, max_relative = 0.01);
        let u = uniform_count(&ReceiverGeometry::sphere(0.15, 1.0).unwrap(), 1.0 / 6.0).unwrap();
        assert!(((u - s) / s).abs() < 0.02);
    }

    #[test]
    fn closed_form_matches_quadrature_on_grid() {
        for d in [0.5, 1.0, 2.0] {
            for r in [0.05, 0.15, 0.5] {
                for t in [0.05, 0.16, 1.0, 10.0] {
                    let s = sphere_count(d, r, t).unwrap();
                    let q = sphere_count_quadrature(d, r, t, DEFAULT_RESOLUTION).unwrap();
                    assert!(((s - q) / q).abs() <= 1e-8, "d={d} r={r} t={t}: {s} vs {q}");
                }
            }
        }
    }

    #[test]
    fn transmitter_inside_receiver_matches_quadrature() {
        for (d, r, t) in [(0.2, 0.5, 0.1), (0.05, 1.0, 0.3), (0.4, 0.5, 2.0)] {
            let s = sphere_count(d, r, t).unwrap();
            let q = sphere_count_quadrature(d, r, t, 8).unwrap();
            assert_relative_eq!(s, q, max_relative = 1e-10);
        }
    }

    #[test]
    fn quadrature_converges_monotonically() {
        for d in [0.5, 1.0, 2.0] {
            for r in [0.05, 0.15, 0.5] {
                for t in [0.05, 0.16, 1.0, 10.0] {
                    let exact = sphere_count(d, r, t).unwrap();
                    let errs: Vec<f64> = [1, 2, 4]
                        .iter()
                        .map(|&res| {
                            let q = sphere_count_quadrature(d, r, t, res).unwrap();
                            ((q - exact) / exact).abs()
                        })
                        .collect();
                    for w in errs.windows(2) {
                        // Below ~1e-10 both sit at the closed form's rounding floor
                        // (cancellation between its two terms grows like t/r²).
                        assert!(
                            w[1] <= w[0] || w[1] < 1e-10,
                            "d={d} r={r} t={t}: {errs:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn converged_quadrature_finds_total_mass() {
        let est = sphere_count_quadrature_converged(0.5, 30.0, 0.5, 1e-10).unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn deviation_examples() {
        let g = ReceiverGeometry::sphere(0.15, 1.0).unwrap();
        assert!(uniform_deviation(&g, 0.5).unwrap().abs() < 0.02);
        // The 2% band is entered just after t* = 0.1, not at it.
        let edge = uniform_deviation(&g, 0.1).unwrap();
        assert!(edge < -0.02 && edge > -0.022, "{edge}");
        assert!(uniform_deviation(&g, 0.1027).unwrap().abs() < 0.02);
        for r in [0.05, 0.15, 0.3, 0.5, 0.7, 0.95] {
            let g = ReceiverGeometry::sphere(r, 1.0).unwrap();
            assert!(uniform_deviation(&g, 0.10).unwrap() < 0.0, "r={r}");
            assert!(uniform_deviation(&g, 0.25).unwrap() > 0.0, "r={r}");
        }
        let early = uniform_deviation(&g, 2e-3).unwrap();
        assert!(early < -0.99, "{early}");
    }

    #[test]
    fn deviation_underflow_is_indeterminate() {
        let g = ReceiverGeometry::sphere(0.15, 1.0).unwrap();
        assert!(matches!(
            uniform_deviation(&g, 1e-4),
            Err(Error::Indeterminate(_))
        ));
    }

    #[test]
    fn lower_bound_reduces_to_uniform_without_enzymes() {
        let p = LowerBoundParams::new(0.0, 1.0, sphere_volume(0.15)).unwrap();
        let g = ReceiverGeometry::sphere(0.15, 1.0).unwrap();
        for t in [0.01, 0.1, 1.0, 10.0] {
            assert_eq!(
                enzyme_lower_bound_count(&p, t).unwrap(),
                uniform_count(&g, t).unwrap()
            );
        }
    }

    #[test]
    fn peak_without_enzymes_is_classical() {
        let p = LowerBoundParams::new(0.0, 1.3, 0.01).unwrap();
        assert_relative_eq!(lower_bound_peak_time(&p), 1.3 * 1.3 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn peak_matches_golden_section_search() {
        for alpha in [0.0, 0.5, 4.123, 40.0] {
            let p = LowerBoundParams::new(alpha, 1.0, 0.014).unwrap();
            let f = |t: f64| enzyme_lower_bound_count(&p, t).unwrap();
            let (mut a, mut b) = (1e-3, 2.0);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if f(c) > f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            assert_relative_eq!(lower_bound_peak_time(&p), 0.5 * (a + b), max_relative = 1e-6);
        }
    }

    #[test]
    fn table_peaks() {
        let (p1, r1) = system1();
        let lb1 = LowerBoundParams::from_system(&p1, &r1).unwrap();
        let pk1 = lower_bound_peak(&lb1, &p1, &r1).unwrap();
        assert_relative_eq!(pk1.count, 5.81, max_relative = 0.01);
        assert_relative_eq!(pk1.t_seconds, 12.84e-6, max_relative = 0.02);

        let (p2, r2) = system2();
        let lb2 = LowerBoundParams::from_system(&p2, &r2).unwrap();
        let pk2 = lower_bound_peak(&lb2, &p2, &r2).unwrap();
        assert_relative_eq!(pk2.count, 11.63, max_relative = 0.01);
        assert_relative_eq!(pk2.t_seconds, pk1.t_seconds, max_relative = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn counts_are_probabilities(d in 0.05f64..5.0, r in 0.01f64..3.0, t in 1e-3f64..100.0) {
                let s = sphere_count(d, r, t).unwrap();
                prop_assert!((0.0..=1.0).contains(&s));
                let c = exact_count(&ReceiverGeometry::cube([d, 0.0, 0.0], r).unwrap(), t).unwrap();
                prop_assert!((0.0..=1.0).contains(&c));
            }

            #[test]
            fn counts_grow_with_nested_volume(d in 0.2f64..3.0, r in 0.01f64..1.0, f in 1.01f64..3.0, t in 0.01f64..20.0) {
                let small = sphere_count(d, r, t).unwrap();
                let big = sphere_count(d, r * f, t).unwrap();
                prop_assume!(small > 1e-250);
                prop_assert!(big > small);
                let cs = rect_count(&[[d - r, d + r], [-r, r], [-r, r]], t).unwrap();
                let cb = rect_count(&[[d - f * r, d + f * r], [-f * r, f * r], [-f * r, f * r]], t).unwrap();
                prop_assume!(cs > 1e-250);
                prop_assert!(cb > cs);
            }

            #[test]
            fn small_receivers_keep_uniform_error_under_two_percent(r in 0.001f64..=0.15, t in 0.103f64..=10.0) {
                let g = ReceiverGeometry::sphere(r, 1.0).unwrap();
                prop_assert!(uniform_deviation(&g, t).unwrap().abs() < 0.02);
            }

            #[test]
            fn lower_bound_dominated_by_uniform(alpha in 0.0f64..50.0, d in 0.1f64..3.0, t in 1e-3f64..20.0) {
                let p = LowerBoundParams::new(alpha, d, 0.01).unwrap();
                let lb = enzyme_lower_bound_count(&p, t).unwrap();
                let free = enzyme_lower_bound_count(&p.without_enzymes(), t).unwrap();
                prop_assert!(lb <= free);
                if alpha > 0.0 && lb > 1e-300 {
                    prop_assert!(lb < free);
                    let bigger = LowerBoundParams::new(alpha * 1.5 + 0.1, d, 0.01).unwrap();
                    prop_assert!(enzyme_lower_bound_count(&bigger, t).unwrap() < lb);
                }
            }
        }
    }
}
