//! Dimensional bookkeeping: diffusion coefficients, reference scales,
//! conversion to and from dimensionless form, and dimensional homology.
//!
//! A physical system is fully described by [`SystemParams`]. Choosing a
//! [`ReferenceSet`] (reference length, reference concentrations, and a
//! reference molecule count) maps it onto the dimensionless model, whose
//! behaviour is governed by the four [`DimensionlessConstants`]. Two systems
//! sharing those constants are dimensionally homologous and produce identical
//! dimensionless observations.

use crate::analytic::ReceiverGeometry;
use crate::error::{config, domain, Result};
use std::f64::consts::PI;

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Default homology comparison tolerance (relative).
pub const DEFAULT_HOMOLOGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    /// Kelvin.
    pub temperature: f64,
    /// kg m^-1 s^-1.
    pub viscosity: f64,
}

impl Medium {
    pub fn new(temperature: f64, viscosity: f64) -> Result<Self> {
        let m = Self {
            temperature,
            viscosity,
        };
        m.validate()?;
        Ok(m)
    }

    /// Water at 25 °C, rounded to 298 K.
    pub fn water() -> Self {
        Self {
            temperature: 298.0,
            viscosity: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return domain(format!("temperature must be > 0 K, got {}", self.temperature));
        }
        if !(self.viscosity > 0.0 && self.viscosity.is_finite()) {
            return domain(format!("viscosity must be > 0, got {}", self.viscosity));
        }
        Ok(())
    }
}

/// Stokes–Einstein diffusion coefficient (m²/s) of a sphere of `radius`
/// metres in `medium`.
pub fn stokes_einstein(medium: &Medium, radius: f64) -> Result<f64> {
    medium.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return domain(format!("molecule radius must be > 0, got {radius}"));
    }
    Ok(BOLTZMANN * medium.temperature / (6.0 * PI * medium.viscosity * radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeciesTag {
    /// Information molecule.
    A,
    /// Free enzyme.
    E,
    /// Enzyme–substrate complex.
    EA,
}

impl SpeciesTag {
    pub const ALL: [SpeciesTag; 3] = [SpeciesTag::A, SpeciesTag::E, SpeciesTag::EA];

    pub fn name(self) -> &'static str {
        match self {
            SpeciesTag::A => "A",
            SpeciesTag::E => "E",
            SpeciesTag::EA => "EA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    pub tag: SpeciesTag,
    /// Metres.
    pub radius: f64,
    /// m²/s.
    pub diffusion_coeff: f64,
}

impl Species {
    /// Species whose diffusion coefficient follows from Stokes–Einstein.
    pub fn from_radius(tag: SpeciesTag, medium: &Medium, radius: f64) -> Result<Self> {
        Ok(Self {
            tag,
            radius,
            diffusion_coeff: stokes_einstein(medium, radius)?,
        })
    }

    /// Species with an explicitly overridden diffusion coefficient.
    pub fn with_diffusion(tag: SpeciesTag, radius: f64, diffusion_coeff: f64) -> Result<Self> {
        let s = Self {
            tag,
            radius,
            diffusion_coeff,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return domain(format!("{} radius must be > 0", self.tag.name()));
        }
        if !(self.diffusion_coeff > 0.0 && self.diffusion_coeff.is_finite()) {
            return domain(format!(
                "{} diffusion coefficient must be > 0",
                self.tag.name()
            ));
        }
        Ok(())
    }
}

/// Michaelis–Menten rate constants: binding `k1` (m³ molecule⁻¹ s⁻¹),
/// unbinding `k_minus1` (s⁻¹) and degradation `k2` (s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionRates {
    pub k1: f64,
    pub k_minus1: f64,
    pub k2: f64,
}

impl ReactionRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k1", self.k1), ("k_minus1", self.k_minus1), ("k2", self.k2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return domain(format!("rate {name} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Total first-order decay rate of the complex.
    pub fn complex_decay(&self) -> f64 {
        self.k_minus1 + self.k2
    }
}

/// Dimensional receiver shape. Sizes in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReceiverShape {
    Sphere { radius: f64 },
    /// Axis-aligned cube.
    Cube { side: f64 },
}

/// Passive receiver: a volume centred at `center` (metres, transmitter at
/// the origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub center: [f64; 3],
    pub shape: ReceiverShape,
}

impl Receiver {
    pub fn distance(&self) -> f64 {
        norm(self.center)
    }

    pub fn volume(&self) -> f64 {
        match self.shape {
            ReceiverShape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            ReceiverShape::Cube { side } => side.powi(3),
        }
    }

    /// Per-axis half extent of the receiver's bounding box.
    pub fn half_extent(&self) -> f64 {
        match self.shape {
            ReceiverShape::Sphere { radius } => radius,
            ReceiverShape::Cube { side } => 0.5 * side,
        }
    }

    /// Whether `p` lies inside the receiver or on its boundary.
    #[inline]
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let d = [
            p[0] - self.center[0],
            p[1] - self.center[1],
            p[2] - self.center[2],
        ];
        match self.shape {
            ReceiverShape::Sphere { radius } => {
                d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= radius * radius
            }
            ReceiverShape::Cube { side } => {
                let h = 0.5 * side;
                d[0].abs() <= h && d[1].abs() <= h && d[2].abs() <= h
            }
        }
    }

    /// The receiver in dimensionless coordinates (scaled by `length`).
    pub fn to_dimensionless(&self, length: f64) -> Result<ReceiverGeometry> {
        let c = self.center.map(|x| x / length);
        match self.shape {
            ReceiverShape::Sphere { radius } => {
                ReceiverGeometry::sphere(radius / length, norm(c))
            }
            ReceiverShape::Cube { side } => ReceiverGeometry::cube(c, side / length),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let size = match self.shape {
            ReceiverShape::Sphere { radius } => radius,
            ReceiverShape::Cube { side } => side,
        };
        if !(size > 0.0 && size.is_finite()) {
            return domain("receiver size must be > 0");
        }
        if self.center.iter().any(|x| !x.is_finite()) {
            return domain("receiver centre must be finite");
        }
        Ok(())
    }
}

/// Dimensional description of one physical system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub medium: Medium,
    pub a: Species,
    pub e: Species,
    pub ea: Species,
    pub rates: ReactionRates,
    pub n_a: u64,
    pub n_e: u64,
    /// Edge of the enzyme-confining cube (metres), centred on the transmitter.
    pub enz_box_side: f64,
    pub receiver: Receiver,
}

impl SystemParams {
    pub fn species(&self, tag: SpeciesTag) -> &Species {
        match tag {
            SpeciesTag::A => &self.a,
            SpeciesTag::E => &self.e,
            SpeciesTag::EA => &self.ea,
        }
    }

    pub fn diffusion(&self, tag: SpeciesTag) -> f64 {
        self.species(tag).diffusion_coeff
    }

    /// Distance from transmitter to receiver centre, metres.
    pub fn tx_to_rx_distance(&self) -> f64 {
        self.receiver.distance()
    }

    pub fn enz_box_volume(&self) -> f64 {
        self.enz_box_side.powi(3)
    }

    /// Total (free + bound) enzyme concentration, molecule/m³.
    pub fn c_etot(&self) -> f64 {
        self.n_e as f64 / self.enz_box_volume()
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        for tag in SpeciesTag::ALL {
            let s = self.species(tag);
            if s.tag != tag {
                return domain(format!("species slot {} holds {}", tag.name(), s.tag.name()));
            }
            s.validate()?;
        }
        self.rates.validate()?;
        self.receiver.validate()?;
        if self.n_a < 1 {
            return domain("N_A must be >= 1");
        }
        if !(self.enz_box_side > 0.0 && self.enz_box_side.is_finite()) {
            return domain("enzyme box side must be > 0");
        }
        if !(self.tx_to_rx_distance() > 0.0) {
            return domain("transmitter-to-receiver distance must be > 0");
        }
        if !self.receiver_inside_box() {
            return config("receiver must lie strictly inside the enzyme box");
        }
        Ok(())
    }

    /// Whether the receiver's bounding box lies strictly inside the enzyme box.
    pub fn receiver_inside_box(&self) -> bool {
        let half = 0.5 * self.enz_box_side;
        let h = self.receiver.half_extent();
        self.receiver
            .center
            .iter()
            .all(|&c| c - h > -half && c + h < half)
    }

    /// Shrinks the system by `factor` in molecule counts while preserving the
    /// total enzyme concentration: `N_A` and `N_E` are multiplied by `factor`
    /// and the enzyme box volume follows `N_E`. Rates and geometry otherwise
    /// unchanged.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return domain(format!("scale factor must be > 0, got {factor}"));
        }
        let mut out = *self;
        out.n_a = (self.n_a as f64 * factor).round() as u64;
        out.n_e = (self.n_e as f64 * factor).round() as u64;
        out.enz_box_side = self.enz_box_side * factor.cbrt();
        out.validate()?;
        Ok(out)
    }
}

/// Reference scales for nondimensionalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSet {
    /// Reference distance L, metres.
    pub length: f64,
    /// Reference A concentration C0, molecule/m³.
    pub c0: f64,
    /// Total enzyme concentration, molecule/m³ (0 for enzyme-free systems).
    pub c_etot: f64,
    /// Molecule count representing one dimensionless molecule.
    pub n_ref: f64,
}

impl ReferenceSet {
    /// References for `params` with the given reference length and A
    /// concentration; `c_etot` and `n_ref` are taken from the system.
    pub fn from_params(params: &SystemParams, length: f64, c0: f64) -> Result<Self> {
        let refs = Self {
            length,
            c0,
            c_etot: params.c_etot(),
            n_ref: params.n_a as f64,
        };
        refs.validate()?;
        Ok(refs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return domain("reference length must be > 0");
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return domain("reference concentration C0 must be > 0");
        }
        if !(self.c_etot >= 0.0 && self.c_etot.is_finite()) {
            return domain("total enzyme concentration must be >= 0");
        }
        if !(self.n_ref > 0.0 && self.n_ref.is_finite()) {
            return domain("reference molecule count must be > 0");
        }
        Ok(())
    }

    /// Reference concentration of the complex, k1·C_Etot·C0/(k₋₁+k₂).
    pub fn c_ea_ref(&self, rates: &ReactionRates) -> Result<f64> {
        let decay = rates.complex_decay();
        if !(decay > 0.0) {
            return domain("EA reference concentration undefined: k_minus1 + k2 = 0");
        }
        let c = rates.k1 * self.c_etot * self.c0 / decay;
        if !(c > 0.0) {
            return domain("EA reference concentration is zero (k1 = 0 or no enzymes)");
        }
        Ok(c)
    }

    pub fn time_scale(&self, params: &SystemParams, tag: SpeciesTag) -> f64 {
        self.length * self.length / params.diffusion(tag)
    }
}

/// A quantity that can be moved between dimensional and dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// molecule/m³
    Concentration,
    /// seconds
    Time,
    /// metres
    Coordinate,
    /// molecules
    Count,
}

fn scale_factor(
    quantity: Quantity,
    tag: SpeciesTag,
    refs: &ReferenceSet,
    params: &SystemParams,
) -> Result<f64> {
    refs.validate()?;
    let s = match quantity {
        Quantity::Coordinate => refs.length,
        Quantity::Count => refs.n_ref,
        Quantity::Time => refs.time_scale(params, tag),
        Quantity::Concentration => match tag {
            SpeciesTag::A => refs.c0,
            SpeciesTag::E => {
                if !(refs.c_etot > 0.0) {
                    return domain("E concentration scale undefined without enzymes");
                }
                refs.c_etot
            }
            SpeciesTag::EA => refs.c_ea_ref(&params.rates)?,
        },
    };
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("degenerate scale for {quantity:?}"));
    }
    Ok(s)
}

/// Dimensional → dimensionless. `tag` selects the species-specific
/// concentration reference and diffusion time scale; it is ignored for
/// coordinates and counts.
pub fn nondim(
    quantity: Quantity,
    tag: SpeciesTag,
    value: f64,
    refs: &ReferenceSet,
    params: &SystemParams,
) -> Result<f64> {
    Ok(value / scale_factor(quantity, tag, refs, params)?)
}

/// Inverse of [`nondim`].
pub fn redim(
    quantity: Quantity,
    tag: SpeciesTag,
    value: f64,
    refs: &ReferenceSet,
    params: &SystemParams,
) -> Result<f64> {
    Ok(value * scale_factor(quantity, tag, refs, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessConstants {
    /// L²·k1·C_Etot / D_A
    pub gamma_1a: f64,
    /// k₋₁ / (k₋₁ + k₂)
    pub gamma_2a: f64,
    /// L²·k1·C0 / D_E
    pub gamma_e: f64,
    /// L²·(k₋₁ + k₂) / D_EA
    pub gamma_ea: f64,
    /// Decay constant of the lower-bound system; always equals `gamma_1a`.
    pub gamma_1a_bound: f64,
}

impl DimensionlessConstants {
    pub const NAMES: [&'static str; 5] =
        ["gamma_1a", "gamma_2a", "gamma_e", "gamma_ea", "gamma_1a_bound"];

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.gamma_1a,
            self.gamma_2a,
            self.gamma_e,
            self.gamma_ea,
            self.gamma_1a_bound,
        ]
    }
}

pub fn dimensionless_constants(
    params: &SystemParams,
    refs: &ReferenceSet,
) -> Result<DimensionlessConstants> {
    refs.validate()?;
    let r = &params.rates;
    r.validate()?;
    let decay = r.complex_decay();
    if !(decay > 0.0) {
        return domain("gamma_2a undefined: k_minus1 + k2 = 0");
    }
    let l2 = refs.length * refs.length;
    let gamma_1a = l2 * r.k1 * refs.c_etot / params.diffusion(SpeciesTag::A);
    Ok(DimensionlessConstants {
        gamma_1a,
        gamma_2a: r.k_minus1 / decay,
        gamma_e: l2 * r.k1 * refs.c0 / params.diffusion(SpeciesTag::E),
        gamma_ea: l2 * decay / params.diffusion(SpeciesTag::EA),
        gamma_1a_bound: gamma_1a,
    })
}

/// Per-constant relative differences `|a-b|/max(|a|,|b|)`; a pair of exact
/// zeros has difference 0 and a zero paired with a non-zero compares absolutely.
pub fn relative_differences(a: &DimensionlessConstants, b: &DimensionlessConstants) -> [f64; 5] {
    let (x, y) = (a.as_array(), b.as_array());
    std::array::from_fn(|i| rel_diff(x[i], y[i]))
}

fn rel_diff(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if x == 0.0 || y == 0.0 {
        (x - y).abs()
    } else {
        (x - y).abs() / scale
    }
}

/// True iff every dimensionless constant matches within `rel_tol`.
pub fn is_homologous(a: &DimensionlessConstants, b: &DimensionlessConstants, rel_tol: f64) -> bool {
    relative_differences(a, b).iter().all(|&d| d <= rel_tol)
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// The two reference systems of the enzyme accuracy study.
pub mod presets {
    use super::*;

    pub const NM: f64 = 1e-9;

    /// Shared geometry and chemistry; `n_a`, `n_e`, `k1` distinguish the systems.
    pub fn base(n_a: u64, n_e: u64, k1: f64) -> (SystemParams, ReferenceSet) {
        let medium = Medium::water();
        let a = Species::from_radius(SpeciesTag::A, &medium, 0.5 * NM).expect("valid radius");
        let e = Species::from_radius(SpeciesTag::E, &medium, 2.5 * NM).expect("valid radius");
        let ea = Species::from_radius(SpeciesTag::EA, &medium, 3.0 * NM).expect("valid radius");
        let length = 300.0 / 2f64.sqrt() * NM;
        let params = SystemParams {
            medium,
            a,
            e,
            ea,
            rates: ReactionRates {
                k1,
                k_minus1: 2e4,
                k2: 2e6,
            },
            n_a,
            n_e,
            enz_box_side: 1000.0 * NM,
            receiver: Receiver {
                center: [150.0 * NM, 150.0 * NM, 0.0],
                shape: ReceiverShape::Sphere {
                    radius: 0.15 * length,
                },
            },
        };
        // C0 = N_A per cubic metre.
        let refs = ReferenceSet::from_params(&params, length, n_a as f64).expect("valid refs");
        (params, refs)
    }

    pub fn system1() -> (SystemParams, ReferenceSet) {
        base(10_000, 200_000, 2e-19)
    }

    pub fn system2() -> (SystemParams, ReferenceSet) {
        base(20_000, 400_000, 1e-19)
    }
}

#[cfg(test)]
mod tests {
    use super::presets::{system1, system2, NM};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stokes_einstein_values() {
        let w = Medium::water();
        // 1.380649e-23 * 298 / (6π · 1e-3 · 0.5e-9), evaluated independently.
        assert_relative_eq!(
            stokes_einstein(&w, 0.5 * NM).unwrap(),
            4.365443978760993e-10,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            stokes_einstein(&w, 3.0 * NM).unwrap(),
            7.275739964601655e-11,
            max_relative = 1e-12
        );
        let d1 = stokes_einstein(&w, 1.7 * NM).unwrap();
        let d2 = stokes_einstein(&w, 3.4 * NM).unwrap();
        assert_relative_eq!(d1 / d2, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn stokes_einstein_rejects_bad_input() {
        let w = Medium::water();
        assert!(stokes_einstein(&w, 0.0).is_err());
        assert!(stokes_einstein(&w, -1e-9).is_err());
        let bad = Medium {
            temperature: 0.0,
            viscosity: 1e-3,
        };
        assert!(stokes_einstein(&bad, 1e-9).is_err());
        let bad = Medium {
            temperature: 298.0,
            viscosity: -1.0,
        };
        assert!(stokes_einstein(&bad, 1e-9).is_err());
    }

    #[test]
    fn definitional_scalings() {
        let (p, r) = system1();
        let x = nondim(Quantity::Coordinate, SpeciesTag::A, r.length, &r, &p).unwrap();
        assert_eq!(x, 1.0);
        let t = r.length * r.length / p.a.diffusion_coeff;
        let ts = nondim(Quantity::Time, SpeciesTag::A, t, &r, &p).unwrap();
        assert_relative_eq!(ts, 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            redim(Quantity::Time, SpeciesTag::A, 1.0, &r, &p).unwrap(),
            t,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            redim(Quantity::Count, SpeciesTag::A, 5.80e-4, &r, &p).unwrap(),
            5.80,
            max_relative = 1e-12
        );
    }

    #[test]
    fn system1_time_step_in_dimensionless_units() {
        let (p, r) = system1();
        let ts = nondim(Quantity::Time, SpeciesTag::A, 0.5e-6, &r, &p).unwrap();
        // 0.5e-6 · 4.365443978760993e-10 / (300e-9/√2)²
        assert_relative_eq!(ts, 4.850493309734437e-3, max_relative = 1e-10);
    }

    #[test]
    fn concentration_scalings() {
        let (p, r) = system1();
        let ca = nondim(Quantity::Concentration, SpeciesTag::A, 3.0 * r.c0, &r, &p).unwrap();
        assert_relative_eq!(ca, 3.0);
        let ce = nondim(Quantity::Concentration, SpeciesTag::E, r.c_etot, &r, &p).unwrap();
        assert_relative_eq!(ce, 1.0);
        let cea_ref = p.rates.k1 * r.c_etot * r.c0 / (p.rates.k_minus1 + p.rates.k2);
        let cea = nondim(Quantity::Concentration, SpeciesTag::EA, cea_ref, &r, &p).unwrap();
        assert_relative_eq!(cea, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn ea_scaling_needs_complex_decay() {
        let (mut p, r) = system1();
        p.rates.k_minus1 = 0.0;
        p.rates.k2 = 0.0;
        assert!(nondim(Quantity::Concentration, SpeciesTag::EA, 1.0, &r, &p).is_err());
        assert!(dimensionless_constants(&p, &r).is_err());
    }

    #[test]
    fn enzyme_free_reference_set() {
        let (mut p, _) = system1();
        p.n_e = 0;
        let r = ReferenceSet::from_params(&p, 1e-7, 1e4).unwrap();
        assert_eq!(r.c_etot, 0.0);
        assert!(nondim(Quantity::Concentration, SpeciesTag::EA, 1.0, &r, &p).is_err());
        assert!(nondim(Quantity::Concentration, SpeciesTag::E, 1.0, &r, &p).is_err());
        assert!(nondim(Quantity::Concentration, SpeciesTag::A, 1.0, &r, &p).is_ok());
    }

    #[test]
    fn reference_enzyme_concentration_matches_count() {
        let (p, r) = system1();
        assert_relative_eq!(
            r.c_etot * p.enz_box_side.powi(3),
            p.n_e as f64,
            max_relative = 1e-12
        );
    }

    #[test]
    fn system1_constants() {
        let (p, r) = system1();
        let g = dimensionless_constants(&p, &r).unwrap();
        // L² k1 C_Etot / D_A = 4.5e-14 · 4e4 / 4.365443978760993e-10
        assert_relative_eq!(g.gamma_1a, 4.123291946380397, max_relative = 1e-10);
        assert_relative_eq!(g.gamma_2a, 2e4 / 2.02e6, max_relative = 1e-15);
        assert_eq!(g.gamma_1a_bound, g.gamma_1a);
    }

    #[test]
    fn table_systems_are_homologous() {
        let (p1, r1) = system1();
        let (p2, r2) = system2();
        let g1 = dimensionless_constants(&p1, &r1).unwrap();
        let g2 = dimensionless_constants(&p2, &r2).unwrap();
        for d in relative_differences(&g1, &g2) {
            assert!(d < 1e-12, "{d}");
        }
        assert!(is_homologous(&g1, &g2, DEFAULT_HOMOLOGY_TOL));
        assert!(is_homologous(&g1, &g1, DEFAULT_HOMOLOGY_TOL));
    }

    #[test]
    fn doubling_k2_breaks_homology() {
        let (p1, r1) = system1();
        let mut p = p1;
        p.rates.k2 *= 2.0;
        let g1 = dimensionless_constants(&p1, &r1).unwrap();
        let g = dimensionless_constants(&p, &r1).unwrap();
        assert!(!is_homologous(&g1, &g, DEFAULT_HOMOLOGY_TOL));
    }

    #[test]
    fn no_binding_zeroes_binding_constants() {
        let (mut p, r) = system1();
        p.rates.k1 = 0.0;
        let g = dimensionless_constants(&p, &r).unwrap();
        assert_eq!(g.gamma_1a, 0.0);
        assert_eq!(g.gamma_e, 0.0);
        assert!(is_homologous(&g, &g, 1e-9));
    }

    #[test]
    fn validation_catches_bad_systems() {
        let (p, _) = system1();
        let mut q = p;
        q.n_a = 0;
        assert!(q.validate().is_err());
        let mut q = p;
        q.enz_box_side = 200.0 * NM;
        assert!(matches!(q.validate(), Err(crate::Error::Config(_))));
        let mut q = p;
        q.rates.k2 = -1.0;
        assert!(q.validate().is_err());
        assert!(p.validate().is_ok());
    }

    #[test]
    fn scaled_preserves_enzyme_concentration() {
        let (p, _) = system1();
        let s = p.scaled(0.1).unwrap();
        assert_eq!(s.n_a, 1000);
        assert_eq!(s.n_e, 20_000);
        assert_relative_eq!(s.c_etot(), p.c_etot(), max_relative = 1e-12);
        assert!(s.receiver_inside_box());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn quantity() -> impl Strategy<Value = Quantity> {
            prop_oneof![
                Just(Quantity::Concentration),
                Just(Quantity::Time),
                Just(Quantity::Coordinate),
                Just(Quantity::Count)
            ]
        }

        fn tag() -> impl Strategy<Value = SpeciesTag> {
            prop_oneof![Just(SpeciesTag::A), Just(SpeciesTag::E), Just(SpeciesTag::EA)]
        }

        proptest! {
            #[test]
            fn round_trip(q in quantity(), t in tag(), mant in 1.0f64..10.0, exp in -30i32..30) {
                let (p, r) = system1();
                let v = mant * 10f64.powi(exp);
                let back = redim(q, t, nondim(q, t, v, &r, &p).unwrap(), &r, &p).unwrap();
                prop_assert!(((back - v) / v).abs() <= 1e-12);
            }

            #[test]
            fn homology_recipe_is_scale_invariant(m in 1u64..50) {
                let (p, r) = system1();
                let mut q = p;
                q.n_a = p.n_a * m;
                q.n_e = p.n_e * m;
                q.rates.k1 = p.rates.k1 / m as f64;
                let rq = ReferenceSet::from_params(&q, r.length, q.n_a as f64).unwrap();
                let g1 = dimensionless_constants(&p, &r).unwrap();
                let g2 = dimensionless_constants(&q, &rq).unwrap();
                for d in relative_differences(&g1, &g2) {
                    prop_assert!(d <= 1e-12);
                }
            }

            #[test]
            fn stokes_einstein_monotone(r in 0.1f64..10.0, f in 1.001f64..5.0, t in 250.0f64..400.0, eta in 1e-4f64..1e-2) {
                let m = Medium::new(t, eta).unwrap();
                let d = stokes_einstein(&m, r * NM).unwrap();
                prop_assert!(stokes_einstein(&m, f * r * NM).unwrap() < d);
                prop_assert!(stokes_einstein(&Medium::new(t, eta * f).unwrap(), r * NM).unwrap() < d);
                prop_assert!(stokes_einstein(&Medium::new(t * f, eta).unwrap(), r * NM).unwrap() > d);
            }

            #[test]
            fn gamma_2a_in_unit_interval(km in 0.0f64..1e8, k2 in 0.0f64..1e8) {
                prop_assume!(km + k2 > 0.0);
                let (mut p, r) = system1();
                p.rates.k_minus1 = km;
                p.rates.k2 = k2;
                let g = dimensionless_constants(&p, &r).unwrap();
                prop_assert!((0.0..=1.0).contains(&g.gamma_2a));
            }
        }
    }
}
