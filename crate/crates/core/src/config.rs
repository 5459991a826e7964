//! Run configuration: flat `key = value` text with `#` comments.
//!
//! Every dimensional key names its unit (`radius_A_nm`, `k2_per_s`, ...).
//! Parsing checks each value as it is read and then the cross-key
//! invariants of the model, reporting the offending key and line.

use crate::error::{ConfigError, Error, Result};
use crate::harness::{log_space, DEFAULT_SAMPLES, DEFAULT_T_STAR_RANGE, FAST_SCALE, FAST_TRIALS};
use crate::physchem::{
    Medium, ReactionRates, Receiver, ReceiverShape, ReferenceSet, Species, SpeciesTag,
    SystemParams,
};
use crate::simulator::{SimConfig, UnbindingPlacement};
use std::collections::BTreeMap;
use std::path::Path;

const NM: f64 = 1e-9;
const US: f64 = 1e-6;

struct Key {
    name: &'static str,
    /// Name without its unit suffix; equal to `name` for unitless keys.
    stem: &'static str,
    required: bool,
}

const fn req(name: &'static str, stem: &'static str) -> Key {
    Key { name, stem, required: true }
}

const fn opt(name: &'static str, stem: &'static str) -> Key {
    Key { name, stem, required: false }
}

const KEYS: &[Key] = &[
    req("temperature_K", "temperature"),
    req("viscosity_kg_per_m_s", "viscosity"),
    req("radius_A_nm", "radius_A"),
    req("radius_E_nm", "radius_E"),
    req("radius_EA_nm", "radius_EA"),
    opt("diffusion_A_m2_per_s", "diffusion_A"),
    opt("diffusion_E_m2_per_s", "diffusion_E"),
    opt("diffusion_EA_m2_per_s", "diffusion_EA"),
    req("k1_m3_per_molecule_s", "k1"),
    req("k_minus1_per_s", "k_minus1"),
    req("k2_per_s", "k2"),
    req("n_A_molecules", "n_A"),
    req("n_E_molecules", "n_E"),
    req("enzyme_box_side_nm", "enzyme_box_side"),
    req("receiver_shape", "receiver_shape"),
    req("receiver_center_x_nm", "receiver_center_x"),
    req("receiver_center_y_nm", "receiver_center_y"),
    req("receiver_center_z_nm", "receiver_center_z"),
    opt("receiver_radius_star", "receiver_radius_star"),
    opt("receiver_side_star", "receiver_side_star"),
    opt("reference_length_nm", "reference_length"),
    req("reference_concentration_per_m3", "reference_concentration"),
    req("time_step_us", "time_step"),
    req("seed", "seed"),
    req("n_trials", "n_trials"),
    opt("t_star_min", "t_star_min"),
    opt("t_star_max", "t_star_max"),
    opt("n_samples", "n_samples"),
    opt("unbinding_placement", "unbinding_placement"),
];

/// Everything needed to run an experiment on one system.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub refs: ReferenceSet,
    /// Seconds.
    pub dt: f64,
    pub seed: u64,
    pub n_trials: u64,
    /// Sample grid bounds in units of L²/D_A.
    pub t_star_range: (f64, f64),
    pub n_samples: usize,
    pub unbinding: UnbindingPlacement,
}

impl RunConfig {
    pub fn t_star_grid(&self) -> Vec<f64> {
        log_space(self.t_star_range.0, self.t_star_range.1, self.n_samples)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        self.sim_config_at(&self.t_star_grid())
    }

    /// Simulation config sampling at the given t* values.
    pub fn sim_config_at(&self, t_star: &[f64]) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(
            self.params,
            self.refs,
            self.dt,
            SimConfig::t_star_to_seconds(&self.params, &self.refs, t_star),
            self.seed,
        )?;
        cfg.unbinding = self.unbinding;
        Ok(cfg)
    }

    /// Same system with molecule counts scaled by `factor` at fixed enzyme
    /// concentration, reference length and C0, so every dimensionless
    /// constant is unchanged.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let params = self.params.scaled(factor)?;
        let refs = ReferenceSet::from_params(&params, self.refs.length, self.refs.c0)?;
        Ok(Self { params, refs, ..self.clone() })
    }

    /// The scaled-down CI profile.
    pub fn fast(&self) -> Result<Self> {
        let mut out = self.scaled(FAST_SCALE)?;
        out.n_trials = FAST_TRIALS;
        Ok(out)
    }
}

struct Entry {
    line: usize,
    value: String,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = read_entries(text)?;
    Builder { entries: &entries }.build()
}

fn read_entries(text: &str) -> std::result::Result<BTreeMap<String, Entry>, ConfigError> {
    let mut out: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: body.to_string() });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line, text: body.to_string() });
        }
        if !KEYS.iter().any(|s| s.name == k) {
            return Err(unknown_key(line, k));
        }
        if let Some(first) = out.get(k) {
            return Err(ConfigError::Duplicate {
                line,
                key: k.to_string(),
                first: first.line,
            });
        }
        out.insert(k.to_string(), Entry { line, value: v.to_string() });
    }
    Ok(out)
}

/// A unit error when `key` is a known quantity with a wrong or missing unit
/// suffix, otherwise an unknown-key error.
fn unknown_key(line: usize, key: &str) -> ConfigError {
    let stem_match = KEYS
        .iter()
        .filter(|s| s.stem != s.name)
        .filter(|s| key == s.stem || key.starts_with(&format!("{}_", s.stem)))
        .max_by_key(|s| s.stem.len());
    match stem_match {
        Some(s) => ConfigError::Unit {
            line,
            key: key.to_string(),
            expected: s.name.to_string(),
        },
        None => ConfigError::UnknownKey { line, key: key.to_string() },
    }
}

struct Builder<'a> {
    entries: &'a BTreeMap<String, Entry>,
}

impl Builder<'_> {
    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn value_err(&self, key: &str, reason: impl Into<String>) -> Error {
        ConfigError::Value {
            line: self.line(key).unwrap_or(0),
            key: key.to_string(),
            reason: reason.into(),
        }
        .into()
    }

    fn invariant(&self, key: &str, reason: impl std::fmt::Display) -> Error {
        ConfigError::Invariant {
            key: key.to_string(),
            line: self.line(key),
            reason: reason.to_string(),
        }
        .into()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            Ok(_) => Err(self.value_err(key, "value must be finite")),
            Err(_) if v.split_whitespace().count() > 1 => Err(self.value_err(
                key,
                format!("`{v}` is not a number; units belong in the key name"),
            )),
            Err(_) => Err(self.value_err(key, format!("`{v}` is not a number"))),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.float(key)? {
            Some(x) if x <= 0.0 => Err(self.value_err(key, format!("must be > 0, got {x}"))),
            v => Ok(v),
        }
    }

    fn non_negative(&self, key: &str) -> Result<Option<f64>> {
        match self.float(key)? {
            Some(x) if x < 0.0 => Err(self.value_err(key, format!("must be >= 0, got {x}"))),
            v => Ok(v),
        }
    }

    /// Non-negative integer; integral floats such as `1e4` are accepted.
    fn count(&self, key: &str) -> Result<Option<u64>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        if let Ok(n) = v.parse::<u64>() {
            return Ok(Some(n));
        }
        match v.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(Some(x as u64)),
            _ => Err(self.value_err(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn need<T>(&self, v: Option<T>) -> T {
        v.expect("presence checked before building")
    }

    fn check_missing(&self) -> Result<()> {
        let mut keys: Vec<String> = KEYS
            .iter()
            .filter(|k| k.required && !self.entries.contains_key(k.name))
            .map(|k| k.name.to_string())
            .collect();
        let size_key = match self.raw("receiver_shape") {
            Some("cube") => Some("receiver_side_star"),
            Some("sphere") => Some("receiver_radius_star"),
            _ => None,
        };
        if let Some(k) = size_key {
            if !self.entries.contains_key(k) {
                keys.push(k.to_string());
            }
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Missing { keys }.into())
        }
    }

    fn build(&self) -> Result<RunConfig> {
        self.check_missing()?;

        let medium = Medium {
            temperature: self.need(self.positive("temperature_K")?),
            viscosity: self.need(self.positive("viscosity_kg_per_m_s")?),
        };
        let species = |tag: SpeciesTag, rkey: &str, dkey: &str| -> Result<Species> {
            let r = self.need(self.positive(rkey)?) * NM;
            match self.positive(dkey)? {
                Some(d) => Species::with_diffusion(tag, r, d),
                None => Species::from_radius(tag, &medium, r),
            }
            .map_err(|e| self.invariant(rkey, e))
        };
        let a = species(SpeciesTag::A, "radius_A_nm", "diffusion_A_m2_per_s")?;
        let e = species(SpeciesTag::E, "radius_E_nm", "diffusion_E_m2_per_s")?;
        let ea = species(SpeciesTag::EA, "radius_EA_nm", "diffusion_EA_m2_per_s")?;

        let rates = ReactionRates {
            k1: self.need(self.non_negative("k1_m3_per_molecule_s")?),
            k_minus1: self.need(self.non_negative("k_minus1_per_s")?),
            k2: self.need(self.non_negative("k2_per_s")?),
        };
        let n_a = self.need(self.count("n_A_molecules")?);
        if n_a < 1 {
            return Err(self.value_err("n_A_molecules", "must be >= 1"));
        }
        let n_e = self.need(self.count("n_E_molecules")?);
        let enz_box_side = self.need(self.positive("enzyme_box_side_nm")?) * NM;

        let center = [
            self.need(self.float("receiver_center_x_nm")?) * NM,
            self.need(self.float("receiver_center_y_nm")?) * NM,
            self.need(self.float("receiver_center_z_nm")?) * NM,
        ];
        let distance = crate::physchem::norm(center);
        if !(distance > 0.0) {
            return Err(self.invariant(
                "receiver_center_x_nm",
                "receiver centre must not coincide with the transmitter",
            ));
        }
        let length = match self.positive("reference_length_nm")? {
            Some(l) => l * NM,
            None => distance,
        };
        let shape = match self.raw("receiver_shape") {
            Some("sphere") => {
                if self.entries.contains_key("receiver_side_star") {
                    return Err(self.invariant("receiver_side_star", "only valid for a cube receiver"));
                }
                ReceiverShape::Sphere {
                    radius: self.need(self.positive("receiver_radius_star")?) * length,
                }
            }
            Some("cube") => {
                if self.entries.contains_key("receiver_radius_star") {
                    return Err(self.invariant("receiver_radius_star", "only valid for a sphere receiver"));
                }
                ReceiverShape::Cube {
                    side: self.need(self.positive("receiver_side_star")?) * length,
                }
            }
            Some(other) => {
                return Err(self.value_err(
                    "receiver_shape",
                    format!("`{other}` is not one of `sphere`, `cube`"),
                ))
            }
            None => unreachable!("presence checked"),
        };

        let params = SystemParams {
            medium,
            a,
            e,
            ea,
            rates,
            n_a,
            n_e,
            enz_box_side,
            receiver: Receiver { center, shape },
        };
        if !params.receiver_inside_box() {
            return Err(self.invariant(
                "enzyme_box_side_nm",
                "receiver must lie strictly inside the enzyme box",
            ));
        }
        params.validate().map_err(|e| self.invariant("receiver_shape", e))?;

        let c0 = self.need(self.positive("reference_concentration_per_m3")?);
        let refs = ReferenceSet::from_params(&params, length, c0)
            .map_err(|e| self.invariant("reference_concentration_per_m3", e))?;

        let dt = self.need(self.positive("time_step_us")?) * US;
        let seed = self.need(self.count("seed")?);
        let n_trials = self.need(self.count("n_trials")?);
        if n_trials < 1 {
            return Err(self.value_err("n_trials", "must be >= 1"));
        }
        let t_min = self.positive("t_star_min")?.unwrap_or(DEFAULT_T_STAR_RANGE.0);
        let t_max = self.positive("t_star_max")?.unwrap_or(DEFAULT_T_STAR_RANGE.1);
        let n_samples = match self.count("n_samples")? {
            Some(0) => return Err(self.value_err("n_samples", "must be >= 1")),
            Some(n) => n as usize,
            None => DEFAULT_SAMPLES,
        };
        if n_samples > 1 && t_max <= t_min {
            return Err(self.invariant("t_star_max", "must exceed t_star_min"));
        }
        let unbinding = match self.raw("unbinding_placement") {
            None | Some("sphere") => UnbindingPlacement::Sphere,
            Some("colocated") => UnbindingPlacement::Colocated,
            Some(other) => {
                return Err(self.value_err(
                    "unbinding_placement",
                    format!("`{other}` is not one of `sphere`, `colocated`"),
                ))
            }
        };

        let run = RunConfig {
            params,
            refs,
            dt,
            seed,
            n_trials,
            t_star_range: (t_min, t_max),
            n_samples,
            unbinding,
        };
        run.sim_config().map_err(|e| self.invariant("time_step_us", e))?;
        Ok(run)
    }
}

/// Text of the shipped presets.
pub mod shipped {
    pub const SYSTEM1: &str = include_str!("../presets/system1.cfg");
    pub const SYSTEM2: &str = include_str!("../presets/system2.cfg");
}
