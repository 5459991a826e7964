//! Experiment orchestration: trial batches, aggregation, and the preset
//! experiments (uniform-assumption test, lower-bound accuracy, homology,
//! parameter trends).

use crate::analytic::{
    self, enzyme_lower_bound_count, uniform_deviation, LowerBoundParams, ReceiverGeometry,
};
use crate::error::{Error, Result};
use crate::physchem::{
    dimensionless_constants, is_homologous, relative_differences, DimensionlessConstants,
    ReferenceSet, SystemParams,
};
use crate::simulator::{SimConfig, Simulator};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Trials per curve in the full profile.
pub const DEFAULT_TRIALS: u64 = 6000;
/// Trials per curve in the fast profile.
pub const FAST_TRIALS: u64 = 600;
/// Molecule-count scale factor of the fast profile (System 1: N_A = 10³).
pub const FAST_SCALE: f64 = 0.1;
/// Default sample grid, in units of L²/D_A.
pub const DEFAULT_T_STAR_RANGE: (f64, f64) = (1e-2, 10.0);
pub const DEFAULT_SAMPLES: usize = 40;
/// Window over which the relative gap to the lower bound is averaged.
pub const GAP_WINDOW: (f64, f64) = (0.05, 1.0);

/// `n` logarithmically spaced points spanning `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    /// Sample standard deviation over √n; zero for a single row.
    pub std_err: Vec<f64>,
    pub n: usize,
}

/// Per-column mean and standard error of equal-length rows.
pub fn aggregate<R: AsRef<[f64]>>(rows: &[R]) -> Result<Aggregate> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Data("aggregate needs at least one row".into()));
    }
    let width = rows[0].as_ref().len();
    if let Some(i) = rows.iter().position(|r| r.as_ref().len() != width) {
        return Err(Error::Data(format!(
            "row {i} has length {} but row 0 has {width}",
            rows[i].as_ref().len()
        )));
    }
    let nf = n as f64;
    let mut mean = vec![0.0; width];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.as_ref()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut ss = vec![0.0; width];
    for r in rows {
        for ((s, x), m) in ss.iter_mut().zip(r.as_ref()).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std_err = ss
        .iter()
        .map(|s| if n > 1 { (s / (nf - 1.0)).sqrt() / nf.sqrt() } else { 0.0 })
        .collect();
    Ok(Aggregate { mean, std_err, n })
}

/// Per-trial receiver counts at a common set of sample times, with their
/// aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub t_star: Vec<f64>,
    pub t_seconds: Vec<f64>,
    /// `counts[trial][sample]`.
    pub counts: Vec<Vec<u32>>,
    /// Mean molecule count per sample.
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_trials: u64,
    /// Molecules per dimensionless molecule (N_A).
    pub n_ref: f64,
}

impl ObservationSeries {
    pub fn from_counts(
        t_star: Vec<f64>,
        t_seconds: Vec<f64>,
        counts: Vec<Vec<u32>>,
        n_ref: f64,
    ) -> Result<Self> {
        let rows: Vec<Vec<f64>> = counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64).collect())
            .collect();
        let agg = aggregate(&rows)?;
        if agg.mean.len() != t_star.len() || t_star.len() != t_seconds.len() {
            return Err(Error::Data("sample times and counts disagree in length".into()));
        }
        Ok(Self {
            t_star,
            t_seconds,
            n_trials: counts.len() as u64,
            counts,
            mean: agg.mean,
            std_err: agg.std_err,
            n_ref,
        })
    }

    pub fn mean_star(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m / self.n_ref).collect()
    }

    pub fn std_err_star(&self) -> Vec<f64> {
        self.std_err.iter().map(|s| s / self.n_ref).collect()
    }
}

/// Runs `n_trials` independent trials of `config` on up to `threads`
/// workers (all available cores when `None`). Trial `i` always uses stream
/// key `(seed, i)` and rows are gathered in trial order, so the result does
/// not depend on the worker count.
pub fn run_trials(
    config: &SimConfig,
    n_trials: u64,
    threads: Option<usize>,
) -> Result<ObservationSeries> {
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be >= 1".into()));
    }
    config.validate()?;
    let job = || -> Result<Vec<Vec<u32>>> {
        (0..n_trials as usize)
            .into_par_iter()
            .with_min_len(4)
            .map_init(
                || Simulator::new(config.clone()),
                |sim, trial| match sim {
                    Ok(sim) => sim.run_trial(trial as u64),
                    Err(e) => Err(e.clone()),
                },
            )
            .collect()
    };
    let counts = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    ObservationSeries::from_counts(
        config.realized_t_star()?,
        config.realized_times(),
        counts,
        config.params.n_a as f64,
    )
}

/// Short stable fingerprint of a simulation configuration.
pub fn config_hash(config: &SimConfig) -> String {
    fingerprint(&format!("{config:?}"))
}

pub fn fingerprint(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Uniform-assumption deviation for spheres and volume-matched cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationTable {
    pub t_star: Vec<f64>,
    pub r_obs: Vec<f64>,
    /// `sphere[j][i]`: receiver `r_obs[j]` at `t_star[i]`; `None` when
    /// indeterminate.
    pub sphere: Vec<Vec<Option<f64>>>,
    pub cube: Vec<Vec<Option<f64>>>,
}

impl DeviationTable {
    /// Largest |deviation| of column `j` over the determinate entries.
    pub fn max_abs(column: &[Option<f64>]) -> f64 {
        column.iter().flatten().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Deviation of the uniform approximation at a receiver one reference
/// length from the transmitter. The cube is axis-aligned with the
/// transmitter on its centre line, facing one of its faces.
pub fn run_uniform_test(r_obs: &[f64], t_star: &[f64]) -> Result<DeviationTable> {
    if let Some(r) = r_obs.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::Domain(format!("receiver radius {r} outside (0, 1)")));
    }
    if t_star.iter().any(|t| !(*t > 0.0)) || t_star.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t* grid must be positive and ascending".into()));
    }
    let column = |g: &ReceiverGeometry| -> Result<Vec<Option<f64>>> {
        t_star
            .iter()
            .map(|&t| match uniform_deviation(g, t) {
                Ok(d) => Ok(Some(d)),
                Err(Error::Indeterminate(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    };
    let mut sphere = Vec::with_capacity(r_obs.len());
    let mut cube = Vec::with_capacity(r_obs.len());
    for &r in r_obs {
        sphere.push(column(&ReceiverGeometry::sphere(r, 1.0)?)?);
        cube.push(column(&ReceiverGeometry::volume_matched_cube([1.0, 0.0, 0.0], r)?)?);
    }
    Ok(DeviationTable {
        t_star: t_star.to_vec(),
        r_obs: r_obs.to_vec(),
        sphere,
        cube,
    })
}

/// One simulated curve with its analytic companions at identical t*.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub config_hash: String,
    pub seed: u64,
    pub constants: DimensionlessConstants,
    pub series: ObservationSeries,
    /// Uniform-approximation count without enzymes (lower bound at C_Etot = 0).
    pub analytic_no_enzyme: Vec<f64>,
    /// Exact count without enzymes for the receiver's shape.
    pub exact_no_enzyme: Vec<f64>,
    pub lower_bound: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub curves: Vec<Curve>,
}

/// Analytic curves for `config` at t* values `t_star`:
/// (uniform without enzymes, exact without enzymes, lower bound).
pub fn analytic_curves(
    params: &SystemParams,
    refs: &ReferenceSet,
    t_star: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let lb = LowerBoundParams::from_system(params, refs)?;
    let free = lb.without_enzymes();
    let geom = params.receiver.to_dimensionless(refs.length)?;
    let mut no_enz = Vec::with_capacity(t_star.len());
    let mut exact = Vec::with_capacity(t_star.len());
    let mut bound = Vec::with_capacity(t_star.len());
    for &t in t_star {
        no_enz.push(enzyme_lower_bound_count(&free, t)?);
        exact.push(analytic::exact_count(&geom, t)?);
        bound.push(enzyme_lower_bound_count(&lb, t)?);
    }
    Ok((no_enz, exact, bound))
}

pub fn simulate_curve(
    label: &str,
    config: &SimConfig,
    n_trials: u64,
    threads: Option<usize>,
) -> Result<Curve> {
    let series = run_trials(config, n_trials, threads)?;
    let (analytic_no_enzyme, exact_no_enzyme, lower_bound) =
        analytic_curves(&config.params, &config.refs, &series.t_star)?;
    Ok(Curve {
        label: label.to_string(),
        config_hash: config_hash(config),
        seed: config.seed,
        constants: dimensionless_constants(&config.params, &config.refs)?,
        series,
        analytic_no_enzyme,
        exact_no_enzyme,
        lower_bound,
    })
}

/// Simulates every system and pairs each mean curve with its analytic
/// no-enzyme and lower-bound curves.
pub fn run_accuracy(
    systems: &[(String, SimConfig)],
    n_trials: u64,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    let curves = systems
        .iter()
        .map(|(label, cfg)| simulate_curve(label, cfg, n_trials, threads))
        .collect::<Result<_>>()?;
    Ok(ExperimentResult { curves })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomologyReport {
    pub a: DimensionlessConstants,
    pub b: DimensionlessConstants,
    pub rel_diff: [f64; 5],
    pub rel_tol: f64,
    pub homologous: bool,
}

pub fn run_homology_check(
    a: (&SystemParams, &ReferenceSet),
    b: (&SystemParams, &ReferenceSet),
    rel_tol: f64,
) -> Result<HomologyReport> {
    let ga = dimensionless_constants(a.0, a.1)?;
    let gb = dimensionless_constants(b.0, b.1)?;
    Ok(HomologyReport {
        rel_diff: relative_differences(&ga, &gb),
        homologous: is_homologous(&ga, &gb, rel_tol),
        a: ga,
        b: gb,
        rel_tol,
    })
}

/// Single-parameter modification of a system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Baseline,
    /// Multiply k1.
    K1(f64),
    /// Multiply k2.
    K2(f64),
    /// Set k2 (s⁻¹).
    K2To(f64),
    /// Multiply N_E (box unchanged, so C_Etot follows).
    Enzymes(f64),
    /// Set N_E.
    EnzymesTo(u64),
    /// Multiply N_A.
    Molecules(f64),
    /// Multiply the reference length: receiver distance and size scale with it.
    Length(f64),
}

impl Variant {
    pub fn label(&self) -> String {
        match self {
            Variant::Baseline => "baseline".into(),
            Variant::K1(f) => format!("k1x{f}"),
            Variant::K2(f) => format!("k2x{f}"),
            Variant::K2To(v) => format!("k2={v:e}"),
            Variant::Enzymes(f) => format!("NEx{f}"),
            Variant::EnzymesTo(n) => format!("NE={n}"),
            Variant::Molecules(f) => format!("NAx{f}"),
            Variant::Length(f) => format!("Lx{f}"),
        }
    }

    /// The modified system. C0 is kept, every other reference follows the
    /// modified parameters.
    pub fn apply(&self, params: &SystemParams, refs: &ReferenceSet) -> Result<(SystemParams, ReferenceSet)> {
        let mut p = *params;
        let mut length = refs.length;
        match *self {
            Variant::Baseline => {}
            Variant::K1(f) => p.rates.k1 *= f,
            Variant::K2(f) => p.rates.k2 *= f,
            Variant::K2To(v) => p.rates.k2 = v,
            Variant::Enzymes(f) => p.n_e = (p.n_e as f64 * f).round() as u64,
            Variant::EnzymesTo(n) => p.n_e = n,
            Variant::Molecules(f) => p.n_a = (p.n_a as f64 * f).round() as u64,
            Variant::Length(f) => {
                length *= f;
                p.receiver.center = p.receiver.center.map(|x| x * f);
                p.receiver.shape = match p.receiver.shape {
                    crate::physchem::ReceiverShape::Sphere { radius } => {
                        crate::physchem::ReceiverShape::Sphere { radius: radius * f }
                    }
                    crate::physchem::ReceiverShape::Cube { side } => {
                        crate::physchem::ReceiverShape::Cube { side: side * f }
                    }
                };
            }
        }
        p.validate()?;
        let r = ReferenceSet::from_params(&p, length, refs.c0)?;
        Ok((p, r))
    }

    /// Expected direction of the change in the relative gap to the lower
    /// bound relative to `base`: more binding or more enzyme-bound molecules
    /// widen it, faster degradation narrows it. `None` when no direction is
    /// predicted.
    pub fn expected_gap_trend(&self, base: &SystemParams) -> Option<f64> {
        let dir = |f: f64| (f != 1.0).then(|| (f - 1.0).signum());
        match *self {
            Variant::Baseline | Variant::Length(_) => None,
            Variant::K1(f) | Variant::Enzymes(f) | Variant::Molecules(f) => dir(f),
            Variant::K2(f) => dir(f).map(|s| -s),
            Variant::K2To(v) => dir(v / base.rates.k2).map(|s| -s),
            Variant::EnzymesTo(n) => dir(n as f64 / base.n_e as f64),
        }
    }

    /// Variants with a predicted gap direction used by the trend suite.
    pub fn trend_suite() -> Vec<Variant> {
        vec![Variant::K1(2.0), Variant::Enzymes(2.0), Variant::K2(10.0)]
    }

    /// Representative single-parameter modifications of System 1.
    pub fn sweep() -> Vec<Variant> {
        vec![
            Variant::EnzymesTo(100_000),
            Variant::K1(0.5),
            Variant::K2To(2e7),
            Variant::Length(2.0),
            Variant::Molecules(0.5),
        ]
    }
}

/// `config` with its system modified by `variant`; sample times are kept in
/// units of the modified system's L²/D_A.
pub fn variant_config(config: &SimConfig, variant: Variant, t_star: &[f64]) -> Result<SimConfig> {
    let (p, r) = variant.apply(&config.params, &config.refs)?;
    let mut cfg = SimConfig::new(
        p,
        r,
        config.dt,
        SimConfig::t_star_to_seconds(&p, &r, t_star),
        config.seed,
    )?;
    cfg.unbinding = config.unbinding;
    Ok(cfg)
}

/// Time-averaged relative gap between a simulated curve and its lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    pub mean: f64,
    pub std_err: f64,
    /// Gap of each trial's own curve; their mean is `mean`.
    pub per_trial: Vec<f64>,
}

/// Mean over sample points with t* in `window` of
/// `(simulated − lower bound) / lower bound`, computed per trial.
pub fn relative_gap(curve: &Curve, window: (f64, f64)) -> Result<GapEstimate> {
    let s = &curve.series;
    let idx: Vec<usize> = (0..s.t_star.len())
        .filter(|&i| s.t_star[i] >= window.0 && s.t_star[i] <= window.1)
        .collect();
    if idx.is_empty() {
        return Err(Error::Data("no sample points inside the gap window".into()));
    }
    if idx.iter().any(|&i| !(curve.lower_bound[i] > 0.0)) {
        return Err(Error::Indeterminate("lower bound underflows in the gap window".into()));
    }
    let per_trial: Vec<f64> = s
        .counts
        .iter()
        .map(|row| {
            idx.iter()
                .map(|&i| {
                    let lb = curve.lower_bound[i];
                    (row[i] as f64 / s.n_ref - lb) / lb
                })
                .sum::<f64>()
                / idx.len() as f64
        })
        .collect();
    let rows: Vec<[f64; 1]> = per_trial.iter().map(|&g| [g]).collect();
    let agg = aggregate(&rows)?;
    Ok(GapEstimate {
        mean: agg.mean[0],
        std_err: agg.std_err[0],
        per_trial,
    })
}

/// Comparison of a modified system's gap against the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub label: String,
    /// +1 when the gap should grow, −1 when it should shrink.
    pub expected_sign: f64,
    pub base_gap: f64,
    pub variant_gap: f64,
    /// `variant_gap − base_gap`.
    pub diff: f64,
    /// Standard error of the difference from trial-paired gaps.
    pub paired_se: f64,
    /// `sqrt(se_base² + se_variant²)`, ignoring the pairing.
    pub combined_se: f64,
}

impl TrendCheck {
    pub fn new(label: &str, expected_sign: f64, base: &GapEstimate, variant: &GapEstimate) -> Result<Self> {
        if base.per_trial.len() != variant.per_trial.len() {
            return Err(Error::Data("paired gaps need equal trial counts".into()));
        }
        let diffs: Vec<Vec<f64>> = base
            .per_trial
            .iter()
            .zip(&variant.per_trial)
            .map(|(b, v)| vec![v - b])
            .collect();
        let d = aggregate(&diffs)?;
        Ok(Self {
            label: label.to_string(),
            expected_sign,
            base_gap: base.mean,
            variant_gap: variant.mean,
            diff: variant.mean - base.mean,
            paired_se: d.std_err[0],
            combined_se: base.std_err.hypot(variant.std_err),
        })
    }

    /// Whether the gap moved in the expected direction by more than the
    /// standard error of the change. Variant and baseline share seed and
    /// trial indices, so the error of the change comes from the per-trial
    /// differences.
    pub fn holds(&self) -> bool {
        self.expected_sign * self.diff > self.paired_se
    }
}

/// Baseline curve, variant curves, and a trend check for every variant with
/// a predicted direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub base: Curve,
    pub variants: Vec<Curve>,
    pub checks: Vec<TrendCheck>,
}

/// Simulates `base` and each variant with the same seed and trial indices
/// and compares their time-averaged relative gaps over [`GAP_WINDOW`].
pub fn run_trend_suite(
    label: &str,
    base: &SimConfig,
    variants: &[Variant],
    n_trials: u64,
    threads: Option<usize>,
) -> Result<TrendReport> {
    let base_curve = simulate_curve(label, base, n_trials, threads)?;
    let base_gap = relative_gap(&base_curve, GAP_WINDOW)?;
    let t_star = base.realized_t_star()?;
    let mut curves = Vec::new();
    let mut checks = Vec::new();
    for v in variants {
        let cfg = variant_config(base, *v, &t_star)?;
        let curve = simulate_curve(&format!("{label}-{}", v.label()), &cfg, n_trials, threads)?;
        if let Some(sign) = v.expected_gap_trend(&base.params) {
            let gap = relative_gap(&curve, GAP_WINDOW)?;
            checks.push(TrendCheck::new(&v.label(), sign, &base_gap, &gap)?);
        }
        curves.push(curve);
    }
    Ok(TrendReport {
        base: base_curve,
        variants: curves,
        checks,
    })
}

/// Kind of preset experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    UniformTest,
    Accuracy,
    Homology,
    TrendSweep,
}

/// Declarative description of an experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub systems: Vec<(String, SimConfig)>,
    pub variants: Vec<Variant>,
    pub n_trials: u64,
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 1 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if matches!(self.kind, ExperimentKind::Accuracy | ExperimentKind::TrendSweep)
            && self.systems.is_empty()
        {
            return Err(Error::Config("experiment needs at least one system".into()));
        }
        for (_, c) in &self.systems {
            c.validate()?;
        }
        Ok(())
    }

    /// Runs an accuracy or trend experiment: every system, then every
    /// variant of the first system.
    pub fn run(&self) -> Result<ExperimentResult> {
        self.validate()?;
        let mut systems = self.systems.clone();
        if let Some((label, base)) = self.systems.first() {
            let t_star = base.realized_t_star()?;
            for v in &self.variants {
                systems.push((
                    format!("{label}-{}", v.label()),
                    variant_config(base, *v, &t_star)?,
                ));
            }
        }
        run_accuracy(&systems, self.n_trials, self.threads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physchem::presets;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn identical_rows_have_zero_error() {
        let a = aggregate(&[vec![1.0, 5.0], vec![1.0, 5.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(a.mean, vec![1.0, 5.0]);
        assert_eq!(a.std_err, vec![0.0, 0.0]);
    }

    #[test]
    fn two_rows_by_hand() {
        let a = aggregate(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(a.mean, vec![1.0]);
        assert!((a.std_err[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn aggregate_rejects_ragged_and_empty() {
        assert!(matches!(aggregate(&[vec![1.0], vec![1.0, 2.0]]), Err(Error::Data(_))));
        assert!(aggregate::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn bernoulli_mean_within_binomial_band() {
        let p = 0.3;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
        let rows: Vec<Vec<f64>> = (0..6000)
            .map(|_| vec![if rng.gen::<f64>() < p { 1.0 } else { 0.0 }])
            .collect();
        let a = aggregate(&rows).unwrap();
        assert!((a.mean[0] - p).abs() < 3.0 * (p * (1.0 - p) / 6000.0).sqrt());
    }

    #[test]
    fn log_space_endpoints() {
        let g = log_space(1e-2, 10.0, 40);
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[39], 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn uniform_test_trends() {
        let r: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
        let t = log_space(1e-2, 10.0, 200);
        let table = run_uniform_test(&r, &t).unwrap();
        let maxes: Vec<f64> = table.sphere.iter().map(|c| DeviationTable::max_abs(c)).collect();
        assert!(maxes.windows(2).all(|w| w[1] > w[0]), "{maxes:?}");
        // r* = 0.15 column stays within 2% from t* = 0.103 on.
        for (i, &ti) in t.iter().enumerate() {
            if ti >= 0.103 {
                assert!(table.sphere[2][i].unwrap().abs() < 0.02);
            }
        }
        // One sign change per column, inside [0.1, 0.25].
        for col in &table.sphere {
            let signs: Vec<usize> = (1..t.len())
                .filter(|&i| col[i - 1].unwrap().signum() != col[i].unwrap().signum())
                .collect();
            assert_eq!(signs.len(), 1);
            assert!(t[signs[0]] >= 0.1 && t[signs[0] - 1] <= 0.25);
        }
    }

    #[test]
    fn uniform_test_validates_inputs() {
        assert!(run_uniform_test(&[1.2], &[0.1]).is_err());
        assert!(run_uniform_test(&[0.1], &[0.2, 0.1]).is_err());
    }

    #[test]
    fn homology_reports() {
        let (p1, r1) = presets::system1();
        let (p2, r2) = presets::system2();
        let rep = run_homology_check((&p1, &r1), (&p2, &r2), 1e-9).unwrap();
        assert!(rep.homologous);
        assert!((rep.a.gamma_1a - 4.12).abs() < 0.01);
        assert!((rep.b.gamma_1a - 4.12).abs() < 0.01);

        let (p3, r3) = Variant::Length(1.5).apply(&p1, &r1).unwrap();
        let rep = run_homology_check((&p1, &r1), (&p3, &r3), 1e-9).unwrap();
        assert!(!rep.homologous);
    }

    #[test]
    fn predicted_directions() {
        let (p, _) = presets::system1();
        assert_eq!(Variant::K1(2.0).expected_gap_trend(&p), Some(1.0));
        assert_eq!(Variant::K1(0.5).expected_gap_trend(&p), Some(-1.0));
        assert_eq!(Variant::K2(10.0).expected_gap_trend(&p), Some(-1.0));
        assert_eq!(Variant::K2To(2e7).expected_gap_trend(&p), Some(-1.0));
        assert_eq!(Variant::EnzymesTo(100_000).expected_gap_trend(&p), Some(-1.0));
        assert_eq!(Variant::Molecules(0.5).expected_gap_trend(&p), Some(-1.0));
        assert_eq!(Variant::Length(2.0).expected_gap_trend(&p), None);
    }

    #[test]
    fn variants_modify_one_thing() {
        let (p, r) = presets::system1();
        let (q, s) = Variant::K1(2.0).apply(&p, &r).unwrap();
        assert_eq!(q.rates.k1, 2.0 * p.rates.k1);
        assert_eq!(s, r);
        let (q, s) = Variant::Enzymes(2.0).apply(&p, &r).unwrap();
        assert_eq!(q.n_e, 2 * p.n_e);
        assert!((s.c_etot / r.c_etot - 2.0).abs() < 1e-12);
        let (q, s) = Variant::Length(2.0).apply(&p, &r).unwrap();
        assert!((q.tx_to_rx_distance() / s.length - 1.0).abs() < 1e-12);
        assert_eq!(
            q.receiver.to_dimensionless(s.length).unwrap(),
            p.receiver.to_dimensionless(r.length).unwrap()
        );
    }

    #[test]
    fn analytic_pairing_is_ordered() {
        let (p, r) = presets::system1();
        let t = log_space(1e-2, 10.0, 40);
        let (free, _, lb) = analytic_curves(&p, &r, &t).unwrap();
        assert!(free.iter().zip(&lb).all(|(f, l)| l <= f));
    }

    fn small_config(seed: u64) -> SimConfig {
        let (p, r) = presets::system1();
        let mut p = p;
        p.n_a = 100;
        p.n_e = 1300;
        p.enz_box_side = 400.0 * presets::NM;
        let r = ReferenceSet::from_params(&p, r.length, r.c0).unwrap();
        let t = log_space(0.05, 0.5, 6);
        SimConfig::new(p, r, 0.5e-6, SimConfig::t_star_to_seconds(&p, &r, &t), seed).unwrap()
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let cfg = small_config(5);
        let one = run_trials(&cfg, 12, Some(1)).unwrap();
        let three = run_trials(&cfg, 12, Some(3)).unwrap();
        assert_eq!(one, three);
        assert_eq!(one.counts.len(), 12);
    }

    #[test]
    fn gap_of_mean_equals_mean_of_trial_gaps() {
        let cfg = small_config(9);
        let curve = simulate_curve("s", &cfg, 20, Some(1)).unwrap();
        let g = relative_gap(&curve, (0.0, 1.0)).unwrap();
        let m = curve.series.mean_star();
        let idx: Vec<usize> = (0..m.len()).collect();
        let direct = idx
            .iter()
            .map(|&i| (m[i] - curve.lower_bound[i]) / curve.lower_bound[i])
            .sum::<f64>()
            / idx.len() as f64;
        assert!((g.mean - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }
}
