//! Command-line front end.

use crate::analytic::{lower_bound_peak, LowerBoundParams};
use crate::config::{load_config, RunConfig};
use crate::error::{Error, Result};
use crate::harness::{
    self, analytic_curves, config_hash, run_homology_check, run_trend_suite,
    run_uniform_test, simulate_curve, Curve, Variant,
};
use crate::output::{self, svg_plot, write_file, Line};
use crate::physchem::{dimensionless_constants, DimensionlessConstants, DEFAULT_HOMOLOGY_TOL};
use crate::simulator::SimConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Exit status for a completed homology check whose systems differ.
pub const EXIT_NOT_HOMOLOGOUS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "molcomm", version, about = "Diffusive molecular communication with enzymes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form expected receiver counts for a configuration.
    Analytic {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Deviation of the uniform-concentration approximation versus receiver size.
    UniformTest {
        /// Largest receiver radius, in units of the receiver distance.
        #[arg(long, default_value_t = 0.5)]
        rmax: f64,
        /// Receiver radius increment.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 1e-2)]
        t_min: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Shape::Sphere)]
        shape: Shape,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Monte Carlo receiver counts for one configuration.
    Simulate {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Simulated versus analytic curves for one or more systems, with
    /// optional single-parameter variants of the first.
    Accuracy {
        /// Repeatable; each file yields `<stem>.csv`.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        fast: bool,
        #[command(flatten)]
        run: RunArgs,
        /// Also simulate the representative variant sweep of the first system.
        #[arg(long)]
        variants: bool,
        /// Also run the gap-trend suite on the first system and write `trends.csv`.
        #[arg(long)]
        trends: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Write an SVG next to every CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Compares the dimensionless constants of two configurations.
    Homology {
        #[arg(long)]
        config_a: PathBuf,
        #[arg(long)]
        config_b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_HOMOLOGY_TOL)]
        rel_tol: f64,
    },
    /// Time and height of the lower-bound peak.
    Peak {
        #[command(flatten)]
        sys: SystemArgs,
    },
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Scaled-down profile: a tenth of the molecules at equal concentrations,
    /// 600 trials.
    #[arg(long)]
    pub fast: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured trial count.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sphere,
    Cube,
}

/// Parses `argv`, runs the command, and returns the process exit status.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match run(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn load(sys: &SystemArgs) -> Result<RunConfig> {
    let cfg = load_config(&sys.config)?;
    if sys.fast {
        cfg.fast()
    } else {
        Ok(cfg)
    }
}

fn apply_overrides(cfg: &mut RunConfig, run: &RunArgs) -> Result<()> {
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(n) = run.trials {
        if n == 0 {
            return Err(Error::Config("--trials must be >= 1".into()));
        }
        cfg.n_trials = n;
    }
    if run.threads == Some(0) {
        return Err(Error::Config("--threads must be >= 1".into()));
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "system".into())
}

fn emit(out: &mut dyn Write, path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => out
            .write_all(contents.as_bytes())
            .map_err(|e| Error::Io { path: "stdout".into(), reason: e.to_string() }),
    }
}

fn curve_svg(c: &Curve) -> String {
    let mean = c.series.mean_star();
    svg_plot(
        &c.label,
        &c.series.t_star,
        &[
            Line { name: "simulated", y: &mean },
            Line { name: "no enzyme", y: &c.analytic_no_enzyme },
            Line { name: "lower bound", y: &c.lower_bound },
        ],
    )
}

fn print_constants(out: &mut dyn Write, label: &str, g: &DimensionlessConstants) -> std::io::Result<()> {
    writeln!(out, "{label}: {}", output::constants_line(g))
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::Io { path: "stdout".into(), reason: e.to_string() };
    match cmd {
        Command::Analytic { sys, out: path, svg } => {
            let cfg = load(&sys)?;
            let sim = cfg.sim_config()?;
            let t_star = cfg.t_star_grid();
            let t_sec = SimConfig::t_star_to_seconds(&cfg.params, &cfg.refs, &t_star);
            let (free, exact, lb) = analytic_curves(&cfg.params, &cfg.refs, &t_star)?;
            let g = dimensionless_constants(&cfg.params, &cfg.refs)?;
            let csv = output::analytic_csv(
                &stem(&sys.config),
                &config_hash(&sim),
                &g,
                &t_star,
                &t_sec,
                (&free, &exact, &lb),
            );
            emit(out, path.as_deref(), &csv)?;
            if let Some(p) = svg {
                let plot = svg_plot(
                    &stem(&sys.config),
                    &t_star,
                    &[
                        Line { name: "no enzyme", y: &free },
                        Line { name: "exact no enzyme", y: &exact },
                        Line { name: "lower bound", y: &lb },
                    ],
                );
                write_file(&p, &plot)?;
            }
        }
        Command::UniformTest { rmax, step, t_min, t_max, samples, shape, out: path, svg } => {
            if !(step > 0.0 && rmax >= step && rmax < 1.0) {
                return Err(Error::Config("need 0 < --step <= --rmax < 1".into()));
            }
            if !(t_min > 0.0 && t_max > t_min && samples >= 2) {
                return Err(Error::Config("need 0 < --t-min < --t-max and --samples >= 2".into()));
            }
            let n = (rmax / step + 1e-9).floor() as usize;
            let radii: Vec<f64> = (1..=n).map(|i| i as f64 * step).collect();
            let t = harness::log_space(t_min, t_max, samples);
            let table = run_uniform_test(&radii, &t)?;
            let cube = shape == Shape::Cube;
            emit(out, path.as_deref(), &output::deviation_csv(&table, cube))?;
            if let Some(p) = svg {
                let cols = if cube { &table.cube } else { &table.sphere };
                let ys: Vec<Vec<f64>> = cols
                    .iter()
                    .map(|c| c.iter().map(|v| v.unwrap_or(f64::NAN)).collect())
                    .collect();
                let names: Vec<String> = radii.iter().map(|r| format!("r* = {r:.2}")).collect();
                let lines: Vec<Line> = names
                    .iter()
                    .zip(&ys)
                    .map(|(name, y)| Line { name, y })
                    .collect();
                write_file(&p, &svg_plot("uniform-approximation deviation", &t, &lines))?;
            }
        }
        Command::Simulate { sys, run, out: path, svg } => {
            let mut cfg = load(&sys)?;
            apply_overrides(&mut cfg, &run)?;
            let curve = simulate_curve(&stem(&sys.config), &cfg.sim_config()?, cfg.n_trials, run.threads)?;
            emit(out, path.as_deref(), &output::time_series_csv(&curve))?;
            if let Some(p) = svg {
                write_file(&p, &curve_svg(&curve))?;
            }
        }
        Command::Accuracy { configs, fast, run, variants, trends, out_dir, svg } => {
            let mut systems = Vec::new();
            let mut n_trials = None;
            for path in &configs {
                let mut cfg = load(&SystemArgs { config: path.clone(), fast })?;
                apply_overrides(&mut cfg, &run)?;
                n_trials.get_or_insert(cfg.n_trials);
                systems.push((stem(path), cfg.sim_config()?));
            }
            let n_trials = n_trials.expect("at least one config");
            let mut curves = Vec::new();
            for (label, cfg) in &systems {
                curves.push(simulate_curve(label, cfg, n_trials, run.threads)?);
            }
            let (base_label, base) = &systems[0];
            if variants {
                let t_star = base.realized_t_star()?;
                for v in Variant::sweep() {
                    match harness::variant_config(base, v, &t_star) {
                        Ok(cfg) => curves.push(simulate_curve(
                            &format!("{base_label}-{}", v.label()),
                            &cfg,
                            n_trials,
                            run.threads,
                        )?),
                        Err(e) => writeln!(out, "skipping variant {}: {e}", v.label()).map_err(io)?,
                    }
                }
            }
            if trends {
                let report = run_trend_suite(base_label, base, &Variant::trend_suite(), n_trials, run.threads)?;
                write_file(&out_dir.join("trends.csv"), &output::trends_csv(&report.base, &report.checks))?;
                for c in &report.checks {
                    writeln!(
                        out,
                        "trend {}: gap {:+.4} -> {:+.4} (change {:+.4}, combined se {:.4}) {}",
                        c.label,
                        c.base_gap,
                        c.variant_gap,
                        c.diff,
                        c.combined_se,
                        if c.holds() { "as expected" } else { "not resolved" }
                    )
                    .map_err(io)?;
                }
                curves.extend(report.variants);
            }
            for c in &curves {
                let file = out_dir.join(format!("{}.csv", c.label));
                write_file(&file, &output::time_series_csv(c))?;
                if svg {
                    write_file(&file.with_extension("svg"), &curve_svg(c))?;
                }
                writeln!(out, "wrote {}", file.display()).map_err(io)?;
            }
        }
        Command::Homology { config_a, config_b, rel_tol } => {
            let a = load_config(&config_a)?;
            let b = load_config(&config_b)?;
            let rep = run_homology_check((&a.params, &a.refs), (&b.params, &b.refs), rel_tol)?;
            print_constants(out, &stem(&config_a), &rep.a).map_err(io)?;
            print_constants(out, &stem(&config_b), &rep.b).map_err(io)?;
            let diffs: Vec<String> = DimensionlessConstants::NAMES
                .iter()
                .zip(rep.rel_diff)
                .map(|(n, d)| format!("{n}={d:.3e}"))
                .collect();
            writeln!(out, "relative differences: {}", diffs.join(" ")).map_err(io)?;
            writeln!(out, "homologous: {} (tolerance {rel_tol:e})", rep.homologous).map_err(io)?;
            if !rep.homologous {
                return Ok(EXIT_NOT_HOMOLOGOUS);
            }
        }
        Command::Peak { sys } => {
            let cfg = load(&sys)?;
            let lb = LowerBoundParams::from_system(&cfg.params, &cfg.refs)?;
            let peak = lower_bound_peak(&lb, &cfg.params, &cfg.refs)?;
            writeln!(
                out,
                "t_max = {:.4} us (t* = {:.6})\npeak = {:.4} molecules (count* = {:.6e})",
                peak.t_seconds * 1e6,
                peak.t_star,
                peak.count,
                peak.count_star
            )
            .map_err(io)?;
        }
    }
    Ok(0)
}
