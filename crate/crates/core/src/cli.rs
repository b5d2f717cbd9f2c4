//! Command-line front end.
//!
//! Settings come from built-in defaults, then an optional `key=value` config
//! file, then flags. The effective configuration is echoed into the metadata
//! JSON written next to every output file.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::distributions::BranchTable;
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::functionals::{
    contact_cdf, pgf_count, pgfl, ExpPower, Indicator, RadialProfile, TestFunction,
};
use crate::harness::{run_suite, SuiteConfig, SuiteReport};
use crate::params::{Process, ProcessParams, SamplerMode};
use crate::quadrature::QuadratureSpec;
use crate::sampling::{derive_m2, sample_realization};
use crate::validation::{compare, grid, mc_contact_distances, mc_pgfl};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mcph",
    version,
    about = "Matérn cluster processes with holes in 3D"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one realization and write it as CSV.
    Sample(SampleArgs),
    /// Conditional distance PDF/CDF for a parent at distance --x-norm.
    Distance(DistanceArgs),
    /// Contact distance CDF, optionally with a Monte Carlo overlay.
    Contact(ContactArgs),
    /// PGF of the number of points in b(o, r) on a theta grid.
    Pgf(PgfArgs),
    /// PGFL of a named isotropic test function.
    Pgfl(PgflArgs),
    /// Run the full validation suite.
    Validate(ValidateArgs),
}

/// Settings shared by every command. Each one may also be given in the
/// config file under the same name (dashes or underscores).
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat key=value config file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mcp or mcph.
    #[arg(long)]
    pub process: Option<Process>,
    /// Sampler: mcp, mcph-exact or mcph-selfhole.
    #[arg(long)]
    pub mode: Option<SamplerMode>,
    /// Parent intensity in 1/m³.
    #[arg(long)]
    pub lambda_p: Option<f64>,
    /// Cluster radius R in m.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Hole radius r0 in m.
    #[arg(long)]
    pub hole_radius: Option<f64>,
    /// Mean offspring drawn per cluster.
    #[arg(long)]
    pub m1: Option<f64>,
    /// Mean offspring retained per cluster under the self-hole model.
    #[arg(long)]
    pub m2: Option<f64>,
    /// Observation window radius W in m.
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Metadata JSON path; defaults to `<output>.json`.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Quadrature absolute tolerance.
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Quadrature relative tolerance.
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Quadrature subdivision budget.
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    /// Monte Carlo worker threads (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Distance from the origin to the parent, in m.
    #[arg(long)]
    pub x_norm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ContactArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Add an empirical column from this many realizations.
    #[arg(long)]
    pub mc: Option<usize>,
    /// Fail (exit 3) unless every grid point is within K·se and the sup
    /// distance is at most THRESHOLD. Needs --mc.
    #[arg(long, num_args = 2, value_names = ["K", "THRESHOLD"])]
    pub check: Option<Vec<f64>>,
    /// Treat trials beyond the reliable window range as a failure.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct PgfArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ball radius r in m.
    #[arg(long)]
    pub r: Option<f64>,
    /// Spacing of the theta grid on [0, 1].
    #[arg(long)]
    pub theta_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PgflArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `indicator(theta, r)` or `exp-power(s, alpha)`.
    #[arg(long)]
    pub profile: Option<String>,
    /// Also estimate the PGFL from this many realizations.
    #[arg(long)]
    pub mc: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Realizations per contact-distance comparison.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Points per lens-volume estimate.
    #[arg(long)]
    pub lens_points: Option<usize>,
    /// Realizations per run of the determinism check.
    #[arg(long)]
    pub determinism_trials: Option<usize>,
    /// Directory for report.json, summary.txt and comparison CSVs.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Parsed `key=value` file with keys normalized to underscores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "process",
    "mode",
    "lambda_p",
    "radius",
    "hole_radius",
    "m1",
    "m2",
    "window",
    "grid_min",
    "grid_max",
    "grid_step",
    "seed",
    "output",
    "meta",
    "abs_tol",
    "rel_tol",
    "max_subdivisions",
    "workers",
    "x_norm",
    "mc",
    "r",
    "theta_step",
    "profile",
    "trials",
    "lens_points",
    "determinism_trials",
    "output_dir",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!(
                    "config line {}: unknown key `{}`",
                    lineno + 1,
                    k.trim()
                )));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Parse(format!("config key `{key}`: {e}"))),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub process: Process,
    pub mode: SamplerMode,
    pub params: ProcessParams,
    pub window_radius: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub meta: Option<PathBuf>,
    pub quadrature: QuadratureSpec,
    /// Not echoed: results do not depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    /// Merges defaults, the config file named by `--config` and the flags.
    pub fn resolve(args: &CommonArgs) -> Result<(Self, ConfigFile)> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mode: Option<SamplerMode> = pick(args.mode, &file, "mode")?;
        let process: Option<Process> = pick(args.process, &file, "process")?;
        let (process, mode) = match (process, mode) {
            (Some(p), Some(m)) if m.process() != p => {
                return Err(Error::Parse(format!(
                    "sampler {m} does not simulate process {p}"
                )))
            }
            (Some(p), Some(m)) => (p, m),
            (Some(Process::Mcp), None) => (Process::Mcp, SamplerMode::Mcp),
            (Some(Process::Mcph), None) | (None, None) => (Process::Mcph, SamplerMode::McphExact),
            (None, Some(m)) => (m.process(), m),
        };

        let lambda_p = pick(args.lambda_p, &file, "lambda_p")?.unwrap_or(1e-5);
        let radius = pick(args.radius, &file, "radius")?.unwrap_or(50.0);
        let hole_default = if process == Process::Mcp { 0.0 } else { 15.0 };
        let hole = pick(args.hole_radius, &file, "hole_radius")?.unwrap_or(hole_default);
        if process == Process::Mcp && hole != 0.0 {
            return Err(Error::Parse(
                "the MCP has no holes; drop --hole-radius".into(),
            ));
        }
        let m1: Option<f64> = pick(args.m1, &file, "m1")?;
        let m2: Option<f64> = pick(args.m2, &file, "m2")?;
        let params = match (m1, m2) {
            (Some(a), Some(b)) => ProcessParams::new(lambda_p, radius, hole, a, b)?,
            (Some(a), None) => {
                let b = derive_m2(a, hole, radius, false, lambda_p)?;
                ProcessParams::new(lambda_p, radius, hole, a, b)?
            }
            (None, b) => ProcessParams::from_m2(lambda_p, radius, hole, b.unwrap_or(20.0))?,
        };

        let quadrature = QuadratureSpec {
            abs_tol: pick(args.abs_tol, &file, "abs_tol")?.unwrap_or(1e-10),
            rel_tol: pick(args.rel_tol, &file, "rel_tol")?.unwrap_or(1e-8),
            max_subdivisions: pick(args.max_subdivisions, &file, "max_subdivisions")?
                .unwrap_or(2000),
            ..QuadratureSpec::default()
        };
        quadrature.validate()?;

        let cfg = RunConfig {
            process,
            mode,
            params,
            window_radius: pick(args.window, &file, "window")?.unwrap_or(200.0),
            grid_min: pick(args.grid_min, &file, "grid_min")?.unwrap_or(0.0),
            grid_max: pick(args.grid_max, &file, "grid_max")?.unwrap_or(100.0),
            grid_step: pick(args.grid_step, &file, "grid_step")?.unwrap_or(1.0),
            seed: pick(args.seed, &file, "seed")?.unwrap_or(DEFAULT_SEED),
            output: pick(args.output.clone(), &file, "output")?,
            meta: pick(args.meta.clone(), &file, "meta")?,
            quadrature,
            workers: pick(args.workers, &file, "workers")?,
        };
        if cfg.workers == Some(0) {
            return Err(Error::Parse("--workers must be at least 1".into()));
        }
        Ok((cfg, file))
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.grid_min < 0.0 {
            return Err(Error::Domain("grid must start at r >= 0".into()));
        }
        grid(self.grid_min, self.grid_max, self.grid_step)
    }

    fn meta_path(&self) -> Option<PathBuf> {
        self.meta.clone().or_else(|| {
            self.output.as_ref().map(|o| {
                let mut s = o.clone().into_os_string();
                s.push(".json");
                PathBuf::from(s)
            })
        })
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout())),
    })
}

#[derive(Serialize)]
struct Meta<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    extra: T,
}

fn write_meta<T: Serialize>(cfg: &RunConfig, command: &str, extra: T) -> Result<()> {
    if let Some(path) = cfg.meta_path() {
        let meta = Meta {
            command,
            config: cfg,
            extra,
        };
        let text =
            serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(format!("metadata: {e}")))?;
        fs::write(&path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Exit status of a command that ran to completion.
pub type Status = i32;

fn cmd_sample(args: &SampleArgs) -> Result<Status> {
    let (cfg, _) = RunConfig::resolve(&args.common)?;
    let real = sample_realization(&cfg.params, cfg.window_radius, cfg.mode, cfg.seed)?;
    let thinned = real.offspring.iter().filter(|o| o.thinned).count();
    let observed = real.observed().count();
    let mut out = open_output(&cfg.output)?;
    real.write_csv(&mut out)?;
    out.flush()?;
    #[derive(Serialize)]
    struct Counts {
        parents: usize,
        offspring: usize,
        thinned: usize,
        retained_in_window: usize,
    }
    let counts = Counts {
        parents: real.parents.len(),
        offspring: real.offspring.len(),
        thinned,
        retained_in_window: observed,
    };
    eprintln!(
        "parents={} offspring={} thinned={} retained_in_window={}",
        counts.parents, counts.offspring, counts.thinned, counts.retained_in_window
    );
    write_meta(&cfg, "sample", counts)?;
    Ok(EXIT_OK)
}

fn cmd_distance(args: &DistanceArgs) -> Result<Status> {
    let (cfg, file) = RunConfig::resolve(&args.common)?;
    let x_norm: f64 = pick(args.x_norm, &file, "x_norm")?
        .ok_or_else(|| Error::Parse("--x-norm is required".into()))?;
    let table = BranchTable::new(x_norm, &cfg.params, cfg.process)?;
    let mut out = open_output(&cfg.output)?;
    writeln!(out, "r,pdf,cdf,case_no,branch_no")?;
    for r in cfg.grid()? {
        let e = table.pdf(r);
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r),
            fmt_f64(e.value),
            fmt_f64(table.cdf(r)),
            e.case.case_no,
            e.case.branch_no
        )?;
    }
    out.flush()?;
    #[derive(Serialize)]
    struct Extra {
        x_norm: f64,
        case_no: u8,
    }
    write_meta(
        &cfg,
        "distance",
        Extra {
            x_norm,
            case_no: table.case_no,
        },
    )?;
    Ok(EXIT_OK)
}

fn cmd_contact(args: &ContactArgs) -> Result<Status> {
    let (cfg, file) = RunConfig::resolve(&args.common)?;
    let g = cfg.grid()?;
    let spec = &cfg.quadrature;
    let mc: Option<usize> = pick(args.mc, &file, "mc")?;
    if args.check.is_some() && mc.is_none() {
        return Err(Error::Parse("--check needs --mc".into()));
    }
    let analytic = |r: f64| contact_cdf(r, &cfg.params, cfg.process, spec);
    let mut out = open_output(&cfg.output)?;

    #[derive(Serialize, Default)]
    struct Extra {
        mc_trials: Option<usize>,
        sup_distance: Option<f64>,
        violations: Option<usize>,
        censored: Option<usize>,
        beyond_reliable_range: Option<usize>,
        check: Option<Vec<f64>>,
        passed: Option<bool>,
    }
    let mut extra = Extra::default();
    let mut status = EXIT_OK;

    match mc {
        None => {
            writeln!(out, "r,F_CD")?;
            for &r in &g {
                writeln!(out, "{},{}", fmt_f64(r), fmt_f64(analytic(r)?))?;
            }
        }
        Some(n) => {
            let reliable = cfg.window_radius - cfg.params.radius;
            if cfg.grid_max > reliable {
                return Err(Error::Domain(format!(
                    "grid max {} exceeds W - R = {reliable}; enlarge --window",
                    cfg.grid_max
                )));
            }
            let k = args.check.as_ref().map_or(3.0, |c| c[0]);
            let sample = mc_contact_distances(
                &cfg.params,
                cfg.window_radius,
                cfg.mode,
                n,
                cfg.seed,
                cfg.workers,
            )?;
            let rep = compare(analytic, &sample.cdf, &g, k)?;
            writeln!(out, "r,F_CD,empirical,se")?;
            for i in 0..g.len() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(g[i]),
                    fmt_f64(rep.analytic[i]),
                    fmt_f64(rep.empirical[i]),
                    fmt_f64(rep.se[i])
                )?;
            }
            if sample.beyond_reliable_range > 0 {
                eprintln!(
                    "warning: {} of {n} trials had no retained point within W - R = {reliable}",
                    sample.beyond_reliable_range
                );
                if args.strict {
                    status = EXIT_CHECK;
                }
            }
            if let Some(c) = &args.check {
                let ok = rep.passes(c[1]);
                eprintln!(
                    "check k={} threshold={}: sup_distance={} violations={} -> {}",
                    fmt_f64(c[0]),
                    fmt_f64(c[1]),
                    fmt_f64(rep.sup_distance),
                    rep.violations,
                    if ok { "pass" } else { "fail" }
                );
                extra.passed = Some(ok);
                extra.check = Some(c.clone());
                if !ok {
                    status = EXIT_CHECK;
                }
            }
            extra.mc_trials = Some(n);
            extra.sup_distance = Some(rep.sup_distance);
            extra.violations = Some(rep.violations);
            extra.censored = Some(rep.censored);
            extra.beyond_reliable_range = Some(sample.beyond_reliable_range);
        }
    }
    out.flush()?;
    write_meta(&cfg, "contact", extra)?;
    Ok(status)
}

fn cmd_pgf(args: &PgfArgs) -> Result<Status> {
    let (cfg, file) = RunConfig::resolve(&args.common)?;
    let r: f64 = pick(args.r, &file, "r")?.ok_or_else(|| Error::Parse("--r is required".into()))?;
    let step = pick(args.theta_step, &file, "theta_step")?.unwrap_or(0.05);
    let thetas = grid(0.0, 1.0, step)?;
    let mut out = open_output(&cfg.output)?;
    writeln!(out, "theta,G_N")?;
    for theta in thetas {
        let gn = pgf_count(theta, r, &cfg.params, cfg.process, &cfg.quadrature)?;
        writeln!(out, "{},{}", fmt_f64(theta), fmt_f64(gn))?;
    }
    out.flush()?;
    #[derive(Serialize)]
    struct Extra {
        r: f64,
        theta_step: f64,
    }
    write_meta(
        &cfg,
        "pgf",
        Extra {
            r,
            theta_step: step,
        },
    )?;
    Ok(EXIT_OK)
}

/// A profile named on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedProfile {
    Indicator(Indicator),
    ExpPower(ExpPower),
}

impl NamedProfile {
    pub fn as_profile(&self) -> &dyn RadialProfile {
        match self {
            NamedProfile::Indicator(p) => p,
            NamedProfile::ExpPower(p) => p,
        }
    }
}

impl FromStr for NamedProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s.find('(');
        let (name, rest) = match open {
            Some(i) if s.ends_with(')') => (s[..i].trim(), &s[i + 1..s.len() - 1]),
            _ => return Err(Error::Parse(format!("profile `{s}`: expected name(a, b)"))),
        };
        let nums = rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("profile `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != 2 || nums.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!(
                "profile `{s}`: expected two finite numbers"
            )));
        }
        match name {
            "indicator" => {
                if !(0.0..=1.0).contains(&nums[0]) || nums[1] < 0.0 {
                    return Err(Error::Parse(format!(
                        "profile `{s}`: need theta in [0, 1] and r >= 0"
                    )));
                }
                Ok(NamedProfile::Indicator(Indicator {
                    theta: nums[0],
                    radius: nums[1],
                }))
            }
            "exp-power" => {
                if nums[0] < 0.0 || nums[1] <= 3.0 {
                    return Err(Error::Parse(format!(
                        "profile `{s}`: need s >= 0 and alpha > 3"
                    )));
                }
                Ok(NamedProfile::ExpPower(ExpPower {
                    s: nums[0],
                    alpha: nums[1],
                }))
            }
            other => Err(Error::Parse(format!("unsupported profile `{other}`"))),
        }
    }
}

fn cmd_pgfl(args: &PgflArgs) -> Result<Status> {
    let (cfg, file) = RunConfig::resolve(&args.common)?;
    let spec_text: String = pick(args.profile.clone(), &file, "profile")?
        .ok_or_else(|| Error::Parse("--profile is required".into()))?;
    let named: NamedProfile = spec_text.parse()?;
    let profile = named.as_profile();
    let res = pgfl(
        &TestFunction::Isotropic(profile),
        &cfg.params,
        cfg.process,
        &cfg.quadrature,
    )?;
    let mc: Option<usize> = pick(args.mc, &file, "mc")?;
    let estimate = match mc {
        Some(n) => Some(mc_pgfl(
            profile,
            &cfg.params,
            cfg.window_radius,
            cfg.mode,
            n,
            cfg.seed,
            cfg.workers,
        )?),
        None => None,
    };

    #[derive(Serialize)]
    struct Out<'a> {
        command: &'a str,
        value: f64,
        exponent: f64,
        truncation_radius: f64,
        truncation_exact: bool,
        exact: bool,
        profile: String,
        mc_trials: Option<usize>,
        mc_mean: Option<f64>,
        mc_se: Option<f64>,
        config: &'a RunConfig,
    }
    let out_doc = Out {
        command: "pgfl",
        value: res.value,
        exponent: res.exponent,
        truncation_radius: res.truncation_radius,
        truncation_exact: res.truncation_exact,
        exact: res.exact,
        profile: res.profile.clone(),
        mc_trials: mc,
        mc_mean: estimate.map(|e| e.0),
        mc_se: estimate.map(|e| e.1),
        config: &cfg,
    };
    let text =
        serde_json::to_string_pretty(&out_doc).map_err(|e| Error::Io(format!("result: {e}")))?;
    let mut out = open_output(&cfg.output)?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(EXIT_OK)
}

/// Writes the suite's report, summary and comparison CSVs under `dir`.
pub fn write_suite_outputs(report: &SuiteReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let json =
        serde_json::to_string_pretty(report).map_err(|e| Error::Io(format!("report: {e}")))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    fs::write(dir.join("summary.txt"), report.summary())?;
    for c in &report.comparisons {
        let mut buf = Vec::new();
        c.report.write_csv(&mut buf)?;
        fs::write(dir.join(format!("{}.csv", c.name)), buf)?;
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<Status> {
    let file = match &args.common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let defaults = SuiteConfig::default();
    let cfg = SuiteConfig {
        master_seed: pick(args.common.seed, &file, "seed")?.unwrap_or(defaults.master_seed),
        workers: pick(args.common.workers, &file, "workers")?,
        trials: pick(args.trials, &file, "trials")?.unwrap_or(defaults.trials),
        window_radius: pick(args.common.window, &file, "window")?.unwrap_or(defaults.window_radius),
        grid_max: pick(args.common.grid_max, &file, "grid_max")?.unwrap_or(defaults.grid_max),
        grid_step: pick(args.common.grid_step, &file, "grid_step")?.unwrap_or(defaults.grid_step),
        lens_points: pick(args.lens_points, &file, "lens_points")?.unwrap_or(defaults.lens_points),
        lens_geometries: defaults.lens_geometries,
        determinism_trials: pick(args.determinism_trials, &file, "determinism_trials")?
            .unwrap_or(defaults.determinism_trials),
    };
    if cfg.workers == Some(0) {
        return Err(Error::Parse("--workers must be at least 1".into()));
    }
    if cfg.trials == 0 || cfg.lens_points == 0 || cfg.determinism_trials == 0 {
        return Err(Error::Parse(
            "trial and point counts must be positive".into(),
        ));
    }
    if cfg.grid_max > cfg.window_radius - crate::harness::BASE_RADIUS {
        return Err(Error::Domain(format!(
            "grid max {} exceeds W - R; enlarge --window",
            cfg.grid_max
        )));
    }
    let report = run_suite(&cfg)?;
    let dir: Option<PathBuf> = pick(args.output_dir.clone(), &file, "output_dir")?;
    if let Some(dir) = dir {
        write_suite_outputs(&report, &dir)?;
    }
    print!("{}", report.summary());
    io::stdout().flush()?;
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK
    })
}

/// Exit code for an error that stopped a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Unsupported(_) | Error::Domain(_) => EXIT_USAGE,
        Error::Convergence { .. } | Error::Io(_) => EXIT_NUMERIC,
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Contact(a) => cmd_contact(a),
        Command::Pgf(a) => cmd_pgf(a),
        Command::Pgfl(a) => cmd_pgfl(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
