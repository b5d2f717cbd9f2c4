//! The end-to-end validation suite run by `mcph validate` and by the
//! acceptance test target.
//!
//! Every check is deterministic in the master seed; the worker count only
//! changes how trials are scheduled. Thresholds are pinned below.

use serde::{Deserialize, Serialize};

use crate::distributions::{distance_cdf, distance_pdf, BranchTable};
use crate::error::Result;
use crate::format::{fmt_f64, fmt_sig};
use crate::functionals::{contact_cdf, pgf_count, pgfl, region_term, Indicator, TestFunction};
use crate::geometry::{ball_volume, intersection_volume, lens_volume, LensGeometry};
use crate::params::{Process, ProcessParams, SamplerMode};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::sampling::{mix_seed, substream};
use crate::validation::{compare, grid, mc_contact_distances, mc_lens_volume, ComparisonReport};

pub const K_SIGMA: f64 = 3.0;
pub const EXACT_SUP_LOW: f64 = 0.02;
pub const EXACT_SUP_HIGH: f64 = 0.04;
pub const SELFHOLE_SUP: f64 = 0.015;
pub const MCP_SUP: f64 = 0.01;
pub const NORMALIZATION_TOL: f64 = 1e-9;
pub const MIN_NORMALIZATION_CASES: usize = 14;
pub const DEGENERATE_DISTANCE_TOL: f64 = 1e-12;
pub const DEGENERATE_CONTACT_TOL: f64 = 1e-9;
pub const TANGENCY_TOL: f64 = 1e-9;
pub const PGF_UNIT_TOL: f64 = 1e-9;
pub const PGFL_PGF_TOL: f64 = 1e-6;
pub const REGION_TERM_TOL: f64 = 1e-8;

pub const BASE_RADIUS: f64 = 50.0;
pub const BASE_HOLE: f64 = 15.0;
pub const BASE_M2: f64 = 20.0;
pub const BASE_LAMBDAS: [f64; 2] = [1e-5, 2e-5];

/// Knobs of [`run_suite`]. The worker count is deliberately not part of
/// the serialized report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub master_seed: u64,
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Realizations per contact-distance comparison.
    pub trials: usize,
    pub window_radius: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    /// Points per lens-volume MC estimate.
    pub lens_points: usize,
    pub lens_geometries: usize,
    /// Realizations per run of the in-process determinism check.
    pub determinism_trials: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            master_seed: 20_240_917,
            workers: None,
            trials: 10_000,
            window_radius: 200.0,
            grid_max: 100.0,
            grid_step: 1.0,
            lens_points: 1_000_000,
            lens_geometries: 20,
            determinism_trials: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A named MC comparison kept for CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedComparison {
    pub name: String,
    pub params: ProcessParams,
    pub mode: SamplerMode,
    pub seed: u64,
    pub report: ComparisonReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub outcomes: Vec<Outcome>,
    pub comparisons: Vec<NamedComparison>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    /// One line per criterion.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            s.push_str(&outcome_line(o));
            s.push('\n');
        }
        s
    }
}

pub fn outcome_line(o: &Outcome) -> String {
    format!(
        "[{}] {}. {}: {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.detail
    )
}

pub fn baseline_params(lambda_p: f64) -> Result<ProcessParams> {
    ProcessParams::from_m2(lambda_p, BASE_RADIUS, BASE_HOLE, BASE_M2)
}

fn stream_seed(cfg: &SuiteConfig, criterion: u64, sub: u64) -> u64 {
    mix_seed(mix_seed(cfg.master_seed, criterion), sub)
}

/// Runs one MC contact comparison against the analytic curve of `mode`'s process.
#[allow(clippy::too_many_arguments)]
pub fn contact_comparison(
    params: &ProcessParams,
    mode: SamplerMode,
    window: f64,
    grid_pts: &[f64],
    trials: usize,
    seed: u64,
    workers: Option<usize>,
    spec: &QuadratureSpec,
) -> Result<ComparisonReport> {
    let sample = mc_contact_distances(params, window, mode, trials, seed, workers)?;
    compare(
        |r| contact_cdf(r, params, mode.process(), spec),
        &sample.cdf,
        grid_pts,
        K_SIGMA,
    )
}

fn sci(v: f64) -> String {
    if v == 0.0 || v.abs() >= 1e-3 {
        fmt_sig(v, 3)
    } else {
        format!("{v:.2e}")
    }
}

/// An outcome together with the MC comparisons behind it.
pub type Checked = (Outcome, Vec<NamedComparison>);

pub const CRITERIA: std::ops::RangeInclusive<u8> = 1..=9;

/// Runs criterion `id` (1 to 9).
pub fn run_criterion(id: u8, cfg: &SuiteConfig) -> Result<Checked> {
    let spec = QuadratureSpec::default();
    let g = grid(0.0, cfg.grid_max, cfg.grid_step)?;
    let plain = |o: Result<Outcome>| o.map(|o| (o, Vec::new()));
    match id {
        1 => fig2_exact(cfg, &g, &spec),
        2 => fig2_selfhole(cfg, &g, &spec),
        3 => mcp_exactness(cfg, &g, &spec),
        4 => plain(hole_count()),
        5 => plain(normalization(&spec)),
        6 => plain(degeneration(&spec)),
        7 => plain(lens_oracle(cfg)),
        8 => plain(functional_identities(&spec)),
        9 => plain(determinism(cfg, &g, &spec)),
        _ => crate::error::domain(format!("no criterion {id}")),
    }
}

/// Runs all nine criteria.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport {
        config: cfg.clone(),
        outcomes: Vec::new(),
        comparisons: Vec::new(),
    };
    for id in CRITERIA {
        let (o, c) = run_criterion(id, cfg)?;
        report.outcomes.push(o);
        report.comparisons.extend(c);
    }
    Ok(report)
}

fn fig2_exact(cfg: &SuiteConfig, g: &[f64], spec: &QuadratureSpec) -> Result<Checked> {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut comparisons = Vec::new();
    for (i, &lambda) in BASE_LAMBDAS.iter().enumerate() {
        let params = baseline_params(lambda)?;
        let limit = if i == 0 {
            EXACT_SUP_LOW
        } else {
            EXACT_SUP_HIGH
        };
        let seed = stream_seed(cfg, 1, i as u64);
        let mode = SamplerMode::McphExact;
        let rep = contact_comparison(
            &params,
            mode,
            cfg.window_radius,
            g,
            cfg.trials,
            seed,
            cfg.workers,
            spec,
        )?;
        ok &= rep.sup_distance <= limit && rep.bound_violations == 0;
        detail.push(format!(
            "lambda_p={} sup={} (limit {}) bound_violations={}",
            fmt_f64(lambda),
            sci(rep.sup_distance),
            fmt_f64(limit),
            rep.bound_violations
        ));
        comparisons.push(NamedComparison {
            name: format!("mcph-exact-{}", fmt_f64(lambda)),
            params,
            mode,
            seed,
            report: rep,
        });
    }
    let o = Outcome {
        id: 1,
        name: "MCP-H bound vs exact thinning".into(),
        passed: ok,
        detail: detail.join("; "),
    };
    Ok((o, comparisons))
}

fn fig2_selfhole(cfg: &SuiteConfig, g: &[f64], spec: &QuadratureSpec) -> Result<Checked> {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut comparisons = Vec::new();
    for (i, &lambda) in BASE_LAMBDAS.iter().enumerate() {
        let params = baseline_params(lambda)?;
        let seed = stream_seed(cfg, 2, i as u64);
        let mode = SamplerMode::McphSelfHole;
        let rep = contact_comparison(
            &params,
            mode,
            cfg.window_radius,
            g,
            cfg.trials,
            seed,
            cfg.workers,
            spec,
        )?;
        ok &= rep.passes(SELFHOLE_SUP);
        detail.push(format!(
            "lambda_p={} sup={} (limit {}) violations={}",
            fmt_f64(lambda),
            sci(rep.sup_distance),
            fmt_f64(SELFHOLE_SUP),
            rep.violations
        ));
        comparisons.push(NamedComparison {
            name: format!("mcph-selfhole-{}", fmt_f64(lambda)),
            params,
            mode,
            seed,
            report: rep,
        });
    }
    let o = Outcome {
        id: 2,
        name: "MCP-H curve vs self-hole sampler".into(),
        passed: ok,
        detail: detail.join("; "),
    };
    Ok((o, comparisons))
}

fn mcp_exactness(cfg: &SuiteConfig, g: &[f64], spec: &QuadratureSpec) -> Result<Checked> {
    let params = ProcessParams::mcp(1e-5, BASE_RADIUS, 20.0)?;
    let seed = stream_seed(cfg, 3, 0);
    let mode = SamplerMode::Mcp;
    let rep = contact_comparison(
        &params,
        mode,
        cfg.window_radius,
        g,
        cfg.trials,
        seed,
        cfg.workers,
        spec,
    )?;
    let o = Outcome {
        id: 3,
        name: "MCP curve vs sampler".into(),
        passed: rep.sup_distance <= MCP_SUP,
        detail: format!(
            "sup={} (limit {}) violations={}",
            sci(rep.sup_distance),
            fmt_f64(MCP_SUP),
            rep.violations
        ),
    };
    let c = NamedComparison {
        name: "mcp".into(),
        params,
        mode,
        seed,
        report: rep,
    };
    Ok((o, vec![c]))
}

fn hole_count() -> Result<Outcome> {
    let params = baseline_params(2e-5)?;
    let n = params.parents_in_cluster_ball();
    let four = fmt_sig(n, 4);
    let three = fmt_sig(n, 3);
    Ok(Outcome {
        id: 4,
        name: "expected parents in a cluster ball".into(),
        passed: four == "10.47" && three == "10.5",
        detail: format!("(4/3)piR^3 lambda_p = {four} (3 s.f. {three})"),
    })
}

/// `(process, ‖x‖, r0)` combinations covering every case of both formulas.
pub fn normalization_cases() -> Vec<(Process, f64, f64)> {
    let mut v = Vec::new();
    for x in [0.0, 20.0, 50.0, 80.0] {
        v.push((Process::Mcp, x, 0.0));
    }
    // r0 < R/3: case 2 is empty.
    for x in [0.0, 10.0, 16.0, 20.0, 40.0, 60.0] {
        v.push((Process::Mcph, x, 15.0));
    }
    // r0 > R/3: case 3 is empty.
    for x in [5.0, 17.0, 25.0, 45.0, 100.0] {
        v.push((Process::Mcph, x, 20.0));
    }
    // r0 = R/3: both are empty.
    v.push((Process::Mcph, 50.0 / 3.0, 50.0 / 3.0));
    v
}

fn pdf_mass(table: &BranchTable, spec: &QuadratureSpec) -> Result<f64> {
    let mut breaks = vec![0.0];
    breaks.extend(table.breakpoints());
    breaks.push(table.support_end());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(integrate_with_breaks(|r| table.pdf(r).value, &breaks, spec)?.value)
}

fn normalization(spec: &QuadratureSpec) -> Result<Outcome> {
    let spec = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        ..spec.clone()
    };
    let cases = normalization_cases();
    let mut worst: f64 = 0.0;
    let mut seen = std::collections::BTreeSet::new();
    for &(process, x, a) in &cases {
        let params = ProcessParams::new(1e-5, BASE_RADIUS, a, 20.0, 20.0)?;
        let table = BranchTable::new(x, &params, process)?;
        seen.insert((process.to_string(), table.case_no));
        worst = worst.max((pdf_mass(&table, &spec)? - 1.0).abs());
    }
    let all_cases = 2 + 6;
    Ok(Outcome {
        id: 5,
        name: "PDF normalization".into(),
        passed: cases.len() >= MIN_NORMALIZATION_CASES
            && seen.len() == all_cases
            && worst <= NORMALIZATION_TOL,
        detail: format!(
            "{} combinations, {} of {all_cases} cases, max |mass - 1| = {}",
            cases.len(),
            seen.len(),
            sci(worst)
        ),
    })
}

fn degeneration(spec: &QuadratureSpec) -> Result<Outcome> {
    let mcp = ProcessParams::mcp(1e-5, BASE_RADIUS, 20.0)?;
    let holeless = ProcessParams::new(1e-5, BASE_RADIUS, 0.0, 20.0, 20.0)?;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let x = 1.2 * i as f64;
        for j in 0..100 {
            let r = 1.5 * (j + 1) as f64;
            let (p1, p2) = (
                distance_pdf(r, x, &mcp, Process::Mcp).value,
                distance_pdf(r, x, &holeless, Process::Mcph).value,
            );
            let (c1, c2) = (
                distance_cdf(r, x, &mcp, Process::Mcp),
                distance_cdf(r, x, &holeless, Process::Mcph),
            );
            worst = worst.max((p1 - p2).abs()).max((c1 - c2).abs());
        }
    }
    let mut worst_contact: f64 = 0.0;
    for k in 1..=100 {
        let r = k as f64;
        let a = contact_cdf(r, &mcp, Process::Mcp, spec)?;
        let b = contact_cdf(r, &holeless, Process::Mcph, spec)?;
        worst_contact = worst_contact.max((a - b).abs());
    }
    Ok(Outcome {
        id: 6,
        name: "r0 = 0 degenerates to the MCP".into(),
        passed: worst <= DEGENERATE_DISTANCE_TOL && worst_contact <= DEGENERATE_CONTACT_TOL,
        detail: format!(
            "distance pdf/cdf max diff {} (limit {}), contact max diff {} (limit {})",
            sci(worst),
            sci(DEGENERATE_DISTANCE_TOL),
            sci(worst_contact),
            sci(DEGENERATE_CONTACT_TOL)
        ),
    })
}

/// Random `(dist, r, R)` triples for the lens oracle.
pub fn lens_geometries(seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    use rand::Rng;
    let mut rng = substream(seed, 0);
    (0..n)
        .map(|_| {
            let radius: f64 = rng.random_range(5.0..60.0);
            let r: f64 = rng.random_range(5.0..60.0);
            // Mostly partial overlaps, some containment and some disjoint.
            let dist: f64 = rng.random_range(0.0..1.1 * (r + radius));
            (dist, r, radius)
        })
        .collect()
}

fn lens_oracle(cfg: &SuiteConfig) -> Result<Outcome> {
    let geoms = lens_geometries(stream_seed(cfg, 7, 0), cfg.lens_geometries);
    let mut outside = 0;
    let mut worst_z: f64 = 0.0;
    for (i, &(d, r, big)) in geoms.iter().enumerate() {
        let exact = intersection_volume(d, r, big);
        let (est, se) = mc_lens_volume(
            d,
            r,
            big,
            cfg.lens_points,
            stream_seed(cfg, 7, 1 + i as u64),
        )?;
        let gap = (est - exact).abs();
        let band = (K_SIGMA * se).max(1e-9 * ball_volume(r.min(big)));
        if gap > band {
            outside += 1;
        }
        if se > 0.0 {
            worst_z = worst_z.max(gap / se);
        }
    }
    let mut worst_tangent: f64 = 0.0;
    for &(r, big) in &[(30.0, 50.0), (50.0, 30.0), (7.5, 12.0), (1.0, 100.0)] {
        let outer = lens_volume(&LensGeometry::new(r + big, r, big)?);
        let inner = lens_volume(&LensGeometry::new((big - r).abs(), r, big)?);
        let small = ball_volume(f64::min(r, big));
        worst_tangent = worst_tangent
            .max(outer.abs() / small)
            .max((inner - small).abs() / small);
    }
    Ok(Outcome {
        id: 7,
        name: "lens volume vs MC oracle".into(),
        passed: outside == 0 && worst_tangent <= TANGENCY_TOL,
        detail: format!(
            "{} geometries x {} points, {outside} outside {}se (max |z| {}), tangency max rel err {}",
            geoms.len(),
            cfg.lens_points,
            fmt_f64(K_SIGMA),
            sci(worst_z),
            sci(worst_tangent)
        ),
    })
}

/// Parent distances inside each of the six MCP-H cases, with the hole
/// radius that makes the case nonempty.
pub fn region_term_probes() -> Vec<(u8, f64, f64)> {
    vec![
        (1, 5.0, 10.0),
        (2, 17.0, 20.0),
        (3, 16.0, 15.0),
        (4, 25.0, 10.0),
        (5, 40.0, 15.0),
        (6, 70.0, 15.0),
    ]
}

fn functional_identities(spec: &QuadratureSpec) -> Result<Outcome> {
    let mut unit: f64 = 0.0;
    for process in [Process::Mcp, Process::Mcph] {
        let params = baseline_params(2e-5)?;
        for r in [1.0, 30.0, 100.0] {
            unit = unit.max((pgf_count(1.0, r, &params, process, spec)? - 1.0).abs());
        }
    }

    let mut pgfl_gap: f64 = 0.0;
    let mut pairs = 0;
    for process in [Process::Mcp, Process::Mcph] {
        let params = baseline_params(1e-5)?;
        for (theta, r) in [
            (0.0, 30.0),
            (0.3, 10.0),
            (0.5, 45.0),
            (0.8, 70.0),
            (0.95, 20.0),
            (0.0, 90.0),
        ] {
            let ind = Indicator { theta, radius: r };
            let via_pgfl = pgfl(&TestFunction::Isotropic(&ind), &params, process, spec)?.value;
            let direct = pgf_count(theta, r, &params, process, spec)?;
            pgfl_gap = pgfl_gap.max((via_pgfl - direct).abs());
            pairs += 1;
        }
    }

    let tight = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        ..spec.clone()
    };
    let mut region_gap: f64 = 0.0;
    let mut cases = std::collections::BTreeSet::new();
    for (case_no, v, a) in region_term_probes() {
        let params = ProcessParams::new(1e-5, BASE_RADIUS, a, 20.0, 20.0)?;
        let table = BranchTable::new(v, &params, Process::Mcph)?;
        cases.insert(table.case_no);
        for r in [3.0, 12.0, 20.0, 33.0, 47.0, 64.0, 90.0, 130.0] {
            let mut breaks = vec![0.0, r];
            breaks.extend(table.breakpoints().into_iter().filter(|&b| b < r));
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let quad = integrate_with_breaks(|u| table.pdf(u).value, &breaks, &tight)?.value;
            region_gap = region_gap.max((region_term(case_no, r, v, &params)? - quad).abs());
        }
    }

    Ok(Outcome {
        id: 8,
        name: "functional identities".into(),
        passed: unit <= PGF_UNIT_TOL
            && pairs >= 12
            && pgfl_gap <= PGFL_PGF_TOL
            && cases.len() == 6
            && region_gap <= REGION_TERM_TOL,
        detail: format!(
            "|G(1) - 1| = {}, pgfl vs pgf max diff {} over {pairs} pairs, region terms vs quadrature max diff {} over {} cases",
            sci(unit),
            sci(pgfl_gap),
            sci(region_gap),
            cases.len()
        ),
    })
}

fn determinism(cfg: &SuiteConfig, g: &[f64], spec: &QuadratureSpec) -> Result<Outcome> {
    let params = baseline_params(2e-5)?;
    let seed = stream_seed(cfg, 9, 0);
    let mut outputs = Vec::new();
    for workers in [1, 4, 8] {
        let mut bytes = Vec::new();
        for mode in [
            SamplerMode::McphExact,
            SamplerMode::McphSelfHole,
            SamplerMode::Mcp,
        ] {
            let p = if mode == SamplerMode::Mcp {
                ProcessParams::mcp(params.lambda_p, params.radius, params.m2)?
            } else {
                params
            };
            contact_comparison(
                &p,
                mode,
                cfg.window_radius,
                g,
                cfg.determinism_trials,
                seed,
                Some(workers),
                spec,
            )?
            .write_csv(&mut bytes)?;
        }
        outputs.push(bytes);
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(Outcome {
        id: 9,
        name: "determinism across worker counts".into(),
        passed: same,
        detail: format!(
            "{} trials per sampler at workers 1, 4, 8: {}",
            cfg.determinism_trials,
            if same { "identical" } else { "outputs differ" }
        ),
    })
}
