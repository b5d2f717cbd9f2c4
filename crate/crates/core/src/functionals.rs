//! Count PGF, contact distance distribution and PGFL of the MCP and MCP-H.
//!
//! All three reduce to the void exponent
//!
//! ```text
//! X = 4πλp ∫₀^∞ (1 - exp(-M · h(v))) v² dv
//! ```
//!
//! where `h(v)` is the mean "cost" a cluster with parent at distance `v`
//! contributes: `(1-θ)·P(d ≤ r | v)` for the PGF of the count in `b(o, r)`,
//! and `∫ (1 - g(u)) f_d(u | v) du` for a PGFL with isotropic test function `g`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::distributions::{classify_case, distance_cdf, BranchTable};
use crate::error::{domain, Error, Result};
use crate::geometry::{Point3, CONCENTRIC_EPS};
use crate::params::{Process, ProcessParams};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};

/// `∫_{min(r,b)}^{min(r,a)} 3u(d - v + u)(d + v - u) / (4cv) du`: the mass a
/// lens-type density with ball radius `d` and normalizer `c` puts between the
/// clamped limits.
#[allow(clippy::many_single_char_names)]
pub fn helper_p(a: f64, b: f64, c: f64, d: f64, r: f64, v: f64) -> f64 {
    let ma = r.min(a);
    let mb = r.min(b);
    let (ma2, mb2) = (ma * ma, mb * mb);
    3.0 / (4.0 * c * v)
        * ((d * d - v * v) * (ma2 - mb2) / 2.0 + 2.0 * v * (ma2 * ma - mb2 * mb) / 3.0
            - (ma2 * ma2 - mb2 * mb2) / 4.0)
}

fn cube_min(r: f64, a: f64) -> f64 {
    r.min(a).powi(3)
}

fn square_min(r: f64, a: f64) -> f64 {
    r.min(a).powi(2)
}

/// Closed-form `P(d ≤ r | v)` under the self-hole model for parents in
/// case `case_no` (the six region terms, one per case).
pub fn region_term(case_no: u8, r: f64, v: f64, params: &ProcessParams) -> Result<f64> {
    if !(r >= 0.0 && v >= 0.0) {
        return domain(format!("region term needs r, v >= 0 (got r={r}, v={v})"));
    }
    let actual = classify_case(v, params, Process::Mcph);
    if actual != case_no {
        return domain(format!(
            "parent distance {v} lies in case {actual}, not case {case_no}"
        ));
    }
    let big = params.radius;
    let a = params.hole_radius;
    let c = params.shell_cube();
    if v < CONCENTRIC_EPS * big {
        let rr = r.clamp(a, big);
        return Ok((rr.powi(3) - a.powi(3)) / c);
    }
    let p = |hi: f64, lo: f64, d: f64| helper_p(hi, lo, c, d, r, v);
    let flat = |hi: f64, lo: f64| {
        3.0 / 8.0 * (big * big - a * a) * (square_min(r, hi) - square_min(r, lo)) / (c * v)
    };
    let value = match case_no {
        1 => {
            cube_min(r, big - v) / c - cube_min(r, a - v) / c - p(v + a, a - v, a)
                + p(big + v, big - v, big)
        }
        2 => {
            cube_min(r, big - v) / c - cube_min(r, a - v) / c - p(big - v, a - v, a)
                + p(big + v, v + a, big)
                + flat(v + a, big - v)
        }
        3 => cube_min(r, big - v) / c - p(v + a, v - a, a) + p(big + v, big - v, big),
        4 => {
            cube_min(r, big - v) / c - p(big - v, v - a, a)
                + p(big + v, v + a, big)
                + flat(v + a, big - v)
        }
        5 => {
            cube_min(r, big - v) / c
                + p(v - a, big - v, big)
                + p(big + v, v + a, big)
                + flat(v + a, v - a)
        }
        6 => p(v - a, v - big, big) + p(big + v, v + a, big) + flat(v + a, v - a),
        _ => return domain(format!("no case {case_no}")),
    };
    Ok(value)
}

/// Closed-form `P(d ≤ r | v)` for the MCP.
pub fn mcp_mass(r: f64, v: f64, params: &ProcessParams) -> f64 {
    let big = params.radius;
    let c = big.powi(3);
    if v < CONCENTRIC_EPS * big {
        return cube_min(r, big) / c;
    }
    if v < big {
        cube_min(r, big - v) / c + helper_p(big + v, big - v, c, big, r, v)
    } else {
        helper_p(big + v, v - big, c, big, r, v)
    }
}

/// How the inner `P(d ≤ r | v)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerRoute {
    /// The clamped polynomial expressions ([`mcp_mass`], [`region_term`]).
    ClosedForm,
    /// The piecewise CDF built from ball intersection volumes.
    DistanceCdf,
    /// Adaptive quadrature of the piecewise PDF.
    PdfQuadrature,
}

fn mean_cluster_size(params: &ProcessParams, process: Process) -> f64 {
    match process {
        Process::Mcp => params.m1,
        Process::Mcph => params.m2,
    }
}

fn inner_mass(
    r: f64,
    v: f64,
    params: &ProcessParams,
    process: Process,
    route: InnerRoute,
    spec: &QuadratureSpec,
) -> Result<f64> {
    match route {
        InnerRoute::ClosedForm => match process {
            Process::Mcp => Ok(mcp_mass(r, v, params)),
            Process::Mcph => region_term(classify_case(v, params, process), r, v, params),
        },
        InnerRoute::DistanceCdf => Ok(distance_cdf(r, v, params, process)),
        InnerRoute::PdfQuadrature => {
            let t = BranchTable::new(v, params, process)?;
            let mut breaks = vec![0.0];
            breaks.extend(t.breakpoints().into_iter().filter(|&b| b > 0.0 && b < r));
            breaks.push(r.max(0.0));
            integrate_with_breaks(|u| t.pdf(u).value, &breaks, spec).map(|i| i.value)
        }
    }
}

/// Points in `(0, end)` where `v ↦ P(d ≤ r | v)` changes formula.
fn parent_breakpoints(r: f64, params: &ProcessParams, process: Process, end: f64) -> Vec<f64> {
    let big = params.radius;
    let a = match process {
        Process::Mcp => 0.0,
        Process::Mcph => params.hole_radius,
    };
    let mut pts = vec![0.0, end];
    pts.extend([(r - a).abs(), r + a, (big - r).abs(), r + big, big]);
    if process == Process::Mcph {
        let half_gap = 0.5 * (big - a);
        pts.extend([a.min(half_gap), a, a.max(half_gap), 0.5 * (big + a)]);
    }
    let mut pts: Vec<f64> = pts.into_iter().filter(|&p| p >= 0.0 && p <= end).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `4πλp ∫₀^{r+R} (1 - exp(-M(1-θ) P(d ≤ r | v))) v² dv`.
pub fn void_exponent(
    theta: f64,
    r: f64,
    params: &ProcessParams,
    process: Process,
    route: InnerRoute,
    spec: &QuadratureSpec,
) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&theta) {
        return domain(format!("theta must lie in [0, 1] (got {theta})"));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return domain(format!("r must be finite and >= 0 (got {r})"));
    }
    if params.lambda_p == 0.0 || theta == 1.0 || r == 0.0 {
        return Ok(0.0);
    }
    let weight = mean_cluster_size(params, process) * (1.0 - theta);
    // Beyond v = r + R no offspring can reach b(o, r).
    let end = r + params.radius;
    let breaks = parent_breakpoints(r, params, process, end);
    let mut failure = None;
    let integral = integrate_with_breaks(
        |v| match inner_mass(r, v, params, process, route, spec) {
            Ok(m) => -(-weight * m).exp_m1() * v * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(4.0 * PI * params.lambda_p * integral?.value)
}

/// `E[θ^N]` for the number `N` of points in `b(o, r)`.
///
/// Exact for the MCP; for the MCP-H it uses the self-hole model and is an
/// approximation.
pub fn pgf_count(
    theta: f64,
    r: f64,
    params: &ProcessParams,
    process: Process,
    spec: &QuadratureSpec,
) -> Result<f64> {
    void_exponent(theta, r, params, process, InnerRoute::ClosedForm, spec).map(|x| (-x).exp())
}

/// `P(distance from the origin to the nearest point ≤ r)`.
pub fn contact_cdf(
    r: f64,
    params: &ProcessParams,
    process: Process,
    spec: &QuadratureSpec,
) -> Result<f64> {
    contact_cdf_via(r, params, process, InnerRoute::ClosedForm, spec)
}

pub fn contact_cdf_via(
    r: f64,
    params: &ProcessParams,
    process: Process,
    route: InnerRoute,
    spec: &QuadratureSpec,
) -> Result<f64> {
    void_exponent(0.0, r, params, process, route, spec).map(|x| -(-x).exp_m1())
}

/// An isotropic test function `g(y) = g(|y|)` with values in `[0, 1]`.
pub trait RadialProfile: Sync {
    fn value(&self, u: f64) -> f64;

    /// `1 - g(u)`; override when it can be computed without cancellation.
    fn one_minus(&self, u: f64) -> f64 {
        1.0 - self.value(u)
    }

    /// Radius beyond which `g ≡ 1`, if any.
    fn support_radius(&self) -> Option<f64> {
        None
    }

    /// Radii where `g` is not smooth or changes scale.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn describe(&self) -> String;
}

/// `g(u) = θ` for `u < r`, `1` otherwise. Its PGFL is the count PGF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub theta: f64,
    pub radius: f64,
}

impl RadialProfile for Indicator {
    fn value(&self, u: f64) -> f64 {
        if u < self.radius {
            self.theta
        } else {
            1.0
        }
    }

    fn one_minus(&self, u: f64) -> f64 {
        if u < self.radius {
            1.0 - self.theta
        } else {
            0.0
        }
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.radius)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.radius]
    }

    fn describe(&self) -> String {
        format!("indicator(theta={}, r={})", self.theta, self.radius)
    }
}

/// `g(u) = exp(-s u^(-α))`, e.g. the Laplace functional of a power-law
/// path loss. Needs `α > 3` for the PGFL to be nonzero in 3D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpPower {
    pub s: f64,
    pub alpha: f64,
}

impl RadialProfile for ExpPower {
    fn value(&self, u: f64) -> f64 {
        (-self.s * u.powf(-self.alpha)).exp()
    }

    fn one_minus(&self, u: f64) -> f64 {
        -(-self.s * u.powf(-self.alpha)).exp_m1()
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.s > 0.0 {
            vec![self.s.powf(1.0 / self.alpha)]
        } else {
            Vec::new()
        }
    }

    fn describe(&self) -> String {
        format!("exp-power(s={}, alpha={})", self.s, self.alpha)
    }
}

/// Test function handed to [`pgfl`].
pub enum TestFunction<'a> {
    Isotropic(&'a dyn RadialProfile),
    /// A general `ℝ³ → [0, 1]` function. Not evaluated: there is no 3D
    /// quadrature plan, so [`pgfl`] rejects it.
    General(&'a (dyn Fn(Point3) -> f64 + Sync)),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgflResult {
    pub value: f64,
    /// `-ln value`.
    pub exponent: f64,
    /// Parent distance at which the outer integral was stopped.
    pub truncation_radius: f64,
    /// Whether the outer integral stops at the exact support end (`true`) or
    /// by the doubling rule.
    pub truncation_exact: bool,
    /// `true` for the MCP; `false` when the self-hole bound model stands in
    /// for the MCP-H.
    pub exact: bool,
    pub profile: String,
    pub process: Process,
}

/// `1 - ∫ g(u) f_d(u | v) du = ∫ (1 - g(u)) f_d(u | v) du`.
fn profile_cost(
    profile: &dyn RadialProfile,
    v: f64,
    params: &ProcessParams,
    process: Process,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let t = BranchTable::new(v, params, process)?;
    let lo = (v - params.radius).max(0.0);
    let hi = t.support_end();
    let mut hi_eff = hi;
    if let Some(s) = profile.support_radius() {
        hi_eff = hi_eff.min(s);
    }
    if hi_eff <= lo {
        return Ok(0.0);
    }
    let mut breaks = vec![lo, hi_eff];
    breaks.extend(t.breakpoints());
    breaks.extend(profile.breakpoints());
    let mut breaks: Vec<f64> = breaks
        .into_iter()
        .filter(|&b| b >= lo && b <= hi_eff)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate_with_breaks(|u| profile.one_minus(u) * t.pdf(u).value, &breaks, spec).map(|i| i.value)
}

const MAX_DOUBLINGS: usize = 64;

/// `E[∏_y g(y)]` over all points of the process.
///
/// The inner integral is radial. The outer integral over parent distances
/// stops at `ρ + R` when `1 - g` vanishes beyond `ρ`; otherwise it is
/// extended over `[L, 2L]` segments until a segment adds less than
/// `spec.abs_tol` to the exponent.
pub fn pgfl(
    test_fn: &TestFunction<'_>,
    params: &ProcessParams,
    process: Process,
    spec: &QuadratureSpec,
) -> Result<PgflResult> {
    params.validate()?;
    let profile = match test_fn {
        TestFunction::Isotropic(p) => *p,
        TestFunction::General(_) => {
            return Err(Error::Unsupported(
                "PGFL of a non-isotropic test function needs a 3D quadrature plan".into(),
            ))
        }
    };
    let weight = mean_cluster_size(params, process);
    let big = params.radius;
    let scale = 4.0 * PI * params.lambda_p;

    let mut failure = None;
    let mut outer = |a: f64, b: f64, extra: &[f64]| -> Result<f64> {
        let mut breaks = vec![a, b, big];
        breaks.extend_from_slice(extra);
        let mut breaks: Vec<f64> = breaks.into_iter().filter(|&x| x >= a && x <= b).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let res = integrate_with_breaks(
            |v| match profile_cost(profile, v, params, process, spec) {
                Ok(h) => -(-weight * h).exp_m1() * v * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            &breaks,
            spec,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(scale * res?.value)
    };

    let profile_breaks = profile.breakpoints();
    let mut kinks = Vec::new();
    for p in &profile_breaks {
        kinks.extend([(p - big).abs(), p + big]);
        if process == Process::Mcph {
            let a = params.hole_radius;
            kinks.extend([(p - a).abs(), p + a]);
        }
    }
    if process == Process::Mcph {
        let a = params.hole_radius;
        let half_gap = 0.5 * (big - a);
        kinks.extend([a.min(half_gap), a, a.max(half_gap), 0.5 * (big + a)]);
    }

    if params.lambda_p == 0.0 {
        return Ok(PgflResult {
            value: 1.0,
            exponent: 0.0,
            truncation_radius: 0.0,
            truncation_exact: true,
            exact: process == Process::Mcp,
            profile: profile.describe(),
            process,
        });
    }

    let (exponent, truncation_radius, truncation_exact) = match profile.support_radius() {
        Some(rho) => {
            let end = rho.max(0.0) + big;
            (outer(0.0, end, &kinks)?, end, true)
        }
        None => {
            let reach = profile_breaks.iter().cloned().fold(0.0, f64::max);
            let mut end = 4.0 * big + 2.0 * reach;
            let mut total = outer(0.0, end, &kinks)?;
            let mut doublings = 0;
            loop {
                let seg = outer(end, 2.0 * end, &kinks)?;
                total += seg;
                end *= 2.0;
                if seg.abs() < spec.abs_tol {
                    break;
                }
                doublings += 1;
                if doublings >= MAX_DOUBLINGS {
                    return Err(Error::Convergence {
                        estimate: (-total).exp(),
                        error: seg.abs(),
                        subdivisions: doublings,
                    });
                }
            }
            (total, end, false)
        }
    };
    Ok(PgflResult {
        value: (-exponent).exp(),
        exponent,
        truncation_radius,
        truncation_exact,
        exact: process == Process::Mcp,
        profile: profile.describe(),
        process,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::mcph_distance_pdf_ub;
    use crate::quadrature::integrate;

    fn baseline(lambda_p: f64) -> ProcessParams {
        ProcessParams::new(lambda_p, 50.0, 15.0, 20.0, 20.0).unwrap()
    }

    #[test]
    fn helper_p_clamp_saturation() {
        // r below both limits: both clamps equal r.
        assert_eq!(helper_p(70.0, 30.0, 1e5, 50.0, 20.0, 20.0), 0.0);
    }

    #[test]
    fn helper_p_full_second_branch() {
        let big = 50.0;
        for v in [5.0, 20.0, 49.0] {
            let p = helper_p(big + v, big - v, big.powi(3), big, 1e6, v);
            let expected = 1.0 - ((big - v) / big).powi(3);
            assert!((p - expected).abs() < 1e-12, "v={v}");
        }
    }

    #[test]
    fn helper_p_against_quadrature() {
        let (a, b, c, d, r, v): (f64, f64, f64, f64, f64, f64) =
            (70.0, 30.0, 125000.0 - 3375.0, 50.0, 50.0, 20.0);
        let direct = integrate(
            |u| 3.0 * u * (d - v + u) * (d + v - u) / (4.0 * c * v),
            b,
            r.min(a),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((helper_p(a, b, c, d, r, v) - direct).abs() < 1e-10);
    }

    #[test]
    fn region_term_edge_values() {
        let p = baseline(1e-5);
        for (case_no, v) in [
            (1, 5.0),
            (2, 0.0),
            (3, 0.0),
            (4, 25.0),
            (5, 40.0),
            (6, 80.0),
        ] {
            if classify_case(v, &p, Process::Mcph) != case_no {
                continue;
            }
            assert_eq!(region_term(case_no, 0.0, v, &p).unwrap(), 0.0);
            assert!((region_term(case_no, v + 50.0, v, &p).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(region_term(1, 10.0, 30.0, &p).is_err());
    }

    #[test]
    fn region_term_case4_matches_quadrature() {
        let p = baseline(1e-5);
        assert_eq!(classify_case(30.0, &p, Process::Mcph), 4);
        let t = BranchTable::new(30.0, &p, Process::Mcph).unwrap();
        let mut br = vec![0.0];
        br.extend(t.breakpoints().into_iter().filter(|&b| b < 40.0));
        br.push(40.0);
        let q = integrate_with_breaks(
            |u| mcph_distance_pdf_ub(u, 30.0, &p).value,
            &br,
            &QuadratureSpec::default(),
        )
        .unwrap()
        .value;
        assert!((region_term(4, 40.0, 30.0, &p).unwrap() - q).abs() < 1e-8);
    }

    #[test]
    fn trivial_pgf_values() {
        let spec = QuadratureSpec::default();
        let p = baseline(1e-5);
        for process in [Process::Mcp, Process::Mcph] {
            assert!((pgf_count(1.0, 30.0, &p, process, &spec).unwrap() - 1.0).abs() < 1e-9);
        }
        let empty = baseline(0.0);
        assert_eq!(
            pgf_count(0.3, 30.0, &empty, Process::Mcph, &spec).unwrap(),
            1.0
        );
        assert_eq!(contact_cdf(0.0, &p, Process::Mcph, &spec).unwrap(), 0.0);
        assert!(pgf_count(1.5, 30.0, &p, Process::Mcp, &spec).is_err());
    }

    #[test]
    fn closed_form_matches_generic_routes() {
        let spec = QuadratureSpec::default();
        for process in [Process::Mcp, Process::Mcph] {
            for r in [5.0, 20.0, 45.0, 80.0] {
                let p = baseline(2e-5);
                let a = void_exponent(0.3, r, &p, process, InnerRoute::ClosedForm, &spec).unwrap();
                let b = void_exponent(0.3, r, &p, process, InnerRoute::DistanceCdf, &spec).unwrap();
                assert!(
                    (a - b).abs() < 1e-9 * a.max(1.0),
                    "{process} r={r}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn pgfl_trivial_and_indicator() {
        let spec = QuadratureSpec::default();
        let p = baseline(1e-5);
        let one = ExpPower { s: 0.0, alpha: 4.0 };
        let res = pgfl(&TestFunction::Isotropic(&one), &p, Process::Mcp, &spec).unwrap();
        assert!((res.value - 1.0).abs() < 1e-10);

        let ind = Indicator {
            theta: 0.3,
            radius: 30.0,
        };
        let res = pgfl(&TestFunction::Isotropic(&ind), &p, Process::Mcph, &spec).unwrap();
        let g = pgf_count(0.3, 30.0, &p, Process::Mcph, &spec).unwrap();
        assert!((res.value - g).abs() < 1e-6);
        assert!(!res.exact && res.truncation_exact);
        assert_eq!(res.truncation_radius, 80.0);
    }

    #[test]
    fn pgfl_rejects_general_test_functions() {
        let f = |_: Point3| 1.0;
        let r = pgfl(
            &TestFunction::General(&f),
            &baseline(1e-5),
            Process::Mcp,
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }
}
