//! Randomized invariants of the analytic layer.

use mcph::distributions::{classify_case, BranchTable};
use mcph::functionals::{contact_cdf, pgf_count};
use mcph::geometry::{ball_volume, lens_volume, LensGeometry};
use mcph::validation::{compare, EmpiricalCdf};
use mcph::{Process, ProcessParams, QuadratureSpec};
use proptest::prelude::*;

fn vol(d: f64, r: f64, big: f64) -> f64 {
    lens_volume(&LensGeometry::new(d, r, big).unwrap())
}

fn holed(a: f64) -> ProcessParams {
    ProcessParams::from_m2(1e-5, 50.0, a, 20.0).unwrap()
}

fn process() -> impl Strategy<Value = Process> {
    prop_oneof![Just(Process::Mcp), Just(Process::Mcph)]
}

fn params_for(process: Process, a: f64) -> ProcessParams {
    match process {
        Process::Mcp => ProcessParams::mcp(1e-5, 50.0, 20.0).unwrap(),
        Process::Mcph => holed(a),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn lens_is_symmetric_and_bounded(d in 0.01f64..150.0, r in 0.1f64..80.0, big in 0.1f64..80.0) {
        let v = vol(d, r, big);
        let w = vol(d, big, r);
        prop_assert!((v - w).abs() <= 1e-9 * ball_volume(r.min(big)));
        prop_assert!(v >= 0.0);
        prop_assert!(v <= ball_volume(r.min(big)) * (1.0 + 1e-12));
    }

    #[test]
    fn lens_grows_with_r(d in 0.01f64..150.0, r in 0.1f64..80.0, dr in 0.0f64..10.0, big in 0.1f64..80.0) {
        prop_assert!(vol(d, r + dr, big) >= vol(d, r, big) - 1e-9 * ball_volume(big));
    }

    #[test]
    fn every_parent_distance_has_a_case(x in 0.0f64..300.0, a in 0.0f64..49.0, p in process()) {
        let params = params_for(p, a);
        let table = BranchTable::new(x, &params, p).unwrap();
        prop_assert_eq!(table.case_no, classify_case(x, &params, p));
        let b = table.branches();
        prop_assert_eq!(b[0].lo, 0.0);
        prop_assert_eq!(b[b.len() - 1].hi, f64::INFINITY);
        for w in b.windows(2) {
            prop_assert_eq!(w[0].hi, w[1].lo);
        }
    }

    #[test]
    fn cdf_is_continuous_at_branch_edges(x in 0.0f64..120.0, a in 0.0f64..49.0, p in process()) {
        let params = params_for(p, a);
        let table = BranchTable::new(x, &params, p).unwrap();
        let b = table.branches();
        for k in 0..b.len() - 1 {
            let edge = b[k].hi;
            let left = table.mass_of_branch(k, edge);
            let right = table.mass_of_branch(k + 1, edge);
            prop_assert!((left - right).abs() < 1e-9, "edge {} of {:?}: {} vs {}", edge, table.case_no, left, right);
        }
    }

    #[test]
    fn cdf_is_monotone(x in 0.0f64..120.0, a in 0.0f64..49.0, p in process(), r in 0.0f64..200.0, dr in 0.0f64..20.0) {
        let params = params_for(p, a);
        let table = BranchTable::new(x, &params, p).unwrap();
        let (lo, hi) = (table.cdf(r), table.cdf(r + dr));
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi >= lo - 1e-12);
        prop_assert!(table.pdf(r).value >= 0.0);
    }

    #[test]
    fn empirical_cdf_matches_counting(samples in prop::collection::vec(0.0f64..10.0, 1..200), q in -1.0f64..11.0) {
        let e = EmpiricalCdf::from_samples(samples.clone());
        let direct = samples.iter().filter(|&&s| s <= q).count() as f64 / samples.len() as f64;
        prop_assert_eq!(e.evaluate(q).unwrap(), direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pgf_is_monotone(theta in 0.0f64..0.9, dt in 0.0f64..0.1, r in 1.0f64..80.0, dr in 0.0f64..20.0, p in process()) {
        let spec = QuadratureSpec::default();
        let params = params_for(p, 15.0);
        let g = pgf_count(theta, r, &params, p, &spec).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert!(pgf_count(theta + dt, r, &params, p, &spec).unwrap() >= g - 1e-12);
        prop_assert!(pgf_count(theta, r + dr, &params, p, &spec).unwrap() <= g + 1e-12);
    }
}

#[test]
fn contact_cdf_grows_with_parent_intensity() {
    let spec = QuadratureSpec::default();
    let lo = holed(15.0);
    let hi = ProcessParams::from_m2(2e-5, 50.0, 15.0, 20.0).unwrap();
    assert_eq!(contact_cdf(0.0, &lo, Process::Mcph, &spec).unwrap(), 0.0);
    for r in (5..=100).step_by(5) {
        let r = r as f64;
        let a = contact_cdf(r, &lo, Process::Mcph, &spec).unwrap();
        let b = contact_cdf(r, &hi, Process::Mcph, &spec).unwrap();
        assert!(b > a || (a == 1.0 && b == 1.0), "r={r}: {b} <= {a}");
    }
}

#[test]
fn comparison_report_round_trips_through_json() {
    let e = EmpiricalCdf::from_observations([Some(1.0), Some(2.5), None, Some(4.0)]);
    let rep = compare(
        |r| Ok((r / 5.0).min(1.0)),
        &e,
        &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        3.0,
    )
    .unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    let back: mcph::validation::ComparisonReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
    let e_text = serde_json::to_string(&e).unwrap();
    assert_eq!(serde_json::from_str::<EmpiricalCdf>(&e_text).unwrap(), e);
}

#[test]
fn constant_zero_analytic_sup_is_max_empirical() {
    let e = EmpiricalCdf::from_samples(vec![1.0, 2.0, 3.0, 4.0]);
    let rep = compare(|_| Ok(0.0), &e, &[0.5, 1.5, 2.5], 3.0).unwrap();
    assert_eq!(rep.sup_distance, 0.5);
}
