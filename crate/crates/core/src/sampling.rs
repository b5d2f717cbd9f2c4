//! Realizations of the parent PPP, the MCP and the MCP with holes.
//!
//! Randomness is organised in substreams of a ChaCha8 generator: stream 0 of a
//! realization seed drives the parents, stream `i + 1` drives the offspring of
//! parent `i`. Clusters are therefore independent of the order (or the
//! thread) in which they are generated, and a cluster can be skipped without
//! disturbing any other.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::format::fmt_sig;
use crate::geometry::{ball_volume, uniform_ball_unchecked, uniform_shell_unchecked, Point3};
use crate::params::{ProcessParams, SamplerMode};

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as usize
}

/// Samples a homogeneous PPP of intensity `lambda_p` restricted to `b(o, window)`.
pub fn sample_ppp_ball<R: Rng + ?Sized>(
    lambda_p: f64,
    window: f64,
    rng: &mut R,
) -> Result<Vec<Point3>> {
    if !(lambda_p >= 0.0 && lambda_p.is_finite()) {
        return domain(format!(
            "intensity must be finite and >= 0 (got {lambda_p})"
        ));
    }
    if !(window > 0.0 && window.is_finite()) {
        return domain(format!("window radius must be > 0 (got {window})"));
    }
    let n = poisson_count(lambda_p * ball_volume(window), rng);
    Ok((0..n)
        .map(|_| uniform_ball_unchecked(Point3::ORIGIN, window, rng))
        .collect())
}

/// An offspring point together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offspring {
    pub point: Point3,
    pub parent_index: usize,
    pub thinned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub parents: Vec<Point3>,
    pub offspring: Vec<Offspring>,
    /// Radius W of the observation ball; parents live in `b(o, W + R)`.
    pub window_radius: f64,
    pub mode: SamplerMode,
}

impl Realization {
    /// Retained offspring inside the observation ball.
    pub fn observed(&self) -> impl Iterator<Item = &Offspring> + '_ {
        let w2 = self.window_radius * self.window_radius;
        self.offspring
            .iter()
            .filter(move |o| !o.thinned && o.point.norm_squared() <= w2)
    }

    /// Distance from the origin to the nearest retained offspring in the window.
    pub fn contact_distance(&self) -> Option<f64> {
        self.observed()
            .map(|o| o.point.norm())
            .min_by(f64::total_cmp)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "kind,x,y,z,parent_index,thinned")?;
        for p in &self.parents {
            writeln!(
                out,
                "parent,{},{},{},-1,0",
                fmt_sig(p.x, 9),
                fmt_sig(p.y, 9),
                fmt_sig(p.z, 9)
            )?;
        }
        for o in &self.offspring {
            writeln!(
                out,
                "offspring,{},{},{},{},{}",
                fmt_sig(o.point.x, 9),
                fmt_sig(o.point.y, 9),
                fmt_sig(o.point.z, 9),
                o.parent_index,
                u8::from(o.thinned)
            )?;
        }
        Ok(())
    }
}

/// Uniform grid over parent locations for fixed-radius neighbour queries.
pub struct ParentIndex<'a> {
    parents: &'a [Point3],
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl<'a> ParentIndex<'a> {
    /// `reach` is the largest query radius that will be asked.
    pub fn new(parents: &'a [Point3], reach: f64) -> Self {
        let cell = if reach > 0.0 { reach } else { 1.0 };
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in parents.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        ParentIndex {
            parents,
            cell,
            cells,
        }
    }

    fn key(p: &Point3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// True when some parent lies strictly closer than `radius` to `q`.
    /// `radius` must not exceed the reach the index was built with.
    pub fn any_within(&self, q: &Point3, radius: f64) -> bool {
        if radius <= 0.0 {
            return false;
        }
        let (cx, cy, cz) = Self::key(q, self.cell);
        let r2 = radius * radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        if ids
                            .iter()
                            .any(|&i| self.parents[i as usize].distance_squared(q) < r2)
                        {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

fn check_window(window: f64) -> Result<()> {
    if !(window > 0.0 && window.is_finite()) {
        return domain(format!("window radius must be > 0 (got {window})"));
    }
    Ok(())
}

/// Parents of a realization: PPP in the inflated ball `b(o, W + R)`.
pub fn sample_parents(params: &ProcessParams, window: f64, seed: u64) -> Result<Vec<Point3>> {
    params.validate()?;
    check_window(window)?;
    let mut rng = substream(seed, 0);
    sample_ppp_ball(params.lambda_p, window + params.radius, &mut rng)
}

/// Offspring of parent `index`, drawn from its own substream.
fn sample_cluster(
    params: &ProcessParams,
    mode: SamplerMode,
    seed: u64,
    index: usize,
    parent: Point3,
    holes: Option<&ParentIndex<'_>>,
    out: &mut Vec<Offspring>,
) {
    let mut rng = substream(seed, index as u64 + 1);
    match mode {
        SamplerMode::Mcp => {
            let n = poisson_count(params.m1, &mut rng);
            out.extend((0..n).map(|_| Offspring {
                point: uniform_ball_unchecked(parent, params.radius, &mut rng),
                parent_index: index,
                thinned: false,
            }));
        }
        SamplerMode::McphExact => {
            let n = poisson_count(params.m1, &mut rng);
            let r0 = params.hole_radius;
            out.extend((0..n).map(|_| {
                let point = uniform_ball_unchecked(parent, params.radius, &mut rng);
                let thinned = holes.is_some_and(|h| h.any_within(&point, r0));
                Offspring {
                    point,
                    parent_index: index,
                    thinned,
                }
            }));
        }
        SamplerMode::McphSelfHole => {
            let n = poisson_count(params.m2, &mut rng);
            out.extend((0..n).map(|_| Offspring {
                point: uniform_shell_unchecked(parent, params.hole_radius, params.radius, &mut rng),
                parent_index: index,
                thinned: false,
            }));
        }
    }
}

/// Samples one realization observed in `b(o, window)`.
///
/// `MCP` and `McphExact` draw Poisson(`m1`) points per cluster; `McphSelfHole`
/// draws Poisson(`m2`) points in the shell around each parent. Offspring
/// outside the window are kept; use [`Realization::observed`] to filter.
pub fn sample_realization(
    params: &ProcessParams,
    window: f64,
    mode: SamplerMode,
    seed: u64,
) -> Result<Realization> {
    let parents = sample_parents(params, window, seed)?;
    let index = (mode == SamplerMode::McphExact && params.hole_radius > 0.0)
        .then(|| ParentIndex::new(&parents, params.hole_radius));
    let mut offspring = Vec::new();
    for (i, &p) in parents.iter().enumerate() {
        sample_cluster(params, mode, seed, i, p, index.as_ref(), &mut offspring);
    }
    Ok(Realization {
        parents,
        offspring,
        window_radius: window,
        mode,
    })
}

/// Contact distance of the realization [`sample_realization`] would produce
/// for the same arguments, without generating clusters that cannot beat the
/// current nearest point.
///
/// Returns `None` when the window holds no retained offspring.
pub fn nearest_retained_distance(
    params: &ProcessParams,
    window: f64,
    mode: SamplerMode,
    seed: u64,
) -> Result<Option<f64>> {
    let parents = sample_parents(params, window, seed)?;
    let index = (mode == SamplerMode::McphExact && params.hole_radius > 0.0)
        .then(|| ParentIndex::new(&parents, params.hole_radius));

    let mut order: Vec<(f64, usize)> = parents
        .iter()
        .enumerate()
        .map(|(i, p)| (p.norm(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best = f64::INFINITY;
    let mut buf = Vec::new();
    for (dist, i) in order {
        // Offspring of this parent are at least `dist - R` from the origin.
        if dist - params.radius > best.min(window) {
            break;
        }
        buf.clear();
        sample_cluster(params, mode, seed, i, parents[i], index.as_ref(), &mut buf);
        for o in buf.iter().filter(|o| !o.thinned) {
            let d = o.point.norm();
            if d <= window && d < best {
                best = d;
            }
        }
    }
    Ok(best.is_finite().then_some(best))
}

/// Mean retained offspring per cluster after removing the self hole, optionally
/// scaled by the first-order correction for the holes of other clusters.
pub fn derive_m2(
    m1: f64,
    hole_radius: f64,
    radius: f64,
    apply_overlap_correction: bool,
    lambda_p: f64,
) -> Result<f64> {
    if !(hole_radius >= 0.0 && hole_radius < radius) {
        return domain(format!(
            "need 0 <= r0 < R (got r0={hole_radius}, R={radius})"
        ));
    }
    let base = m1 * (1.0 - (hole_radius / radius).powi(3));
    if apply_overlap_correction {
        Ok(base * crate::distributions::hole_correction(lambda_p, hole_radius)?)
    } else {
        Ok(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline(lambda_p: f64) -> ProcessParams {
        ProcessParams::from_m2(lambda_p, 50.0, 15.0, 20.0).unwrap()
    }

    #[test]
    fn empty_ppp_for_zero_intensity() {
        let mut rng = substream(1, 0);
        assert!(sample_ppp_ball(0.0, 100.0, &mut rng).unwrap().is_empty());
        assert!(sample_ppp_ball(1e-5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn ppp_count_is_poisson() {
        let runs = 10_000;
        let counts: Vec<f64> = (0..runs)
            .map(|t| {
                let mut rng = substream(mix_seed(11, t), 0);
                sample_ppp_ball(2e-5, 50.0, &mut rng).unwrap().len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / runs as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let expected = ball_volume(50.0) * 2e-5;
        assert!((mean - expected).abs() < 0.1, "mean {mean}");
        assert!((var / mean - 1.0).abs() < 0.05, "var {var} mean {mean}");
    }

    #[test]
    fn offspring_stay_within_cluster_radius() {
        for mode in [
            SamplerMode::Mcp,
            SamplerMode::McphExact,
            SamplerMode::McphSelfHole,
        ] {
            let real = sample_realization(&baseline(2e-5), 100.0, mode, 5).unwrap();
            assert!(!real.offspring.is_empty());
            for o in &real.offspring {
                let d = o.point.distance(&real.parents[o.parent_index]);
                assert!(d <= 50.0 + 1e-9);
                if mode == SamplerMode::McphSelfHole {
                    assert!(d >= 15.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn exact_thinning_brute_force() {
        let params = baseline(2e-5);
        for seed in 0..5 {
            let real = sample_realization(&params, 60.0, SamplerMode::McphExact, seed).unwrap();
            let mut n_thinned = 0;
            for o in &real.offspring {
                let near = real
                    .parents
                    .iter()
                    .any(|p| p.distance(&o.point) < params.hole_radius);
                assert_eq!(near, o.thinned);
                n_thinned += usize::from(o.thinned);
            }
            assert!(n_thinned > 0);
        }
    }

    #[test]
    fn realization_is_reproducible() {
        let a = sample_realization(&baseline(1e-5), 80.0, SamplerMode::McphExact, 99).unwrap();
        let b = sample_realization(&baseline(1e-5), 80.0, SamplerMode::McphExact, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_realization(&baseline(1e-5), 80.0, SamplerMode::McphExact, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pruned_contact_distance_matches_full_realization() {
        for mode in [
            SamplerMode::Mcp,
            SamplerMode::McphExact,
            SamplerMode::McphSelfHole,
        ] {
            for seed in 0..40 {
                let params = baseline(1e-5);
                let full = sample_realization(&params, 120.0, mode, seed)
                    .unwrap()
                    .contact_distance();
                let fast = nearest_retained_distance(&params, 120.0, mode, seed).unwrap();
                assert_eq!(full, fast, "mode {mode} seed {seed}");
            }
        }
    }

    #[test]
    fn window_intensity_matches_campbell() {
        let params = ProcessParams::mcp(1e-5, 50.0, 20.0).unwrap();
        let runs = 1000;
        let total: usize = (0..runs)
            .map(|t| {
                sample_realization(&params, 100.0, SamplerMode::Mcp, mix_seed(3, t))
                    .unwrap()
                    .observed()
                    .count()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        let expected = 1e-5 * ball_volume(100.0) * 20.0;
        assert!(
            (mean / expected - 1.0).abs() < 0.03,
            "mean {mean} vs {expected}"
        );
    }

    #[test]
    fn selfhole_cluster_mean_is_m2() {
        let params = baseline(1e-5);
        let n = 10_000u64;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = Vec::new();
                sample_cluster(
                    &params,
                    SamplerMode::McphSelfHole,
                    17,
                    i as usize,
                    Point3::ORIGIN,
                    None,
                    &mut v,
                );
                v.len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let se =
            (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64)
                .sqrt();
        assert!((mean - 20.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn derive_m2_values() {
        assert_eq!(derive_m2(20.0, 0.0, 50.0, false, 0.0).unwrap(), 20.0);
        assert!((derive_m2(20.0, 15.0, 50.0, false, 0.0).unwrap() - 19.46).abs() < 1e-12);
        let corrected = derive_m2(20.0, 15.0, 50.0, true, 2e-5).unwrap();
        assert!(
            (corrected - 19.46 * (1.0 - 4.0 / 3.0 * std::f64::consts::PI * 2e-5 * 3375.0)).abs()
                < 1e-12
        );
        assert!((corrected - 13.958).abs() < 1e-3);
        assert!(derive_m2(20.0, 50.0, 50.0, false, 0.0).is_err());
        assert!(derive_m2(20.0, 15.0, 50.0, true, 1e-3).is_err());
    }

    #[test]
    fn selfhole_retained_fraction_matches_derive_m2() {
        // Thin Poisson(20) uniform-ball clusters by their own hole only.
        let mut rng = substream(23, 0);
        let clusters = 20_000;
        let mut kept = 0usize;
        for _ in 0..clusters {
            let n = poisson_count(20.0, &mut rng);
            for _ in 0..n {
                let p = uniform_ball_unchecked(Point3::ORIGIN, 50.0, &mut rng);
                kept += usize::from(p.norm() >= 15.0);
            }
        }
        let mean = kept as f64 / clusters as f64;
        let se = (19.46f64 / clusters as f64).sqrt();
        assert!((mean - 19.46).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn csv_layout() {
        let params = baseline(1e-5);
        let real = sample_realization(&params, 60.0, SamplerMode::McphExact, 4).unwrap();
        let mut buf = Vec::new();
        real.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kind,x,y,z,parent_index,thinned"));
        assert_eq!(
            text.lines().count(),
            1 + real.parents.len() + real.offspring.len()
        );
        assert!(text.lines().nth(1).unwrap().ends_with(",-1,0") || real.parents.is_empty());
    }
}
