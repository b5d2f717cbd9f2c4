//! Monte Carlo oracles and empirical-versus-analytical comparison.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::format::fmt_f64;
use crate::functionals::RadialProfile;
use crate::geometry::{uniform_ball_unchecked, uniform_shell_unchecked, Point3};
use crate::params::{ProcessParams, SamplerMode};
use crate::sampling::{
    mix_seed, nearest_retained_distance, poisson_count, sample_ppp_ball, sample_realization,
    substream, ParentIndex,
};

/// Runs `f(0..n)` on `workers` threads (all available when `None`), in index order.
pub fn run_trials<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}

/// Empirical CDF of a sample that may contain censored (`+∞`) observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted_samples: Vec<f64>,
    n: usize,
    censored: usize,
}

impl EmpiricalCdf {
    /// `None` entries are observations censored at `+∞`.
    pub fn from_observations(obs: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut censored = 0;
        let mut sorted_samples = Vec::new();
        for o in obs {
            match o {
                Some(v) if v.is_finite() => sorted_samples.push(v),
                _ => censored += 1,
            }
        }
        sorted_samples.sort_by(f64::total_cmp);
        let n = sorted_samples.len() + censored;
        EmpiricalCdf {
            sorted_samples,
            n,
            censored,
        }
    }

    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self::from_observations(samples.into_iter().map(Some))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn censored(&self) -> usize {
        self.censored
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    /// Fraction of observations `≤ r`.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        if self.n == 0 {
            return domain("empirical CDF of an empty sample is undefined");
        }
        let k = self.sorted_samples.partition_point(|&s| s <= r);
        Ok(k as f64 / self.n as f64)
    }

    /// Binomial standard error `√(F(1-F)/n)` at `r`.
    pub fn se(&self, r: f64) -> Result<f64> {
        let f = self.evaluate(r)?;
        Ok((f * (1.0 - f) / self.n as f64).sqrt())
    }

    /// Largest `|F_n(r) - F(r)|` over the sample points and their left limits.
    pub fn sup_distance_to<F: Fn(f64) -> f64>(&self, cdf: F) -> Result<f64> {
        if self.n == 0 {
            return domain("empirical CDF of an empty sample is undefined");
        }
        let n = self.n as f64;
        let mut sup: f64 = 0.0;
        for (i, &s) in self.sorted_samples.iter().enumerate() {
            let f = cdf(s);
            sup = sup
                .max((f - i as f64 / n).abs())
                .max(((i + 1) as f64 / n - f).abs());
        }
        Ok(sup)
    }
}

/// Pointwise comparison of an analytical CDF with an empirical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub grid: Vec<f64>,
    pub analytic: Vec<f64>,
    pub empirical: Vec<f64>,
    pub se: Vec<f64>,
    pub sup_distance: f64,
    /// Points where `|analytic - empirical| > k·se`.
    pub violations: usize,
    /// Points where `analytic < empirical - k·se` (an upper bound failing).
    pub bound_violations: usize,
    pub k_sigma: f64,
    pub n_trials: usize,
    pub censored: usize,
}

impl ComparisonReport {
    pub fn passes(&self, sup_threshold: f64) -> bool {
        self.violations == 0 && self.sup_distance <= sup_threshold
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,analytic,empirical,se")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.grid[i]),
                fmt_f64(self.analytic[i]),
                fmt_f64(self.empirical[i]),
                fmt_f64(self.se[i])
            )?;
        }
        Ok(())
    }
}

/// Compares `analytic` with `empirical` on `grid`.
///
/// The standard error at each point is the binomial one evaluated at the
/// larger of `F(1-F)` for the analytical and the empirical value, so that a
/// point where one of the two is exactly 0 or 1 still gets a nonzero band.
pub fn compare<F>(
    analytic: F,
    empirical: &EmpiricalCdf,
    grid: &[f64],
    k_sigma: f64,
) -> Result<ComparisonReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if empirical.is_empty() {
        return domain("cannot compare against an empty sample");
    }
    let n = empirical.len() as f64;
    let mut report = ComparisonReport {
        grid: grid.to_vec(),
        analytic: Vec::with_capacity(grid.len()),
        empirical: Vec::with_capacity(grid.len()),
        se: Vec::with_capacity(grid.len()),
        sup_distance: 0.0,
        violations: 0,
        bound_violations: 0,
        k_sigma,
        n_trials: empirical.len(),
        censored: empirical.censored(),
    };
    for &r in grid {
        let a = analytic(r)?;
        let e = empirical.evaluate(r)?;
        let var = (a * (1.0 - a)).max(e * (1.0 - e)).max(0.0);
        let se = (var / n).sqrt();
        let gap = (a - e).abs();
        report.sup_distance = report.sup_distance.max(gap);
        if gap > k_sigma * se {
            report.violations += 1;
        }
        if a < e - k_sigma * se {
            report.bound_violations += 1;
        }
        report.analytic.push(a);
        report.empirical.push(e);
        report.se.push(se);
    }
    Ok(report)
}

/// Contact distances from `n_trials` independent realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSample {
    pub cdf: EmpiricalCdf,
    pub window_radius: f64,
    /// Trials whose nearest point lies beyond `W - R` (or with no point at
    /// all). Such trials sit outside the range the window was sized for.
    pub beyond_reliable_range: usize,
    pub master_seed: u64,
    pub mode: SamplerMode,
}

/// Samples the contact distance of `n_trials` realizations. Trial `t` uses
/// realization seed `mix_seed(master_seed, t)`.
pub fn mc_contact_distances(
    params: &ProcessParams,
    window: f64,
    mode: SamplerMode,
    n_trials: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<ContactSample> {
    params.validate()?;
    if !(window > params.radius) {
        return domain(format!(
            "window radius {window} must exceed the cluster radius {}",
            params.radius
        ));
    }
    let obs = run_trials(n_trials, workers, |t| {
        nearest_retained_distance(params, window, mode, mix_seed(master_seed, t as u64))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let reliable = window - params.radius;
    let beyond_reliable_range = obs
        .iter()
        .filter(|o| o.is_none_or(|d| d > reliable))
        .count();
    Ok(ContactSample {
        cdf: EmpiricalCdf::from_observations(obs),
        window_radius: window,
        beyond_reliable_range,
        master_seed,
        mode,
    })
}

/// How the offspring of a single cluster are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterMode {
    /// Uniform in `b(x, R)`.
    Ball,
    /// Uniform in `b(x, R) \ b(x, r0)`.
    Shell,
    /// Poisson(`m1`) candidates in `b(x, R)` removed when within `r0` of `x`
    /// or of any parent of an independent PPP of intensity `λp`.
    ExactThinned,
}

/// Empirical CDF of `|x + Y|` for offspring `Y` of a cluster with parent at
/// `x = (x_norm, 0, 0)`.
///
/// In `ExactThinned` mode whole clusters are drawn until at least `n`
/// retained offspring are pooled.
pub fn mc_conditional_distances(
    x_norm: f64,
    params: &ProcessParams,
    mode: ClusterMode,
    n: usize,
    seed: u64,
) -> Result<EmpiricalCdf> {
    params.validate()?;
    if n == 0 {
        return domain("need at least one sample");
    }
    let x = Point3::new(x_norm, 0.0, 0.0);
    let (big, a) = (params.radius, params.hole_radius);
    let mut rng = substream(seed, 0);
    let mut samples = Vec::with_capacity(n);
    match mode {
        ClusterMode::Ball => {
            samples.extend((0..n).map(|_| uniform_ball_unchecked(x, big, &mut rng).norm()))
        }
        ClusterMode::Shell => {
            samples.extend((0..n).map(|_| uniform_shell_unchecked(x, a, big, &mut rng).norm()))
        }
        ClusterMode::ExactThinned => {
            while samples.len() < n {
                // Only parents within R + r0 of x can thin this cluster.
                let mut parents = sample_ppp_ball(params.lambda_p, big + a, &mut rng)?;
                for p in parents.iter_mut() {
                    *p = *p + x;
                }
                parents.push(x);
                let index = ParentIndex::new(&parents, a);
                let count = poisson_count(params.m1, &mut rng);
                for _ in 0..count {
                    let y = uniform_ball_unchecked(x, big, &mut rng);
                    if !index.any_within(&y, a) {
                        samples.push(y.norm());
                    }
                }
            }
        }
    }
    Ok(EmpiricalCdf::from_samples(samples))
}

/// Monte Carlo estimate of `|b(o, r) ∩ b(x, radius)|` with `|x| = dist`,
/// returned with its standard error.
pub fn mc_lens_volume(dist: f64, r: f64, radius: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    if !(dist >= 0.0 && r > 0.0 && radius > 0.0) || n == 0 {
        return domain("MC lens volume needs dist >= 0, r > 0, radius > 0 and n > 0");
    }
    let mut rng = substream(seed, 0);
    let x = Point3::new(dist, 0.0, 0.0);
    let r2 = radius * radius;
    // Sample the smaller ball, test membership in the other.
    let (small, small_c, other_c, other_r2) = if r <= radius {
        (r, Point3::ORIGIN, x, r2)
    } else {
        (radius, x, Point3::ORIGIN, r * r)
    };
    let mut hits = 0usize;
    for _ in 0..n {
        let p = uniform_ball_unchecked(small_c, small, &mut rng);
        hits += usize::from(p.distance_squared(&other_c) <= other_r2);
    }
    let frac = hits as f64 / n as f64;
    let vol = crate::geometry::ball_volume(small);
    Ok((vol * frac, vol * (frac * (1.0 - frac) / n as f64).sqrt()))
}

/// Monte Carlo estimate of `E[∏ g(y)]` over retained points in `b(o, W)`,
/// with its standard error.
pub fn mc_pgfl(
    profile: &dyn RadialProfile,
    params: &ProcessParams,
    window: f64,
    mode: SamplerMode,
    n_trials: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<(f64, f64)> {
    if n_trials < 2 {
        return domain("need at least two trials");
    }
    let products = run_trials(n_trials, workers, |t| {
        let real = sample_realization(params, window, mode, mix_seed(master_seed, t as u64))?;
        Ok(real
            .observed()
            .map(|o| profile.value(o.point.norm()))
            .product::<f64>())
    })?
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let n = products.len() as f64;
    let mean = products.iter().sum::<f64>() / n;
    let var = products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Uniform grid `min, min + step, ..., ≤ max`.
pub fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && max >= min && min.is_finite() && max.is_finite()) {
        return domain(format!("bad grid min={min} max={max} step={step}"));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}
