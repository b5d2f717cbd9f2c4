//! Ball intersection volumes and uniform sampling in balls and spherical shells.
//!
//! Every length is in meters and every volume in cubic meters.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Relative separation below which two ball centers are treated as coincident.
pub const CONCENTRIC_EPS: f64 = 1e-9;

/// Volume of a ball of radius `r`.
#[inline]
pub fn ball_volume(r: f64) -> f64 {
    4.0 / 3.0 * PI * r * r * r
}

/// A point (or displacement) in three-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Builds a point, rejecting non-finite coordinates.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return domain(format!("non-finite coordinate ({x}, {y}, {z})"));
        }
        Ok(Point3 { x, y, z })
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance_squared(&self, other: &Point3) -> f64 {
        (*self - *other).norm_squared()
    }

    #[inline]
    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// Two balls: `b(o, r)` at the origin and `b(x, radius)` with `|x| = dist`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensGeometry {
    dist: f64,
    r: f64,
    radius: f64,
}

impl LensGeometry {
    pub fn new(dist: f64, r: f64, radius: f64) -> Result<Self> {
        if !(dist.is_finite() && r.is_finite() && radius.is_finite()) {
            return domain("lens geometry must be finite");
        }
        if dist < 0.0 || r < 0.0 {
            return domain(format!(
                "lens geometry needs dist >= 0 and r >= 0 (got dist={dist}, r={r})"
            ));
        }
        if radius <= 0.0 {
            return domain(format!("lens geometry needs radius > 0 (got {radius})"));
        }
        Ok(LensGeometry { dist, r, radius })
    }

    pub fn dist(&self) -> f64 {
        self.dist
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn is_concentric(&self) -> bool {
        self.dist < CONCENTRIC_EPS * self.radius
    }
}

/// Volume of `b(o, r) ∩ b(x, radius)`, covering the disjoint, lens and
/// containment regimes.
pub fn lens_volume(g: &LensGeometry) -> f64 {
    if g.is_concentric() {
        return ball_volume(g.r.min(g.radius));
    }
    intersection_volume(g.dist, g.r, g.radius)
}

/// `d/dr` of [`lens_volume`]: the area of the part of the sphere `|y| = r`
/// lying inside `b(x, radius)`.
///
/// Outside the lens regime this is `4πr²` (sphere inside the other ball) or
/// `0` (sphere disjoint from it, or enclosing it).
pub fn lens_volume_derivative(g: &LensGeometry) -> Result<f64> {
    if g.is_concentric() {
        return domain("lens derivative is singular for concentric balls; use 3r²-type limits");
    }
    Ok(intersection_area_rate(g.dist, g.r, g.radius))
}

/// Unchecked intersection volume. `dist` must be strictly positive.
pub(crate) fn intersection_volume(dist: f64, r: f64, rho: f64) -> f64 {
    if r >= rho + dist {
        return ball_volume(rho);
    }
    if r <= (rho - dist).abs() {
        return if rho >= dist { ball_volume(r) } else { 0.0 };
    }
    let s = rho + r - dist;
    PI * s
        * s
        * (dist * dist + 2.0 * dist * r - 3.0 * r * r + 2.0 * dist * rho + 6.0 * r * rho
            - 3.0 * rho * rho)
        / (12.0 * dist)
}

pub(crate) fn intersection_area_rate(dist: f64, r: f64, rho: f64) -> f64 {
    if r >= rho + dist {
        return 0.0;
    }
    if r < (rho - dist).abs() {
        return if rho >= dist { 4.0 * PI * r * r } else { 0.0 };
    }
    PI * r * (rho + r - dist) * (rho - r + dist) / dist
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    loop {
        let v = Point3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = v.norm();
        // Probability zero, but a zero triple has no direction.
        if n > 0.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Draws a point uniformly from `b(center, radius)`.
pub fn sample_uniform_ball<R: Rng + ?Sized>(
    center: Point3,
    radius: f64,
    rng: &mut R,
) -> Result<Point3> {
    if !(radius > 0.0 && radius.is_finite()) {
        return domain(format!("ball radius must be positive (got {radius})"));
    }
    Ok(uniform_ball_unchecked(center, radius, rng))
}

/// Draws a point uniformly from the shell `b(center, outer) \ b(center, inner)`.
///
/// The radius comes from inverting the radial CDF `(ρ³ - inner³)/(outer³ - inner³)`,
/// so every draw is accepted.
pub fn sample_uniform_shell<R: Rng + ?Sized>(
    center: Point3,
    inner: f64,
    outer: f64,
    rng: &mut R,
) -> Result<Point3> {
    if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
        return domain(format!(
            "shell needs 0 <= inner < outer (got inner={inner}, outer={outer})"
        ));
    }
    Ok(uniform_shell_unchecked(center, inner, outer, rng))
}

#[inline]
pub(crate) fn uniform_ball_unchecked<R: Rng + ?Sized>(
    center: Point3,
    radius: f64,
    rng: &mut R,
) -> Point3 {
    let u: f64 = rng.random();
    let rho = radius * u.cbrt();
    center + unit_direction(rng).scale(rho)
}

#[inline]
pub(crate) fn uniform_shell_unchecked<R: Rng + ?Sized>(
    center: Point3,
    inner: f64,
    outer: f64,
    rng: &mut R,
) -> Point3 {
    let u: f64 = rng.random();
    let i3 = inner * inner * inner;
    let o3 = outer * outer * outer;
    let rho = (i3 + u * (o3 - i3)).cbrt().clamp(inner, outer);
    center + unit_direction(rng).scale(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vol(d: f64, r: f64, big: f64) -> f64 {
        lens_volume(&LensGeometry::new(d, r, big).unwrap())
    }

    fn rate(d: f64, r: f64, big: f64) -> f64 {
        lens_volume_derivative(&LensGeometry::new(d, r, big).unwrap()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn tangency_values() {
        assert!(rel(vol(10.0, 60.0, 50.0), ball_volume(50.0)) < 1e-12);
        assert!(rel(vol(10.0, 40.0, 50.0), ball_volume(40.0)) < 1e-12);
        assert!(rel(vol(50.0, 50.0, 50.0), PI * 52083.333333333336) < 1e-12);
    }

    #[test]
    fn disjoint_and_concentric() {
        assert_eq!(vol(100.0, 20.0, 50.0), 0.0);
        assert!(rel(vol(0.0, 20.0, 50.0), ball_volume(20.0)) < 1e-15);
        assert!(rel(vol(0.0, 80.0, 50.0), ball_volume(50.0)) < 1e-15);
        assert!(lens_volume_derivative(&LensGeometry::new(0.0, 20.0, 50.0).unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(LensGeometry::new(-1.0, 2.0, 3.0).is_err());
        assert!(LensGeometry::new(1.0, -2.0, 3.0).is_err());
        assert!(LensGeometry::new(1.0, 2.0, 0.0).is_err());
        assert!(LensGeometry::new(f64::NAN, 2.0, 3.0).is_err());
    }

    #[test]
    fn derivative_values() {
        // Cap area of the sphere |y| = r inside the other ball.
        assert!(rel(rate(20.0, 30.0, 50.0), 3600.0 * PI) < 1e-12);
        assert_eq!(rate(10.0, 60.0, 50.0), 0.0);
        // Inner tangency: the whole sphere of radius 40.
        assert!(rel(rate(10.0, 40.0, 50.0), 6400.0 * PI) < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-4;
        // Interior of the lens regime: centered differences.
        for &(d, r, big) in &[
            (20.0, 45.0, 50.0),
            (30.0, 45.0, 50.0),
            (70.0, 40.0, 50.0),
            (5.0, 12.0, 15.0),
        ] {
            let fd = (vol(d, r + h, big) - vol(d, r - h, big)) / (2.0 * h);
            assert!(rel(fd, rate(d, r, big)) < 1e-6, "d={d} r={r} R={big}");
        }
        // At r = R - d the second derivative jumps, so difference from the lens side.
        for &(d, r, big) in &[(20.0, 30.0, 50.0), (10.0, 40.0, 50.0)] {
            let fd = (-3.0 * vol(d, r, big) + 4.0 * vol(d, r + h, big) - vol(d, r + 2.0 * h, big))
                / (2.0 * h);
            assert!(rel(fd, rate(d, r, big)) < 1e-6, "d={d} r={r} R={big}");
        }
    }

    #[test]
    fn continuous_at_regime_edges() {
        for &(d, big) in &[(10.0f64, 50.0f64), (70.0, 50.0), (3.0, 15.0)] {
            let scale = ball_volume(big.max(d));
            for edge in [(big - d).abs(), big + d] {
                let lo = vol(d, edge * (1.0 - 1e-13), big);
                let hi = vol(d, edge * (1.0 + 1e-13), big);
                let at = vol(d, edge, big);
                assert!((lo - at).abs() < 1e-9 * scale && (hi - at).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn symmetric_in_the_two_radii() {
        for &(d, r, big) in &[
            (20.0, 30.0, 50.0),
            (70.0, 40.0, 50.0),
            (5.0, 12.0, 15.0),
            (1.0, 80.0, 3.0),
        ] {
            assert!(rel(vol(d, r, big), vol(d, big, r)) < 1e-12);
        }
    }

    #[test]
    fn ball_radial_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let c = Point3::new(1.0, -2.0, 3.0);
        let (mut sum, mut below) = (0.0, 0usize);
        for _ in 0..n {
            let d = sample_uniform_ball(c, 50.0, &mut rng).unwrap().distance(&c);
            assert!(d <= 50.0 + 1e-9);
            sum += d;
            below += usize::from(d <= 25.0);
        }
        assert!((sum / n as f64 - 37.5).abs() < 0.03);
        assert!((below as f64 / n as f64 - 0.125).abs() < 0.001);
    }

    #[test]
    fn shell_radial_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 1_000_000;
        let mut below = 0usize;
        for _ in 0..n {
            let d = sample_uniform_shell(Point3::ORIGIN, 15.0, 50.0, &mut rng)
                .unwrap()
                .norm();
            assert!((15.0 - 1e-9..=50.0 + 1e-9).contains(&d));
            below += usize::from(d <= 30.0);
        }
        let expected = (27000.0 - 3375.0) / (125000.0 - 3375.0);
        assert!((below as f64 / n as f64 - expected).abs() < 0.001);
    }

    #[test]
    fn shell_with_empty_hole_matches_ball() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = sample_uniform_shell(Point3::ORIGIN, 0.0, 50.0, &mut a).unwrap();
            let q = sample_uniform_ball(Point3::ORIGIN, 50.0, &mut b).unwrap();
            assert!(p.distance(&q) < 1e-9);
        }
    }

    #[test]
    fn sampler_domain_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_uniform_ball(Point3::ORIGIN, 0.0, &mut rng).is_err());
        assert!(sample_uniform_shell(Point3::ORIGIN, 50.0, 50.0, &mut rng).is_err());
        assert!(sample_uniform_shell(Point3::ORIGIN, -1.0, 50.0, &mut rng).is_err());
    }
}
