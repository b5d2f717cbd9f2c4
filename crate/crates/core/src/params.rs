//! Model constants shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Constants of a Matérn cluster process, optionally with holes of radius
/// `hole_radius` around every parent.
///
/// `m1` is the mean number of offspring drawn in the ball of each cluster;
/// `m2` is the mean number retained in the shell around the parent under
/// the self-hole model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    /// Parent intensity in points per m³.
    pub lambda_p: f64,
    /// Cluster radius R in meters.
    pub radius: f64,
    /// Hole radius r0 in meters.
    pub hole_radius: f64,
    pub m1: f64,
    pub m2: f64,
}

impl ProcessParams {
    pub fn new(lambda_p: f64, radius: f64, hole_radius: f64, m1: f64, m2: f64) -> Result<Self> {
        let p = ProcessParams {
            lambda_p,
            radius,
            hole_radius,
            m1,
            m2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Plain MCP parameters (no hole, `m2 = m1`).
    pub fn mcp(lambda_p: f64, radius: f64, m1: f64) -> Result<Self> {
        Self::new(lambda_p, radius, 0.0, m1, m1)
    }

    /// Parameters keyed on the retained mean `m2`, with `m1` chosen so that
    /// self-hole thinning of a Poisson(`m1`) cluster keeps `m2` points on average.
    pub fn from_m2(lambda_p: f64, radius: f64, hole_radius: f64, m2: f64) -> Result<Self> {
        if !(hole_radius >= 0.0 && hole_radius < radius) {
            return domain(format!(
                "need 0 <= r0 < R (got r0={hole_radius}, R={radius})"
            ));
        }
        let keep = 1.0 - (hole_radius / radius).powi(3);
        Self::new(lambda_p, radius, hole_radius, m2 / keep, m2)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.lambda_p,
            self.radius,
            self.hole_radius,
            self.m1,
            self.m2,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return domain("process parameters must be finite");
        }
        // Zero parent intensity is allowed: it is the empty process.
        if self.lambda_p < 0.0 {
            return domain(format!("lambda_p must be >= 0 (got {})", self.lambda_p));
        }
        if self.radius <= 0.0 {
            return domain(format!("R must be > 0 (got {})", self.radius));
        }
        if !(self.hole_radius >= 0.0 && self.hole_radius < self.radius) {
            return domain(format!(
                "need 0 <= r0 < R (got r0={}, R={})",
                self.hole_radius, self.radius
            ));
        }
        if self.m1 <= 0.0 || self.m2 <= 0.0 {
            return domain(format!(
                "mean cluster sizes must be > 0 (got M1={}, M2={})",
                self.m1, self.m2
            ));
        }
        Ok(())
    }

    /// `R³ - r0³`, the shell normalizer.
    pub fn shell_cube(&self) -> f64 {
        self.radius.powi(3) - self.hole_radius.powi(3)
    }

    /// Mean number of parents within distance R of a point.
    pub fn parents_in_cluster_ball(&self) -> f64 {
        crate::geometry::ball_volume(self.radius) * self.lambda_p
    }
}

/// Which analytical model a formula refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Mcp,
    Mcph,
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Process::Mcp => "mcp",
            Process::Mcph => "mcph",
        })
    }
}

impl FromStr for Process {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcp" => Ok(Process::Mcp),
            "mcph" | "mcp-h" => Ok(Process::Mcph),
            _ => Err(Error::Parse(format!(
                "unknown process '{s}' (expected mcp|mcph)"
            ))),
        }
    }
}

/// How offspring are generated and thinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMode {
    /// Poisson(`m1`) offspring uniform in `b(x, R)`, no thinning.
    Mcp,
    /// Poisson(`m1`) candidates in `b(x, R)`, each removed when it falls
    /// strictly within `r0` of any parent.
    McphExact,
    /// Poisson(`m2`) offspring uniform in `b(x, R) \ b(x, r0)`.
    #[serde(rename = "mcph-selfhole")]
    McphSelfHole,
}

impl SamplerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerMode::Mcp => "mcp",
            SamplerMode::McphExact => "mcph-exact",
            SamplerMode::McphSelfHole => "mcph-selfhole",
        }
    }

    /// The analytical process whose formulas describe this sampler.
    pub fn process(&self) -> Process {
        match self {
            SamplerMode::Mcp => Process::Mcp,
            _ => Process::Mcph,
        }
    }
}

impl fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mcp" => Ok(SamplerMode::Mcp),
            "mcph-exact" | "exact" => Ok(SamplerMode::McphExact),
            "mcph-selfhole" | "selfhole" | "self-hole" | "mcph-self-hole" => {
                Ok(SamplerMode::McphSelfHole)
            }
            _ => Err(Error::Parse(format!(
                "unknown sampler mode '{s}' (expected mcp|mcph-exact|mcph-selfhole)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ProcessParams::new(1e-5, 50.0, 15.0, 20.0, 20.0).is_ok());
        assert!(ProcessParams::new(0.0, 50.0, 15.0, 20.0, 20.0).is_ok());
        assert!(ProcessParams::new(-1e-5, 50.0, 15.0, 20.0, 20.0).is_err());
        assert!(ProcessParams::new(1e-5, 50.0, 50.0, 20.0, 20.0).is_err());
        assert!(ProcessParams::new(1e-5, 50.0, -1.0, 20.0, 20.0).is_err());
        assert!(ProcessParams::new(1e-5, 50.0, 15.0, 0.0, 20.0).is_err());
        assert!(ProcessParams::new(f64::INFINITY, 50.0, 15.0, 20.0, 20.0).is_err());
    }

    #[test]
    fn m1_from_m2() {
        let p = ProcessParams::from_m2(1e-5, 50.0, 15.0, 20.0).unwrap();
        assert!((p.m1 * (1.0 - 3375.0 / 125000.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn hole_count_arithmetic() {
        let p = ProcessParams::mcp(2e-5, 50.0, 20.0).unwrap();
        assert!((p.parents_in_cluster_ball() - 10.471975511965978).abs() < 1e-12);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [
            SamplerMode::Mcp,
            SamplerMode::McphExact,
            SamplerMode::McphSelfHole,
        ] {
            assert_eq!(m.as_str().parse::<SamplerMode>().unwrap(), m);
        }
        assert!("thomas".parse::<SamplerMode>().is_err());
    }
}
