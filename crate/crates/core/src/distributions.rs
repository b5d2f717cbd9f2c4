//! Distance from the origin to an offspring of a cluster whose parent lies at
//! distance `‖x‖` from the origin.
//!
//! For the MCP the offspring are uniform in `b(x, R)` and the result is exact.
//! For the MCP with holes the offspring are taken uniform in the shell
//! `b(x, R) \ b(x, r0)`: only the cluster's own hole is removed, so the CDF is
//! an upper bound on the true one.
//!
//! Each formula is split into cases by `‖x‖` and, within a case, into
//! branches by `r`. [`BranchTable`] instantiates the branch intervals for one
//! `‖x‖` so the dispatch can be audited; every evaluation reports the
//! `(case, branch)` pair that produced it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{ball_volume, intersection_volume, CONCENTRIC_EPS};
use crate::params::{Process, ProcessParams};

/// Case and branch of a piecewise distance formula.
///
/// Branch numbers follow the row order of the printed piecewise displays of
/// the PDF; a row listing two `r` intervals keeps a single number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseIndex {
    pub process: Process,
    pub case_no: u8,
    pub branch_no: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfEval {
    /// Density in 1/m.
    pub value: f64,
    pub case: CaseIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Density {
    Zero,
    /// `3r² / c`
    Cubic,
    /// sphere minus the part of it inside the hole
    HoleLens,
    /// lens with the cluster ball minus lens with the hole
    BothLens,
    /// lens with the cluster ball only
    OuterLens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mass {
    Zero,
    One,
    Cube,
    CubeMinusHole,
    BallMinusHoleLens,
    LensMinusLens,
    OuterLens,
    OuterLensMinusHole,
}

/// One `r` interval `[lo, hi)` of a case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    pub branch_no: u8,
    density: Density,
    mass: Mass,
}

/// The branch intervals of one `(process, ‖x‖)` pair, sorted and checked to
/// partition `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTable {
    pub process: Process,
    pub case_no: u8,
    /// `‖x‖` actually used by the formulas (0 below the concentric threshold).
    pub x_norm: f64,
    radius: f64,
    hole: f64,
    /// `R³ - r0³` (`R³` for the MCP).
    norm: f64,
    branches: Vec<Branch>,
}

/// Case containing `x_norm`; intervals are closed on the left.
///
/// MCP: case 1 is `[0, R)`, case 2 is `[R, ∞)`. MCP-H: the six cases split
/// at `min{r0, (R-r0)/2}`, `r0`, `max{r0, (R-r0)/2}`, `(R+r0)/2` and `R`.
/// Empty intervals are never returned.
pub fn classify_case(x_norm: f64, params: &ProcessParams, process: Process) -> u8 {
    let big = params.radius;
    match process {
        Process::Mcp => {
            if x_norm < big {
                1
            } else {
                2
            }
        }
        Process::Mcph => {
            let a = params.hole_radius;
            let half_gap = 0.5 * (big - a);
            if x_norm < a.min(half_gap) {
                1
            } else if x_norm < a {
                2
            } else if x_norm < a.max(half_gap) {
                3
            } else if x_norm < 0.5 * (big + a) {
                4
            } else if x_norm < big {
                5
            } else {
                6
            }
        }
    }
}

fn raw_branches(process: Process, case_no: u8, x: f64, a: f64, big: f64) -> Vec<Branch> {
    use Density as D;
    use Mass as M;
    let inf = f64::INFINITY;
    let b = |lo: f64, hi: f64, branch_no: u8, density: Density, mass: Mass| Branch {
        lo,
        hi,
        branch_no,
        density,
        mass,
    };
    match (process, case_no) {
        (Process::Mcp, 1) => vec![
            b(0.0, big - x, 1, D::Cubic, M::Cube),
            b(big - x, big + x, 2, D::OuterLens, M::OuterLens),
            b(big + x, inf, 3, D::Zero, M::One),
        ],
        (Process::Mcp, _) => vec![
            b(x - big, big + x, 1, D::OuterLens, M::OuterLens),
            b(0.0, x - big, 2, D::Zero, M::Zero),
            b(big + x, inf, 2, D::Zero, M::One),
        ],
        (Process::Mcph, 1) => vec![
            b(0.0, a - x, 1, D::Zero, M::Zero),
            b(big + x, inf, 1, D::Zero, M::One),
            b(a - x, a + x, 2, D::HoleLens, M::BallMinusHoleLens),
            b(a + x, big - x, 3, D::Cubic, M::CubeMinusHole),
            b(big - x, big + x, 4, D::OuterLens, M::OuterLensMinusHole),
        ],
        (Process::Mcph, 2) => vec![
            b(0.0, a - x, 1, D::Zero, M::Zero),
            b(big + x, inf, 1, D::Zero, M::One),
            b(a - x, big - x, 2, D::HoleLens, M::BallMinusHoleLens),
            b(big - x, a + x, 3, D::BothLens, M::LensMinusLens),
            b(a + x, big + x, 4, D::OuterLens, M::OuterLensMinusHole),
        ],
        (Process::Mcph, 3) => vec![
            b(0.0, x - a, 1, D::Cubic, M::Cube),
            b(x + a, big - x, 1, D::Cubic, M::CubeMinusHole),
            b(x - a, x + a, 2, D::HoleLens, M::BallMinusHoleLens),
            b(big - x, big + x, 3, D::OuterLens, M::OuterLensMinusHole),
            b(big + x, inf, 4, D::Zero, M::One),
        ],
        (Process::Mcph, 4) => vec![
            b(0.0, x - a, 1, D::Cubic, M::Cube),
            b(x - a, big - x, 2, D::HoleLens, M::BallMinusHoleLens),
            b(big - x, x + a, 3, D::BothLens, M::LensMinusLens),
            b(x + a, big + x, 4, D::OuterLens, M::OuterLensMinusHole),
            b(big + x, inf, 5, D::Zero, M::One),
        ],
        (Process::Mcph, 5) => vec![
            b(0.0, big - x, 1, D::Cubic, M::Cube),
            b(big - x, x - a, 2, D::OuterLens, M::OuterLens),
            b(x + a, big + x, 2, D::OuterLens, M::OuterLensMinusHole),
            b(x - a, x + a, 3, D::BothLens, M::LensMinusLens),
            b(big + x, inf, 4, D::Zero, M::One),
        ],
        (Process::Mcph, _) => vec![
            b(0.0, x - big, 1, D::Zero, M::Zero),
            b(big + x, inf, 1, D::Zero, M::One),
            b(x - big, x - a, 2, D::OuterLens, M::OuterLens),
            b(x + a, big + x, 2, D::OuterLens, M::OuterLensMinusHole),
            b(x - a, x + a, 3, D::BothLens, M::LensMinusLens),
        ],
    }
}

impl BranchTable {
    /// Instantiates the branch intervals for `x_norm`.
    ///
    /// Fails if the printed intervals, once sorted by their left endpoints,
    /// do not tile `[0, ∞)` (up to rounding).
    pub fn new(x_norm: f64, params: &ProcessParams, process: Process) -> Result<Self> {
        if !(x_norm >= 0.0 && x_norm.is_finite()) {
            return domain(format!(
                "parent distance must be finite and >= 0 (got {x_norm})"
            ));
        }
        let big = params.radius;
        let (hole, norm) = match process {
            Process::Mcp => (0.0, big.powi(3)),
            Process::Mcph => (params.hole_radius, params.shell_cube()),
        };
        let case_no = classify_case(x_norm, params, process);
        let x = if x_norm < CONCENTRIC_EPS * big {
            0.0
        } else {
            x_norm
        };

        let mut raw: Vec<Branch> = raw_branches(process, case_no, x, hole, big)
            .into_iter()
            .filter(|b| b.hi > b.lo)
            .collect();
        raw.sort_by(|p, q| p.lo.total_cmp(&q.lo));

        let tol = 1e-12 * (big + x);
        let mut edge = 0.0;
        for b in raw.iter_mut() {
            if (b.lo - edge).abs() > tol {
                return domain(format!(
                    "{process} case {case_no} at |x|={x_norm}: branch {} starts at {} but \
                     the previous interval ends at {edge}",
                    b.branch_no, b.lo
                ));
            }
            b.lo = edge;
            edge = b.hi;
        }
        if edge != f64::INFINITY {
            return domain(format!(
                "{process} case {case_no} at |x|={x_norm}: intervals stop at {edge}"
            ));
        }
        Ok(BranchTable {
            process,
            case_no,
            x_norm: x,
            radius: big,
            hole,
            norm,
            branches: raw,
        })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Interior branch endpoints, for placing quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.branches[1..].iter().map(|b| b.lo).collect()
    }

    /// Upper end of the support, `‖x‖ + R`.
    pub fn support_end(&self) -> f64 {
        self.x_norm + self.radius
    }

    /// Position of the branch containing `r` (for `r < 0`, the first one).
    pub fn locate(&self, r: f64) -> usize {
        self.branches
            .iter()
            .position(|b| r < b.hi)
            .unwrap_or(self.branches.len() - 1)
    }

    fn index(&self, k: usize) -> CaseIndex {
        CaseIndex {
            process: self.process,
            case_no: self.case_no,
            branch_no: self.branches[k].branch_no,
        }
    }

    /// Evaluates the density formula of branch `k` at `r`, whether or not `r`
    /// lies in that branch's interval. Used to compare one-sided limits.
    pub fn density_of_branch(&self, k: usize, r: f64) -> f64 {
        let (x, a, big, c) = (self.x_norm, self.hole, self.radius, self.norm);
        match self.branches[k].density {
            Density::Zero => 0.0,
            Density::Cubic => 3.0 * r * r / c,
            Density::HoleLens => {
                (3.0 * r * r - 3.0 * r / (4.0 * x) * (a - x + r) * (a + x - r)) / c
            }
            Density::BothLens => 0.75 * r * (big * big - a * a) / (c * x),
            Density::OuterLens => match self.process {
                Process::Mcp => 0.75 * r * (big - x + r) * (big + x - r) / (c * x),
                Process::Mcph => 3.0 * r * (big - x + r) * (big + x - r) / (4.0 * x * c),
            },
        }
    }

    /// CDF formula of branch `k` at `r`, unclamped and regardless of interval.
    pub fn mass_of_branch(&self, k: usize, r: f64) -> f64 {
        let (x, a, big, c) = (self.x_norm, self.hole, self.radius, self.norm);
        let shell = 4.0 / 3.0 * PI * c;
        let v = match self.branches[k].mass {
            Mass::Zero => 0.0,
            Mass::One => 1.0,
            Mass::Cube => r * r * r / c,
            Mass::CubeMinusHole => (r * r * r - a * a * a) / c,
            Mass::BallMinusHoleLens => (ball_volume(r) - intersection_volume(x, r, a)) / shell,
            Mass::LensMinusLens => {
                (intersection_volume(x, r, big) - intersection_volume(x, r, a)) / shell
            }
            Mass::OuterLens => intersection_volume(x, r, big) / shell,
            Mass::OuterLensMinusHole => (intersection_volume(x, r, big) - ball_volume(a)) / shell,
        };
        v.clamp(0.0, 1.0)
    }

    pub fn pdf(&self, r: f64) -> PdfEval {
        let k = self.locate(r);
        let value = if r < 0.0 {
            0.0
        } else {
            self.density_of_branch(k, r).max(0.0)
        };
        PdfEval {
            value,
            case: self.index(k),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.mass_of_branch(self.locate(r), r)
    }
}

fn table(x_norm: f64, params: &ProcessParams, process: Process) -> BranchTable {
    BranchTable::new(x_norm.max(0.0), params, process)
        .unwrap_or_else(|e| panic!("inconsistent branch table: {e}"))
}

/// Density of the distance to an MCP offspring of a parent at distance `x_norm`.
pub fn mcp_distance_pdf(r: f64, x_norm: f64, params: &ProcessParams) -> PdfEval {
    table(x_norm, params, Process::Mcp).pdf(r)
}

pub fn mcp_distance_cdf(r: f64, x_norm: f64, params: &ProcessParams) -> f64 {
    table(x_norm, params, Process::Mcp).cdf(r)
}

/// Density of the distance to an offspring uniform in the shell around a
/// parent at distance `x_norm` (the self-hole bound model).
pub fn mcph_distance_pdf_ub(r: f64, x_norm: f64, params: &ProcessParams) -> PdfEval {
    table(x_norm, params, Process::Mcph).pdf(r)
}

/// Upper bound on the MCP-H distance CDF; exact for the self-hole model.
pub fn mcph_distance_cdf_ub(r: f64, x_norm: f64, params: &ProcessParams) -> f64 {
    table(x_norm, params, Process::Mcph).cdf(r)
}

pub fn distance_pdf(r: f64, x_norm: f64, params: &ProcessParams, process: Process) -> PdfEval {
    table(x_norm, params, process).pdf(r)
}

pub fn distance_cdf(r: f64, x_norm: f64, params: &ProcessParams, process: Process) -> f64 {
    table(x_norm, params, process).cdf(r)
}

/// First-order factor `1 - (4/3)πλp r0³` for the holes of other clusters.
pub fn hole_correction(lambda_p: f64, hole_radius: f64) -> Result<f64> {
    if !(lambda_p >= 0.0 && hole_radius >= 0.0) {
        return domain("hole correction needs lambda_p >= 0 and r0 >= 0");
    }
    let f = 1.0 - lambda_p * ball_volume(hole_radius);
    if !(f > 0.0) {
        return domain(format!(
            "hole correction factor {f} <= 0: lambda_p * (4/3)π r0³ must stay below 1"
        ));
    }
    Ok(f)
}

/// [`mcph_distance_pdf_ub`] scaled by [`hole_correction`].
pub fn mcph_distance_pdf_corrected(r: f64, x_norm: f64, params: &ProcessParams) -> Result<PdfEval> {
    let k = hole_correction(params.lambda_p, params.hole_radius)?;
    let mut e = mcph_distance_pdf_ub(r, x_norm, params);
    e.value *= k;
    Ok(e)
}
