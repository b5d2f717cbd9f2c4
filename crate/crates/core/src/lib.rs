//! Matérn cluster processes in 3D, with and without holes at the cluster
//! centers.
//!
//! * [`geometry`]: ball intersection volumes, uniform ball/shell sampling.
//! * [`sampling`]: PPP, MCP and MCP-H realizations.
//! * [`distributions`]: conditional distance PDFs and CDFs.
//! * [`functionals`]: count PGF, contact distance distribution, PGFL.
//! * [`validation`]: Monte Carlo oracles and comparison reports.
//! * [`harness`]: the end-to-end validation suite behind `mcph validate`.
//! * [`cli`]: the `mcph` command-line front end.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod format;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod params;
pub mod quadrature;
pub mod sampling;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{LensGeometry, Point3};
pub use params::{Process, ProcessParams, SamplerMode};
pub use quadrature::QuadratureSpec;
