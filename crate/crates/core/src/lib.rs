//! Numerical laboratory for covering-surface theory on explicit holomorphic maps.
//!
//! The crate measures how an explicit holomorphic map `f` restricted to the
//! disk `|z| <= r` covers the Riemann sphere: spherical area `a(r)` and
//! boundary length `l(r)`, preimage counts, islands over disks, traced
//! preimages of graphs with their Euler characteristics, and the
//! quantitative checks tying those numbers together.
//!
//! Modules follow the pipeline order:
//!
//! * [`expr`] parses maps and differentiates them symbolically.
//! * [`metric`] handles the area-normalised spherical metric and quadrature.
//! * [`trace`] extracts preimages of curves and graphs.
//! * [`count`] counts preimages, islands and ramification.
//! * [`verify`] assembles per-radius reports and checks.
//! * [`cli`] reads experiment configs and writes reports.

// NaN must fail range checks, so `!(x < y)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod contour;
pub mod count;
pub mod expr;
pub mod metric;
mod raster;
pub mod trace;
pub mod verify;

pub use num_complex::Complex64;

pub use expr::{Ext, HoloMap, MapExpr};
pub use metric::{SpherePoint, SphericalDisk};

/// Crate-wide error, one variant per stage.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Diff(#[from] expr::DiffError),
    #[error(transparent)]
    Metric(#[from] metric::MetricError),
    #[error(transparent)]
    Count(#[from] count::CountError),
    #[error(transparent)]
    Trace(#[from] trace::TraceError),
    #[error(transparent)]
    Verify(#[from] verify::VerifyError),
    #[error(transparent)]
    Config(#[from] cli::ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
