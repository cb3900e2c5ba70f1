//! Batch pipeline for stochastic Galerkin model reduction of circuits.
//!
//! The stages `assemble → norms → sparsify → reduce → simulate → report`
//! each read the artifacts of earlier stages from the output directory and
//! write their own. See [`config`] for the configuration schema.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod stages;

pub use config::{resolve, PipelineConfig};
pub use error::CliError;
pub use stages::{Pipeline, Stage};

/// Parses an inclusive order range such as `10..60` or `10..=60`.
pub fn parse_order_range(text: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| format!("expected a range like 10..60, got `{text}`"))?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("bad order `{s}`: {e}"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= start <= end, got {lo}..{hi}"));
    }
    Ok((lo, hi))
}
