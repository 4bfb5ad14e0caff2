//! Subcommand implementations.

pub mod bound;
pub mod compare;
pub mod gate_count;
pub mod obstacle_check;
pub mod simulate;

use qlee::diffops::BoundaryCondition;
use qlee::lee::{
    split_step, trotter_error_bound, trotter_step, LeeParams, LeeScheme, StepOperator,
};
use qlee::obstacles::{BinaryCell, ObstacleSpec};
use qlee::{Error, Result};

use crate::config::ExperimentConfig;

/// Build the reusable one-step operator for a parameter set: a unitary
/// circuit when the parameters are conservative, otherwise the split form
/// (central scheme only). Returns the a-priori error bound where it
/// applies (the unitary path).
pub(crate) fn build_step(
    params: &LeeParams,
    scheme: LeeScheme,
    bc: BoundaryCondition,
    tau: f64,
    obstacle: Option<&ObstacleSpec>,
) -> Result<(StepOperator, Option<f64>)> {
    if params.is_conservative() {
        let circuit = trotter_step(params, scheme, bc, tau, obstacle)?;
        let bound = trotter_error_bound(params, tau);
        Ok((StepOperator::Unitary(circuit), Some(bound)))
    } else if scheme == LeeScheme::Central {
        let step = split_step(params, bc, tau, obstacle)?;
        Ok((StepOperator::Split(step), None))
    } else {
        // Let the library state the refusal (it points at the split path,
        // which only exists for the central scheme).
        trotter_step(params, scheme, bc, tau, obstacle)?;
        unreachable!("non-conservative parameters cannot produce a unitary step")
    }
}

/// The configured sources as `(cell, amplitude)` pairs, validated against
/// the obstacle: a source overlapping an obstacle cell is rejected.
pub(crate) fn collect_sources(
    cfg: &ExperimentConfig,
    obstacle: Option<&ObstacleSpec>,
) -> Result<Vec<(BinaryCell, f64)>> {
    if cfg.sources.is_empty() {
        return Err(Error::InvalidInput(
            "config defines no `source` lines; at least one pressure source is required".into(),
        ));
    }
    for s in &cfg.sources {
        if let Some(spec) = obstacle {
            if spec.cells().iter().any(|c| c.intersects(&s.cell)) {
                return Err(Error::InvalidInput(format!(
                    "source cell {} overlaps the obstacle",
                    s.cell
                )));
            }
        }
    }
    Ok(cfg.sources.iter().map(|s| (s.cell, s.amplitude)).collect())
}
