//! `bound`: evaluate the a-priori one-step error bound, optionally
//! measuring the true spectral-norm error on small registers.

use anyhow::Result;
use qlee::classical::{expm_dense, operator_norm};
use qlee::lee::{lee_generator, trotter_error_bound, trotter_step};
use qlee::{circuit, DenseOperator, Error};

use crate::config::ExperimentConfig;
use crate::oracle::DENSE_QUBIT_LIMIT;
use crate::report::{BoundReport, MeasuredBound, REPORT_VERSION};

pub fn run(cfg: &ExperimentConfig, measure: bool) -> Result<BoundReport> {
    let params = cfg.params()?;
    if !params.is_conservative() {
        // The bound only covers the unitary product step; the library error
        // names the splitting route that handles these parameters.
        return Err(Error::NonConservative {
            c: cfg.c,
            rho_bar: cfg.rho_bar,
        }
        .into());
    }
    let bound = trotter_error_bound(&params, cfg.tau);

    let measured = if measure {
        let num_qubits = params.layout()?.num_qubits();
        if num_qubits > DENSE_QUBIT_LIMIT {
            return Err(Error::GuardExceeded {
                what: "dense bound measurement",
                limit: DENSE_QUBIT_LIMIT,
                requested: num_qubits,
            }
            .into());
        }
        let obstacle = cfg.load_obstacle()?;
        let step = trotter_step(&params, cfg.scheme, cfg.bc, cfg.tau, obstacle.as_ref())?;
        let u = circuit::dense_unitary(&step)?;
        let a = lee_generator(&params, cfg.scheme, cfg.bc, obstacle.as_ref())?;
        let exact = expm_dense(&DenseOperator::from_sparse(&a.scale_re(cfg.tau))?);
        let value = operator_norm(&u.sub(&exact)?)?;
        Some(MeasuredBound {
            value,
            margin: bound - value,
        })
    } else {
        None
    };

    Ok(BoundReport {
        report_version: REPORT_VERSION,
        kind: "bound",
        n_x: cfg.n_x,
        n_y: cfg.n_y,
        l: cfg.l,
        c: cfg.c,
        rho_bar: cfg.rho_bar,
        u_bar: cfg.u_bar,
        tau: cfg.tau,
        bound,
        measured,
    })
}
