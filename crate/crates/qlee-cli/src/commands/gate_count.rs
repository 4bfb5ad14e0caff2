//! `gate-count`: tally the one-step circuit over a range of square grids
//! and fit the decomposed CNOT growth.
//!
//! Counts are structural, so the sweep uses fixed conservative parameters
//! (`c = rho_bar = 1`) on an `n x n` grid with unit spacing. The background
//! flow only matters through being zero or not (zero drops the advection
//! factors); it defaults to 1 and follows the config when one is supplied.

use anyhow::Result;
use qlee::circuit::count;
use qlee::diffops::{BoundaryCondition, GridSpec};
use qlee::lee::{trotter_step, LeeParams, LeeScheme};
use qlee::Error;

use crate::report::{
    EnvelopeCheck, GateCountEntry, GateCountReport, GateTally, QuadraticFit, REPORT_VERSION,
};

/// CNOT envelope for the n = 3 central-scheme step circuit.
pub const N3_CNOT_ENVELOPE: usize = 310;

const N_MAX_LIMIT: usize = 16;

/// Least-squares quadratic through `(x, y)` points via the 3x3 normal
/// equations; `None` when the system is singular.
fn quadratic_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(x, y) in points {
        let powers = [x * x, x, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += powers[i] * powers[j];
            }
            rhs[i] += powers[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let pivot_row = m[col];
        for row in (col + 1)..3 {
            let f = m[row][col] / pivot_row[col];
            for (entry, pivot_entry) in m[row].iter_mut().zip(pivot_row.iter()).skip(col) {
                *entry -= f * pivot_entry;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some((x[0], x[1], x[2]))
}

pub fn run(
    n_min: usize,
    n_max: usize,
    scheme: LeeScheme,
    bc: BoundaryCondition,
    u_bar: f64,
) -> Result<GateCountReport> {
    if n_min == 0 || n_min > n_max || n_max > N_MAX_LIMIT {
        return Err(Error::InvalidInput(format!(
            "gate-count range must satisfy 1 <= n_min <= n_max <= {N_MAX_LIMIT} \
             (got {n_min}..={n_max})"
        ))
        .into());
    }
    let mut per_n = Vec::new();
    for n in n_min..=n_max {
        let params = LeeParams::new(GridSpec::new(n, n, 1.0)?, 1.0, 1.0, u_bar)?;
        let circuit = trotter_step(&params, scheme, bc, 0.05, None)?;
        per_n.push(GateCountEntry {
            n,
            qubits: 2 * n + 2,
            tally: GateTally::from(&count(&circuit)),
        });
    }

    let points: Vec<(f64, f64)> = per_n
        .iter()
        .map(|e| (e.n as f64, e.tally.cnot_after_decomposition as f64))
        .collect();
    let fit = if points.len() >= 3 {
        quadratic_fit(&points).map(|(c2, c1, c0)| {
            let max_rel_residual = points
                .iter()
                .map(|&(x, y)| ((c2 * x * x + c1 * x + c0) - y).abs() / y.max(1.0))
                .fold(0.0f64, f64::max);
            QuadraticFit {
                c2,
                c1,
                c0,
                max_rel_residual,
            }
        })
    } else {
        None
    };

    let envelope_n3 = per_n.iter().find(|e| e.n == 3).map(|e| EnvelopeCheck {
        n: 3,
        measured: e.tally.cnot_after_decomposition,
        envelope: N3_CNOT_ENVELOPE,
        ratio: e.tally.cnot_after_decomposition as f64 / N3_CNOT_ENVELOPE as f64,
    });

    Ok(GateCountReport {
        report_version: REPORT_VERSION,
        kind: "gate_count",
        scheme: match scheme {
            LeeScheme::Central => "central",
            LeeScheme::Updown => "updown",
        },
        bc: match bc {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Periodic => "periodic",
        },
        per_n,
        fit,
        envelope_n3,
    })
}
