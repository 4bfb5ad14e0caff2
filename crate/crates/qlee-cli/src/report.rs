//! Structured run reports, serialized as versioned JSON.
//!
//! Reports are deterministic: identical config and seed produce
//! byte-identical documents. Timing therefore never enters a report; the
//! binary prints wall time to stderr instead.

use std::collections::BTreeMap;

use qlee::GateCount;
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;

/// Gate tally of one step circuit, before and after decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct GateTally {
    /// Pre-decomposition count per gate kind (zero counts included).
    pub per_kind: BTreeMap<String, usize>,
    pub total: usize,
    pub cnot_after_decomposition: usize,
}

impl From<&GateCount> for GateTally {
    fn from(c: &GateCount) -> Self {
        let per_kind = c
            .iter()
            .map(|(name, count)| (name.to_string(), count))
            .collect();
        GateTally {
            per_kind,
            total: c.total(),
            cnot_after_decomposition: c.cnot_after_decomposition,
        }
    }
}

/// L2 distances between two field states, per component and combined.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct L2Entry {
    pub p: f64,
    pub u: f64,
    pub v: f64,
    pub total: f64,
}

/// One recorded snapshot of a simulate run.
#[derive(Debug, Clone, Serialize)]
pub struct SnapshotEntry {
    pub step: usize,
    pub time: f64,
    /// Norm of the decoded physical field at this step, rescaled by the
    /// preparation norm factor (constant 1/norm_factor for unitary steps;
    /// split steps may drift, which is physical).
    pub state_norm: f64,
    /// Largest amplitude magnitude observed in the unused component sector.
    pub zero_sector_residual: f64,
    /// Largest imaginary amplitude part in the physical sectors.
    pub imag_residual: f64,
    /// Snapshot CSV files, keyed by component name.
    pub files: BTreeMap<String, String>,
    /// Present when the oracle reference ran.
    pub l2_vs_oracle: Option<L2Entry>,
}

/// How the classical reference was (or was not) engaged.
#[derive(Debug, Clone, Serialize)]
pub struct OracleStatus {
    /// `"off"`, `"dense"`, `"krylov"`, or `"disabled"`.
    pub mode: String,
    /// Present when `mode == "disabled"`: why the guard refused.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub report_version: u32,
    pub kind: &'static str,
    /// Canonical serialized form of the effective config (overrides applied).
    pub config: String,
    pub num_qubits: usize,
    /// `"unitary"` or `"split"`.
    pub step_kind: &'static str,
    pub oracle: OracleStatus,
    pub gate_counts: GateTally,
    /// A-priori one-step error bound; absent on the split path.
    pub bound: Option<f64>,
    /// Field-amplitude scale fixed by the initial condition.
    pub norm_factor: f64,
    pub obstacle_cells: usize,
    pub snapshots: Vec<SnapshotEntry>,
}

/// One row of the compare table. The pressure-grid L2 is the headline
/// comparison quantity; the all-component total is reported alongside.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub step: usize,
    pub time: f64,
    /// Pressure-grid L2 error of the quantum state vs the exact propagator,
    /// field units.
    pub l2_p_quantum: f64,
    /// Pressure-grid L2 error of forward Euler vs the exact propagator;
    /// absent once the FDM run has diverged past this time.
    pub l2_p_fdm: Option<f64>,
    /// All-component L2 error of the quantum state vs the exact propagator.
    pub l2_total_quantum: f64,
    /// All-component L2 error of forward Euler vs the exact propagator.
    pub l2_total_fdm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub report_version: u32,
    pub kind: &'static str,
    pub config: String,
    pub num_qubits: usize,
    pub oracle: OracleStatus,
    pub tau: f64,
    pub fdm_tau: f64,
    pub fdm_steps: usize,
    /// Set when the FDM run is flagged divergent: non-finite amplitudes or
    /// norm beyond 10x the initial norm.
    pub fdm_diverged: bool,
    pub fdm_diverged_at_step: Option<usize>,
    pub fdm_diverged_at_time: Option<f64>,
    pub rows: Vec<CompareRow>,
    /// True when every row with both errors present (t > 0) has the quantum
    /// pressure-grid error strictly below the FDM one; absent when nothing
    /// is comparable.
    pub quantum_below_fdm_at_all_times: Option<bool>,
    /// Same ordering check on the all-component L2.
    pub quantum_below_fdm_at_all_times_total: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasuredBound {
    /// Spectral-norm distance between the step circuit and the exact
    /// propagator.
    pub value: f64,
    /// `bound - value`; nonnegative when the bound holds.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub report_version: u32,
    pub kind: &'static str,
    pub n_x: usize,
    pub n_y: usize,
    pub l: f64,
    pub c: f64,
    pub rho_bar: f64,
    pub u_bar: f64,
    pub tau: f64,
    pub bound: f64,
    pub measured: Option<MeasuredBound>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateCountEntry {
    pub n: usize,
    pub qubits: usize,
    pub tally: GateTally,
}

/// Least-squares quadratic `c2 n^2 + c1 n + c0` through the per-n CNOT
/// counts.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFit {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    /// Largest `|fit - count| / count` over the fitted points.
    pub max_rel_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeCheck {
    pub n: usize,
    pub measured: usize,
    pub envelope: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateCountReport {
    pub report_version: u32,
    pub kind: &'static str,
    pub scheme: &'static str,
    pub bc: &'static str,
    pub per_n: Vec<GateCountEntry>,
    /// Present with three or more sample points.
    pub fit: Option<QuadraticFit>,
    /// Present when the sweep includes n = 3.
    pub envelope_n3: Option<EnvelopeCheck>,
}

/// Render any report as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports are always serializable");
    s.push('\n');
    s
}
