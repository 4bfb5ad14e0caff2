//! `compare`: quantum evolution vs forward Euler vs the exact propagator,
//! tabulated as per-time L2 errors.
//!
//! The forward-Euler run is flagged divergent when it produces non-finite
//! amplitudes or its norm exceeds ten times the initial norm; a flagged run
//! still writes its table and report, and the process exits with code 3.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qlee::classical::fdm_evolve;
use qlee::lee::{evolve, lee_generator};
use qlee::Error;

use crate::commands::{build_step, collect_sources};
use crate::config::ExperimentConfig;
use crate::oracle::{
    l2_field_vs_state, l2_state_vs_state, oracle_tier, OracleTier, ReferenceEvolution,
    KRYLOV_QUBIT_LIMIT,
};
use crate::report::{CompareReport, CompareRow, REPORT_VERSION};

pub struct CompareOutput {
    pub report: CompareReport,
    pub output_dir: PathBuf,
}

/// First step index whose norm exceeds ten times the initial norm.
fn first_norm_blowup(norms: &[f64]) -> Option<usize> {
    let initial = *norms.first()?;
    norms
        .iter()
        .position(|&n| !n.is_finite() || n > 10.0 * initial)
}

/// The integer ratio `tau / fdm_tau`, rejecting non-divisible pairs.
fn step_ratio(tau: f64, fdm_tau: f64) -> qlee::Result<usize> {
    if !(fdm_tau.is_finite() && fdm_tau > 0.0) {
        return Err(Error::InvalidInput("fdm_tau must be positive".into()));
    }
    let ratio = tau / fdm_tau;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
        return Err(Error::InvalidInput(format!(
            "fdm_tau must evenly divide tau (tau / fdm_tau = {ratio})"
        )));
    }
    Ok(rounded as usize)
}

pub fn run(cfg: &ExperimentConfig, dump_circuit: Option<&Path>) -> Result<CompareOutput> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let layout = params.layout()?;
    let num_qubits = layout.num_qubits();
    if oracle_tier(num_qubits) == OracleTier::Disabled {
        return Err(Error::GuardExceeded {
            what: "classical oracle comparison",
            limit: KRYLOV_QUBIT_LIMIT,
            requested: num_qubits,
        }
        .into());
    }
    let fdm_tau = cfg.effective_fdm_tau();
    let ratio = step_ratio(cfg.tau, fdm_tau)?;

    let obstacle = cfg.load_obstacle()?;
    let sources = collect_sources(cfg, obstacle.as_ref())?;
    let field0 = qlee::lee::source_field(&sources, &grid)?;
    let (state0, norm_factor) = field0.to_state(&layout)?;

    let (step, _) = build_step(&params, cfg.scheme, cfg.bc, cfg.tau, obstacle.as_ref())?;
    if let Some(path) = dump_circuit {
        fs::write(path, step.circuit().export_text())
            .with_context(|| format!("cannot write circuit dump {}", path.display()))?;
    }
    let snapshots = evolve(&field0, &step, cfg.tau, cfg.steps, cfg.snapshot_every)?;

    let generator = lee_generator(&params, cfg.scheme, cfg.bc, obstacle.as_ref())?;
    let mut reference = ReferenceEvolution::new(&generator, state0.amplitudes().to_vec());

    let fdm_steps = cfg.steps * ratio;
    let fdm = fdm_evolve(
        &generator,
        state0.amplitudes(),
        fdm_tau,
        fdm_steps,
        cfg.snapshot_every * ratio,
    )?;
    let diverged_at_step = match (fdm.diverged_at, first_norm_blowup(&fdm.norms)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };

    let mut rows = Vec::with_capacity(snapshots.len());
    for snap in &snapshots {
        let exact = reference.at(snap.time)?;
        let quantum = l2_field_vs_state(&snap.field, exact, &layout, norm_factor)?;
        let fdm_step = snap.step * ratio;
        let fdm_entry = fdm
            .snapshots
            .iter()
            .find(|(s, _)| *s == fdm_step)
            .map(|(_, state)| l2_state_vs_state(state, exact, &layout, norm_factor))
            .transpose()?
            .filter(|e| e.total.is_finite());
        rows.push(CompareRow {
            step: snap.step,
            time: snap.time,
            l2_p_quantum: quantum.p,
            l2_p_fdm: fdm_entry.as_ref().map(|e| e.p),
            l2_total_quantum: quantum.total,
            l2_total_fdm: fdm_entry.as_ref().map(|e| e.total),
        });
    }
    let ordering = |quantum: fn(&CompareRow) -> f64, fdm: fn(&CompareRow) -> Option<f64>| {
        let comparable: Vec<&CompareRow> = rows
            .iter()
            .filter(|r| r.time > 0.0 && fdm(r).is_some())
            .collect();
        if comparable.is_empty() {
            None
        } else {
            Some(
                comparable
                    .iter()
                    .all(|r| quantum(r) < fdm(r).expect("filtered to present")),
            )
        }
    };
    let quantum_below_fdm_at_all_times = ordering(|r| r.l2_p_quantum, |r| r.l2_p_fdm);
    let quantum_below_fdm_at_all_times_total =
        ordering(|r| r.l2_total_quantum, |r| r.l2_total_fdm);

    let report = CompareReport {
        report_version: REPORT_VERSION,
        kind: "compare",
        config: cfg.serialize(),
        num_qubits,
        oracle: oracle_tier(num_qubits).status(true, num_qubits),
        tau: cfg.tau,
        fdm_tau,
        fdm_steps,
        fdm_diverged: diverged_at_step.is_some(),
        fdm_diverged_at_step: diverged_at_step,
        fdm_diverged_at_time: diverged_at_step.map(|s| s as f64 * fdm_tau),
        rows,
        quantum_below_fdm_at_all_times,
        quantum_below_fdm_at_all_times_total,
    };

    let output_dir = cfg.resolve(&cfg.output_dir);
    fs::create_dir_all(&output_dir)
        .with_context(|| format!("cannot create output directory {}", output_dir.display()))?;
    fs::write(output_dir.join("compare.csv"), render_table(&report))
        .with_context(|| "cannot write compare.csv")?;
    fs::write(
        output_dir.join("report.json"),
        crate::report::to_json(&report),
    )
    .with_context(|| "cannot write report.json")?;

    Ok(CompareOutput { report, output_dir })
}

fn render_table(report: &CompareReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# kind = compare");
    let _ = writeln!(s, "# tau = {}", report.tau);
    let _ = writeln!(s, "# fdm_tau = {}", report.fdm_tau);
    let _ = writeln!(s, "time,l2_p_quantum,l2_p_fdm,l2_total_quantum,l2_total_fdm");
    let opt = |v: Option<f64>| v.map(|f| f.to_string()).unwrap_or_default();
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            row.time,
            row.l2_p_quantum,
            opt(row.l2_p_fdm),
            row.l2_total_quantum,
            opt(row.l2_total_fdm),
        );
    }
    s
}
