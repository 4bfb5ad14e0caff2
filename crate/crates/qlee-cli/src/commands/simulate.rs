//! `simulate`: run the quantum time evolution, write per-component CSV
//! snapshots and a JSON report, with optional classical reference columns.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qlee::circuit::count;
use qlee::lee::{evolve, lee_generator, StepOperator};
use qlee::Component;

use crate::commands::{build_step, collect_sources};
use crate::config::ExperimentConfig;
use crate::oracle::{l2_field_vs_state, oracle_tier, OracleTier, ReferenceEvolution};
use crate::report::{GateTally, SimulateReport, SnapshotEntry, REPORT_VERSION};
use crate::snapshots::{render_snapshot_csv, snapshot_file_name};

pub struct SimulateOutput {
    pub report: SimulateReport,
    pub output_dir: PathBuf,
    pub snapshot_files: usize,
}

pub fn run(cfg: &ExperimentConfig, dump_circuit: Option<&Path>) -> Result<SimulateOutput> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let layout = params.layout()?;
    let obstacle = cfg.load_obstacle()?;
    let sources = collect_sources(cfg, obstacle.as_ref())?;
    let field0 = qlee::lee::source_field(&sources, &grid)?;
    let (state0, norm_factor) = field0.to_state(&layout)?;

    let (step, bound) = build_step(&params, cfg.scheme, cfg.bc, cfg.tau, obstacle.as_ref())?;
    if let Some(path) = dump_circuit {
        fs::write(path, step.circuit().export_text())
            .with_context(|| format!("cannot write circuit dump {}", path.display()))?;
    }
    let tally = GateTally::from(&count(step.circuit()));
    let step_kind = match step {
        StepOperator::Unitary(_) => "unitary",
        StepOperator::Split(_) => "split",
    };

    let snapshots = evolve(&field0, &step, cfg.tau, cfg.steps, cfg.snapshot_every)?;

    let tier = oracle_tier(layout.num_qubits());
    let status = tier.status(cfg.oracle, layout.num_qubits());
    let generator = if cfg.oracle && tier != OracleTier::Disabled {
        Some(lee_generator(&params, cfg.scheme, cfg.bc, obstacle.as_ref())?)
    } else {
        None
    };
    let mut reference = generator
        .as_ref()
        .map(|a| ReferenceEvolution::new(a, state0.amplitudes().to_vec()));

    let output_dir = cfg.resolve(&cfg.output_dir);
    fs::create_dir_all(&output_dir)
        .with_context(|| format!("cannot create output directory {}", output_dir.display()))?;

    let mut entries = Vec::with_capacity(snapshots.len());
    let mut files_written = 0usize;
    for snap in &snapshots {
        let mut files = BTreeMap::new();
        for component in [Component::P, Component::U, Component::V] {
            let name = snapshot_file_name(snap.step, component);
            let csv = render_snapshot_csv(&snap.field, component, snap.time)?;
            fs::write(output_dir.join(&name), csv)
                .with_context(|| format!("cannot write snapshot {name}"))?;
            files.insert(component.name().to_string(), name);
            files_written += 1;
        }
        let l2_vs_oracle = match reference.as_mut() {
            Some(r) => Some(l2_field_vs_state(
                &snap.field,
                r.at(snap.time)?,
                &layout,
                norm_factor,
            )?),
            None => None,
        };
        entries.push(SnapshotEntry {
            step: snap.step,
            time: snap.time,
            state_norm: snap.field.field_norm() / norm_factor,
            zero_sector_residual: snap.field.zero_sector_residual,
            imag_residual: snap.field.imag_residual,
            files,
            l2_vs_oracle,
        });
    }

    let report = SimulateReport {
        report_version: REPORT_VERSION,
        kind: "simulate",
        config: cfg.serialize(),
        num_qubits: layout.num_qubits(),
        step_kind,
        oracle: status,
        gate_counts: tally,
        bound,
        norm_factor,
        obstacle_cells: obstacle.as_ref().map_or(0, |s| s.cells().len()),
        snapshots: entries,
    };
    fs::write(
        output_dir.join("report.json"),
        crate::report::to_json(&report),
    )
    .with_context(|| "cannot write report.json")?;

    Ok(SimulateOutput {
        report,
        output_dir,
        snapshot_files: files_written,
    })
}
