//! Decomposition of the composite gates into the base set
//! `{CNOT, RZ, RY, H, P, X}`.
//!
//! Multi-controlled RZ rotations are synthesized exactly (no global-phase
//! residue) as an `RZ(g/2) / L / RZ(-g/2) / L^-1` sandwich, where `L` is a
//! chain of relative-phase Toffolis that toggles the target by the AND of
//! all controls, borrowing `k-2` arbitrary (dirty) register qubits. Each
//! relative-phase Toffoli equals an exact Toffoli times a diagonal; those
//! diagonals commute with the inner RZ and cancel against the inverted
//! chain, so only the permutation action survives — which is exactly what
//! the sandwich needs. Cost: `12k - 18` CNOTs for `k >= 2` controls, linear
//! in `k`.
//!
//! When fewer than `k-2` spare qubits exist the chain is split into two
//! half-sized blocks sharing one borrowed qubit (each block in a
//! self-restoring variant so the halves cannot corrupt each other's
//! controls); with no spare qubit at all an exact angle-halving cascade is
//! used (exponential, but only tiny registers can reach it).

use crate::circuit::{Circuit, Gate, GateKind};

/// A relative-phase Toffoli specification: `(c1, c2, target)`.
type Triple = (usize, usize, usize);

const PI_4: f64 = std::f64::consts::FRAC_PI_4;

/// Relative-phase (Margolus) Toffoli: toggles `t` by `c1 AND c2`, adding a
/// -1 phase on the `c1=1, c2=0, t=1` subspace. Self-inverse. 3 CNOTs.
fn emit_rtof(out: &mut Vec<Gate>, (c1, c2, t): Triple) {
    out.push(Gate::ry(PI_4, t).unwrap());
    out.push(Gate::cnot(c2, t).unwrap());
    out.push(Gate::ry(PI_4, t).unwrap());
    out.push(Gate::cnot(c1, t).unwrap());
    out.push(Gate::ry(-PI_4, t).unwrap());
    out.push(Gate::cnot(c2, t).unwrap());
    out.push(Gate::ry(-PI_4, t).unwrap());
}

fn emit_block(out: &mut Vec<Gate>, block: &[Triple]) {
    for &t in block {
        emit_rtof(out, t);
    }
}

/// The inverse of a block: reversed order (each Toffoli is self-inverse).
fn block_dagger(block: &[Triple]) -> Vec<Triple> {
    block.iter().rev().copied().collect()
}

/// Bottom-up Toffoli chain computing `t ^= AND(controls)` with the partial
/// products parked on `dirty`: `g0 = (c0, c1 -> d0)`, `gi = (c_{i+1},
/// d_{i-1} -> d_i)`, last gate targets `t`. Needs `k-2` dirty qubits.
fn chain(controls: &[usize], t: usize, dirty: &[usize]) -> Vec<Triple> {
    let k = controls.len();
    debug_assert!(k >= 2);
    debug_assert!(dirty.len() >= k - 2);
    let mut g = Vec::with_capacity(k - 1);
    if k == 2 {
        g.push((controls[0], controls[1], t));
        return g;
    }
    g.push((controls[0], controls[1], dirty[0]));
    for i in 1..k - 2 {
        g.push((controls[i + 1], dirty[i - 1], dirty[i]));
    }
    g.push((controls[k - 1], dirty[k - 3], t));
    g
}

/// Palindrome over a chain: `[g_last .. g_0 .. g_last]`. Toggles the final
/// target by AND(controls); every dirty qubit is left toggled by a function
/// of the *controls only* (this matters for the restoring variant).
fn palindrome(chain: &[Triple]) -> Vec<Triple> {
    let mut p: Vec<Triple> = chain.iter().rev().copied().collect();
    p.extend_from_slice(&chain[1..]);
    p
}

/// Restoring variant: palindrome plus the one-level-down palindrome, which
/// toggles each dirty qubit a second time and therefore returns all of them
/// to their input values. Used by the split construction where the other
/// half's controls serve as dirty qubits.
fn restoring(chain: &[Triple]) -> Vec<Triple> {
    let mut p = palindrome(chain);
    if chain.len() > 1 {
        p.extend(palindrome(&chain[..chain.len() - 1]));
    }
    p
}

/// Multi-controlled RZ, appended to `out`.
fn emit_mcrz(out: &mut Vec<Gate>, gamma: f64, controls: &[usize], t: usize, free: &[usize]) {
    let k = controls.len();
    match k {
        0 => out.push(Gate::rz(gamma, t).unwrap()),
        1 => {
            out.push(Gate::rz(gamma / 2.0, t).unwrap());
            out.push(Gate::cnot(controls[0], t).unwrap());
            out.push(Gate::rz(-gamma / 2.0, t).unwrap());
            out.push(Gate::cnot(controls[0], t).unwrap());
        }
        _ => {
            let block: Vec<Triple> = if free.len() >= k - 2 {
                palindrome(&chain(controls, t, &free[..k - 2]))
            } else if !free.is_empty() {
                // Two restoring half-blocks through one borrowed qubit `a`:
                // A computes `a ^= AND(first half)` borrowing from the second
                // half, B toggles `t` controlled on (second half, a)
                // borrowing from the first. A B A B realizes the full AND.
                // Only reachable for k >= 3 (k = 2 needs no dirty qubits), so
                // both halves have at least two controls.
                let a = free[0];
                let m = k.div_ceil(2);
                let (c1, c2) = controls.split_at(m);
                let mut b_controls = c2.to_vec();
                b_controls.push(a); // `a` last: only the t-touching gate sees it
                let block_a = restoring(&chain(c1, a, c2));
                let block_b = restoring(&chain(&b_controls, t, c1));
                let mut seq = Vec::new();
                seq.extend_from_slice(&block_a);
                seq.extend_from_slice(&block_b);
                seq.extend_from_slice(&block_a);
                seq.extend_from_slice(&block_b);
                seq
            } else {
                // No spare qubit anywhere: exact angle-halving cascade.
                emit_mcrz_cascade(out, gamma, controls, t);
                return;
            };
            out.push(Gate::rz(gamma / 2.0, t).unwrap());
            emit_block(out, &block);
            out.push(Gate::rz(-gamma / 2.0, t).unwrap());
            emit_block(out, &block_dagger(&block));
        }
    }
}

/// Ancilla-free exact expansion: halve the angle, recurse on one fewer
/// control. Exponential gate count; reachable only when a gate already
/// touches every qubit of a small register.
fn emit_mcrz_cascade(out: &mut Vec<Gate>, gamma: f64, controls: &[usize], t: usize) {
    let k = controls.len();
    if k == 0 {
        out.push(Gate::rz(gamma, t).unwrap());
        return;
    }
    if k == 1 {
        out.push(Gate::rz(gamma / 2.0, t).unwrap());
        out.push(Gate::cnot(controls[0], t).unwrap());
        out.push(Gate::rz(-gamma / 2.0, t).unwrap());
        out.push(Gate::cnot(controls[0], t).unwrap());
        return;
    }
    let (last, rest) = controls.split_last().unwrap();
    emit_mcrz_cascade(out, gamma / 2.0, rest, t);
    out.push(Gate::cnot(*last, t).unwrap());
    emit_mcrz_cascade(out, -gamma / 2.0, rest, t);
    out.push(Gate::cnot(*last, t).unwrap());
}

/// Rewrite a circuit into the base gate set `{CNOT, RZ, RY, H, P, X}`.
/// The result is exactly equivalent (including global phase).
pub fn decompose(circuit: &Circuit) -> Circuit {
    let mut out = Circuit::new(circuit.num_qubits());
    let mut gates: Vec<Gate> = Vec::new();
    for g in circuit.gates() {
        gates.clear();
        match g.kind() {
            GateKind::X | GateKind::H | GateKind::P | GateKind::RZ | GateKind::RY
            | GateKind::CNOT => gates.push(g.clone()),
            GateKind::RZZ => {
                let (t1, t2) = (g.targets()[0], g.targets()[1]);
                gates.push(Gate::cnot(t1, t2).unwrap());
                gates.push(Gate::rz(g.angle(), t2).unwrap());
                gates.push(Gate::cnot(t1, t2).unwrap());
            }
            GateKind::CRY => {
                let (c, t) = (g.controls()[0], g.targets()[0]);
                gates.push(Gate::ry(g.angle() / 2.0, t).unwrap());
                gates.push(Gate::cnot(c, t).unwrap());
                gates.push(Gate::ry(-g.angle() / 2.0, t).unwrap());
                gates.push(Gate::cnot(c, t).unwrap());
            }
            GateKind::MCRZ => {
                let free = free_qubits(circuit.num_qubits(), g);
                emit_mcrz(&mut gates, g.angle(), g.controls(), g.targets()[0], &free);
            }
            GateKind::MCRZZ => {
                // Promote the first target to a control around an X
                // conjugation: the pair (ZZ on t1,t2) rotation splits into
                // two opposite-angle rotations on t2 keyed by t1.
                let free = free_qubits(circuit.num_qubits(), g);
                let (t1, t2) = (g.targets()[0], g.targets()[1]);
                let mut ctl = g.controls().to_vec();
                ctl.push(t1);
                gates.push(Gate::x(t1));
                emit_mcrz(&mut gates, g.angle(), &ctl, t2, &free);
                gates.push(Gate::x(t1));
                emit_mcrz(&mut gates, -g.angle(), &ctl, t2, &free);
            }
        }
        for gate in gates.drain(..) {
            out.push(gate).expect("decomposition stays within the register");
        }
    }
    out
}

fn free_qubits(num_qubits: usize, gate: &Gate) -> Vec<usize> {
    let used: std::collections::BTreeSet<usize> = gate.qubits().collect();
    (0..num_qubits).filter(|q| !used.contains(q)).collect()
}
