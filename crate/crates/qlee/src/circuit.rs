//! Gate-level circuit representation.
//!
//! Conventions (pinned by unit tests):
//!
//! * `RZ(g)  = exp(-i g Z / 2)`
//! * `RY(t)  = exp(-i t Y / 2)`
//! * `RZZ(g) = exp(-i g (Z x Z) / 2)`
//! * `P(l)   = diag(1, e^{i l})`
//! * multi-controlled rotations apply their rotation on the subspace where
//!   every control bit is 1 and act as the identity elsewhere.
//!
//! Qubit identifiers are bit positions of the statevector index
//! (little-endian; see [`crate::layout`]).

use num_complex::Complex64;

use crate::dense::DenseOperator;
use crate::error::{Error, Result};
use crate::statevector::StateVector;

/// Guard for materializing a circuit as a dense unitary.
pub const UNITARY_QUBIT_GUARD: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    H,
    P,
    RZ,
    RY,
    RZZ,
    CNOT,
    MCRZ,
    MCRZZ,
    CRY,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::X,
        GateKind::H,
        GateKind::P,
        GateKind::RZ,
        GateKind::RY,
        GateKind::RZZ,
        GateKind::CNOT,
        GateKind::MCRZ,
        GateKind::MCRZZ,
        GateKind::CRY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::H => "H",
            GateKind::P => "P",
            GateKind::RZ => "RZ",
            GateKind::RY => "RY",
            GateKind::RZZ => "RZZ",
            GateKind::CNOT => "CNOT",
            GateKind::MCRZ => "MCRZ",
            GateKind::MCRZZ => "MCRZZ",
            GateKind::CRY => "CRY",
        }
    }

    fn index(self) -> usize {
        GateKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    fn has_angle(self) -> bool {
        !matches!(self, GateKind::X | GateKind::H | GateKind::CNOT)
    }
}

/// One gate: a kind, an optional rotation angle, control qubits and target
/// qubits. All qubits of a gate are distinct (checked at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    angle: f64,
    controls: Vec<usize>,
    targets: Vec<usize>,
}

impl Gate {
    fn build(kind: GateKind, angle: f64, controls: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &q in controls.iter().chain(targets.iter()) {
            if !seen.insert(q) {
                return Err(Error::DuplicateQubit { qubit: q });
            }
        }
        if !angle.is_finite() {
            return Err(Error::InvalidInput("gate angle must be finite".into()));
        }
        Ok(Self {
            kind,
            angle,
            controls,
            targets,
        })
    }

    pub fn x(q: usize) -> Gate {
        Self::build(GateKind::X, 0.0, vec![], vec![q]).unwrap()
    }

    pub fn h(q: usize) -> Gate {
        Self::build(GateKind::H, 0.0, vec![], vec![q]).unwrap()
    }

    pub fn p(lambda: f64, q: usize) -> Result<Gate> {
        Self::build(GateKind::P, lambda, vec![], vec![q])
    }

    pub fn rz(gamma: f64, q: usize) -> Result<Gate> {
        Self::build(GateKind::RZ, gamma, vec![], vec![q])
    }

    pub fn ry(theta: f64, q: usize) -> Result<Gate> {
        Self::build(GateKind::RY, theta, vec![], vec![q])
    }

    pub fn rzz(gamma: f64, q1: usize, q2: usize) -> Result<Gate> {
        Self::build(GateKind::RZZ, gamma, vec![], vec![q1, q2])
    }

    pub fn cnot(control: usize, target: usize) -> Result<Gate> {
        Self::build(GateKind::CNOT, 0.0, vec![control], vec![target])
    }

    pub fn mcrz(gamma: f64, controls: Vec<usize>, target: usize) -> Result<Gate> {
        Self::build(GateKind::MCRZ, gamma, controls, vec![target])
    }

    pub fn mcrzz(gamma: f64, controls: Vec<usize>, t1: usize, t2: usize) -> Result<Gate> {
        Self::build(GateKind::MCRZZ, gamma, controls, vec![t1, t2])
    }

    pub fn cry(theta: f64, control: usize, target: usize) -> Result<Gate> {
        Self::build(GateKind::CRY, theta, vec![control], vec![target])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(self.targets.iter()).copied()
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().max().expect("gates act on at least one qubit")
    }

    /// Inverse gate. X/H/CNOT are involutions; everything else negates
    /// its angle.
    pub fn dagger(&self) -> Gate {
        Gate {
            kind: self.kind,
            angle: if self.kind.has_angle() {
                -self.angle
            } else {
                0.0
            },
            controls: self.controls.clone(),
            targets: self.targets.clone(),
        }
    }
}

/// A gate list over a fixed-width register; gates apply in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let worst = gate.max_qubit();
        if worst >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: worst,
                num_qubits: self.num_qubits,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Append another circuit's gates; the other circuit may be narrower but
    /// not wider than this one.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::QubitCountMismatch {
                circuit: other.num_qubits,
                state: self.num_qubits,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// The inverse circuit: reversed gate order, each gate inverted.
    pub fn dagger(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::dagger).collect(),
        }
    }

    /// Frozen text export, one gate per line:
    /// `KIND angle c1,c2->t1,t2` with `-` for angle-free kinds and an empty
    /// control list allowed. Floats use shortest round-trip formatting.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            let angle = if g.kind.has_angle() {
                format!("{}", g.angle)
            } else {
                "-".to_string()
            };
            let controls = g
                .controls
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let targets = g
                .targets
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!("{} {} {}->{}\n", g.kind.name(), angle, controls, targets));
        }
        out
    }
}

/// The basis-change block `U_j(lambda)` on the first `j` qubits of `slice`
/// (slice order = ascending significance within the axis register).
///
/// Gate order as applied: `H` on slice qubit `j`, then `P(lambda)` on it,
/// then a CNOT from it onto each of slice qubits `1..j-1`.
///
/// Conjugating `Z(q_j) * |1..1><1..1|(q_1..q_{j-1})` by `U_j(-pi/2)` yields
/// `i * (s01(q_j) x s10 x..x s10 - s10(q_j) x s01 x..x s01)` — exactly the
/// paired ladder generator a central difference is built from, which is why
/// this block turns multi-controlled RZ rotations into difference dynamics.
pub fn u_bell(j: usize, lambda: f64, slice: &[usize]) -> Result<Circuit> {
    if j == 0 {
        return Err(Error::InvalidInput("u_bell needs j >= 1".into()));
    }
    if slice.len() < j {
        return Err(Error::InvalidInput(format!(
            "u_bell over {} qubits needs a slice of at least that length, got {}",
            j,
            slice.len()
        )));
    }
    let active = &slice[..j];
    let width = active.iter().max().unwrap() + 1;
    let mut c = Circuit::new(width);
    let top = active[j - 1];
    c.push(Gate::h(top))?;
    c.push(Gate::p(lambda, top)?)?;
    for &target in &active[..j - 1] {
        c.push(Gate::cnot(top, target)?)?;
    }
    Ok(c)
}

/// Per-kind gate tally plus the CNOT count of the fully decomposed circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateCount {
    per_kind: [usize; 10],
    pub cnot_after_decomposition: usize,
}

impl GateCount {
    pub fn of(kind: GateKind, counts: &GateCount) -> usize {
        counts.per_kind[kind.index()]
    }

    pub fn kind(&self, kind: GateKind) -> usize {
        self.per_kind[kind.index()]
    }

    pub fn total(&self) -> usize {
        self.per_kind.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, usize)> + '_ {
        GateKind::ALL
            .iter()
            .map(move |&k| (k.name(), self.per_kind[k.index()]))
    }

    pub fn add(&self, other: &GateCount) -> GateCount {
        let mut per_kind = self.per_kind;
        for (a, b) in per_kind.iter_mut().zip(other.per_kind.iter()) {
            *a += b;
        }
        GateCount {
            per_kind,
            cnot_after_decomposition: self.cnot_after_decomposition
                + other.cnot_after_decomposition,
        }
    }
}

/// Count gates per kind and the CNOTs of the decomposed form.
pub fn count(circuit: &Circuit) -> GateCount {
    let mut per_kind = [0usize; 10];
    for g in circuit.gates() {
        per_kind[g.kind().index()] += 1;
    }
    let decomposed = crate::decompose::decompose(circuit);
    let cnot_after_decomposition = decomposed
        .gates()
        .iter()
        .filter(|g| g.kind() == GateKind::CNOT)
        .count();
    GateCount {
        per_kind,
        cnot_after_decomposition,
    }
}

/// Dense unitary of a circuit, built column by column from basis states.
pub fn dense_unitary(circuit: &Circuit) -> Result<DenseOperator> {
    if circuit.num_qubits() > UNITARY_QUBIT_GUARD {
        return Err(Error::GuardExceeded {
            what: "dense unitary",
            limit: UNITARY_QUBIT_GUARD,
            requested: circuit.num_qubits(),
        });
    }
    let dim = 1usize << circuit.num_qubits();
    let mut u = DenseOperator::zeros(dim);
    for col in 0..dim {
        let mut state = StateVector::basis_state(circuit.num_qubits(), col)?;
        state.apply_circuit(circuit)?;
        u.set_column(col, state.amplitudes());
    }
    Ok(u)
}

/// Distance `||U - V||_max` up to a global phase: the phase is fixed on the
/// largest entry of `U`, then the maximum entry difference is taken.
/// A helper for decomposition equivalence tests.
pub fn unitary_distance_up_to_phase(u: &DenseOperator, v: &DenseOperator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    // Find the largest entry of u to anchor the phase.
    let mut best = (0usize, 0usize, 0.0f64);
    for r in 0..u.dim() {
        for c in 0..u.dim() {
            let a = u.get(r, c).norm();
            if a > best.2 {
                best = (r, c, a);
            }
        }
    }
    if best.2 == 0.0 {
        return Err(Error::InvalidInput("zero matrix is not a unitary".into()));
    }
    let (r, c, _) = best;
    let vu = v.get(r, c);
    if vu.norm() == 0.0 {
        return Ok(f64::INFINITY);
    }
    let phase = (u.get(r, c) / vu) / (u.get(r, c) / vu).norm();
    let mut worst = 0.0f64;
    for i in 0..u.dim() {
        for j in 0..u.dim() {
            let d = (u.get(i, j) - v.get(i, j) * phase).norm();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

pub(crate) fn phase(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_qubits_rejected() {
        assert!(matches!(
            Gate::cnot(3, 3),
            Err(Error::DuplicateQubit { qubit: 3 })
        ));
        assert!(Gate::mcrzz(0.1, vec![0, 1], 1, 2).is_err());
        assert!(Gate::mcrz(0.1, vec![0, 0], 2).is_err());
    }

    #[test]
    fn push_checks_register_width() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::x(1)).is_ok());
        assert!(matches!(
            c.push(Gate::x(2)),
            Err(Error::QubitOutOfRange { qubit: 2, .. })
        ));
    }

    #[test]
    fn u_bell_structure() {
        // j = 1 is just [H, P]; j = 3 adds exactly two CNOTs.
        let c1 = u_bell(1, -0.5, &[0, 1, 2]).unwrap();
        let kinds: Vec<_> = c1.gates().iter().map(|g| g.kind()).collect();
        assert_eq!(kinds, vec![GateKind::H, GateKind::P]);

        let c3 = u_bell(3, -0.5, &[0, 1, 2]).unwrap();
        let cnots = c3
            .gates()
            .iter()
            .filter(|g| g.kind() == GateKind::CNOT)
            .count();
        assert_eq!(cnots, 2);
        assert!(u_bell(4, -0.5, &[0, 1, 2]).is_err());
        assert!(u_bell(0, -0.5, &[0]).is_err());
    }

    #[test]
    fn dagger_reverses_and_negates() {
        let mut c = Circuit::new(3);
        c.push(Gate::h(0)).unwrap();
        c.push(Gate::rz(0.3, 1).unwrap()).unwrap();
        let d = c.dagger();
        assert_eq!(d.gates()[0].kind(), GateKind::RZ);
        assert_eq!(d.gates()[0].angle(), -0.3);
        assert_eq!(d.gates()[1].kind(), GateKind::H);
    }

    #[test]
    fn export_text_frozen_format() {
        let mut c = Circuit::new(6);
        c.push(Gate::h(2)).unwrap();
        c.push(Gate::p(-0.25, 2).unwrap()).unwrap();
        c.push(Gate::cnot(2, 0).unwrap()).unwrap();
        c.push(Gate::mcrz(0.8, vec![0, 1, 2], 3).unwrap()).unwrap();
        c.push(Gate::mcrzz(-0.2, vec![1, 5], 0, 4).unwrap()).unwrap();
        c.push(Gate::x(5)).unwrap();
        assert_eq!(
            c.export_text(),
            "H - ->2\nP -0.25 ->2\nCNOT - 2->0\nMCRZ 0.8 0,1,2->3\nMCRZZ -0.2 1,5->0,4\nX - ->5\n"
        );
    }

    #[test]
    fn count_is_additive_under_concatenation() {
        let mut a = Circuit::new(4);
        a.push(Gate::mcrz(0.4, vec![0, 1], 2).unwrap()).unwrap();
        a.push(Gate::h(3)).unwrap();
        let mut b = Circuit::new(4);
        b.push(Gate::mcrzz(0.2, vec![3], 0, 1).unwrap()).unwrap();
        let mut ab = a.clone();
        ab.append(&b).unwrap();
        let sum = count(&a).add(&count(&b));
        assert_eq!(count(&ab), sum);
    }
}
