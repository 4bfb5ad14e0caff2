//! Dense statevector simulation.
//!
//! Amplitudes live in one flat array indexed little-endian by qubit bits.
//! Gate kernels update in place and only visit the control-satisfied
//! subspace, so heavily controlled rotations (the common case here) touch a
//! small fraction of the state. Everything is sequential and therefore
//! bitwise deterministic.

use num_complex::Complex64;

use crate::circuit::{phase, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::layout::{Component, RegisterLayout};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Iterate every index whose bits under `fixed_mask` are all 1, i.e.
/// `fixed_mask | s` for every sub-pattern `s` of the complement.
fn for_each_fixed(num_qubits: usize, fixed_mask: usize, mut f: impl FnMut(usize)) {
    let full = (1usize << num_qubits) - 1;
    let free = full & !fixed_mask;
    let count = 1usize << free.count_ones();
    let mut s = 0usize;
    for _ in 0..count {
        f(s | fixed_mask);
        s = (s | !free).wrapping_add(1) & free;
    }
}

impl StateVector {
    /// `|index>` on `num_qubits` qubits.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits > 62 {
            return Err(Error::GuardExceeded {
                what: "statevector width",
                limit: 62,
                requested: num_qubits,
            });
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Build from explicit amplitudes (length must be a power of two).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(
                "amplitude array length must be a nonzero power of two".into(),
            ));
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if gate.max_qubit() >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: gate.max_qubit(),
                num_qubits: self.num_qubits,
            });
        }
        let cmask: usize = gate.controls().iter().map(|&q| 1usize << q).sum();
        match gate.kind() {
            GateKind::X | GateKind::CNOT => {
                let t = 1usize << gate.targets()[0];
                for_each_fixed(self.num_qubits, cmask | t, |i1| {
                    self.amps.swap(i1 & !t, i1);
                });
            }
            GateKind::H => {
                let t = 1usize << gate.targets()[0];
                let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
                for_each_fixed(self.num_qubits, cmask | t, |i1| {
                    let i0 = i1 & !t;
                    let a = self.amps[i0];
                    let b = self.amps[i1];
                    self.amps[i0] = (a + b) * inv_sqrt2;
                    self.amps[i1] = (a - b) * inv_sqrt2;
                });
            }
            GateKind::RY | GateKind::CRY => {
                let t = 1usize << gate.targets()[0];
                let (s, c) = (gate.angle() / 2.0).sin_cos();
                for_each_fixed(self.num_qubits, cmask | t, |i1| {
                    let i0 = i1 & !t;
                    let a = self.amps[i0];
                    let b = self.amps[i1];
                    self.amps[i0] = a * c - b * s;
                    self.amps[i1] = a * s + b * c;
                });
            }
            GateKind::P => {
                let t = 1usize << gate.targets()[0];
                let ph = phase(gate.angle());
                for_each_fixed(self.num_qubits, cmask | t, |i1| {
                    self.amps[i1] *= ph;
                });
            }
            GateKind::RZ | GateKind::MCRZ => {
                let t = 1usize << gate.targets()[0];
                let minus = phase(-gate.angle() / 2.0);
                let plus = phase(gate.angle() / 2.0);
                for_each_fixed(self.num_qubits, cmask, |i| {
                    self.amps[i] *= if i & t == 0 { minus } else { plus };
                });
            }
            GateKind::RZZ | GateKind::MCRZZ => {
                let t1 = 1usize << gate.targets()[0];
                let t2 = 1usize << gate.targets()[1];
                let even = phase(-gate.angle() / 2.0);
                let odd = phase(gate.angle() / 2.0);
                for_each_fixed(self.num_qubits, cmask, |i| {
                    let parity = ((i & t1 != 0) as u8) ^ ((i & t2 != 0) as u8);
                    self.amps[i] *= if parity == 0 { even } else { odd };
                });
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::QubitCountMismatch {
                circuit: circuit.num_qubits(),
                state: self.num_qubits,
            });
        }
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }
}

/// Real field values on the grid plus extraction diagnostics.
///
/// Values are stored physically scaled (amplitudes times the normalization
/// factor); `idx = x * ny_points + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx_points: usize,
    pub ny_points: usize,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// The scale that converts unit-norm amplitudes back to field values.
    pub norm_factor: f64,
    /// Largest imaginary part (raw amplitude units) seen in the three
    /// physical sectors; ideally ~1e-16 since the dynamics are real.
    pub imag_residual: f64,
    /// Largest magnitude (raw amplitude units) in the unused ancilla sector;
    /// nonzero values mean the state leaked outside the encoding.
    pub zero_sector_residual: f64,
}

impl FieldGrid {
    pub fn zeros(nx_points: usize, ny_points: usize) -> Self {
        let n = nx_points * ny_points;
        Self {
            nx_points,
            ny_points,
            p: vec![0.0; n],
            u: vec![0.0; n],
            v: vec![0.0; n],
            norm_factor: 1.0,
            imag_residual: 0.0,
            zero_sector_residual: 0.0,
        }
    }

    #[inline]
    pub fn at(&self, component: Component, x: usize, y: usize) -> f64 {
        let i = x * self.ny_points + y;
        match component {
            Component::P => self.p[i],
            Component::U => self.u[i],
            Component::V => self.v[i],
            Component::Zero => 0.0,
        }
    }

    pub fn component(&self, component: Component) -> Result<&[f64]> {
        match component {
            Component::P => Ok(&self.p),
            Component::U => Ok(&self.u),
            Component::V => Ok(&self.v),
            Component::Zero => Err(Error::InvalidInput(
                "the unused sector is not a physical field component".into(),
            )),
        }
    }

    /// Euclidean norm over all three field components.
    pub fn field_norm(&self) -> f64 {
        self.p
            .iter()
            .chain(&self.u)
            .chain(&self.v)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Encode the field back into a unit statevector, returning the
    /// normalization factor (the field norm).
    pub fn to_state(&self, layout: &RegisterLayout) -> Result<(StateVector, f64)> {
        if !layout.has_ancillas()
            || layout.points_x() != self.nx_points
            || layout.points_y() != self.ny_points
        {
            return Err(Error::InvalidInput(
                "layout shape does not match the field grid".into(),
            ));
        }
        let norm = self.field_norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput("cannot encode an all-zero field".into()));
        }
        let mut amps = vec![ZERO; layout.dim()];
        for x in 0..self.nx_points {
            for y in 0..self.ny_points {
                let i = x * self.ny_points + y;
                amps[layout.index(Component::P, x, y)?] = Complex64::new(self.p[i] / norm, 0.0);
                amps[layout.index(Component::U, x, y)?] = Complex64::new(self.u[i] / norm, 0.0);
                amps[layout.index(Component::V, x, y)?] = Complex64::new(self.v[i] / norm, 0.0);
            }
        }
        Ok((StateVector::from_amplitudes(amps)?, norm))
    }
}

/// Read the three field components out of a statevector.
pub fn extract_field(
    state: &StateVector,
    layout: &RegisterLayout,
    norm_factor: f64,
) -> Result<FieldGrid> {
    if !layout.has_ancillas() {
        return Err(Error::InvalidInput(
            "field extraction requires the ancilla register".into(),
        ));
    }
    if layout.dim() != state.dim() {
        return Err(Error::QubitCountMismatch {
            circuit: layout.num_qubits(),
            state: state.num_qubits(),
        });
    }
    let mut grid = FieldGrid::zeros(layout.points_x(), layout.points_y());
    grid.norm_factor = norm_factor;
    let mut imag = 0.0f64;
    for x in 0..grid.nx_points {
        for y in 0..grid.ny_points {
            let i = x * grid.ny_points + y;
            let ap = state.amplitude(layout.index(Component::P, x, y)?);
            let au = state.amplitude(layout.index(Component::U, x, y)?);
            let av = state.amplitude(layout.index(Component::V, x, y)?);
            grid.p[i] = ap.re * norm_factor;
            grid.u[i] = au.re * norm_factor;
            grid.v[i] = av.re * norm_factor;
            imag = imag.max(ap.im.abs()).max(au.im.abs()).max(av.im.abs());
            let az = state.amplitude(layout.index(Component::Zero, x, y)?);
            grid.zero_sector_residual = grid.zero_sector_residual.max(az.norm());
        }
    }
    grid.imag_residual = imag;
    Ok(grid)
}

/// Pointwise L2 distance between one component of two grids.
pub fn l2_distance(a: &FieldGrid, b: &FieldGrid, component: Component) -> Result<f64> {
    if a.nx_points != b.nx_points || a.ny_points != b.ny_points {
        return Err(Error::DimensionMismatch {
            left: a.nx_points * a.ny_points,
            right: b.nx_points * b.ny_points,
        });
    }
    let av = a.component(component)?;
    let bv = b.component(component)?;
    Ok(av
        .iter()
        .zip(bv)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
