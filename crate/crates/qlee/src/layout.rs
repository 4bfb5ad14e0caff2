//! Register layout: how field components and grid coordinates map onto
//! qubits and statevector indices.
//!
//! The register is, from most to least significant:
//!
//! ```text
//! a1 a2 | qx_nx .. qx_1 | qy_ny .. qy_1
//! ```
//!
//! so a basis index decomposes as
//! `index = ((a1*2 + a2) << (n_x + n_y)) | (x << n_y) | y`.
//!
//! Within an axis register the qubit numbered 1 is the least significant
//! coordinate bit; the qubit numbered `n` carries the top coordinate bit.
//! The two ancillas select the field component: `(a1,a2) = (0,0)` pressure,
//! `(0,1)` x-velocity, `(1,0)` y-velocity, `(1,1)` unused (kept zero).
//!
//! Qubit identifiers used by gates are plain bit positions in that index,
//! i.e. qubit `q` toggles bit `q` of the amplitude index (little-endian).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Field component selected by the two ancilla qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    /// Pressure, ancillas (0,0).
    P,
    /// x-velocity, ancillas (0,1).
    U,
    /// y-velocity, ancillas (1,0).
    V,
    /// Unused sector, ancillas (1,1); stays identically zero.
    Zero,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::P, Component::U, Component::V, Component::Zero];

    /// Ancilla code `a1*2 + a2`.
    pub fn code(self) -> usize {
        match self {
            Component::P => 0,
            Component::U => 1,
            Component::V => 2,
            Component::Zero => 3,
        }
    }

    pub fn from_code(code: usize) -> Result<Self> {
        match code {
            0 => Ok(Component::P),
            1 => Ok(Component::U),
            2 => Ok(Component::V),
            3 => Ok(Component::Zero),
            _ => Err(Error::IndexOutOfRange {
                index: code,
                dim: 4,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::P => "p",
            Component::U => "u",
            Component::V => "v",
            Component::Zero => "zero",
        }
    }
}

/// Grid-to-qubit assignment for a register with `n_x + n_y` coordinate
/// qubits and either 0 or 2 component ancillas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    n_x: usize,
    n_y: usize,
    ancillas: usize,
}

impl RegisterLayout {
    /// Layout with the two component ancillas (full field register).
    pub fn with_ancillas(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(n_x, n_y, 2)
    }

    /// Coordinate-only layout (difference-operator circuits).
    pub fn coordinates_only(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(n_x, n_y, 0)
    }

    fn new(n_x: usize, n_y: usize, ancillas: usize) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidInput(
                "register needs at least one qubit per axis".into(),
            ));
        }
        if n_x + n_y + ancillas > 62 {
            return Err(Error::GuardExceeded {
                what: "register width",
                limit: 62,
                requested: n_x + n_y + ancillas,
            });
        }
        Ok(Self { n_x, n_y, ancillas })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn has_ancillas(&self) -> bool {
        self.ancillas == 2
    }

    pub fn num_qubits(&self) -> usize {
        self.n_x + self.n_y + self.ancillas
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits()
    }

    pub fn points_x(&self) -> usize {
        1 << self.n_x
    }

    pub fn points_y(&self) -> usize {
        1 << self.n_y
    }

    /// Bit position of axis qubit number `k` (1-based, k=1 least significant).
    pub fn axis_qubit(&self, axis: Axis, k: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.axis_qubits(axis));
        match axis {
            Axis::Y => k - 1,
            Axis::X => self.n_y + k - 1,
        }
    }

    pub fn axis_qubits(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.n_x,
            Axis::Y => self.n_y,
        }
    }

    /// Bit positions of the whole axis register, least significant first.
    pub fn axis_slice(&self, axis: Axis) -> Vec<usize> {
        (1..=self.axis_qubits(axis))
            .map(|k| self.axis_qubit(axis, k))
            .collect()
    }

    pub fn x_slice(&self) -> Vec<usize> {
        self.axis_slice(Axis::X)
    }

    pub fn y_slice(&self) -> Vec<usize> {
        self.axis_slice(Axis::Y)
    }

    /// Bit position of ancilla a2 (the less significant ancilla).
    pub fn a2(&self) -> usize {
        debug_assert!(self.has_ancillas());
        self.n_x + self.n_y
    }

    /// Bit position of ancilla a1 (the most significant qubit).
    pub fn a1(&self) -> usize {
        debug_assert!(self.has_ancillas());
        self.n_x + self.n_y + 1
    }

    /// Statevector index of `(component, x, y)`.
    pub fn index(&self, component: Component, x: usize, y: usize) -> Result<usize> {
        if !self.has_ancillas() {
            return Err(Error::InvalidInput(
                "component indexing requires the ancilla register".into(),
            ));
        }
        self.check_xy(x, y)?;
        Ok((component.code() << (self.n_x + self.n_y)) | (x << self.n_y) | y)
    }

    /// Statevector index of `(x, y)` in a coordinate-only register.
    pub fn index_xy(&self, x: usize, y: usize) -> Result<usize> {
        self.check_xy(x, y)?;
        Ok((x << self.n_y) | y)
    }

    fn check_xy(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.points_x() {
            return Err(Error::IndexOutOfRange {
                index: x,
                dim: self.points_x(),
            });
        }
        if y >= self.points_y() {
            return Err(Error::IndexOutOfRange {
                index: y,
                dim: self.points_y(),
            });
        }
        Ok(())
    }

    /// Decompose a statevector index into `(component, x, y)`; the component
    /// is `P` for coordinate-only layouts.
    pub fn decode(&self, index: usize) -> Result<(Component, usize, usize)> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index,
                dim: self.dim(),
            });
        }
        let y = index & (self.points_y() - 1);
        let x = (index >> self.n_y) & (self.points_x() - 1);
        let code = index >> (self.n_x + self.n_y);
        let component = if self.has_ancillas() {
            Component::from_code(code)?
        } else {
            Component::P
        };
        Ok((component, x, y))
    }
}
