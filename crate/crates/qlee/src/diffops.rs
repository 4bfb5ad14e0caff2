//! Shift and finite-difference generators on a `2^n`-point axis, and the
//! circuits that exponentiate the central difference.
//!
//! The down-shift `S- |k> = |k-1>` decomposes over qubits as a ladder of
//! borrow patterns,
//!
//! ```text
//! S- = sum_{j=1}^{n} I{n-j} (x) s01 (x) s10{j-1}
//! ```
//!
//! (`s01 = |0><1|`, `s10 = |1><0|`, qubit `j` carries bit `j-1`): the j-th
//! term maps `k = b...b 1 0..0` to `k-1 = b...b 0 1..1`. The central
//! difference `(S- - S+)/(2l)` therefore splits into `n` antisymmetric pair
//! generators, one per `j`, each of which exponentiates *exactly* as a
//! `U_j`-conjugated multi-controlled RZ (see [`crate::circuit::u_bell`]).

use std::f64::consts::FRAC_PI_2;

use crate::circuit::{u_bell, Circuit, Gate};
use crate::error::{Error, Result};
use crate::layout::Axis;
use crate::sparse::SparseOperator;

/// Grid geometry: qubits per axis and the mesh spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub l: f64,
}

impl GridSpec {
    pub fn new(n_x: usize, n_y: usize, l: f64) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidInput(
                "grid needs at least one qubit per axis".into(),
            ));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidInput("mesh spacing must be positive".into()));
        }
        Ok(Self { n_x, n_y, l })
    }

    pub fn axis_qubits(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.n_x,
            Axis::Y => self.n_y,
        }
    }

    pub fn points(&self, axis: Axis) -> usize {
        1 << self.axis_qubits(axis)
    }
}

/// Which off-diagonal a shift populates: `Minus` is the down-shift
/// (superdiagonal, `|k> -> |k-1>`), `Plus` the up-shift (subdiagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    Forward,
    Backward,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
}

/// Shift operator on `2^n` points (Dirichlet: amplitudes pushed past the
/// edge vanish). `2^n - 1` nonzeros.
pub fn shift(n: usize, sign: ShiftSign) -> Result<SparseOperator> {
    if n == 0 || n > 30 {
        return Err(Error::InvalidInput(format!(
            "axis qubit count {n} out of supported range 1..=30"
        )));
    }
    let dim = 1usize << n;
    let entries = (1..dim)
        .map(|k| match sign {
            ShiftSign::Minus => (k - 1, k, 1.0),
            ShiftSign::Plus => (k, k - 1, 1.0),
        })
        .collect();
    SparseOperator::from_real_entries(dim, entries)
}

/// Finite-difference generator on one axis.
pub fn diff(n: usize, l: f64, scheme: DiffScheme, bc: BoundaryCondition) -> Result<SparseOperator> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidInput("mesh spacing must be positive".into()));
    }
    let s_minus = shift(n, ShiftSign::Minus)?;
    let s_plus = shift(n, ShiftSign::Plus)?;
    let dim = s_minus.dim();
    let op = match (scheme, bc) {
        (DiffScheme::Forward, BoundaryCondition::Dirichlet) => {
            s_minus.sub(&SparseOperator::identity(dim))?.scale_re(1.0 / l)
        }
        (DiffScheme::Backward, BoundaryCondition::Dirichlet) => {
            SparseOperator::identity(dim).sub(&s_plus)?.scale_re(1.0 / l)
        }
        (DiffScheme::Central, BoundaryCondition::Dirichlet) => {
            s_minus.sub(&s_plus)?.scale_re(1.0 / (2.0 * l))
        }
        (DiffScheme::Central, BoundaryCondition::Periodic) => {
            let corner = SparseOperator::from_real_entries(
                dim,
                vec![(0, dim - 1, -1.0), (dim - 1, 0, 1.0)],
            )?;
            s_minus.sub(&s_plus)?.add(&corner)?.scale_re(1.0 / (2.0 * l))
        }
        (DiffScheme::Forward | DiffScheme::Backward, BoundaryCondition::Periodic) => {
            return Err(Error::UnsupportedCombination(
                "one-sided differences are only built with Dirichlet boundaries".into(),
            ));
        }
    };
    Ok(op)
}

/// The `j`-th ladder term of the down-shift: `I{n-j} (x) s01 (x) s10{j-1}`.
/// Summing over `j = 1..=n` rebuilds `shift(n, Minus)`.
pub fn shift_summand(n: usize, j: usize) -> Result<SparseOperator> {
    if j == 0 || j > n {
        return Err(Error::InvalidInput(format!(
            "summand index {j} out of range 1..={n}"
        )));
    }
    let dim = 1usize << n;
    let step = 1usize << (j - 1); // maps b..b 1 0^{j-1}  ->  b..b 0 1^{j-1}
    let mut entries = Vec::new();
    for block in 0..(dim >> j) {
        let hi = block << j;
        let col = hi | step; // .. 1 0^{j-1}
        let row = hi | (step - 1); // .. 0 1^{j-1}
        entries.push((row, col, 1.0));
    }
    SparseOperator::from_real_entries(dim, entries)
}

/// The `j`-th ladder term of the central difference (Dirichlet part):
/// `(1/2l) * I{n-j} (x) (s01 (x) s10{j-1}  -  s10 (x) s01{j-1})`.
/// Summing over `j = 1..=n` rebuilds `diff(n, l, Central, Dirichlet)`.
pub fn diff_summand(n: usize, l: f64, j: usize) -> Result<SparseOperator> {
    let up = shift_summand(n, j)?;
    up.sub(&up.transpose()).map(|d| d.scale_re(1.0 / (2.0 * l)))
}

/// The periodic wrap term: `(1/2l) * (s10{n} - s01{n})`, i.e. the two
/// corner entries connecting the first and last grid points.
pub fn corner_summand(n: usize, l: f64) -> Result<SparseOperator> {
    let dim = 1usize << n;
    SparseOperator::from_real_entries(
        dim,
        vec![(0, dim - 1, -1.0 / (2.0 * l)), (dim - 1, 0, 1.0 / (2.0 * l))],
    )
}

/// Embed a one-axis operator into the full register:
/// `[I4 (x)] (op (x) I_y)` for the x axis, `[I4 (x)] (I_x (x) op)` for y.
pub fn lift(
    op: &SparseOperator,
    axis: Axis,
    grid: &GridSpec,
    with_ancillas: bool,
) -> Result<SparseOperator> {
    let expected = grid.points(axis);
    if op.dim() != expected {
        return Err(Error::DimensionMismatch {
            left: op.dim(),
            right: expected,
        });
    }
    let spatial = match axis {
        Axis::X => op.kron(&SparseOperator::identity(grid.points(Axis::Y))),
        Axis::Y => SparseOperator::identity(grid.points(Axis::X)).kron(op),
    };
    Ok(if with_ancillas {
        SparseOperator::identity(4).kron(&spatial)
    } else {
        spatial
    })
}

/// One exactly-exponentiated ladder factor: the circuit for
/// `exp(gamma * diff_summand(n, l, j))` with `gamma/l` as the net angle,
/// acting on `slice[0..j]`.
pub(crate) fn ladder_factor(j: usize, angle: f64, slice: &[usize], width: usize) -> Result<Circuit> {
    let mut c = Circuit::new(width);
    let u = u_bell(j, -FRAC_PI_2, slice)?;
    c.append(&u.dagger())?;
    c.push(Gate::mcrz(angle, slice[..j - 1].to_vec(), slice[j - 1])?)?;
    c.append(&u)?;
    Ok(c)
}

/// Evolution circuit for `exp(gamma * diff(n, l=1, Central, bc))` on the
/// given qubit slice — spacing is folded into `gamma`, so the rotation
/// angle per factor is `gamma / l` for a physical grid.
///
/// Dirichlet: the product of the `n` ladder factors, applied `j = 1..=n`.
/// Each factor is the exact exponential of its own summand; the product is
/// a first-order splitting of the full difference.
///
/// Periodic: a wrap factor — the `j = n` factor conjugated by `X` on the
/// lower `n-1` qubits, with negated angle — applied *before* the Dirichlet
/// product.
pub fn diff_evolution_circuit(
    n: usize,
    gamma: f64,
    bc: BoundaryCondition,
    slice: &[usize],
) -> Result<Circuit> {
    if slice.len() != n {
        return Err(Error::InvalidInput(format!(
            "qubit slice has {} entries, expected n = {n}",
            slice.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("need at least one qubit".into()));
    }
    let width = slice.iter().max().unwrap() + 1;
    let mut c = Circuit::new(width);
    if bc == BoundaryCondition::Periodic {
        for &q in &slice[..n - 1] {
            c.push(Gate::x(q))?;
        }
        c.append(&ladder_factor(n, -gamma, slice, width)?)?;
        for &q in &slice[..n - 1] {
            c.push(Gate::x(q))?;
        }
    }
    for j in 1..=n {
        c.append(&ladder_factor(j, gamma, slice, width)?)?;
    }
    Ok(c)
}
