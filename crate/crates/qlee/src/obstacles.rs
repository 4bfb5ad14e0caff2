//! Obstacle geometry: axis-aligned dyadic cells, occupancy masks, and the
//! corrections that carve an impenetrable region out of a central
//! difference.
//!
//! An obstacle is a union of *binary cells*. A cell is a pair of bit
//! prefixes `(x_prefix, y_prefix)`; it covers every grid point whose upper
//! coordinate bits match both prefixes, i.e. an axis-aligned rectangle with
//! power-of-two extents. For each cell edge that does not coincide with the
//! domain boundary, the central difference holds exactly one coupling
//! crossing that edge per transverse grid line. Subtracting those couplings
//! — each an antisymmetric pair generator conditioned on the cell's
//! transverse prefix — yields an operator that never moves amplitude across
//! the obstacle surface.
//!
//! Every subtracted coupling lives in exactly one ladder summand of the
//! central difference (see [`crate::diffops::diff_summand`]), picked out by
//! the number of trailing zeros of the edge coordinate. The correction is
//! therefore diagonal in the same basis-change frame as the summand it
//! modifies, and the grouped evolution circuit stays *exactly* unitary per
//! group: the correction is one more multi-controlled RZ with negated angle
//! and enlarged controls inside the existing group conjugation.

use std::collections::HashSet;
use std::fmt;

use crate::circuit::{Circuit, Gate};
use crate::diffops::{diff, diff_summand, lift, BoundaryCondition, DiffScheme, GridSpec};
use crate::error::{Error, Result};
use crate::layout::{Axis, RegisterLayout};
use crate::sparse::SparseOperator;

/// A run of leading coordinate bits, most significant first.
///
/// `BitPrefix { value: 0b011, len: 3 }` prints as `"011"` and, on an
/// `n`-qubit axis, covers grid coordinates `[value << (n-3), (value+1) << (n-3))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPrefix {
    value: usize,
    len: usize,
}

#[allow(clippy::len_without_is_empty)] // a prefix always has at least one bit
impl BitPrefix {
    pub fn new(value: usize, len: usize) -> Result<Self> {
        if len == 0 || len > 30 {
            return Err(Error::InvalidInput(format!(
                "bit prefix length {len} out of supported range 1..=30"
            )));
        }
        if value >> len != 0 {
            return Err(Error::InvalidInput(format!(
                "prefix value {value} does not fit in {len} bits"
            )));
        }
        Ok(Self { value, len })
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidInput("empty bit prefix".into()));
        }
        let mut value = 0usize;
        for ch in s.chars() {
            value = match ch {
                '0' => value << 1,
                '1' => (value << 1) | 1,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "bit prefix may only contain 0 and 1, found {ch:?}"
                    )))
                }
            };
        }
        Self::new(value, s.len())
    }

    pub fn value(&self) -> usize {
        self.value
    }

    /// Number of bits in the prefix (always at least one).
    pub fn len(&self) -> usize {
        self.len
    }

    /// Bit `i`, 1-based from the most significant end.
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i >= 1 && i <= self.len);
        (self.value >> (self.len - i)) & 1 == 1
    }

    /// Half-open coordinate range covered on an `n`-qubit axis.
    pub fn range(&self, n: usize) -> Result<(usize, usize)> {
        if self.len > n {
            return Err(Error::InvalidInput(format!(
                "prefix {self} is longer than the {n}-qubit axis"
            )));
        }
        let width = 1usize << (n - self.len);
        Ok((self.value * width, (self.value + 1) * width))
    }

    /// Whether the two prefixes describe intersecting coordinate ranges,
    /// i.e. one is a prefix of the other.
    pub fn intersects(&self, other: &BitPrefix) -> bool {
        let (short, long) = if self.len <= other.len {
            (self, other)
        } else {
            (other, self)
        };
        long.value >> (long.len - short.len) == short.value
    }
}

impl fmt::Display for BitPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One rectangular obstacle piece: an x prefix and a y prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryCell {
    pub x: BitPrefix,
    pub y: BitPrefix,
}

impl BinaryCell {
    pub fn new(x: BitPrefix, y: BitPrefix) -> Self {
        Self { x, y }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (xs, ys) = s.split_once(',').ok_or_else(|| {
            Error::InvalidInput(format!("cell {s:?} is not of the form x_prefix,y_prefix"))
        })?;
        Ok(Self {
            x: BitPrefix::parse(xs.trim())?,
            y: BitPrefix::parse(ys.trim())?,
        })
    }

    pub fn intersects(&self, other: &BinaryCell) -> bool {
        self.x.intersects(&other.x) && self.y.intersects(&other.y)
    }

    pub fn contains(&self, x: usize, y: usize, n_x: usize, n_y: usize) -> Result<bool> {
        let (x0, x1) = self.x.range(n_x)?;
        let (y0, y1) = self.y.range(n_y)?;
        Ok(x >= x0 && x < x1 && y >= y0 && y < y1)
    }
}

impl fmt::Display for BinaryCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// A validated, pairwise-disjoint set of binary cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObstacleSpec {
    cells: Vec<BinaryCell>,
}

impl ObstacleSpec {
    pub fn new(cells: Vec<BinaryCell>) -> Result<Self> {
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[..i] {
                if a.intersects(b) {
                    return Err(Error::OverlappingCells(format!("{b} and {a}")));
                }
            }
        }
        Ok(Self { cells })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn cells(&self) -> &[BinaryCell] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Parse the cell-list text format: one `x_prefix,y_prefix` per line.
    pub fn parse_cell_list(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cell = BinaryCell::parse(line).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            cells.push(cell);
        }
        Self::new(cells)
    }

    /// Serialize to the cell-list text format.
    pub fn export_cell_list(&self) -> String {
        let mut out = String::new();
        for cell in &self.cells {
            out.push_str(&cell.to_string());
            out.push('\n');
        }
        out
    }

    /// Whether any cell covers the grid point `(x, y)`.
    pub fn contains(&self, x: usize, y: usize, n_x: usize, n_y: usize) -> Result<bool> {
        for cell in &self.cells {
            if cell.contains(x, y, n_x, n_y)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Rasterize to an occupancy mask on a `2^n_x` by `2^n_y` grid.
    pub fn to_mask(&self, n_x: usize, n_y: usize) -> Result<Mask> {
        let mut mask = Mask::new(n_x, n_y)?;
        for cell in &self.cells {
            let (x0, x1) = cell.x.range(n_x)?;
            let (y0, y1) = cell.y.range(n_y)?;
            for x in x0..x1 {
                for y in y0..y1 {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }
}

/// Occupancy grid: `true` marks a point inside the obstacle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    n_x: usize,
    n_y: usize,
    data: Vec<bool>, // indexed x * 2^n_y + y
}

impl Mask {
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        if n_x == 0 || n_y == 0 || n_x > 15 || n_y > 15 {
            return Err(Error::InvalidInput(format!(
                "mask axis qubit counts ({n_x}, {n_y}) out of supported range 1..=15"
            )));
        }
        Ok(Self {
            n_x,
            n_y,
            data: vec![false; 1 << (n_x + n_y)],
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn points_x(&self) -> usize {
        1 << self.n_x
    }

    pub fn points_y(&self) -> usize {
        1 << self.n_y
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[x * self.points_y() + y]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        let i = x * self.points_y() + y;
        self.data[i] = v;
    }

    /// Parse the mask text format: `2^n_y` rows of `2^n_x` ASCII `0`/`1`
    /// characters, row 0 being the `y = 0` grid line.
    pub fn parse(text: &str, n_x: usize, n_y: usize) -> Result<Self> {
        let mut mask = Self::new(n_x, n_y)?;
        let expected_rows = mask.points_y();
        let expected_cols = mask.points_x();
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != expected_rows {
            return Err(Error::MaskShape {
                expected_rows,
                expected_cols,
                found_rows: rows.len(),
                found_cols: rows.first().map_or(0, |r| r.trim().len()),
            });
        }
        for (y, row) in rows.iter().enumerate() {
            let row = row.trim();
            if row.len() != expected_cols {
                return Err(Error::MaskShape {
                    expected_rows,
                    expected_cols,
                    found_rows: rows.len(),
                    found_cols: row.len(),
                });
            }
            for (x, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => mask.set(x, y, true),
                    _ => {
                        return Err(Error::Parse {
                            line: y + 1,
                            message: format!("mask rows may only contain 0 and 1, found {ch:?}"),
                        })
                    }
                }
            }
        }
        Ok(mask)
    }

    /// Serialize to the mask text format (row 0 is the `y = 0` line).
    pub fn export(&self) -> String {
        let mut out = String::with_capacity((self.points_x() + 1) * self.points_y());
        for y in 0..self.points_y() {
            for x in 0..self.points_x() {
                out.push(if self.get(x, y) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Decompose an occupancy mask into disjoint binary cells.
///
/// Greedy largest-block-first cover: every dyadic block with both prefixes
/// non-empty is considered in order of decreasing area (ties scanned in a
/// fixed coordinate order), and a block is taken whenever it lies entirely
/// inside the obstacle and does not touch a block already taken. A lone
/// occupied point can always fall back to its own unit cell, so the result
/// round-trips exactly with [`ObstacleSpec::to_mask`], while solid regions
/// come out as maximal aligned blocks rather than bisection fragments.
pub fn decompose_mask(mask: &Mask) -> Result<ObstacleSpec> {
    let (n_x, n_y) = (mask.n_x(), mask.n_y());
    // solid[xa][yb][(xv << yb) | yv] marks the dyadic block with x prefix
    // (value xv, len xa) and y prefix (value yv, len yb) as fully occupied.
    // Built by halving the resolution one axis at a time, finest level first.
    let mut solid: Vec<Vec<Vec<bool>>> = vec![vec![Vec::new(); n_y + 1]; n_x + 1];
    solid[n_x][n_y] = (0..1usize << (n_x + n_y))
        .map(|i| mask.get(i >> n_y, i & ((1 << n_y) - 1)))
        .collect();
    for xa in (1..=n_x).rev() {
        if xa < n_x {
            let src = &solid[xa + 1][n_y];
            solid[xa][n_y] = (0..1usize << (xa + n_y))
                .map(|i| {
                    let (xv, yv) = (i >> n_y, i & ((1 << n_y) - 1));
                    src[(xv << (n_y + 1)) | yv] && src[(((xv << 1) | 1) << n_y) | yv]
                })
                .collect();
        }
        for yb in (1..n_y).rev() {
            let src = &solid[xa][yb + 1];
            solid[xa][yb] = (0..1usize << (xa + yb))
                .map(|i| {
                    let (xv, yv) = (i >> yb, i & ((1 << yb) - 1));
                    src[(xv << (yb + 1)) | (yv << 1)] && src[(xv << (yb + 1)) | (yv << 1) | 1]
                })
                .collect();
        }
    }
    // Visit levels largest block first (area halves as xa + yb grows).
    let mut levels: Vec<(usize, usize)> = (1..=n_x)
        .flat_map(|xa| (1..=n_y).map(move |yb| (xa, yb)))
        .collect();
    levels.sort_by_key(|&(xa, yb)| (xa + yb, xa));
    let mut covered = vec![false; 1 << (n_x + n_y)]; // indexed x * 2^n_y + y
    let mut cells = Vec::new();
    for (xa, yb) in levels {
        for xv in 0..1usize << xa {
            for yv in 0..1usize << yb {
                if !solid[xa][yb][(xv << yb) | yv] {
                    continue;
                }
                let (x0, x1) = (xv << (n_x - xa), (xv + 1) << (n_x - xa));
                let (y0, y1) = (yv << (n_y - yb), (yv + 1) << (n_y - yb));
                let free = (x0..x1).all(|x| (y0..y1).all(|y| !covered[(x << n_y) | y]));
                if !free {
                    continue;
                }
                for x in x0..x1 {
                    for y in y0..y1 {
                        covered[(x << n_y) | y] = true;
                    }
                }
                cells.push(BinaryCell::new(
                    BitPrefix::new(xv, xa)?,
                    BitPrefix::new(yv, yb)?,
                ));
            }
        }
    }
    ObstacleSpec::new(cells)
}

/// Which edge of a cell a correction belongs to, along its axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// The edge toward smaller coordinates.
    Minus,
    /// The edge toward larger coordinates.
    Plus,
}

/// Common prefix length between a cell prefix and its neighbor value on the
/// given side, or `None` when the edge coincides with the domain boundary
/// (no neighbor, nothing to correct under Dirichlet truncation).
pub fn neighbor_common_prefix(prefix: &BitPrefix, side: Side) -> Option<usize> {
    let len = prefix.len();
    let v = prefix.value();
    match side {
        Side::Minus => {
            if v == 0 {
                None
            } else {
                Some(len - 1 - v.trailing_zeros() as usize)
            }
        }
        Side::Plus => {
            if v == (1 << len) - 1 {
                None
            } else {
                Some(len - 1 - v.trailing_ones() as usize)
            }
        }
    }
}

/// One coupling family to subtract from the central difference on `axis`.
///
/// The generator is `|prefix><prefix|` on the axis qubits above the ladder
/// group, an antisymmetric hop between `...0 1^(n_hat - 1)` and
/// `...1 0^(n_hat - 1)` on the lower `n_hat` axis qubits, and a projector
/// onto the cell's full prefix on the other axis. Qubit indices here are
/// axis-local and 1-based (1 = least significant coordinate bit); prefix
/// bit `i` (1-based from the most significant end) sits on qubit `n - i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTerm {
    pub axis: Axis,
    /// Ladder group index: the corrected coupling flips the lowest `n_hat`
    /// axis qubits.
    pub n_hat: usize,
    pub side: Side,
    /// Controls on this axis above the flipped qubits: `(qubit, bit)`.
    pub prefix_controls: Vec<(usize, bool)>,
    /// Controls spanning the full cell prefix on the other axis.
    pub cross_controls: Vec<(usize, bool)>,
}

/// Everything identifying a corrected coupling except the originating edge.
type TermKey = (Axis, usize, Vec<(usize, bool)>, Vec<(usize, bool)>);

impl CorrectionTerm {
    /// Structural identity, ignoring which cell edge produced the term.
    /// Two cells meeting at an edge yield the same coupling family once.
    fn dedup_key(&self) -> TermKey {
        (
            self.axis,
            self.n_hat,
            self.prefix_controls.clone(),
            self.cross_controls.clone(),
        )
    }
}

fn prefix_bit_controls(prefix: &BitPrefix, n: usize, take: usize) -> Vec<(usize, bool)> {
    (1..=take).map(|i| (n - i + 1, prefix.bit(i))).collect()
}

/// The up-to-two corrections a single cell contributes on one axis.
pub fn correction_terms(
    cell: &BinaryCell,
    axis: Axis,
    grid: &GridSpec,
) -> Result<Vec<CorrectionTerm>> {
    let n = grid.axis_qubits(axis);
    let n_cross = grid.axis_qubits(axis.other());
    let (own, cross) = match axis {
        Axis::X => (&cell.x, &cell.y),
        Axis::Y => (&cell.y, &cell.x),
    };
    if own.len() > n || cross.len() > n_cross {
        return Err(Error::InvalidInput(format!(
            "cell {cell} does not fit a ({}, {})-qubit grid",
            grid.n_x, grid.n_y
        )));
    }
    let cross_controls = prefix_bit_controls(cross, n_cross, cross.len());
    let mut terms = Vec::new();
    for side in [Side::Minus, Side::Plus] {
        if let Some(shared) = neighbor_common_prefix(own, side) {
            terms.push(CorrectionTerm {
                axis,
                n_hat: n - shared,
                side,
                prefix_controls: prefix_bit_controls(own, n, shared),
                cross_controls: cross_controls.clone(),
            });
        }
    }
    Ok(terms)
}

/// All corrections for an obstacle, both axes, structurally deduplicated.
///
/// Cells that meet along an edge each nominate the shared coupling family;
/// it is subtracted once. Order is deterministic: axis x then y, cells in
/// spec order, minus side before plus, first occurrence kept.
pub fn obstacle_correction_terms(
    spec: &ObstacleSpec,
    grid: &GridSpec,
) -> Result<Vec<CorrectionTerm>> {
    let mut seen = HashSet::new();
    let mut terms = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        for cell in spec.cells() {
            for term in correction_terms(cell, axis, grid)? {
                if seen.insert(term.dedup_key()) {
                    terms.push(term);
                }
            }
        }
    }
    Ok(terms)
}

/// The sparse generator a correction subtracts, on the full spatial
/// register (optionally padded with identity on the two ancillas).
pub fn term_generator(
    term: &CorrectionTerm,
    grid: &GridSpec,
    with_ancillas: bool,
) -> Result<SparseOperator> {
    let n = grid.axis_qubits(term.axis);
    let n_cross = grid.axis_qubits(term.axis.other());
    if term.n_hat == 0 || term.n_hat > n {
        return Err(Error::InvalidInput(format!(
            "correction group {} out of range 1..={n}",
            term.n_hat
        )));
    }
    // Coordinates of the corrected hop on this axis.
    let mut hi = 0usize;
    for &(q, bit) in &term.prefix_controls {
        if bit {
            hi |= 1 << (q - 1);
        }
    }
    let upper = hi | (1 << (term.n_hat - 1)); // ...1 0^(n_hat-1)
    let lower = upper - 1; // ...0 1^(n_hat-1)
    // Transverse coordinates selected by the cross prefix.
    let mut cross_base = 0usize;
    let mut cross_mask = 0usize;
    for &(q, bit) in &term.cross_controls {
        cross_mask |= 1 << (q - 1);
        if bit {
            cross_base |= 1 << (q - 1);
        }
    }
    let v = 1.0 / (2.0 * grid.l);
    let points_cross = 1usize << n_cross;
    let points_y = grid.points(Axis::Y);
    let index = |own: usize, cross: usize| match term.axis {
        Axis::X => own * points_y + cross,
        Axis::Y => cross * points_y + own,
    };
    let mut entries = Vec::new();
    for t in 0..points_cross {
        if t & cross_mask != cross_base {
            continue;
        }
        entries.push((index(lower, t), index(upper, t), v));
        entries.push((index(upper, t), index(lower, t), -v));
    }
    let op = SparseOperator::from_real_entries(grid.points(Axis::X) * points_y, entries)?;
    Ok(if with_ancillas {
        SparseOperator::identity(4).kron(&op)
    } else {
        op
    })
}

/// Central-difference generator on `axis`, lifted to the spatial register,
/// with every obstacle-crossing coupling subtracted.
///
/// Amplitude never crosses the obstacle surface under `exp(t * masked)`:
/// couplings between exterior and interior points are removed exactly, and
/// the exterior-to-exterior block matches the unmasked difference. Where
/// cells of different transverse extents meet, a shared interior coupling
/// may be subtracted more than once; such residues connect interior points
/// only and cannot affect the exterior dynamics.
pub fn masked_diff(
    axis: Axis,
    spec: &ObstacleSpec,
    grid: &GridSpec,
    with_ancillas: bool,
) -> Result<SparseOperator> {
    let n = grid.axis_qubits(axis);
    let base = diff(n, grid.l, DiffScheme::Central, BoundaryCondition::Dirichlet)?;
    let mut op = lift(&base, axis, grid, with_ancillas)?;
    for term in obstacle_correction_terms(spec, grid)? {
        if term.axis == axis {
            op = op.sub(&term_generator(&term, grid, with_ancillas)?)?;
        }
    }
    Ok(op)
}

/// The `j`-th grouped generator of [`masked_diff`]: the plain ladder
/// summand minus every correction whose hop sits in group `j`. The full
/// masked difference is the sum of these over `j = 1..=n`, and each group
/// exponentiates exactly as one conjugated block of multi-controlled RZs.
pub fn masked_group_generator(
    axis: Axis,
    j: usize,
    spec: &ObstacleSpec,
    grid: &GridSpec,
    with_ancillas: bool,
) -> Result<SparseOperator> {
    let n = grid.axis_qubits(axis);
    let base = diff_summand(n, grid.l, j)?;
    let mut op = lift(&base, axis, grid, with_ancillas)?;
    for term in obstacle_correction_terms(spec, grid)? {
        if term.axis == axis && term.n_hat == j {
            op = op.sub(&term_generator(&term, grid, with_ancillas)?)?;
        }
    }
    Ok(op)
}

/// Push a multi-controlled RZ whose controls may require a `0` value;
/// zero-valued controls are conjugated by X.
pub(crate) fn push_mixed_control_mcrz(
    circuit: &mut Circuit,
    angle: f64,
    controls: &[(usize, bool)],
    target: usize,
) -> Result<()> {
    for &(q, bit) in controls {
        if !bit {
            circuit.push(Gate::x(q))?;
        }
    }
    circuit.push(Gate::mcrz(
        angle,
        controls.iter().map(|&(q, _)| q).collect(),
        target,
    )?)?;
    for &(q, bit) in controls {
        if !bit {
            circuit.push(Gate::x(q))?;
        }
    }
    Ok(())
}

/// Evolution circuit for `exp(gamma * masked_diff(axis, ...))` on the
/// register described by `layout`.
///
/// Group `j` keeps the unmasked conjugation and main rotation of
/// [`crate::diffops::diff_evolution_circuit`]; each correction in the group
/// adds one multi-controlled RZ with the negated angle and controls
/// enlarged by the cell prefixes. All rotations in a group are diagonal in
/// the same frame, so each group factor is the exact exponential of its
/// [`masked_group_generator`]; the product over groups is the usual
/// first-order splitting.
pub fn masked_diff_circuit(
    axis: Axis,
    gamma: f64,
    spec: &ObstacleSpec,
    grid: &GridSpec,
    layout: &RegisterLayout,
) -> Result<Circuit> {
    if layout.axis_qubits(Axis::X) != grid.n_x || layout.axis_qubits(Axis::Y) != grid.n_y {
        return Err(Error::DimensionMismatch {
            left: layout.axis_qubits(axis),
            right: grid.axis_qubits(axis),
        });
    }
    let n = grid.axis_qubits(axis);
    let slice = layout.axis_slice(axis);
    let angle = gamma / grid.l;
    let terms = obstacle_correction_terms(spec, grid)?;
    let mut c = Circuit::new(layout.num_qubits());
    for j in 1..=n {
        let u = crate::circuit::u_bell(j, -std::f64::consts::FRAC_PI_2, &slice)?;
        c.append(&u.dagger())?;
        c.push(Gate::mcrz(angle, slice[..j - 1].to_vec(), slice[j - 1])?)?;
        for term in terms.iter().filter(|t| t.axis == axis && t.n_hat == j) {
            let mut controls: Vec<(usize, bool)> =
                slice[..j - 1].iter().map(|&q| (q, true)).collect();
            for &(k, bit) in &term.prefix_controls {
                controls.push((layout.axis_qubit(axis, k), bit));
            }
            for &(k, bit) in &term.cross_controls {
                controls.push((layout.axis_qubit(axis.other(), k), bit));
            }
            controls.sort_unstable();
            push_mixed_control_mcrz(&mut c, -angle, &controls, slice[j - 1])?;
        }
        c.append(&u)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(s: &str) -> BitPrefix {
        BitPrefix::parse(s).unwrap()
    }

    #[test]
    fn bit_prefix_round_trip_and_validation() {
        let p = bp("0110");
        assert_eq!(p.value(), 6);
        assert_eq!(p.len(), 4);
        assert_eq!(p.to_string(), "0110");
        assert!(p.bit(2) && p.bit(3));
        assert!(!p.bit(1) && !p.bit(4));
        assert_eq!(p.range(6).unwrap(), (24, 28));
        assert!(BitPrefix::parse("").is_err());
        assert!(BitPrefix::parse("012").is_err());
        assert!(BitPrefix::new(4, 2).is_err());
        assert!(p.range(3).is_err());
    }

    #[test]
    fn prefix_intersection_is_prefix_compatibility() {
        assert!(bp("01").intersects(&bp("011")));
        assert!(bp("011").intersects(&bp("01")));
        assert!(!bp("01").intersects(&bp("10")));
        assert!(!bp("010").intersects(&bp("011")));
        assert!(bp("0").intersects(&bp("0")));
    }

    #[test]
    fn overlapping_cells_are_rejected() {
        let a = BinaryCell::parse("01,0").unwrap();
        let b = BinaryCell::parse("011,01").unwrap();
        let c = BinaryCell::parse("10,0").unwrap();
        assert!(matches!(
            ObstacleSpec::new(vec![a, b]),
            Err(Error::OverlappingCells(_))
        ));
        assert!(ObstacleSpec::new(vec![a, c]).is_ok());
    }

    #[test]
    fn cell_list_round_trip_and_line_errors() {
        let text = "01,011\n\n10,000\n";
        let spec = ObstacleSpec::parse_cell_list(text).unwrap();
        assert_eq!(spec.cells().len(), 2);
        assert_eq!(spec.export_cell_list(), "01,011\n10,000\n");
        let err = ObstacleSpec::parse_cell_list("01,011\n0x,0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mask_export_golden() {
        let spec = ObstacleSpec::parse_cell_list("1,0\n").unwrap();
        let mask = spec.to_mask(1, 1).unwrap();
        assert_eq!(mask.export(), "01\n00\n");
        let back = Mask::parse("01\n00\n", 1, 1).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn mask_parse_shape_errors() {
        assert!(matches!(
            Mask::parse("01\n", 1, 1),
            Err(Error::MaskShape { found_rows: 1, .. })
        ));
        assert!(matches!(
            Mask::parse("011\n00\n", 1, 1),
            Err(Error::MaskShape { found_cols: 3, .. })
        ));
        assert!(matches!(
            Mask::parse("0x\n00\n", 1, 1),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn decompose_full_grid_yields_four_quadrants() {
        let mut mask = Mask::new(2, 2).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                mask.set(x, y, true);
            }
        }
        let spec = decompose_mask(&mask).unwrap();
        assert_eq!(spec.cells().len(), 4);
        assert_eq!(spec.to_mask(2, 2).unwrap(), mask);
        for cell in spec.cells() {
            assert_eq!(cell.x.len(), 1);
            assert_eq!(cell.y.len(), 1);
        }
    }

    #[test]
    fn decompose_finds_maximal_blocks_in_both_orientations() {
        // A 2-point horizontal run aligned to a dyadic boundary must come
        // out as one 2x1 cell, not two unit cells — and likewise when the
        // run is vertical.
        let text = "00000000\n00000000\n00000000\n00110000\n\
                    00000000\n00000000\n00000000\n00000000\n";
        let mask = Mask::parse(text, 3, 3).unwrap();
        let spec = decompose_mask(&mask).unwrap();
        assert_eq!(spec.export_cell_list(), "01,011\n");

        let text = "00000000\n00000000\n00010000\n00010000\n\
                    00000000\n00000000\n00000000\n00000000\n";
        let mask = Mask::parse(text, 3, 3).unwrap();
        let spec = decompose_mask(&mask).unwrap();
        assert_eq!(spec.export_cell_list(), "011,01\n");
    }

    #[test]
    fn decompose_l_shape_round_trips() {
        let mut mask = Mask::new(2, 2).unwrap();
        for x in 0..2 {
            for y in 0..4 {
                mask.set(x, y, true);
            }
        }
        mask.set(2, 0, true);
        mask.set(3, 0, true);
        mask.set(2, 1, true);
        mask.set(3, 1, true);
        let spec = decompose_mask(&mask).unwrap();
        assert_eq!(spec.to_mask(2, 2).unwrap(), mask);
        assert!(spec.cells().len() <= 3);
    }

    #[test]
    fn neighbor_prefix_examples() {
        assert_eq!(neighbor_common_prefix(&bp("01"), Side::Minus), Some(1));
        assert_eq!(neighbor_common_prefix(&bp("01"), Side::Plus), Some(0));
        assert_eq!(neighbor_common_prefix(&bp("00"), Side::Minus), None);
        assert_eq!(neighbor_common_prefix(&bp("00"), Side::Plus), Some(1));
        assert_eq!(neighbor_common_prefix(&bp("0111"), Side::Plus), Some(0));
        assert_eq!(neighbor_common_prefix(&bp("0111"), Side::Minus), Some(3));
        assert_eq!(neighbor_common_prefix(&bp("1111"), Side::Plus), None);
    }

    #[test]
    fn correction_terms_for_reference_cell() {
        // Cell (01, 011) on a (2, 3)-qubit grid, x axis: a one-bit shared
        // prefix on the minus side, none on the plus side, and the full
        // y prefix as cross controls on both.
        let grid = GridSpec::new(2, 3, 1.0).unwrap();
        let cell = BinaryCell::parse("01,011").unwrap();
        let terms = correction_terms(&cell, Axis::X, &grid).unwrap();
        assert_eq!(terms.len(), 2);
        let cross = vec![(3, false), (2, true), (1, true)];
        assert_eq!(terms[0].side, Side::Minus);
        assert_eq!(terms[0].n_hat, 1);
        assert_eq!(terms[0].prefix_controls, vec![(2, false)]);
        assert_eq!(terms[0].cross_controls, cross);
        assert_eq!(terms[1].side, Side::Plus);
        assert_eq!(terms[1].n_hat, 2);
        assert_eq!(terms[1].prefix_controls, vec![]);
        assert_eq!(terms[1].cross_controls, cross);
    }

    #[test]
    fn adjacent_cells_share_one_correction() {
        // Cells 00,0 and 01,0 on a (2, 1)-qubit grid: the edge between
        // x = 1 and x = 2 is nominated by both and kept once.
        let grid = GridSpec::new(2, 1, 1.0).unwrap();
        let spec = ObstacleSpec::parse_cell_list("00,0\n01,0\n").unwrap();
        let terms = obstacle_correction_terms(&spec, &grid).unwrap();
        let x_terms: Vec<_> = terms.iter().filter(|t| t.axis == Axis::X).collect();
        let y_terms: Vec<_> = terms.iter().filter(|t| t.axis == Axis::Y).collect();
        assert_eq!(x_terms.len(), 2);
        assert_eq!(y_terms.len(), 2);
        assert_eq!(terms.len(), 4);
    }

    #[test]
    fn term_generator_places_the_crossing_couplings() {
        // Cell 01,011 on a (2, 3)-qubit grid: the minus-side x correction
        // removes the hop x=0 <-> x=1 at the single row y = 3.
        let grid = GridSpec::new(2, 3, 0.5).unwrap();
        let cell = BinaryCell::parse("01,011").unwrap();
        let terms = correction_terms(&cell, Axis::X, &grid).unwrap();
        let g = term_generator(&terms[0], &grid, false).unwrap();
        assert_eq!(g.dim(), 32);
        assert_eq!(g.num_entries(), 2);
        // index = x * 8 + y; hop (x=0,y=3) <-> (x=1,y=3).
        assert_eq!(g.get(3, 11).re, 1.0);
        assert_eq!(g.get(11, 3).re, -1.0);
    }

    #[test]
    fn masked_diff_removes_exactly_the_crossing_couplings() {
        // Single cell: masking must agree entry-for-entry with brute-force
        // removal of couplings that touch the obstacle from outside.
        let grid = GridSpec::new(2, 2, 0.25).unwrap();
        let spec = ObstacleSpec::parse_cell_list("01,01\n").unwrap();
        let mask = spec.to_mask(2, 2).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let masked = masked_diff(axis, &spec, &grid, false).unwrap();
            let n = grid.axis_qubits(axis);
            let full = lift(
                &diff(n, grid.l, DiffScheme::Central, BoundaryCondition::Dirichlet).unwrap(),
                axis,
                &grid,
                false,
            )
            .unwrap();
            let inside =
                |i: usize| mask.get(i / grid.points(Axis::Y), i % grid.points(Axis::Y));
            let expected = SparseOperator::from_entries(
                full.dim(),
                full.entries()
                    .iter()
                    .filter(|&&(r, c, _)| inside(r) == inside(c))
                    .copied()
                    .collect(),
            )
            .unwrap();
            assert_eq!(masked, expected, "{axis:?}");
        }
    }

    #[test]
    fn group_generators_sum_to_masked_diff() {
        let grid = GridSpec::new(3, 2, 0.5).unwrap();
        let spec = ObstacleSpec::parse_cell_list("010,1\n011,01\n").unwrap();
        for axis in [Axis::X, Axis::Y] {
            let mut sum = SparseOperator::zeros(32);
            for j in 1..=grid.axis_qubits(axis) {
                sum = sum
                    .add(&masked_group_generator(axis, j, &spec, &grid, false).unwrap())
                    .unwrap();
            }
            assert_eq!(sum, masked_diff(axis, &spec, &grid, false).unwrap());
        }
    }

    #[test]
    fn empty_obstacle_circuit_matches_plain_difference() {
        let grid = GridSpec::new(2, 2, 1.0).unwrap();
        let layout = RegisterLayout::coordinates_only(2, 2).unwrap();
        let spec = ObstacleSpec::empty();
        let c = masked_diff_circuit(Axis::X, 0.3, &spec, &grid, &layout).unwrap();
        let plain = crate::diffops::diff_evolution_circuit(
            2,
            0.3,
            BoundaryCondition::Dirichlet,
            &layout.axis_slice(Axis::X),
        )
        .unwrap();
        assert_eq!(c.gates(), plain.gates());
    }
}
