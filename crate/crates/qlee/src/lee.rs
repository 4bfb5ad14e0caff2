//! Generator assembly and quantum step circuits for two-dimensional linear
//! acoustics transported by a uniform background flow.
//!
//! The semi-discrete system couples a pressure field `p` and two velocity
//! components `u, v` on a `2^n_x` by `2^n_y` grid:
//!
//! ```text
//! dp/dt = -u0 Dx p - rho0 c^2 (Dx u + Dy v)
//! du/dt = -u0 Dx u - (1/rho0) Dx p
//! dv/dt = -u0 Dx v - (1/rho0) Dy p
//! ```
//!
//! with `Dx`, `Dy` finite differences, `u0` the background velocity (along
//! x), `rho0` the background density and `c` the sound speed. The state
//! vector stacks four sectors — `p`, `u`, `v` and an unused fourth — over
//! the grid, addressed by two ancilla qubits above the coordinate
//! registers (see [`crate::layout::RegisterLayout`]).
//!
//! When `c = 1/rho0` (the *conservative* regime) the generator is real
//! antisymmetric, so the exact evolution is orthogonal and a time step
//! factors into exactly-exponentiated group unitaries: one conjugated
//! multi-controlled rotation block per difference-ladder group and axis
//! ([`step_groups`]). Outside that regime the generator splits into a
//! Hermitian part, exponentiated classically, and a rotation part realized
//! by the same circuit family with the symmetrized coupling
//! `kappa = (1/rho0 + rho0 c^2)/2` ([`split_step`]).
//!
//! Supported combinations: the central scheme runs with Dirichlet or
//! periodic boundaries and, under Dirichlet, with impenetrable obstacles
//! (couplings across the obstacle surface are subtracted inside each group,
//! keeping every group factor exact). The up/down-wind scheme — one-sided
//! differences for the pressure/velocity couplings — requires Dirichlet
//! boundaries and no obstacle.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::circuit::{u_bell, Circuit, Gate};
use crate::classical::expm_dense;
use crate::dense::DenseOperator;
use crate::diffops::{
    corner_summand, diff, diff_summand, lift, shift_summand, BoundaryCondition, DiffScheme,
    GridSpec,
};
use crate::error::{Error, Result};
use crate::layout::{Axis, Component, RegisterLayout};
use crate::obstacles::{
    masked_diff, masked_group_generator, obstacle_correction_terms, push_mixed_control_mcrz,
    BinaryCell, CorrectionTerm, ObstacleSpec,
};
use crate::sparse::SparseOperator;
use crate::statevector::{extract_field, FieldGrid, StateVector};

/// Tolerance on `|c - 1/rho0|` below which the system counts as
/// conservative (unitary evolution, no splitting needed).
pub const CONSERVATIVE_TOL: f64 = 1e-12;

/// Largest full-register dimension for which the non-unitary split factor
/// is exponentiated densely.
pub const SPLIT_DENSE_GUARD: usize = 1 << 10;

/// Physical parameters of the background state plus the grid geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeeParams {
    pub grid: GridSpec,
    /// Sound speed.
    pub c: f64,
    /// Background density.
    pub rho_bar: f64,
    /// Background velocity along x.
    pub u_bar: f64,
}

impl LeeParams {
    pub fn new(grid: GridSpec, c: f64, rho_bar: f64, u_bar: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput("sound speed must be positive".into()));
        }
        if !(rho_bar.is_finite() && rho_bar > 0.0) {
            return Err(Error::InvalidInput(
                "background density must be positive".into(),
            ));
        }
        if !u_bar.is_finite() {
            return Err(Error::InvalidInput(
                "background velocity must be finite".into(),
            ));
        }
        Ok(Self {
            grid,
            c,
            rho_bar,
            u_bar,
        })
    }

    /// Whether the two coupling coefficients coincide (`c = 1/rho0`), which
    /// makes the generator antisymmetric and the evolution unitary.
    pub fn is_conservative(&self) -> bool {
        (self.c - 1.0 / self.rho_bar).abs() < CONSERVATIVE_TOL
    }

    /// Symmetrized coupling coefficient used by the split evolution.
    pub fn kappa(&self) -> f64 {
        (1.0 / self.rho_bar + self.rho_bar * self.c * self.c) / 2.0
    }

    /// The full register: two ancillas above the two coordinate registers.
    pub fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::with_ancillas(self.grid.n_x, self.grid.n_y)
    }
}

/// Spatial discretization of the pressure/velocity couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeeScheme {
    /// Central differences everywhere.
    Central,
    /// Forward differences feeding the pressure row, backward differences
    /// feeding the velocity rows; advection stays central.
    Updown,
}

fn active_obstacle(obstacle: Option<&ObstacleSpec>) -> Option<&ObstacleSpec> {
    obstacle.filter(|spec| !spec.is_empty())
}

fn check_combination(
    scheme: LeeScheme,
    bc: BoundaryCondition,
    obstacle: Option<&ObstacleSpec>,
) -> Result<()> {
    if obstacle.is_some() {
        if scheme != LeeScheme::Central {
            return Err(Error::UnsupportedCombination(
                "obstacles are only supported with the central scheme".into(),
            ));
        }
        if bc != BoundaryCondition::Dirichlet {
            return Err(Error::UnsupportedCombination(
                "obstacles are only supported with Dirichlet boundaries".into(),
            ));
        }
    }
    if scheme == LeeScheme::Updown && bc == BoundaryCondition::Periodic {
        return Err(Error::UnsupportedCombination(
            "the up/down-wind scheme is only supported with Dirichlet boundaries".into(),
        ));
    }
    Ok(())
}

/// 4x4 sector selector `|r><c|`.
fn e_block(r: Component, c: Component) -> SparseOperator {
    SparseOperator::from_real_entries(4, vec![(r.code(), c.code(), 1.0)])
        .expect("4x4 selector entries are in range")
}

/// The velocity component an axis couples to the pressure.
fn axis_velocity(axis: Axis) -> Component {
    match axis {
        Axis::X => Component::U,
        Axis::Y => Component::V,
    }
}

/// Central difference along `axis` on the spatial register, with obstacle
/// couplings subtracted when an obstacle is present.
fn axis_central(
    grid: &GridSpec,
    axis: Axis,
    bc: BoundaryCondition,
    obstacle: Option<&ObstacleSpec>,
) -> Result<SparseOperator> {
    match obstacle {
        Some(spec) => masked_diff(axis, spec, grid, false),
        None => lift(
            &diff(grid.axis_qubits(axis), grid.l, DiffScheme::Central, bc)?,
            axis,
            grid,
            false,
        ),
    }
}

/// Full-register generator with explicit coupling coefficients: `coef_row`
/// multiplies the differences feeding the pressure row, `coef_col` those
/// feeding the velocity rows.
fn generator_with_coupling(
    params: &LeeParams,
    scheme: LeeScheme,
    bc: BoundaryCondition,
    obstacle: Option<&ObstacleSpec>,
    coef_row: f64,
    coef_col: f64,
) -> Result<SparseOperator> {
    let obstacle = active_obstacle(obstacle);
    check_combination(scheme, bc, obstacle)?;
    let grid = &params.grid;
    let dx_c = axis_central(grid, Axis::X, bc, obstacle)?;
    let dy_c = axis_central(grid, Axis::Y, bc, obstacle)?;
    let (dx_row, dy_row, dx_col, dy_col) = match scheme {
        LeeScheme::Central => (dx_c.clone(), dy_c.clone(), dx_c.clone(), dy_c.clone()),
        LeeScheme::Updown => {
            let fwd = |n| diff(n, grid.l, DiffScheme::Forward, BoundaryCondition::Dirichlet);
            let bwd = |n| diff(n, grid.l, DiffScheme::Backward, BoundaryCondition::Dirichlet);
            (
                lift(&fwd(grid.n_x)?, Axis::X, grid, false)?,
                lift(&fwd(grid.n_y)?, Axis::Y, grid, false)?,
                lift(&bwd(grid.n_x)?, Axis::X, grid, false)?,
                lift(&bwd(grid.n_y)?, Axis::Y, grid, false)?,
            )
        }
    };
    let mut a = SparseOperator::zeros(4 * dx_c.dim());
    if params.u_bar != 0.0 {
        a = a.add(&SparseOperator::identity(4).kron(&dx_c.scale_re(-params.u_bar)))?;
    }
    a = a.add(&e_block(Component::P, Component::U).kron(&dx_row.scale_re(-coef_row)))?;
    a = a.add(&e_block(Component::P, Component::V).kron(&dy_row.scale_re(-coef_row)))?;
    a = a.add(&e_block(Component::U, Component::P).kron(&dx_col.scale_re(-coef_col)))?;
    a = a.add(&e_block(Component::V, Component::P).kron(&dy_col.scale_re(-coef_col)))?;
    Ok(a)
}

/// The semi-discrete generator `A` with `f' = A f`, on the full register
/// (pressure coupling `rho0 c^2`, velocity coupling `1/rho0`, advection
/// `u0` along x in every sector including the unused one).
pub fn lee_generator(
    params: &LeeParams,
    scheme: LeeScheme,
    bc: BoundaryCondition,
    obstacle: Option<&ObstacleSpec>,
) -> Result<SparseOperator> {
    generator_with_coupling(
        params,
        scheme,
        bc,
        obstacle,
        params.rho_bar * params.c * params.c,
        1.0 / params.rho_bar,
    )
}

/// One exactly-exponentiated factor of a time step: `circuit` realizes
/// `exp(tau * generator)` with no splitting error inside the group.
#[derive(Debug, Clone)]
pub struct StepGroup {
    pub label: String,
    pub generator: SparseOperator,
    pub circuit: Circuit,
}

/// Map a correction term's axis-local controls to register positions and
/// merge them with the already-global suffix controls.
fn term_controls(
    term: &CorrectionTerm,
    suffix: &[usize],
    layout: &RegisterLayout,
) -> Vec<(usize, bool)> {
    let mut controls: Vec<(usize, bool)> = suffix.iter().map(|&q| (q, true)).collect();
    for &(k, bit) in &term.prefix_controls {
        controls.push((layout.axis_qubit(term.axis, k), bit));
    }
    for &(k, bit) in &term.cross_controls {
        controls.push((layout.axis_qubit(term.axis.other(), k), bit));
    }
    controls.sort_unstable();
    controls
}

fn push_mixed_control_mcrzz(
    circuit: &mut Circuit,
    angle: f64,
    controls: &[(usize, bool)],
    t1: usize,
    t2: usize,
) -> Result<()> {
    for &(q, bit) in controls {
        if !bit {
            circuit.push(Gate::x(q))?;
        }
    }
    circuit.push(Gate::mcrzz(
        angle,
        controls.iter().map(|&(q, _)| q).collect(),
        t1,
        t2,
    )?)?;
    for &(q, bit) in controls {
        if !bit {
            circuit.push(Gate::x(q))?;
        }
    }
    Ok(())
}

/// Ancilla roles for the central-scheme coupling along `axis`: the sector
/// pair (p, velocity) sits at projector-ancilla = 0, and the coupling acts
/// as X on the rotation ancilla, diagonalized by H.
fn central_ancillas(axis: Axis, layout: &RegisterLayout) -> (usize, usize) {
    match axis {
        Axis::X => (layout.a1(), layout.a2()),
        Axis::Y => (layout.a2(), layout.a1()),
    }
}

/// Build one central-scheme group factor. `spatial` is the ladder piece
/// (already masked when an obstacle is present), `group_terms` the obstacle
/// corrections belonging to this group, `wrap_low` conjugates the block by
/// X on the low `j-1` slice qubits with negated angles (the periodic wrap
/// factor), and `coupling` is the single coupling coefficient.
#[allow(clippy::too_many_arguments)]
fn central_group(
    params: &LeeParams,
    axis: Axis,
    j: usize,
    tau: f64,
    coupling: f64,
    spatial: SparseOperator,
    group_terms: &[&CorrectionTerm],
    wrap_low: bool,
    layout: &RegisterLayout,
    label: String,
) -> Result<StepGroup> {
    let grid = &params.grid;
    let slice = layout.axis_slice(axis);
    let (proj_anc, rot_anc) = central_ancillas(axis, layout);
    let velocity = axis_velocity(axis);

    // Generator: advection (x only) plus the symmetric pressure/velocity
    // coupling, both over the same spatial ladder piece.
    let mut generator = SparseOperator::zeros(4 * spatial.dim());
    if axis == Axis::X && params.u_bar != 0.0 {
        generator =
            generator.add(&SparseOperator::identity(4).kron(&spatial.scale_re(-params.u_bar)))?;
    }
    let couple = e_block(Component::P, velocity).add(&e_block(velocity, Component::P))?;
    generator = generator.add(&couple.kron(&spatial.scale_re(-coupling)))?;

    // Circuit: everything in this group is diagonal after the ladder
    // conjugation (and, for the coupling, the ancilla dressing), so the
    // factor is the exact exponential of `generator`.
    let sign = if wrap_low { -1.0 } else { 1.0 };
    let mut c = Circuit::new(layout.num_qubits());
    if wrap_low {
        for &q in &slice[..j - 1] {
            c.push(Gate::x(q))?;
        }
    }
    let u = u_bell(j, -FRAC_PI_2, &slice)?;
    c.append(&u.dagger())?;
    if axis == Axis::X && params.u_bar != 0.0 {
        let angle = sign * -params.u_bar * tau / grid.l;
        c.push(Gate::mcrz(angle, slice[..j - 1].to_vec(), slice[j - 1])?)?;
        for term in group_terms {
            let controls = term_controls(term, &slice[..j - 1], layout);
            push_mixed_control_mcrz(&mut c, -angle, &controls, slice[j - 1])?;
        }
    }
    c.push(Gate::x(proj_anc))?;
    c.push(Gate::h(rot_anc))?;
    let zz_angle = sign * -coupling * tau / grid.l;
    let mut zz_controls = vec![proj_anc];
    zz_controls.extend_from_slice(&slice[..j - 1]);
    c.push(Gate::mcrzz(zz_angle, zz_controls, rot_anc, slice[j - 1])?)?;
    for term in group_terms {
        let mut controls = vec![(proj_anc, true)];
        controls.extend(term_controls(term, &slice[..j - 1], layout));
        controls.sort_unstable();
        push_mixed_control_mcrzz(&mut c, -zz_angle, &controls, rot_anc, slice[j - 1])?;
    }
    c.push(Gate::x(proj_anc))?;
    c.push(Gate::h(rot_anc))?;
    c.append(&u)?;
    if wrap_low {
        for &q in &slice[..j - 1] {
            c.push(Gate::x(q))?;
        }
    }
    Ok(StepGroup {
        label,
        generator,
        circuit: c,
    })
}

fn central_groups(
    params: &LeeParams,
    bc: BoundaryCondition,
    tau: f64,
    obstacle: Option<&ObstacleSpec>,
    coupling: f64,
) -> Result<Vec<StepGroup>> {
    let grid = &params.grid;
    let layout = params.layout()?;
    let terms = match obstacle {
        Some(spec) => obstacle_correction_terms(spec, grid)?,
        None => Vec::new(),
    };
    let mut groups = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let n = grid.axis_qubits(axis);
        if bc == BoundaryCondition::Periodic {
            let spatial = lift(&corner_summand(n, grid.l)?, axis, grid, false)?;
            groups.push(central_group(
                params,
                axis,
                n,
                tau,
                coupling,
                spatial,
                &[],
                true,
                &layout,
                format!("{}-wrap", axis.name()),
            )?);
        }
        for j in 1..=n {
            let spatial = match obstacle {
                Some(spec) => masked_group_generator(axis, j, spec, grid, false)?,
                None => lift(&diff_summand(n, grid.l, j)?, axis, grid, false)?,
            };
            let group_terms: Vec<&CorrectionTerm> = terms
                .iter()
                .filter(|t| t.axis == axis && t.n_hat == j)
                .collect();
            groups.push(central_group(
                params,
                axis,
                j,
                tau,
                coupling,
                spatial,
                &group_terms,
                false,
                &layout,
                format!("{}-{}", axis.name(), j),
            )?);
        }
    }
    Ok(groups)
}

/// Ancilla roles for the up/down-wind coupling along `axis`.
fn updown_ancillas(axis: Axis, layout: &RegisterLayout) -> (usize, usize) {
    central_ancillas(axis, layout)
}

fn updown_groups(params: &LeeParams, tau: f64) -> Result<Vec<StepGroup>> {
    let grid = &params.grid;
    let layout = params.layout()?;
    let coupling = 1.0 / params.rho_bar;
    let mut groups = Vec::new();
    // The y-direction factors apply first, then the x-direction ones.
    for axis in [Axis::Y, Axis::X] {
        let n = grid.axis_qubits(axis);
        let slice = layout.axis_slice(axis);
        let (proj_anc, rot_anc) = updown_ancillas(axis, &layout);
        let velocity = axis_velocity(axis);
        let spatial_dim = grid.points(Axis::X) * grid.points(Axis::Y);
        for j in 1..=n {
            if axis == Axis::X && params.u_bar != 0.0 {
                // Central advection ladder factor, unchanged from the
                // central scheme.
                let spatial = lift(&diff_summand(n, grid.l, j)?, axis, grid, false)?;
                let generator = SparseOperator::identity(4).kron(&spatial.scale_re(-params.u_bar));
                let mut c = Circuit::new(layout.num_qubits());
                let u = u_bell(j, -FRAC_PI_2, &slice)?;
                c.append(&u.dagger())?;
                c.push(Gate::mcrz(
                    -params.u_bar * tau / grid.l,
                    slice[..j - 1].to_vec(),
                    slice[j - 1],
                )?)?;
                c.append(&u)?;
                groups.push(StepGroup {
                    label: format!("{}-advect-{}", axis.name(), j),
                    generator,
                    circuit: c,
                });
            }
            if j == 1 {
                // Shift-free piece of the one-sided couplings: a plain
                // rotation between the pressure and velocity sectors,
                // emitted once per direction.
                let mix = e_block(Component::P, velocity)
                    .sub(&e_block(velocity, Component::P))?
                    .scale_re(coupling / grid.l);
                let generator = mix.kron(&SparseOperator::identity(spatial_dim));
                let mut c = Circuit::new(layout.num_qubits());
                c.push(Gate::x(proj_anc))?;
                c.push(Gate::cry(-2.0 * coupling * tau / grid.l, proj_anc, rot_anc)?)?;
                c.push(Gate::x(proj_anc))?;
                groups.push(StepGroup {
                    label: format!("{}-mix", axis.name()),
                    generator,
                    circuit: c,
                });
            }
            // Ladder factor of the one-sided couplings: pressure feeds from
            // the down-shift, velocity from the up-shift.
            let hop = lift(&shift_summand(n, j)?, axis, grid, false)?;
            let generator = e_block(Component::P, velocity)
                .kron(&hop.scale_re(-coupling / grid.l))
                .add(&e_block(velocity, Component::P).kron(&hop.transpose().scale_re(coupling / grid.l)))?;
            let mut ext = slice.clone();
            ext.truncate(j);
            ext.push(rot_anc);
            let u = u_bell(j + 1, -FRAC_PI_2, &ext)?;
            let mut c = Circuit::new(layout.num_qubits());
            c.push(Gate::x(proj_anc))?;
            c.push(Gate::x(slice[j - 1]))?;
            c.append(&u.dagger())?;
            let mut controls = vec![proj_anc];
            controls.extend_from_slice(&slice[..j]);
            c.push(Gate::mcrz(-2.0 * coupling * tau / grid.l, controls, rot_anc)?)?;
            c.append(&u)?;
            c.push(Gate::x(slice[j - 1]))?;
            c.push(Gate::x(proj_anc))?;
            groups.push(StepGroup {
                label: format!("{}-shift-{}", axis.name(), j),
                generator,
                circuit: c,
            });
        }
    }
    Ok(groups)
}

/// The exactly-exponentiated factors of one first-order time step, in
/// application order. Their generators sum to [`lee_generator`]; their
/// circuits concatenate to [`trotter_step`].
pub fn step_groups(
    params: &LeeParams,
    scheme: LeeScheme,
    bc: BoundaryCondition,
    tau: f64,
    obstacle: Option<&ObstacleSpec>,
) -> Result<Vec<StepGroup>> {
    let obstacle = active_obstacle(obstacle);
    check_combination(scheme, bc, obstacle)?;
    if !tau.is_finite() {
        return Err(Error::InvalidInput("time step must be finite".into()));
    }
    if !params.is_conservative() {
        return Err(Error::NonConservative {
            c: params.c,
            rho_bar: params.rho_bar,
        });
    }
    match scheme {
        LeeScheme::Central => central_groups(params, bc, tau, obstacle, 1.0 / params.rho_bar),
        LeeScheme::Updown => updown_groups(params, tau),
    }
}

/// One first-order time step `exp(tau A)` as a product of exact group
/// factors. Conservative parameters only; see [`split_step`] otherwise.
pub fn trotter_step(
    params: &LeeParams,
    scheme: LeeScheme,
    bc: BoundaryCondition,
    tau: f64,
    obstacle: Option<&ObstacleSpec>,
) -> Result<Circuit> {
    let groups = step_groups(params, scheme, bc, tau, obstacle)?;
    let mut c = Circuit::new(params.layout()?.num_qubits());
    for g in &groups {
        c.append(&g.circuit)?;
    }
    Ok(c)
}

/// A-priori bound on the operator-norm error of one first-order step,
/// `|| product - exp(tau A) ||`, from pairwise commutator norms of the
/// group generators. Uses `n = max(n_x, n_y)` as the common register size,
/// which upper-bounds the axis-by-axis count.
pub fn trotter_error_bound(params: &LeeParams, tau: f64) -> f64 {
    let n = params.grid.n_x.max(params.grid.n_y) as f64;
    let l = params.grid.l;
    let u = params.u_bar.abs();
    let r = 1.0 / (2.0 * params.rho_bar);
    let same_axis = (u / 2.0) * (u / 2.0) + 2.0 * r * r + u * r;
    let cross_axis = r * r;
    (same_axis * (n - 1.0) + cross_axis * n * n) * tau * tau / (2.0 * l * l)
}

/// Hermitian/anti-Hermitian decomposition `A = hermitian + i * rotation`
/// with both parts Hermitian.
#[derive(Debug, Clone)]
pub struct SplitParts {
    pub hermitian: SparseOperator,
    pub rotation: SparseOperator,
}

pub fn split_generator(a: &SparseOperator) -> Result<SplitParts> {
    let adj = a.adjoint();
    let hermitian = a.add(&adj)?.scale_re(0.5);
    let rotation = a.sub(&adj)?.scale(Complex64::new(0.0, -0.5));
    Ok(SplitParts {
        hermitian,
        rotation,
    })
}

/// One split time step: apply `circuit` (the unitary rotation factor with
/// symmetrized coupling `kappa`), then multiply by `factor`
/// (`exp(tau * hermitian part)`, computed classically).
#[derive(Debug, Clone)]
pub struct SplitStep {
    pub circuit: Circuit,
    pub factor: SparseOperator,
}

/// Build the split step for central-scheme parameters that need not be
/// conservative. The rotation part is cross-checked against an
/// independently assembled generator with both couplings set to `kappa`;
/// a mismatch beyond 1e-12 rejects the combination.
pub fn split_step(
    params: &LeeParams,
    bc: BoundaryCondition,
    tau: f64,
    obstacle: Option<&ObstacleSpec>,
) -> Result<SplitStep> {
    let obstacle = active_obstacle(obstacle);
    check_combination(LeeScheme::Central, bc, obstacle)?;
    if !tau.is_finite() {
        return Err(Error::InvalidInput("time step must be finite".into()));
    }
    let a = lee_generator(params, LeeScheme::Central, bc, obstacle)?;
    let parts = split_generator(&a)?;
    let kappa = params.kappa();
    let reference = generator_with_coupling(params, LeeScheme::Central, bc, obstacle, kappa, kappa)?;
    let residual = parts
        .rotation
        .scale(Complex64::new(0.0, 1.0))
        .sub(&reference)?
        .max_abs_entry();
    if residual > 1e-12 {
        return Err(Error::UnsupportedCombination(format!(
            "generator does not split into a Hermitian part plus the symmetric-coupling rotation (residual {residual:.3e})"
        )));
    }
    let groups = central_groups(params, bc, tau, obstacle, kappa)?;
    let layout = params.layout()?;
    let mut circuit = Circuit::new(layout.num_qubits());
    for g in &groups {
        circuit.append(&g.circuit)?;
    }
    let factor = if parts.hermitian.num_entries() == 0 {
        SparseOperator::identity(a.dim())
    } else {
        if a.dim() > SPLIT_DENSE_GUARD {
            return Err(Error::GuardExceeded {
                what: "dense exponential of the non-unitary split factor",
                limit: SPLIT_DENSE_GUARD,
                requested: a.dim(),
            });
        }
        let dense = expm_dense(&DenseOperator::from_sparse(&parts.hermitian.scale_re(tau))?);
        let mut entries = Vec::new();
        for r in 0..dense.dim() {
            for c in 0..dense.dim() {
                let v = dense.get(r, c);
                if v != Complex64::new(0.0, 0.0) {
                    entries.push((r, c, v));
                }
            }
        }
        SparseOperator::from_entries(a.dim(), entries)?
    };
    Ok(SplitStep { circuit, factor })
}

/// The dyadic 2x2 block whose lower-left corner sits at the grid midpoint;
/// the default source region. Needs at least two qubits per axis.
pub fn center_cell(grid: &GridSpec) -> Result<BinaryCell> {
    if grid.n_x < 2 || grid.n_y < 2 {
        return Err(Error::InvalidInput(
            "the default 2x2 center source needs at least two qubits per axis".into(),
        ));
    }
    let prefix = |n: usize| crate::obstacles::BitPrefix::new(1 << (n - 2), n - 1);
    Ok(BinaryCell::new(prefix(grid.n_x)?, prefix(grid.n_y)?))
}

/// Pressure field equal to `amplitude` on each source cell, zero elsewhere
/// (velocities zero). Overlapping cells stack.
pub fn source_field(sources: &[(BinaryCell, f64)], grid: &GridSpec) -> Result<FieldGrid> {
    let mut field = FieldGrid::zeros(grid.points(Axis::X), grid.points(Axis::Y));
    for (cell, amplitude) in sources {
        if !amplitude.is_finite() {
            return Err(Error::InvalidInput("source amplitude must be finite".into()));
        }
        let (x0, x1) = cell.x.range(grid.n_x)?;
        let (y0, y1) = cell.y.range(grid.n_y)?;
        for x in x0..x1 {
            for y in y0..y1 {
                field.p[x * field.ny_points + y] += amplitude;
            }
        }
    }
    Ok(field)
}

/// State-preparation circuit for a single-cell pressure source: X gates
/// set the prefix bits, H gates spread over the free bits. Returns the
/// circuit and the (signed) normalization factor that scales unit
/// amplitudes back to field values.
pub fn prepare_cell_source(
    cell: &BinaryCell,
    amplitude: f64,
    layout: &RegisterLayout,
) -> Result<(Circuit, f64)> {
    if !layout.has_ancillas() {
        return Err(Error::InvalidInput(
            "source preparation requires the ancilla register".into(),
        ));
    }
    if !amplitude.is_finite() || amplitude == 0.0 {
        return Err(Error::InvalidInput(
            "source amplitude must be finite and nonzero".into(),
        ));
    }
    let mut c = Circuit::new(layout.num_qubits());
    let mut free_bits = 0usize;
    for (axis, prefix) in [(Axis::X, &cell.x), (Axis::Y, &cell.y)] {
        let n = layout.axis_qubits(axis);
        if prefix.len() > n {
            return Err(Error::InvalidInput(format!(
                "cell {cell} does not fit a ({}, {})-qubit grid",
                layout.n_x(),
                layout.n_y()
            )));
        }
        for i in 1..=prefix.len() {
            if prefix.bit(i) {
                c.push(Gate::x(layout.axis_qubit(axis, n - i + 1)))?;
            }
        }
        for k in 1..=(n - prefix.len()) {
            c.push(Gate::h(layout.axis_qubit(axis, k)))?;
            free_bits += 1;
        }
    }
    let norm_factor = amplitude * ((1usize << free_bits) as f64).sqrt();
    Ok((c, norm_factor))
}

/// One reusable time-step operator.
#[derive(Debug, Clone)]
pub enum StepOperator {
    /// A unitary circuit (conservative parameters).
    Unitary(Circuit),
    /// Circuit followed by a classical non-unitary factor.
    Split(SplitStep),
}

impl StepOperator {
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            StepOperator::Unitary(c) => state.apply_circuit(c),
            StepOperator::Split(s) => {
                state.apply_circuit(&s.circuit)?;
                let amps = s.factor.matvec(state.amplitudes())?;
                *state = StateVector::from_amplitudes(amps)?;
                Ok(())
            }
        }
    }

    pub fn circuit(&self) -> &Circuit {
        match self {
            StepOperator::Unitary(c) => c,
            StepOperator::Split(s) => &s.circuit,
        }
    }
}

/// Field values captured during an evolution run.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: FieldGrid,
}

fn log2_exact(points: usize) -> Result<usize> {
    if points < 2 || !points.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "grid extent {points} is not a power of two of at least 2"
        )));
    }
    Ok(points.trailing_zeros() as usize)
}

/// Drive the statevector forward `steps` applications of `step`, recording
/// snapshots at step 0, every `snapshot_every`-th step (0 disables the
/// periodic ones) and the final step. The normalization factor is fixed at
/// start; split steps may change the raw state norm, which is physical.
pub fn evolve(
    initial: &FieldGrid,
    step: &StepOperator,
    tau: f64,
    steps: usize,
    snapshot_every: usize,
) -> Result<Vec<Snapshot>> {
    let layout = RegisterLayout::with_ancillas(
        log2_exact(initial.nx_points)?,
        log2_exact(initial.ny_points)?,
    )?;
    let (mut state, norm_factor) = initial.to_state(&layout)?;
    let mut snapshots = vec![Snapshot {
        step: 0,
        time: 0.0,
        field: extract_field(&state, &layout, norm_factor)?,
    }];
    for k in 1..=steps {
        step.apply(&mut state)?;
        let periodic = snapshot_every != 0 && k % snapshot_every == 0;
        if periodic || k == steps {
            snapshots.push(Snapshot {
                step: k,
                time: k as f64 * tau,
                field: extract_field(&state, &layout, norm_factor)?,
            });
        }
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_x: usize, n_y: usize, l: f64) -> GridSpec {
        GridSpec::new(n_x, n_y, l).unwrap()
    }

    fn conservative(n_x: usize, n_y: usize, l: f64, u_bar: f64) -> LeeParams {
        LeeParams::new(grid(n_x, n_y, l), 1.0, 1.0, u_bar).unwrap()
    }

    fn max_abs_diff(a: &SparseOperator, b: &SparseOperator) -> f64 {
        a.sub(b).unwrap().max_abs_entry()
    }

    #[test]
    fn parameter_validation() {
        let g = grid(2, 2, 1.0);
        assert!(LeeParams::new(g, 0.0, 1.0, 0.0).is_err());
        assert!(LeeParams::new(g, 1.0, -1.0, 0.0).is_err());
        assert!(LeeParams::new(g, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn conservative_detection_and_kappa() {
        let p = LeeParams::new(grid(1, 1, 1.0), 2.0, 0.5, 0.0).unwrap();
        assert!(p.is_conservative()); // c = 2 = 1/0.5
        let q = LeeParams::new(grid(1, 1, 1.0), 2.0, 1.0, 0.0).unwrap();
        assert!(!q.is_conservative());
        assert_eq!(q.kappa(), (1.0 + 4.0) / 2.0);
    }

    #[test]
    fn generator_block_placement() {
        // n_x = n_y = 1, l = 0.5: the axis difference couples the two grid
        // lines with +-1. Check one entry from every block.
        let p = LeeParams::new(grid(1, 1, 0.5), 2.0, 1.0, 0.75).unwrap();
        let a = lee_generator(
            &p,
            LeeScheme::Central,
            BoundaryCondition::Dirichlet,
            None,
        )
        .unwrap();
        assert_eq!(a.dim(), 16);
        // Advection -u0 * Dx in every sector, including the unused one.
        assert_eq!(a.get(0, 2).re, -0.75);
        assert_eq!(a.get(12, 14).re, -0.75);
        assert_eq!(a.get(14, 12).re, 0.75);
        // Pressure row: -rho0 c^2 = -4 times Dx into u, Dy into v.
        assert_eq!(a.get(0, 4 + 2).re, -4.0);
        assert_eq!(a.get(0, 8 + 1).re, -4.0);
        // Velocity rows: -1/rho0 = -1.
        assert_eq!(a.get(4, 2).re, -1.0);
        assert_eq!(a.get(8, 1).re, -1.0);
    }

    #[test]
    fn conservative_generator_is_antisymmetric() {
        for (scheme, bc) in [
            (LeeScheme::Central, BoundaryCondition::Dirichlet),
            (LeeScheme::Central, BoundaryCondition::Periodic),
            (LeeScheme::Updown, BoundaryCondition::Dirichlet),
        ] {
            let p = conservative(2, 1, 0.25, -1.0);
            let a = lee_generator(&p, scheme, bc, None).unwrap();
            let sym = a.add(&a.transpose()).unwrap();
            assert_eq!(sym.num_entries(), 0, "{scheme:?} {bc:?}");
        }
    }

    #[test]
    fn unsupported_combinations_are_rejected() {
        let p = conservative(2, 2, 1.0, 0.0);
        let spec = ObstacleSpec::parse_cell_list("01,01\n").unwrap();
        assert!(matches!(
            lee_generator(&p, LeeScheme::Updown, BoundaryCondition::Periodic, None),
            Err(Error::UnsupportedCombination(_))
        ));
        assert!(matches!(
            lee_generator(
                &p,
                LeeScheme::Updown,
                BoundaryCondition::Dirichlet,
                Some(&spec)
            ),
            Err(Error::UnsupportedCombination(_))
        ));
        assert!(matches!(
            lee_generator(
                &p,
                LeeScheme::Central,
                BoundaryCondition::Periodic,
                Some(&spec)
            ),
            Err(Error::UnsupportedCombination(_))
        ));
        // An empty obstacle spec is no obstacle at all.
        let empty = ObstacleSpec::empty();
        assert!(lee_generator(
            &p,
            LeeScheme::Central,
            BoundaryCondition::Periodic,
            Some(&empty)
        )
        .is_ok());
    }

    #[test]
    fn non_conservative_needs_the_split_path() {
        let p = LeeParams::new(grid(1, 1, 1.0), 2.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            trotter_step(
                &p,
                LeeScheme::Central,
                BoundaryCondition::Dirichlet,
                0.1,
                None
            ),
            Err(Error::NonConservative { .. })
        ));
        assert!(split_step(&p, BoundaryCondition::Dirichlet, 0.1, None).is_ok());
    }

    #[test]
    fn group_generators_sum_to_the_full_generator() {
        let spec = ObstacleSpec::parse_cell_list("01,1\n").unwrap();
        let cases: Vec<(LeeParams, LeeScheme, BoundaryCondition, Option<&ObstacleSpec>)> = vec![
            (
                conservative(2, 1, 0.5, -1.0),
                LeeScheme::Central,
                BoundaryCondition::Dirichlet,
                None,
            ),
            (
                conservative(2, 1, 0.5, -1.0),
                LeeScheme::Central,
                BoundaryCondition::Periodic,
                None,
            ),
            (
                conservative(2, 2, 0.5, 0.3),
                LeeScheme::Updown,
                BoundaryCondition::Dirichlet,
                None,
            ),
            (
                conservative(2, 1, 0.5, 0.7),
                LeeScheme::Central,
                BoundaryCondition::Dirichlet,
                Some(&spec),
            ),
        ];
        for (params, scheme, bc, obstacle) in cases {
            let groups = step_groups(&params, scheme, bc, 0.1, obstacle).unwrap();
            let mut sum = SparseOperator::zeros(4 * params.grid.points(Axis::X) * params.grid.points(Axis::Y));
            for g in &groups {
                sum = sum.add(&g.generator).unwrap();
            }
            let a = lee_generator(&params, scheme, bc, obstacle).unwrap();
            assert!(
                max_abs_diff(&sum, &a) < 1e-13,
                "{scheme:?} {bc:?} obstacle={}",
                obstacle.is_some()
            );
        }
    }

    #[test]
    fn zero_time_step_is_the_identity() {
        use crate::circuit::{dense_unitary, unitary_distance_up_to_phase};
        for scheme in [LeeScheme::Central, LeeScheme::Updown] {
            let p = conservative(1, 1, 1.0, 0.4);
            let c = trotter_step(&p, scheme, BoundaryCondition::Dirichlet, 0.0, None).unwrap();
            let u = dense_unitary(&c).unwrap();
            let id = DenseOperator::identity(u.dim());
            assert!(
                unitary_distance_up_to_phase(&u, &id).unwrap() < 1e-12,
                "{scheme:?}"
            );
        }
    }

    #[test]
    fn error_bound_reference_value() {
        let p = LeeParams::new(grid(5, 5, 0.25), 1.0, 1.0, -1.0).unwrap();
        assert!((trotter_error_bound(&p, 0.05) - 0.225).abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs_the_generator() {
        let p = LeeParams::new(grid(2, 1, 0.5), 2.0, 1.0, 0.3).unwrap();
        let a = lee_generator(&p, LeeScheme::Central, BoundaryCondition::Dirichlet, None).unwrap();
        let parts = split_generator(&a).unwrap();
        let rebuilt = parts
            .hermitian
            .add(&parts.rotation.scale(Complex64::new(0.0, 1.0)))
            .unwrap();
        assert!(max_abs_diff(&rebuilt, &a) < 1e-15);
        assert!(max_abs_diff(&parts.hermitian, &parts.hermitian.adjoint()) < 1e-15);
        assert!(max_abs_diff(&parts.rotation, &parts.rotation.adjoint()) < 1e-15);
        // Conservative parameters leave no Hermitian part.
        let q = conservative(2, 1, 0.5, 0.3);
        let aq =
            lee_generator(&q, LeeScheme::Central, BoundaryCondition::Dirichlet, None).unwrap();
        assert_eq!(split_generator(&aq).unwrap().hermitian.num_entries(), 0);
    }

    #[test]
    fn conservative_split_step_reduces_to_the_plain_step() {
        let p = conservative(2, 1, 0.5, -0.6);
        let split = split_step(&p, BoundaryCondition::Dirichlet, 0.1, None).unwrap();
        let plain =
            trotter_step(&p, LeeScheme::Central, BoundaryCondition::Dirichlet, 0.1, None).unwrap();
        assert_eq!(split.circuit.gates(), plain.gates());
        assert_eq!(split.factor, SparseOperator::identity(32));
    }

    #[test]
    fn cell_source_circuit_matches_the_field_route() {
        let g = grid(2, 2, 1.0);
        let layout = RegisterLayout::with_ancillas(2, 2).unwrap();
        let cell = BinaryCell::parse("01,1").unwrap();
        let (circuit, norm_factor) = prepare_cell_source(&cell, 0.5, &layout).unwrap();
        let mut state = StateVector::basis_state(layout.num_qubits(), 0).unwrap();
        state.apply_circuit(&circuit).unwrap();
        let via_circuit = extract_field(&state, &layout, norm_factor).unwrap();
        let field = source_field(&[(cell, 0.5)], &g).unwrap();
        let (direct_state, direct_norm) = field.to_state(&layout).unwrap();
        let direct = extract_field(&direct_state, &layout, direct_norm).unwrap();
        assert!((norm_factor - direct_norm).abs() < 1e-15);
        for x in 0..4 {
            for y in 0..4 {
                assert!(
                    (via_circuit.at(Component::P, x, y) - direct.at(Component::P, x, y)).abs()
                        < 1e-15
                );
            }
        }
    }

    #[test]
    fn center_cell_sits_at_the_midpoint() {
        let cell = center_cell(&grid(5, 5, 1.0)).unwrap();
        assert_eq!(cell.x.range(5).unwrap(), (16, 18));
        assert_eq!(cell.y.range(5).unwrap(), (16, 18));
        assert!(center_cell(&grid(1, 3, 1.0)).is_err());
        // The default source has unit normalization at amplitude 0.5.
        let layout = RegisterLayout::with_ancillas(5, 5).unwrap();
        let (_, norm_factor) = prepare_cell_source(&cell, 0.5, &layout).unwrap();
        assert!((norm_factor - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evolve_snapshot_schedule() {
        let p = conservative(2, 2, 1.0, 0.0);
        let step = StepOperator::Unitary(
            trotter_step(&p, LeeScheme::Central, BoundaryCondition::Dirichlet, 0.1, None).unwrap(),
        );
        let field = source_field(&[(center_cell(&p.grid).unwrap(), 0.5)], &p.grid).unwrap();
        let snaps = evolve(&field, &step, 0.1, 5, 2).unwrap();
        let steps: Vec<usize> = snaps.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 2, 4, 5]);
        assert!((snaps[1].time - 0.2).abs() < 1e-15);
        let only_initial = evolve(&field, &step, 0.1, 0, 0).unwrap();
        assert_eq!(only_initial.len(), 1);
    }
}
