//! Magnetic Laplacians on masked grids and their lowest eigenvalues.

pub mod eigen;
pub mod operator;
pub mod radial;

pub use eigen::{lowest_eigenpair, lowest_eigenpair_with, EigResult, SolverOptions, DEFAULT_TOL};
pub use operator::{assemble_magnetic_laplacian, BoundaryCondition, HermitianOperator};
pub use radial::{default_modes, lambda_1d_twisted, lambda_disc_radial_oracle, twisted_ring_operator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{link_phases, GaugeLinkField, PotentialKind};
use crate::geometry::{build_grid, perforate, DomainSpec, MaskedGrid};

/// How the point flux is represented on the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbMethod {
    /// Full flux through the plaquette at the origin, no puncture.
    PointFlux,
    /// Aharonov-Bohm phases on the grid with `D(0, radius)` removed.
    Perforated { radius: f64 },
}

/// Lowest Neumann eigenpair for the given potential on an existing grid.
pub fn neumann_eigenpair(grid: &MaskedGrid, kind: PotentialKind, h: f64) -> Result<EigResult> {
    let field = link_phases(grid, kind, h)?;
    let op = assemble_magnetic_laplacian(grid, &field, BoundaryCondition::NeumannNatural)?;
    lowest_eigenpair(&op, DEFAULT_TOL)
}

pub fn lambda_ab_on_grid(grid: &MaskedGrid, h: f64, method: AbMethod) -> Result<EigResult> {
    match method {
        AbMethod::PointFlux => neumann_eigenpair(grid, PotentialKind::PointFlux, h),
        AbMethod::Perforated { radius } => {
            let holed = perforate(grid, radius)?;
            neumann_eigenpair(&holed, PotentialKind::AharonovBohm, h)
        }
    }
}

pub fn lambda_ab(spec: &DomainSpec, h: f64, n: usize, method: AbMethod) -> Result<f64> {
    let grid = build_grid(spec, n)?;
    Ok(lambda_ab_on_grid(&grid, h, method)?.value)
}

/// Step potentials narrower than this many grid spacings are rejected.
pub const STEP_MIN_CELLS: f64 = 4.0;

pub fn lambda_step_on_grid(grid: &MaskedGrid, h: f64, epsilon: f64) -> Result<EigResult> {
    if !(epsilon >= STEP_MIN_CELLS * grid.spacing() * (1.0 - 1e-12)) {
        return Err(Error::ResolutionInsufficient(format!(
            "step radius {epsilon} needs at least {STEP_MIN_CELLS} grid spacings ({})",
            STEP_MIN_CELLS * grid.spacing()
        )));
    }
    neumann_eigenpair(grid, PotentialKind::Step { epsilon }, h)
}

pub fn lambda_step(spec: &DomainSpec, h: f64, epsilon: f64, n: usize) -> Result<f64> {
    let grid = build_grid(spec, n)?;
    Ok(lambda_step_on_grid(&grid, h, epsilon)?.value)
}

pub fn dirichlet_eigenpair(grid: &MaskedGrid) -> Result<EigResult> {
    let op = assemble_magnetic_laplacian(grid, &GaugeLinkField::zero(grid), BoundaryCondition::DirichletAll)?;
    lowest_eigenpair(&op, DEFAULT_TOL)
}

/// First Dirichlet eigenvalue of the grid domain without magnetic field.
pub fn dirichlet_lambda(grid: &MaskedGrid) -> Result<f64> {
    Ok(dirichlet_eigenpair(grid)?.value)
}
