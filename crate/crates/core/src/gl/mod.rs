//! Discrete Ginzburg-Landau functional with a stream-function gauge for the
//! induced potential.
//!
//! The induced potential is `a = ∇⊥φ` with `φ` vanishing on boundary nodes,
//! so `div a = 0` and `ν · a = 0` hold by construction and `curl a = Δφ`.

mod minimize;
pub(crate) mod system;

pub use minimize::{minimize, GLResult, Init, MAX_ITER, TOL};
pub(crate) use system::GLSystem;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::GaugeLinkField;
use crate::geometry::MaskedGrid;

#[derive(Clone, PartialEq)]
pub struct GLState {
    pub psi: Vec<Complex64>,
    /// Stream function; zero on boundary nodes.
    pub phi: Vec<f64>,
}

impl fmt::Debug for GLState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GLState")
            .field("nodes", &self.psi.len())
            .field("sup_psi", &self.sup_psi())
            .field("sup_phi", &self.phi.iter().fold(0.0f64, |a, b| a.max(b.abs())))
            .finish()
    }
}

impl GLState {
    pub fn normal(grid: &MaskedGrid) -> Self {
        GLState {
            psi: vec![Complex64::new(0.0, 0.0); grid.node_count()],
            phi: vec![0.0; grid.node_count()],
        }
    }

    pub fn uniform(grid: &MaskedGrid, value: Complex64) -> Self {
        GLState {
            psi: vec![value; grid.node_count()],
            phi: vec![0.0; grid.node_count()],
        }
    }

    pub fn check(&self, grid: &MaskedGrid) -> Result<()> {
        let n = grid.node_count();
        if self.psi.len() != n || self.phi.len() != n {
            return Err(Error::Mismatch(format!(
                "state has {} / {} values for {n} nodes",
                self.psi.len(),
                self.phi.len()
            )));
        }
        if self.psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || self.phi.iter().any(|p| !p.is_finite())
        {
            return Err(Error::NonFinite);
        }
        if grid
            .nodes()
            .iter()
            .zip(&self.phi)
            .any(|(node, &p)| node.is_boundary() && p != 0.0)
        {
            return Err(Error::InvalidArgument("stream function must vanish on boundary nodes".into()));
        }
        Ok(())
    }

    /// `max |ψ|`.
    pub fn sup_psi(&self) -> f64 {
        self.psi.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ w |ψ|²` with the grid quadrature weights.
    pub fn l2_sq(&self, grid: &MaskedGrid) -> f64 {
        grid.node_weights()
            .iter()
            .zip(&self.psi)
            .map(|(w, z)| w * z.norm_sqr())
            .sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub condensation: f64,
    pub field: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Normal,
    Superconducting,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Normal => "normal",
            Classification::Superconducting => "superconducting",
        }
    }
}

pub const CLASSIFY_THRESHOLD: f64 = 1e-3;

/// Normal iff `‖ψ‖_∞ ≤ threshold` and the total energy is `≥ −threshold`.
pub fn classify_values(sup_psi: f64, total: f64, threshold: f64) -> Classification {
    if sup_psi <= threshold && total >= -threshold {
        Classification::Normal
    } else {
        Classification::Superconducting
    }
}

pub fn classify(result: &GLResult, threshold: f64) -> Result<Classification> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "classification threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(classify_values(result.sup_psi, result.energy.total, threshold))
}

pub fn energy(
    state: &GLState,
    field: &GaugeLinkField,
    h: f64,
    kappa: f64,
    grid: &MaskedGrid,
) -> Result<EnergyBreakdown> {
    let sys = GLSystem::new(grid, field, h, kappa)?;
    state.check(grid)?;
    Ok(sys.energy(state))
}

/// Gradient with respect to `(Re ψ, Im ψ)` packed as `∂/∂Re + i ∂/∂Im`, and
/// with respect to `φ` (zero on constrained nodes).
pub fn gradient(
    state: &GLState,
    field: &GaugeLinkField,
    h: f64,
    kappa: f64,
    grid: &MaskedGrid,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let sys = GLSystem::new(grid, field, h, kappa)?;
    state.check(grid)?;
    let (_, dpsi, dphi) = sys.energy_gradient(state);
    Ok((dpsi, dphi))
}

/// `ψ = e^{i n₀ θ}`, `φ = 0`.
pub fn degenerate_state(grid: &MaskedGrid, n0: i64) -> GLState {
    GLState {
        psi: grid
            .nodes()
            .iter()
            .map(|n| Complex64::from_polar(1.0, n0 as f64 * n.y.atan2(n.x)))
            .collect(),
        phi: vec![0.0; grid.node_count()],
    }
}

/// `ψ = χ(r) e^{i n₀ θ}` with `χ = (r/√ε)^p` inside `r < √ε` and 1 outside.
pub fn quasimode_w(grid: &MaskedGrid, epsilon: f64, p: f64, n0: i64) -> Result<GLState> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("exponent p must lie in (0, 1), got {p}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let core = epsilon.sqrt();
    if core < 2.0 * grid.spacing() {
        return Err(Error::ResolutionInsufficient(format!(
            "core radius {core} is below two grid spacings"
        )));
    }
    let mut state = degenerate_state(grid, n0);
    for (z, node) in state.psi.iter_mut().zip(grid.nodes()) {
        let r = node.x.hypot(node.y);
        if r < core {
            *z *= (r / core).powf(p);
        }
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

/// Hessian criterion at `ψ = 0`: stable iff `κ² ≤ λ`.
pub fn normal_state_stability(_h: f64, kappa: f64, lambda_ab_value: f64) -> Result<Stability> {
    if !(lambda_ab_value >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue must be nonnegative, got {lambda_ab_value}"
        )));
    }
    Ok(if kappa * kappa <= lambda_ab_value {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

/// Whether `h` is an integer multiple of `2π` up to `tol`.
pub fn is_full_quantum(h: f64, tol: f64) -> bool {
    let t = h / (2.0 * PI);
    (t - t.round()).abs() <= tol
}
