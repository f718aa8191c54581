//! Preconditioned nonlinear conjugate gradients (Polak-Ribière+) with an
//! approximate line minimization that only accepts strict decreases.

use faer::Mat;
use num_complex::Complex64;

use super::system::GLSystem;
use super::{classify_values, is_full_quantum, Classification, EnergyBreakdown, GLState, CLASSIFY_THRESHOLD};
use crate::error::{Error, Result};
use crate::fields::GaugeLinkField;
use crate::geometry::MaskedGrid;
use crate::spectral::eigen::ShiftedFactor;
use crate::spectral::{assemble_magnetic_laplacian, lowest_eigenpair, BoundaryCondition, DEFAULT_TOL};

pub const TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 50_000;
/// Amplitude of the eigenvector used by the perturbed-normal start.
pub const PERTURBATION: f64 = 1e-3;

#[derive(Clone, Debug)]
pub enum Init {
    /// Both standard starts; the lower final energy wins.
    MultiStart,
    NormalPerturbed,
    UniformOne,
    Given(GLState),
}

#[derive(Clone, Debug)]
pub struct GLResult {
    pub state: GLState,
    pub energy: EnergyBreakdown,
    /// RMS over nodes of the gradient divided by the quadrature weight.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: Classification,
    pub sup_psi: f64,
    /// Total energy after every accepted step, starting with the initial
    /// state; later entries accumulate the exactly evaluated decrements, so
    /// the sequence never increases.
    pub history: Vec<f64>,
    pub start: &'static str,
}

pub fn minimize(
    grid: &MaskedGrid,
    field: &GaugeLinkField,
    h: f64,
    kappa: f64,
    init: Init,
    tol: f64,
    max_iter: usize,
) -> Result<GLResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let sys = GLSystem::new(grid, field, h, kappa)?;
    let pre = Preconditioner::new(&sys)?;
    let run = |start: &GLState, label| descend(&sys, &pre, start.clone(), tol, max_iter, label);
    let result = match init {
        Init::Given(state) => {
            state.check(grid)?;
            run(&state, "given")?
        }
        Init::NormalPerturbed => run(&normal_perturbed(grid, field)?, "normal_perturbed")?,
        Init::UniformOne => run(&GLState::uniform(grid, Complex64::new(1.0, 0.0)), "uniform_one")?,
        Init::MultiStart => {
            let perturbed = normal_perturbed(grid, field)?;
            let one = GLState::uniform(grid, Complex64::new(1.0, 0.0));
            let (a, b) = rayon::join(
                || run(&perturbed, "normal_perturbed"),
                || run(&one, "uniform_one"),
            );
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    log::debug!(
                        "h = {h}, kappa = {kappa}: normal_perturbed {:.10} ({} it), uniform_one {:.10} ({} it)",
                        a.energy.total,
                        a.iterations,
                        b.energy.total,
                        b.iterations
                    );
                    if a.energy.total <= b.energy.total {
                        a
                    } else {
                        b
                    }
                }
                (Ok(a), Err(e)) | (Err(e), Ok(a)) => {
                    log::warn!("h = {h}, kappa = {kappa}: one start failed ({e}); keeping {}", a.start);
                    a
                }
                (Err(e), Err(_)) => return Err(e),
            }
        }
    };
    if result.converged && result.sup_psi > 1.0 + 1e-6 {
        log::warn!("converged state exceeds |psi| <= 1: sup = {}", result.sup_psi);
    }
    if result.classification == Classification::Superconducting && !is_full_quantum(h, 1e-9) {
        log_core_decay(grid, &result.state);
    }
    Ok(result)
}

/// `ψ = 10⁻³ u` with `u` the lowest Neumann eigenvector of the applied field.
fn normal_perturbed(grid: &MaskedGrid, field: &GaugeLinkField) -> Result<GLState> {
    let op = assemble_magnetic_laplacian(grid, field, BoundaryCondition::NeumannNatural)?;
    let eig = lowest_eigenpair(&op, DEFAULT_TOL)?;
    Ok(GLState {
        psi: eig.vector.iter().map(|z| z * PERTURBATION).collect(),
        phi: vec![0.0; grid.node_count()],
    })
}

fn log_core_decay(grid: &MaskedGrid, state: &GLState) {
    let (mut core, mut nc) = (0.0, 0usize);
    for (node, z) in grid.nodes().iter().zip(&state.psi) {
        if node.x.hypot(node.y) < 0.1 {
            core += z.norm();
            nc += 1;
        }
    }
    let mean = state.psi.iter().map(|z| z.norm()).sum::<f64>() / state.psi.len() as f64;
    if nc > 0 {
        log::debug!("mean |psi| within r < 0.1: {:.4}, over the domain: {:.4}", core / nc as f64, mean);
    }
}

struct Preconditioner {
    psi: ShiftedFactor,
    /// `None` when `h = 0` and the stream function is frozen.
    phi: Option<(ShiftedFactor, Vec<usize>)>,
    h_sq: f64,
}

impl Preconditioner {
    fn new(sys: &GLSystem) -> Result<Self> {
        let psi = ShiftedFactor::new(&sys.psi_metric(sys.kappa_sq.max(1.0))?, 0.0)?;
        let phi = if sys.h == 0.0 {
            None
        } else {
            let free = sys.free_nodes();
            if free.is_empty() {
                None
            } else {
                Some((ShiftedFactor::new(&sys.stream_metric(1.0)?, 0.0)?, free))
            }
        };
        Ok(Preconditioner {
            psi,
            phi,
            h_sq: sys.h * sys.h,
        })
    }

    fn apply(&self, g: &Direction) -> Direction {
        let n = g.psi.len();
        let mut b = Mat::<Complex64>::from_fn(n, 1, |i, _| g.psi[i] * 0.5);
        self.psi.solve_in_place(&mut b);
        let psi = (0..n).map(|i| b[(i, 0)]).collect();
        let mut phi = vec![0.0; n];
        if let Some((factor, free)) = &self.phi {
            let scale = 0.5 / self.h_sq;
            let mut b = Mat::<Complex64>::from_fn(free.len(), 1, |i, _| Complex64::new(g.phi[free[i]] * scale, 0.0));
            factor.solve_in_place(&mut b);
            for (i, &k) in free.iter().enumerate() {
                phi[k] = b[(i, 0)].re;
            }
        }
        Direction { psi, phi }
    }
}

#[derive(Clone)]
struct Direction {
    psi: Vec<Complex64>,
    phi: Vec<f64>,
}

impl Direction {
    fn dot(&self, o: &Direction) -> f64 {
        let a: f64 = self.psi.iter().zip(&o.psi).map(|(x, y)| (x.conj() * y).re).sum();
        let b: f64 = self.phi.iter().zip(&o.phi).map(|(x, y)| x * y).sum();
        a + b
    }

    fn axpy(&mut self, alpha: f64, o: &Direction) {
        for (x, y) in self.psi.iter_mut().zip(&o.psi) {
            *x += alpha * y;
        }
        for (x, y) in self.phi.iter_mut().zip(&o.phi) {
            *x += alpha * y;
        }
    }

    fn neg(&self) -> Direction {
        Direction {
            psi: self.psi.iter().map(|z| -z).collect(),
            phi: self.phi.iter().map(|p| -p).collect(),
        }
    }
}

fn step(x: &GLState, t: f64, d: &Direction) -> GLState {
    GLState {
        psi: x.psi.iter().zip(&d.psi).map(|(a, b)| a + t * b).collect(),
        phi: x.phi.iter().zip(&d.phi).map(|(a, b)| a + t * b).collect(),
    }
}

fn grad_norm(sys: &GLSystem, g: &Direction) -> f64 {
    let mut s = 0.0;
    for (k, w) in sys.weights.iter().enumerate() {
        s += g.psi[k].norm_sqr() / (w * w);
        if sys.free[k] {
            s += (g.phi[k] / w).powi(2);
        }
    }
    (s / sys.weights.len() as f64).sqrt()
}

fn descend(
    sys: &GLSystem,
    pre: &Preconditioner,
    mut x: GLState,
    tol: f64,
    max_iter: usize,
    label: &'static str,
) -> Result<GLResult> {
    let (mut e, gpsi, gphi) = sys.energy_gradient(&x);
    if !e.total.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut g = Direction { psi: gpsi, phi: gphi };
    let mut z = pre.apply(&g);
    let mut gz = g.dot(&z);
    let mut d = z.neg();
    let mut steepest = true;
    let mut tracked = e.total;
    let mut history = vec![tracked];
    let mut gn = grad_norm(sys, &g);
    let mut iterations = 0;

    while gn > tol && iterations < max_iter {
        iterations += 1;
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            d = z.neg();
            slope = -gz;
            steepest = true;
        }
        let accepted = match line_search(sys, &x, slope, &d, 1.0) {
            Some(found) => Some(found),
            None if !steepest => {
                d = z.neg();
                line_search(sys, &x, -gz, &d, 1.0)
            }
            None => None,
        };
        let Some((t, decrease)) = accepted else {
            return Err(Error::LineSearch {
                iteration: iterations,
                energy: e.total,
                state: Box::new(x),
            });
        };
        x = step(&x, t, &d);
        let (e_new, gpsi, gphi) = sys.energy_gradient(&x);
        if !e_new.total.is_finite() {
            return Err(Error::NonFinite);
        }
        e = e_new;
        tracked += decrease;
        history.push(tracked);
        let g_new = Direction { psi: gpsi, phi: gphi };
        let z_new = pre.apply(&g_new);
        let gz_new = g_new.dot(&z_new);
        // Polak-Ribière+, restarted when successive gradients lose orthogonality
        let mut diff = g_new.clone();
        diff.axpy(-1.0, &g);
        let mut beta = (z_new.dot(&diff) / gz).max(0.0);
        if g_new.dot(&z).abs() >= 0.5 * gz_new {
            beta = 0.0;
        }
        let mut d_new = z_new.neg();
        if beta > 0.0 {
            d_new.axpy(beta, &d);
            steepest = false;
        } else {
            steepest = true;
        }
        d = d_new;
        g = g_new;
        z = z_new;
        gz = gz_new;
        gn = grad_norm(sys, &g);
        if iterations % 100 == 0 {
            let gp: f64 = g.psi.iter().zip(&sys.weights).map(|(z, w)| z.norm_sqr() / (w * w)).sum::<f64>();
            let gf: f64 = g.phi.iter().zip(&sys.weights).map(|(z, w)| (z / w).powi(2)).sum::<f64>();
            log::trace!(
                "{label} it {iterations}: E = {:.12e}, grad = {gn:.3e} (psi {:.3e}, phi {:.3e}), sup psi {:.3e}, sup phi {:.3e}, step = {t:.3e}, beta = {beta:.3}, E parts {:?}",
                e.total, gp.sqrt(), gf.sqrt(), x.sup_psi(), x.phi.iter().fold(0.0f64, |a, b| a.max(b.abs())), e
            );
        }
    }

    let sup_psi = x.sup_psi();
    Ok(GLResult {
        classification: classify_values(sup_psi, e.total, CLASSIFY_THRESHOLD),
        sup_psi,
        energy: e,
        grad_norm: gn,
        iterations,
        converged: gn <= tol,
        history,
        state: x,
        start: label,
    })
}

/// Approximate line minimization along `d`: bracket by doubling or
/// backtracking, then one parabolic refinement. Returns the step and the
/// exact energy change, which is always strictly negative.
fn line_search(sys: &GLSystem, x: &GLState, slope: f64, d: &Direction, t0: f64) -> Option<(f64, f64)> {
    let probe = sys.line_probe(x, &d.psi, &d.phi);
    let eval = |t: f64| {
        let v = probe.delta(t);
        (t, if v.is_finite() { v } else { f64::INFINITY })
    };
    let mut best = eval(t0);
    if best.1 < 0.0 {
        // expand while the energy keeps dropping
        let mut prev = (0.0, 0.0);
        let mut next = eval(2.0 * best.0);
        let mut expansions = 0;
        while next.1 < best.1 && expansions < 40 {
            prev = best;
            best = next;
            next = eval(2.0 * best.0);
            expansions += 1;
        }
        let tp = parabola_min(prev, best, next);
        if let Some(tp) = tp.filter(|t| *t > prev.0 && *t < next.0 && (*t - best.0).abs() > 1e-3 * best.0) {
            let trial = eval(tp);
            if trial.1 < best.1 {
                best = trial;
            }
        }
        return Some(best);
    }
    // backtrack with quadratic interpolation from the slope at t = 0
    let (mut t, mut dt) = best;
    for _ in 0..60 {
        let curvature = (dt - slope * t) / (t * t);
        let tq = if curvature > 0.0 && curvature.is_finite() { -slope / (2.0 * curvature) } else { 0.1 * t };
        t = tq.clamp(0.05 * t, 0.5 * t);
        let trial = eval(t);
        dt = trial.1;
        if dt < 0.0 {
            return Some(trial);
        }
    }
    None
}

/// Abscissa of the vertex of the parabola through three points, if convex.
fn parabola_min(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let (x1, y1) = a;
    let (x2, y2) = b;
    let (x3, y3) = c;
    let num = (x2 - x1).powi(2) * (y2 - y3) - (x2 - x3).powi(2) * (y2 - y1);
    let den = (x2 - x1) * (y2 - y3) - (x2 - x3) * (y2 - y1);
    if den == 0.0 || !num.is_finite() || !den.is_finite() {
        return None;
    }
    let t = x2 - 0.5 * num / den;
    // convex iff the middle point lies below the chord
    let chord = y1 + (y3 - y1) * (x2 - x1) / (x3 - x1);
    (y2 < chord).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{link_phases, PotentialKind};
    use crate::geometry::{build_grid, measured_area, DomainSpec};
    use std::f64::consts::PI;

    #[test]
    fn zero_field_minimizer_is_uniform() {
        let g = build_grid(&DomainSpec::disc(1.0), 32).unwrap();
        let f = GaugeLinkField::zero(&g);
        let r = minimize(&g, &f, 0.0, 1.0, Init::MultiStart, TOL, MAX_ITER).unwrap();
        assert!(r.converged);
        assert_eq!(r.classification, Classification::Superconducting);
        assert!((r.energy.total + 0.5 * measured_area(&g)).abs() < 1e-9);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn full_quantum_reaches_degenerate_energy() {
        let g = build_grid(&DomainSpec::disc(1.0), 32).unwrap();
        let f = link_phases(&g, PotentialKind::AharonovBohm, 2.0 * PI).unwrap();
        let r = minimize(&g, &f, 2.0 * PI, 1.0, Init::MultiStart, TOL, MAX_ITER).unwrap();
        assert!(r.converged);
        assert!(r.energy.total <= -0.97 * 0.5 * measured_area(&g));
    }

    #[test]
    fn weak_coupling_stays_normal() {
        let g = build_grid(&DomainSpec::disc(1.0), 32).unwrap();
        let f = link_phases(&g, PotentialKind::AharonovBohm, PI).unwrap();
        let r = minimize(&g, &f, PI, 0.5, Init::MultiStart, TOL, MAX_ITER).unwrap();
        assert_eq!(r.classification, Classification::Normal);
        assert!(r.sup_psi < 1e-3);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let g = build_grid(&DomainSpec::disc(1.0), 16).unwrap();
        let f = GaugeLinkField::zero(&g);
        assert!(minimize(&g, &f, 0.0, 1.0, Init::UniformOne, 0.0, 10).is_err());
    }
}
