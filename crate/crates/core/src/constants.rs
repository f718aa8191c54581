//! Domain constants `λ^D`, `m_*` and `C_* = (2 + |Ω|^{1/2}/m_*)/λ^D`.

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{measured_area, MaskedGrid};
use crate::gl::system::{mask_neighbors, stream_metric, NONE};
use crate::spectral::eigen::ShiftedFactor;
use crate::spectral::{dirichlet_eigenpair, HermitianOperator};

pub const M_STAR_TOL: f64 = 1e-7;
pub const M_STAR_MAX_ITER: usize = 20_000;
/// Window over which the relative change of the quotient is measured.
pub const M_STAR_WINDOW: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainConstants {
    pub lambda_dirichlet: f64,
    pub m_star: f64,
    pub c_star: f64,
    pub area: f64,
    pub resolution: usize,
}

/// Stream-function quotient `Σ w (Δφ)² / (Σ w |∇⊥φ|⁴)^{1/2}` with `φ` given
/// on every node (boundary values must be zero).
pub struct StreamQuotient<'a> {
    grid: &'a MaskedGrid,
    neighbors: Vec<[usize; 4]>,
    free: Vec<bool>,
    weights: Vec<f64>,
}

impl<'a> StreamQuotient<'a> {
    pub fn new(grid: &'a MaskedGrid) -> Self {
        StreamQuotient {
            grid,
            neighbors: mask_neighbors(grid),
            free: grid.nodes().iter().map(|n| !n.is_boundary()).collect(),
            weights: grid.node_weights(),
        }
    }

    fn value(&self, phi: &[f64], k: usize, slot: usize) -> f64 {
        let m = self.neighbors[k][slot];
        if m == NONE {
            0.0
        } else {
            phi[m]
        }
    }

    /// `∇⊥φ = (−∂_y φ, ∂_x φ)` by centered differences at node `k`.
    fn induced(&self, phi: &[f64], k: usize) -> (f64, f64) {
        let s = 0.5 / self.grid.spacing();
        (
            -(self.value(phi, k, 1) - self.value(phi, k, 3)) * s,
            (self.value(phi, k, 0) - self.value(phi, k, 2)) * s,
        )
    }

    pub fn curl_sq(&self, phi: &[f64]) -> f64 {
        let inv_h2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        (0..phi.len())
            .map(|k| {
                let s: f64 = (0..4).map(|slot| self.value(phi, k, slot)).sum();
                let lap = (s - 4.0 * phi[k]) * inv_h2;
                self.weights[k] * lap * lap
            })
            .sum()
    }

    pub fn l4_pow4(&self, phi: &[f64]) -> f64 {
        (0..phi.len())
            .map(|k| {
                let (ax, ay) = self.induced(phi, k);
                let a2 = ax * ax + ay * ay;
                self.weights[k] * a2 * a2
            })
            .sum()
    }

    pub fn quotient(&self, phi: &[f64]) -> Result<f64> {
        if phi.len() != self.weights.len() {
            return Err(Error::Mismatch(format!(
                "{} stream values for {} nodes",
                phi.len(),
                self.weights.len()
            )));
        }
        if phi.iter().zip(&self.free).any(|(p, f)| !f && *p != 0.0) {
            return Err(Error::InvalidArgument("stream function must vanish on boundary nodes".into()));
        }
        let d = self.l4_pow4(phi);
        if !(d > 0.0) {
            return Err(Error::InvalidArgument("stream function induces no field".into()));
        }
        Ok(self.curl_sq(phi) / d.sqrt())
    }

    /// Gradient of `Σ w |a|⁴` with respect to `φ` on every node (zero on
    /// constrained nodes).
    fn l4_gradient(&self, phi: &[f64]) -> Vec<f64> {
        let s = 0.5 / self.grid.spacing();
        let mut g = vec![0.0; phi.len()];
        for k in 0..phi.len() {
            let (ax, ay) = self.induced(phi, k);
            let c = 4.0 * self.weights[k] * (ax * ax + ay * ay);
            let nb = self.neighbors[k];
            let mut add = |slot: usize, v: f64| {
                let m = nb[slot];
                if m != NONE {
                    g[m] += v;
                }
            };
            add(1, -c * ax * s);
            add(3, c * ax * s);
            add(0, c * ay * s);
            add(2, -c * ay * s);
        }
        for (v, f) in g.iter_mut().zip(&self.free) {
            if !f {
                *v = 0.0;
            }
        }
        g
    }
}

/// Infimum of the stream-function quotient, by the normalized iteration
/// `φ ← M⁻¹∇D(φ) / ‖·‖_M` with `M` the curl metric and `D = Σ w|a|⁴`.
/// Each step increases `D` on the unit `M`-sphere, so the quotient
/// `1/√D` decreases monotonically.
pub fn m_star(grid: &MaskedGrid, tol: f64, max_iter: usize) -> Result<f64> {
    m_star_with_state(grid, tol, max_iter).map(|(q, _)| q)
}

/// As [`m_star`], also returning the minimizing stream function.
pub fn m_star_with_state(grid: &MaskedGrid, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let q = StreamQuotient::new(grid);
    let free_idx: Vec<usize> = (0..grid.node_count()).filter(|&k| q.free[k]).collect();
    if free_idx.is_empty() {
        return Err(Error::ResolutionInsufficient("no interior nodes for the stream function".into()));
    }
    let metric = stream_metric(grid, &q.neighbors, &q.free, &q.weights, 0.0)?;
    let factor = ShiftedFactor::new(&metric, 0.0)?;

    let start = dirichlet_eigenpair(grid)?;
    let mut phi: Vec<f64> = start
        .vector
        .iter()
        .zip(&q.free)
        .map(|(z, &f)| if f { z.re } else { 0.0 })
        .collect();
    normalize(&mut phi, &free_idx, &metric);
    let mut history = vec![q.quotient(&phi)?];
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let grad = q.l4_gradient(&phi);
        let mut b = Mat::<Complex64>::from_fn(free_idx.len(), 1, |i, _| Complex64::new(grad[free_idx[i]], 0.0));
        factor.solve_in_place(&mut b);
        for (i, &k) in free_idx.iter().enumerate() {
            phi[k] = b[(i, 0)].re;
        }
        normalize(&mut phi, &free_idx, &metric);
        history.push(q.quotient(&phi)?);
        if it >= M_STAR_WINDOW {
            let (old, new) = (history[it - M_STAR_WINDOW], history[it]);
            change = (old - new).abs() / new;
            if change < tol {
                return Ok((new, phi));
            }
        }
    }
    Err(Error::QuotientNoConvergence {
        iterations: max_iter,
        quotient: *history.last().unwrap(),
        change,
    })
}

fn normalize(phi: &mut [f64], free_idx: &[usize], metric: &HermitianOperator) {
    let x: Vec<Complex64> = free_idx.iter().map(|&k| Complex64::new(phi[k], 0.0)).collect();
    let mx = metric.apply(&x);
    let norm = x.iter().zip(&mx).map(|(a, b)| (a.conj() * b).re).sum::<f64>().sqrt();
    for &k in free_idx {
        phi[k] /= norm;
    }
}

pub fn c_star(grid: &MaskedGrid) -> Result<DomainConstants> {
    let lambda_dirichlet = dirichlet_eigenpair(grid)?.value;
    let m = m_star(grid, M_STAR_TOL, M_STAR_MAX_ITER)?;
    let area = measured_area(grid);
    Ok(DomainConstants {
        lambda_dirichlet,
        m_star: m,
        c_star: (2.0 + area.sqrt() / m) / lambda_dirichlet,
        area,
        resolution: grid.n(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};

    fn bump(grid: &MaskedGrid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|n| if n.is_boundary() { 0.0 } else { f(n.x, n.y) })
            .collect()
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let g = build_grid(&DomainSpec::disc(1.0), 40).unwrap();
        let q = StreamQuotient::new(&g);
        let phi = bump(&g, |x, y| (1.0 - x * x - y * y) * (1.0 + 0.3 * x));
        let scaled: Vec<f64> = phi.iter().map(|p| -3.7 * p).collect();
        let (a, b) = (q.quotient(&phi).unwrap(), q.quotient(&scaled).unwrap());
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn minimum_bounds_trial_quotients() {
        let g = build_grid(&DomainSpec::disc(1.0), 40).unwrap();
        let m = m_star(&g, 1e-7, 20_000).unwrap();
        let q = StreamQuotient::new(&g);
        for trial in [
            bump(&g, |x, y| 1.0 - x * x - y * y),
            bump(&g, |x, y| (1.0 - x * x - y * y).powi(2)),
            bump(&g, |x, y| (1.0 - x * x - y * y) * (x + 0.5)),
        ] {
            assert!(q.quotient(&trial).unwrap() >= m * (1.0 - 1e-9));
        }
        assert!(m > 0.0);
    }

    #[test]
    fn l4_gradient_matches_differences() {
        let g = build_grid(&DomainSpec::disc(1.0), 20).unwrap();
        let q = StreamQuotient::new(&g);
        let phi = bump(&g, |x, y| (2.0 * x + y).sin() + x * y);
        let grad = q.l4_gradient(&phi);
        let k = g.nodes().iter().position(|n| !n.is_boundary() && n.x > 0.2).unwrap();
        let step = 1e-6;
        let (mut p, mut m) = (phi.clone(), phi.clone());
        p[k] += step;
        m[k] -= step;
        let fd = (q.l4_pow4(&p) - q.l4_pow4(&m)) / (2.0 * step);
        assert!((fd - grad[k]).abs() < 1e-6 * fd.abs().max(1e-3));
    }

    #[test]
    fn c_star_identity() {
        let g = build_grid(&DomainSpec::disc(1.0), 32).unwrap();
        let c = c_star(&g).unwrap();
        assert!((c.c_star * c.lambda_dirichlet - 2.0 - c.area.sqrt() / c.m_star).abs() < 1e-12);
        assert!(c.c_star > 2.0 / c.lambda_dirichlet);
    }
}
