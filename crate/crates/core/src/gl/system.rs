use num_complex::Complex64;

use super::{EnergyBreakdown, GLState};
use crate::error::{Error, Result};
use crate::fields::GaugeLinkField;
use crate::geometry::{Direction, MaskedGrid};
use crate::spectral::{BoundaryCondition, HermitianOperator};

pub(crate) const NONE: usize = usize::MAX;

/// Grid-dependent data for evaluating the functional and its gradient.
pub(crate) struct GLSystem<'a> {
    pub(crate) grid: &'a MaskedGrid,
    theta: &'a [f64],
    pub(crate) h: f64,
    pub(crate) kappa_sq: f64,
    pub(crate) weights: Vec<f64>,
    /// Nodes where `φ` is a free variable (interior nodes).
    pub(crate) free: Vec<bool>,
    /// Lattice neighbors in the mask, `[+x, +y, −x, −y]`.
    neighbors: Vec<[usize; 4]>,
    /// `a`-circulation of each link as `Σ coef · φ_node` over free nodes.
    stencil: Vec<[(usize, f64); 4]>,
    inv_h2: f64,
}

impl<'a> GLSystem<'a> {
    pub(crate) fn new(grid: &'a MaskedGrid, field: &'a GaugeLinkField, h: f64, kappa: f64) -> Result<Self> {
        field.check_grid(grid)?;
        if (field.flux() - h).abs() > 1e-12 * h.abs().max(1.0) && field.phases().iter().any(|t| *t != 0.0) {
            return Err(Error::Mismatch(format!(
                "field was built for h = {}, energy requested at h = {h}",
                field.flux()
            )));
        }
        if !kappa.is_finite() || !h.is_finite() {
            return Err(Error::InvalidArgument("h and kappa must be finite".into()));
        }
        let nodes = grid.nodes();
        let free: Vec<bool> = nodes.iter().map(|n| !n.is_boundary()).collect();
        let at = |i: usize, j: usize, di: isize, dj: isize| {
            grid.node_at(i as isize + di, j as isize + dj).unwrap_or(NONE)
        };
        let neighbors = mask_neighbors(grid);
        let stencil = grid
            .links()
            .iter()
            .map(|l| {
                let t = nodes[l.tail];
                let raw = match l.dir {
                    // a_x dx = −∂_y φ dx at the link midpoint
                    Direction::X => [
                        (at(t.i, t.j, 0, 1), -0.25),
                        (at(t.i, t.j, 1, 1), -0.25),
                        (at(t.i, t.j, 0, -1), 0.25),
                        (at(t.i, t.j, 1, -1), 0.25),
                    ],
                    // a_y dx = ∂_x φ dx
                    Direction::Y => [
                        (at(t.i, t.j, 1, 0), 0.25),
                        (at(t.i, t.j, 1, 1), 0.25),
                        (at(t.i, t.j, -1, 0), -0.25),
                        (at(t.i, t.j, -1, 1), -0.25),
                    ],
                };
                raw.map(|(k, c)| if k != NONE && free[k] { (k, c) } else { (NONE, 0.0) })
            })
            .collect();
        Ok(GLSystem {
            grid,
            theta: field.phases(),
            h,
            kappa_sq: kappa * kappa,
            weights: grid.node_weights(),
            free,
            neighbors,
            stencil,
            inv_h2: 1.0 / (grid.spacing() * grid.spacing()),
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.weights.len()
    }

    fn link_phase(&self, e: usize, phi: &[f64]) -> f64 {
        let mut c = 0.0;
        for &(k, coef) in &self.stencil[e] {
            if k != NONE {
                c += coef * phi[k];
            }
        }
        self.theta[e] + self.h * c
    }

    /// Five-point Laplacian of `φ` (zero-extended) at every node.
    pub(crate) fn laplacian(&self, phi: &[f64]) -> Vec<f64> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(k, nb)| {
                let s: f64 = nb.iter().filter(|&&m| m != NONE).map(|&m| phi[m]).sum();
                (s - 4.0 * phi[k]) * self.inv_h2
            })
            .collect()
    }

    pub(crate) fn energy(&self, s: &GLState) -> EnergyBreakdown {
        let links = self.grid.links();
        let mut kinetic = 0.0;
        for (e, l) in links.iter().enumerate() {
            let u = Complex64::from_polar(1.0, self.link_phase(e, &s.phi));
            kinetic += (s.psi[l.head] - u * s.psi[l.tail]).norm_sqr();
        }
        let condensation = self.condensation(&s.psi);
        let field = if self.h == 0.0 {
            0.0
        } else {
            let lap = self.laplacian(&s.phi);
            self.h * self.h * lap.iter().zip(&self.weights).map(|(d, w)| w * d * d).sum::<f64>()
        };
        EnergyBreakdown {
            kinetic,
            condensation,
            field,
            total: kinetic + condensation + field,
        }
    }

    fn condensation(&self, psi: &[Complex64]) -> f64 {
        psi.iter()
            .zip(&self.weights)
            .map(|(z, w)| {
                let r2 = z.norm_sqr();
                w * self.kappa_sq * (0.5 * r2 * r2 - r2)
            })
            .sum()
    }

    pub(crate) fn energy_gradient(&self, s: &GLState) -> (EnergyBreakdown, Vec<Complex64>, Vec<f64>) {
        let n = self.dim();
        let links = self.grid.links();
        let mut dpsi = vec![Complex64::new(0.0, 0.0); n];
        let mut dphi = vec![0.0; n];
        let mut kinetic = 0.0;
        for (e, l) in links.iter().enumerate() {
            let u = Complex64::from_polar(1.0, self.link_phase(e, &s.phi));
            let (a, b) = (s.psi[l.tail], s.psi[l.head]);
            let ua = u * a;
            let d = b - ua;
            kinetic += d.norm_sqr();
            dpsi[l.head] += 2.0 * d;
            dpsi[l.tail] -= 2.0 * u.conj() * d;
            if self.h != 0.0 {
                let dtheta = 2.0 * (b.conj() * ua).im * self.h;
                for &(k, coef) in &self.stencil[e] {
                    if k != NONE {
                        dphi[k] += coef * dtheta;
                    }
                }
            }
        }
        for ((g, z), w) in dpsi.iter_mut().zip(&s.psi).zip(&self.weights) {
            *g += 2.0 * w * self.kappa_sq * (z.norm_sqr() - 1.0) * z;
        }
        let mut field = 0.0;
        if self.h != 0.0 {
            let lap = self.laplacian(&s.phi);
            field = self.h * self.h * lap.iter().zip(&self.weights).map(|(d, w)| w * d * d).sum::<f64>();
            let weighted: Vec<f64> = lap.iter().zip(&self.weights).map(|(d, w)| w * d).collect();
            let back = self.laplacian(&weighted);
            for k in 0..n {
                if self.free[k] {
                    dphi[k] += 2.0 * self.h * self.h * back[k];
                } else {
                    dphi[k] = 0.0;
                }
            }
        }
        let condensation = self.condensation(&s.psi);
        (
            EnergyBreakdown {
                kinetic,
                condensation,
                field,
                total: kinetic + condensation + field,
            },
            dpsi,
            dphi,
        )
    }

    /// Precomputes the energy along the line `x + t·(dψ, dφ)` so that
    /// `E(x + t d) − E(x)` can be evaluated without cancellation.
    pub(crate) fn line_probe(&self, x: &GLState, dpsi: &[Complex64], dphi: &[f64]) -> LineProbe<'_> {
        let links = self
            .grid
            .links()
            .iter()
            .enumerate()
            .map(|(e, l)| {
                let u = Complex64::from_polar(1.0, self.link_phase(e, &x.phi));
                let mut c = 0.0;
                for &(k, coef) in &self.stencil[e] {
                    if k != NONE {
                        c += coef * dphi[k];
                    }
                }
                let a = x.psi[l.tail];
                ProbeLink {
                    d0: x.psi[l.head] - u * a,
                    u,
                    a,
                    da: dpsi[l.tail],
                    db: dpsi[l.head],
                    dtheta: self.h * c,
                }
            })
            .collect();
        let nodes = x
            .psi
            .iter()
            .zip(dpsi)
            .zip(&self.weights)
            .map(|((z, dz), &w)| (z.norm_sqr(), (z.conj() * dz).re, dz.norm_sqr(), w))
            .collect();
        let lap = if self.h == 0.0 {
            Vec::new()
        } else {
            let l0 = self.laplacian(&x.phi);
            let l1 = self.laplacian(dphi);
            l0.into_iter().zip(l1).zip(&self.weights).map(|((a, b), &w)| (a, b, w)).collect()
        };
        LineProbe { sys: self, links, nodes, lap }
    }

    /// `Σ_links |ψ_b − e^{iθ}ψ_a|² + shift · Σ w |ψ|²` as an operator on `ψ`,
    /// using only the applied phases.
    pub(crate) fn psi_metric(&self, shift: f64) -> Result<HermitianOperator> {
        let degrees = self.grid.degrees();
        let diag = degrees
            .iter()
            .zip(&self.weights)
            .map(|(&d, w)| d as f64 + shift * w)
            .collect();
        let upper: Vec<_> = self
            .grid
            .links()
            .iter()
            .zip(self.theta)
            .map(|(l, &t)| (l.tail, l.head, -Complex64::from_polar(1.0, -t)))
            .collect();
        HermitianOperator::from_upper(self.grid.spacing(), BoundaryCondition::NeumannNatural, diag, &upper)
    }

    /// Indices of the free `φ` nodes, in node order.
    pub(crate) fn free_nodes(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.free[k]).collect()
    }

    /// `Σ w (Δφ)² + gradient_weight · Σ_links (φ_b − φ_a)²` restricted to the
    /// free nodes, indexed by position in [`Self::free_nodes`].
    pub(crate) fn stream_metric(&self, gradient_weight: f64) -> Result<HermitianOperator> {
        stream_metric(self.grid, &self.neighbors, &self.free, &self.weights, gradient_weight)
    }
}

struct ProbeLink {
    d0: Complex64,
    u: Complex64,
    a: Complex64,
    da: Complex64,
    db: Complex64,
    dtheta: f64,
}

pub(crate) struct LineProbe<'s> {
    sys: &'s GLSystem<'s>,
    links: Vec<ProbeLink>,
    /// `(|ψ|², Re ψ̄ dψ, |dψ|², w)` per node.
    nodes: Vec<(f64, f64, f64, f64)>,
    /// `(Δφ, Δdφ, w)` per node; empty when `h = 0`.
    lap: Vec<(f64, f64, f64)>,
}

impl LineProbe<'_> {
    /// `E(x + t d) − E(x)`.
    pub(crate) fn delta(&self, t: f64) -> f64 {
        let mut kinetic = 0.0;
        for l in &self.links {
            let delta = t * l.dtheta;
            let half = (0.5 * delta).sin();
            // e^{iδ} − 1 without cancellation
            let rot_m1 = Complex64::new(-2.0 * half * half, delta.sin());
            let rot = rot_m1 + 1.0;
            let dd = t * l.db - l.u * rot * (t * l.da) - l.u * rot_m1 * l.a;
            kinetic += 2.0 * (l.d0.conj() * dd).re + dd.norm_sqr();
        }
        let mut condensation = 0.0;
        for &(r2, re, dd, w) in &self.nodes {
            let dr2 = 2.0 * t * re + t * t * dd;
            condensation += w * dr2 * (r2 + 0.5 * dr2 - 1.0);
        }
        let mut field = 0.0;
        for &(l0, l1, w) in &self.lap {
            field += w * t * l1 * (2.0 * l0 + t * l1);
        }
        kinetic + self.sys.kappa_sq * condensation + self.sys.h * self.sys.h * field
    }
}

pub(crate) fn stream_metric(
    grid: &MaskedGrid,
    neighbors: &[[usize; 4]],
    free: &[bool],
    weights: &[f64],
    gradient_weight: f64,
) -> Result<HermitianOperator> {
    let n = weights.len();
    let mut index = vec![NONE; n];
    let mut count = 0;
    for k in 0..n {
        if free[k] {
            index[k] = count;
            count += 1;
        }
    }
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    // L column k: −4/h² at k, 1/h² at mask neighbors
    let column = |k: usize| {
        let mut c = vec![(k, -4.0 * inv_h2)];
        for &m in &neighbors[k] {
            if m != NONE {
                c.push((m, inv_h2));
            }
        }
        c
    };
    let mut diag = vec![0.0; count];
    let mut upper = std::collections::BTreeMap::<(usize, usize), f64>::new();
    for (m, &w) in weights.iter().enumerate() {
        // row m of L touches columns in column(m) (L symmetric)
        let touching: Vec<(usize, f64)> = column(m).into_iter().filter(|&(k, _)| free[k]).collect();
        for &(k, lk) in &touching {
            for &(l, ll) in &touching {
                let (a, b) = (index[k], index[l]);
                let v = w * lk * ll;
                if a == b {
                    diag[a] += v;
                } else if a < b {
                    *upper.entry((a, b)).or_insert(0.0) += v;
                }
            }
        }
    }
    if gradient_weight != 0.0 {
        for l in grid.links() {
            let (a, b) = (l.tail, l.head);
            for (p, q) in [(a, b), (b, a)] {
                if free[p] {
                    diag[index[p]] += gradient_weight;
                    if free[q] && index[p] < index[q] {
                        *upper.entry((index[p], index[q])).or_insert(0.0) -= gradient_weight;
                    }
                }
            }
        }
    }
    let upper: Vec<_> = upper
        .into_iter()
        .map(|((a, b), v)| (a, b, Complex64::new(v, 0.0)))
        .collect();
    HermitianOperator::from_upper(grid.spacing(), BoundaryCondition::DirichletAll, diag, &upper)
}

pub(crate) fn mask_neighbors(grid: &MaskedGrid) -> Vec<[usize; 4]> {
    grid.nodes()
        .iter()
        .map(|n| {
            let at = |di: isize, dj: isize| grid.node_at(n.i as isize + di, n.j as isize + dj).unwrap_or(NONE);
            [at(1, 0), at(0, 1), at(-1, 0), at(0, -1)]
        })
        .collect()
}
