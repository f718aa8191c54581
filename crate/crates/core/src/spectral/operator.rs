use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::GaugeLinkField;
use crate::geometry::MaskedGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Links leaving the mask are dropped.
    NeumannNatural,
    /// Zero at the outer wall, natural condition at the hole.
    DirichletOuter,
    /// Zero at every wall.
    DirichletAll,
}

/// Sparse Hermitian matrix stored as a real diagonal plus CSR off-diagonal
/// entries (both triangles).
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    dim: usize,
    spacing: f64,
    bc: BoundaryCondition,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl HermitianOperator {
    /// Builds the operator from its diagonal and strictly upper entries
    /// `(row, col, value)` with `row < col`; the lower triangle is mirrored.
    pub fn from_upper(
        spacing: f64,
        bc: BoundaryCondition,
        diag: Vec<f64>,
        upper: &[(usize, usize, Complex64)],
    ) -> Result<Self> {
        let dim = diag.len();
        let mut counts = vec![0usize; dim];
        for &(r, c, _) in upper {
            if r >= c || c >= dim {
                return Err(Error::InvalidArgument(format!(
                    "off-diagonal entry ({r}, {c}) is not strictly upper in dimension {dim}"
                )));
            }
            counts[r] += 1;
            counts[c] += 1;
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for i in 0..dim {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let mut fill = row_ptr.clone();
        let mut cols = vec![0usize; row_ptr[dim]];
        let mut vals = vec![Complex64::new(0.0, 0.0); row_ptr[dim]];
        for &(r, c, v) in upper {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
            cols[fill[c]] = r;
            vals[fill[c]] = v.conj();
            fill[c] += 1;
        }
        Ok(HermitianOperator {
            dim,
            spacing,
            bc,
            diag,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.dim {
            let mut acc = x[i] * self.diag[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// `xᴴ A x / xᴴ x`.
    pub fn rayleigh_quotient(&self, x: &[Complex64]) -> f64 {
        let ax = self.apply(x);
        let num: f64 = x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum();
        let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        num / den
    }

    /// Lower-triangle entries of `A + shift·I`, including the diagonal.
    pub(crate) fn shifted_lower_triplets(&self, shift: f64) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::with_capacity(self.dim + self.vals.len() / 2);
        for i in 0..self.dim {
            out.push((i, i, Complex64::new(self.diag[i] + shift, 0.0)));
            for (c, v) in self.row(i) {
                if c < i {
                    out.push((i, c, v));
                }
            }
        }
        out
    }

    /// Largest Gershgorin row bound, an upper bound on the spectrum.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.diag[i] + self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Smallest wall distance, in spacings, used by the Dirichlet variants.
pub const MIN_WALL_FRACTION: f64 = 1e-2;

/// Gauge-covariant five-point magnetic Laplacian on `grid`.
///
/// The quadratic form is `Σ_links |ψ_head − e^{iθ} ψ_tail|² / spacing²`. The
/// Dirichlet variants add `|ψ|² / (δ spacing²)` per cut link, where the wall
/// sits at the fraction `δ` of the link (a ghost value extrapolated linearly
/// through zero at the wall keeps the matrix Hermitian).
pub fn assemble_magnetic_laplacian(
    grid: &MaskedGrid,
    field: &GaugeLinkField,
    bc: BoundaryCondition,
) -> Result<HermitianOperator> {
    field.check_grid(grid)?;
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let degrees = grid.degrees();
    let diag = grid
        .nodes()
        .iter()
        .zip(degrees)
        .enumerate()
        .map(|(k, (node, deg))| {
            let walls: f64 = match bc {
                BoundaryCondition::NeumannNatural => 0.0,
                _ if !node.is_boundary() => 0.0,
                _ => grid
                    .wall_crossings(k)
                    .into_iter()
                    .filter(|(hole, _)| !hole || bc == BoundaryCondition::DirichletAll)
                    .map(|(_, d)| 1.0 / d.max(MIN_WALL_FRACTION))
                    .sum(),
            };
            (deg as f64 + walls) * inv_h2
        })
        .collect();
    let upper: Vec<_> = grid
        .links()
        .iter()
        .zip(field.phases())
        .map(|(l, &theta)| {
            // tail < head always holds for forward links
            (l.tail, l.head, -Complex64::from_polar(inv_h2, -theta))
        })
        .collect();
    HermitianOperator::from_upper(grid.spacing(), bc, diag, &upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{link_phases, PotentialKind};
    use crate::geometry::{build_grid, DomainSpec};

    fn grid() -> MaskedGrid {
        build_grid(&DomainSpec::disc(1.0), 24).unwrap()
    }

    #[test]
    fn hermitian_with_unit_offdiagonals() {
        let g = grid();
        let f = link_phases(&g, PotentialKind::AharonovBohm, 1.1).unwrap();
        let a = assemble_magnetic_laplacian(&g, &f, BoundaryCondition::NeumannNatural).unwrap();
        let h2 = g.spacing() * g.spacing();
        for i in 0..a.dim() {
            for (j, v) in a.row(i) {
                assert!((v.norm() * h2 - 1.0).abs() < 1e-12);
                let back = a.row(j).find(|(c, _)| *c == i).unwrap().1;
                assert!((back - v.conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn quadratic_form_matches_link_sum() {
        let g = grid();
        let f = link_phases(&g, PotentialKind::Step { epsilon: 0.3 }, 2.0).unwrap();
        let a = assemble_magnetic_laplacian(&g, &f, BoundaryCondition::NeumannNatural).unwrap();
        let x: Vec<Complex64> = (0..a.dim())
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let ax = a.apply(&x);
        let form: f64 = x.iter().zip(&ax).map(|(p, q)| (p.conj() * q).re).sum();
        let links: f64 = g
            .links()
            .iter()
            .zip(f.phases())
            .map(|(l, &t)| (x[l.head] - Complex64::from_polar(1.0, t) * x[l.tail]).norm_sqr())
            .sum();
        let h2 = g.spacing() * g.spacing();
        assert!((form * h2 - links).abs() < 1e-9 * links);
    }

    #[test]
    fn mismatched_field_is_rejected() {
        let g = grid();
        let other = build_grid(&DomainSpec::disc(1.0), 26).unwrap();
        let f = link_phases(&other, PotentialKind::PointFlux, 1.0).unwrap();
        assert!(matches!(
            assemble_magnetic_laplacian(&g, &f, BoundaryCondition::NeumannNatural),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn dirichlet_diagonal_counts_walls() {
        let g = grid();
        let f = GaugeLinkField::zero(&g);
        let a = assemble_magnetic_laplacian(&g, &f, BoundaryCondition::DirichletAll).unwrap();
        let h2 = g.spacing() * g.spacing();
        for (node, d) in g.nodes().iter().zip(a.diagonal()) {
            if node.is_boundary() {
                assert!(d * h2 > 4.0);
            } else {
                assert!((d * h2 - 4.0).abs() < 1e-12);
            }
        }
    }
}
