//! Lowest eigenpair of a sparse Hermitian operator by shift-and-invert block
//! subspace iteration with Rayleigh-Ritz projection.
//!
//! `A + σI` is factored once by sparse Cholesky; every sweep solves against
//! the block, re-orthonormalizes it and diagonalizes the projected matrix.
//! The block starts from the all-ones vector plus fixed pseudo-random columns,
//! so iteration counts and results are reproducible.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64;

use super::operator::HermitianOperator;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigResult {
    pub value: f64,
    /// Normalized so that `Σ |v|² spacing² = 1`; the largest entry is real positive.
    pub vector: Vec<Complex64>,
    /// `‖A v − λ v‖` in the same weighted norm.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub block: usize,
    pub shift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: 500,
            block: 6,
            shift: 0.1,
        }
    }
}

pub fn lowest_eigenpair(op: &HermitianOperator, tol: f64) -> Result<EigResult> {
    lowest_eigenpair_with(
        op,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

/// Sparse `LLᴴ` factorization of `A + shift·I`.
pub(crate) struct ShiftedFactor {
    llt: faer::sparse::linalg::solvers::Llt<usize, Complex64>,
    dim: usize,
}

impl ShiftedFactor {
    pub(crate) fn new(op: &HermitianOperator, shift: f64) -> Result<Self> {
        let triplets: Vec<_> = op
            .shifted_lower_triplets(shift)
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let m = SparseColMat::<usize, Complex64>::try_new_from_triplets(op.dim(), op.dim(), &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(ShiftedFactor { llt, dim: op.dim() })
    }

    pub(crate) fn solve_in_place(&self, block: &mut Mat<Complex64>) {
        debug_assert_eq!(block.nrows(), self.dim);
        self.llt.solve_in_place(block.as_mut());
    }
}

pub fn lowest_eigenpair_with(op: &HermitianOperator, opts: &SolverOptions) -> Result<EigResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let p = opts.block.clamp(1, n);

    let mut shift = opts.shift;
    let factor = loop {
        match ShiftedFactor::new(op, shift) {
            Ok(f) => break f,
            Err(e) if shift > 1e3 * opts.shift => return Err(e),
            Err(_) => shift *= 10.0,
        }
    };

    let mut x = seed_block(n, p);
    orthonormalize(&mut x);
    let mut best = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        factor.solve_in_place(&mut x);
        orthonormalize(&mut x);
        let ax = apply_block(op, &x);
        // projected matrix Xᴴ A X
        let proj = Mat::<Complex64>::from_fn(p, p, |i, j| {
            (0..n).map(|k| x[(k, i)].conj() * ax[(k, j)]).sum::<Complex64>()
        });
        let proj = Mat::<Complex64>::from_fn(p, p, |i, j| 0.5 * (proj[(i, j)] + proj[(j, i)].conj()));
        let evd = proj
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Factorization(format!("projected eigenproblem: {e:?}")))?;
        let u = evd.U();
        let value = evd.S().column_vector()[0].re;
        x = &x * u;
        let ax = &ax * u;

        let residual = (0..n)
            .map(|k| (ax[(k, 0)] - x[(k, 0)] * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        best = best.min(residual);
        if residual <= opts.tol {
            let vector = normalize_vector((0..n).map(|k| x[(k, 0)]).collect(), op.spacing());
            return Ok(EigResult {
                value,
                vector,
                residual,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        best_residual: best,
    })
}

fn seed_block(n: usize, p: usize) -> Mat<Complex64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = move || {
        // splitmix64
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut x = Mat::<Complex64>::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            x[(i, j)] = if j == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(next(), next())
            };
        }
    }
    x
}

fn apply_block(op: &HermitianOperator, x: &Mat<Complex64>) -> Mat<Complex64> {
    let n = op.dim();
    let mut out = Mat::<Complex64>::zeros(n, x.ncols());
    let mut buf_in = vec![Complex64::new(0.0, 0.0); n];
    let mut buf_out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..x.ncols() {
        for i in 0..n {
            buf_in[i] = x[(i, j)];
        }
        op.apply_into(&buf_in, &mut buf_out);
        for i in 0..n {
            out[(i, j)] = buf_out[i];
        }
    }
    out
}

/// Modified Gram-Schmidt, applied twice; dependent columns are replaced by
/// unit coordinate vectors before re-orthogonalization.
fn orthonormalize(x: &mut Mat<Complex64>) {
    let (n, p) = (x.nrows(), x.ncols());
    for _ in 0..2 {
        for j in 0..p {
            for k in 0..j {
                let dot: Complex64 = (0..n).map(|i| x[(i, k)].conj() * x[(i, j)]).sum();
                for i in 0..n {
                    let v = x[(i, k)];
                    x[(i, j)] -= dot * v;
                }
            }
            let mut norm = (0..n).map(|i| x[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-300 || !norm.is_finite() {
                for i in 0..n {
                    x[(i, j)] = Complex64::new(if i == j % n { 1.0 } else { 0.0 }, 0.0);
                }
                for k in 0..j {
                    let dot: Complex64 = (0..n).map(|i| x[(i, k)].conj() * x[(i, j)]).sum();
                    for i in 0..n {
                        let v = x[(i, k)];
                        x[(i, j)] -= dot * v;
                    }
                }
                norm = (0..n).map(|i| x[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            }
            for i in 0..n {
                x[(i, j)] /= norm;
            }
        }
    }
}

/// Scales to unit `spacing²`-weighted norm and rotates the largest entry to
/// the positive real axis.
pub fn normalize_vector(mut v: Vec<Complex64>, spacing: f64) -> Vec<Complex64> {
    let norm = (v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt() * spacing;
    let (mut imax, mut vmax) = (0, -1.0);
    for (i, z) in v.iter().enumerate() {
        if z.norm() > vmax {
            vmax = z.norm();
            imax = i;
        }
    }
    let phase = if vmax > 0.0 {
        v[imax].conj() / vmax
    } else {
        Complex64::new(1.0, 0.0)
    };
    for z in &mut v {
        *z = *z * phase / norm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::operator::BoundaryCondition;

    fn path_laplacian(n: usize) -> HermitianOperator {
        let diag = (0..n).map(|i| if i == 0 || i == n - 1 { 1.0 } else { 2.0 }).collect();
        let upper: Vec<_> = (0..n - 1).map(|i| (i, i + 1, Complex64::new(-1.0, 0.0))).collect();
        HermitianOperator::from_upper(1.0, BoundaryCondition::NeumannNatural, diag, &upper).unwrap()
    }

    #[test]
    fn neumann_path_has_zero_mode() {
        let r = lowest_eigenpair(&path_laplacian(50), 1e-10).unwrap();
        assert!(r.value.abs() < 1e-10);
        let first = r.vector[0];
        assert!(r.vector.iter().all(|z| (z - first).norm() < 1e-8));
        assert!(first.im.abs() < 1e-12 && first.re > 0.0);
    }

    #[test]
    fn dirichlet_path_closed_form() {
        // tridiag(-1, 2, -1) of size n: 2 - 2 cos(π/(n+1))
        let n = 40;
        let diag = vec![2.0; n];
        let upper: Vec<_> = (0..n - 1).map(|i| (i, i + 1, Complex64::new(-1.0, 0.0))).collect();
        let op = HermitianOperator::from_upper(1.0, BoundaryCondition::DirichletAll, diag, &upper).unwrap();
        let r = lowest_eigenpair(&op, 1e-11).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.residual <= 1e-11);
    }

    #[test]
    fn normalization_uses_spacing() {
        let v = normalize_vector(vec![Complex64::new(0.0, 2.0); 4], 0.5);
        let norm: f64 = v.iter().map(|z| z.norm_sqr() * 0.25).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(lowest_eigenpair(&path_laplacian(5), 0.0).is_err());
    }

    #[test]
    fn tiny_operator_smaller_than_block() {
        let r = lowest_eigenpair(&path_laplacian(2), 1e-12).unwrap();
        assert!(r.value.abs() < 1e-12);
    }
}
