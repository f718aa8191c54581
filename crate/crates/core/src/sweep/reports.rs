//! Scans built on top of sweeps: non-monotonicity witnesses, the
//! normal/superconducting oscillation in `h = πn`, and the convergence of
//! step energies to the Aharonov-Bohm energy.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::run::{gl_point, push_constants};
use super::table::{SweepRecord, SweepTable};
use crate::constants::{c_star, DomainConstants};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, measured_area, DomainSpec, MaskedGrid};
use crate::gl::Classification;
use crate::spectral::{lambda_ab_on_grid, AbMethod, STEP_MIN_CELLS};

pub const NONMONOTONE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Lambda,
    EnergyTotal,
}

impl Column {
    fn get(&self, r: &SweepRecord) -> Option<f64> {
        match self {
            Column::Lambda => r.lambda,
            Column::EnergyTotal => r.energy.map(|e| e.total),
        }
    }
}

/// All pairs `(h_i, h_j)` with `h_i < h_j` and `v_j < v_i − tol`, taken within
/// groups of equal `(ε, κ, resolution)`. Rows without a value are skipped.
pub fn detect_nonmonotone(table: &[SweepRecord], column: Column) -> Vec<(f64, f64)> {
    let mut rows: Vec<(&SweepRecord, f64)> =
        table.iter().filter_map(|r| column.get(r).map(|v| (r, v))).collect();
    rows.sort_by(|a, b| a.0.key_cmp(b.0));
    let same_group = |a: &SweepRecord, b: &SweepRecord| {
        a.epsilon == b.epsilon && a.kappa == b.kappa && a.resolution == b.resolution
    };
    let mut pairs = Vec::new();
    for (i, (ri, vi)) in rows.iter().enumerate() {
        for (rj, vj) in &rows[i + 1..] {
            if same_group(ri, rj) && ri.h < rj.h && *vj < vi - NONMONOTONE_TOL {
                pairs.push((ri.h, rj.h));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();
    pairs
}

#[derive(Clone, Debug)]
pub struct OscillationRow {
    pub n: u32,
    pub h: f64,
    pub expected: Classification,
    pub classification: Option<Classification>,
    pub sup_psi: Option<f64>,
    pub energy: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl OscillationRow {
    pub fn matches(&self) -> bool {
        self.classification == Some(self.expected)
    }
}

#[derive(Clone, Debug)]
pub struct OscillationReport {
    pub kappa: f64,
    pub epsilon: f64,
    /// `λ_AB(π) / (1 + C_*)` on the same grid.
    pub bound: f64,
    pub lambda_ab_pi: f64,
    pub constants: DomainConstants,
    pub rows: Vec<OscillationRow>,
}

impl OscillationReport {
    pub fn correct(&self) -> usize {
        self.rows.iter().filter(|r| r.matches()).count()
    }

    pub fn all_correct(&self) -> bool {
        self.correct() == self.rows.len()
    }

    pub fn records(&self, resolution: usize) -> Vec<SweepRecord> {
        self.rows
            .iter()
            .map(|r| {
                let mut rec = SweepRecord::new(r.h, self.epsilon, Some(self.kappa), resolution);
                rec.classification = r.classification;
                rec.sup_psi = r.sup_psi;
                rec.iterations = r.iterations;
                rec.error = r.error.clone();
                rec
            })
            .collect()
    }

    pub fn push_meta(&self, table: &mut SweepTable, prefix: &str) {
        table.push_meta(format!("{prefix}.kappa"), self.kappa);
        table.push_meta(format!("{prefix}.bound"), self.bound);
        table.push_meta(format!("{prefix}.lambda_ab_pi"), self.lambda_ab_pi);
        push_constants(table, &self.constants);
    }
}

/// `κ² < λ_AB(π)/(1 + C_*)` computed on `grid`; returns the bound and its parts.
pub fn kappa_bound(grid: &MaskedGrid) -> Result<(f64, f64, DomainConstants)> {
    let constants = c_star(grid)?;
    let lambda = lambda_ab_on_grid(grid, PI, AbMethod::PointFlux)?.value;
    Ok((lambda / (1.0 + constants.c_star), lambda, constants))
}

/// Minimizes at `h = πn`, `n = 1..=n_max`; odd `n` are expected normal and
/// even `n` superconducting.
pub fn oscillation_report(
    domain: &DomainSpec,
    resolution: usize,
    kappa: f64,
    n_max: u32,
    epsilon: f64,
) -> Result<OscillationReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let grid = build_grid(domain, resolution)?;
    check_epsilon(&grid, epsilon)?;
    let (bound, lambda_ab_pi, constants) = kappa_bound(&grid)?;
    if !(kappa > 0.0 && kappa * kappa < bound) {
        return Err(Error::KappaBound { kappa_sq: kappa * kappa, bound });
    }
    let rows = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let h = PI * n as f64;
            let expected = if n % 2 == 0 { Classification::Superconducting } else { Classification::Normal };
            let mut row = OscillationRow {
                n,
                h,
                expected,
                classification: None,
                sup_psi: None,
                energy: None,
                iterations: None,
                error: None,
            };
            match gl_point(&grid, h, epsilon, kappa) {
                Ok(r) => {
                    row.classification = Some(r.classification);
                    row.sup_psi = Some(r.sup_psi);
                    row.energy = Some(r.energy.total);
                    row.iterations = Some(r.iterations);
                    if !r.converged {
                        row.error = Some(format!("not converged after {} iterations", r.iterations));
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(OscillationReport { kappa, epsilon, bound, lambda_ab_pi, constants, rows })
}

fn check_epsilon(grid: &MaskedGrid, epsilon: f64) -> Result<()> {
    if epsilon == 0.0 {
        return Ok(());
    }
    if !(epsilon > 0.0 && epsilon < grid.spec().inradius()) {
        return Err(Error::InvalidArgument(format!("step radius {epsilon} is not admissible")));
    }
    let min = STEP_MIN_CELLS * grid.spacing();
    if epsilon < min * (1.0 - 1e-12) {
        return Err(Error::ResolutionInsufficient(format!(
            "step radius {epsilon} needs at least {STEP_MIN_CELLS} grid spacings ({min})"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub energy: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub h: f64,
    pub kappa: f64,
    pub resolution: usize,
    pub area: f64,
    pub e_ab: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Whether each gap is at most the previous one plus `noise`.
    pub fn gaps_nonincreasing(&self, noise: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].gap <= w[0].gap + noise)
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap)
    }

    pub fn records(&self) -> Vec<SweepRecord> {
        let mut out = Vec::with_capacity(self.rows.len() + 1);
        let mut ab = SweepRecord::new(self.h, 0.0, Some(self.kappa), self.resolution);
        ab.energy = Some(crate::gl::EnergyBreakdown { total: self.e_ab, ..Default::default() });
        out.push(ab);
        for r in &self.rows {
            let mut rec = SweepRecord::new(self.h, r.epsilon, Some(self.kappa), self.resolution);
            rec.energy = Some(crate::gl::EnergyBreakdown { total: r.energy, ..Default::default() });
            rec.iterations = Some(r.iterations);
            out.push(rec);
        }
        out
    }
}

/// `E_ε(h)` for each step radius against `E_AB(h)` on the same grid.
pub fn convergence_report(
    domain: &DomainSpec,
    h: f64,
    kappa: f64,
    epsilon_values: &[f64],
    resolution: usize,
) -> Result<ConvergenceReport> {
    if epsilon_values.is_empty() {
        return Err(Error::InvalidArgument("no step radii given".into()));
    }
    if epsilon_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("step radii must be strictly decreasing".into()));
    }
    let grid = build_grid(domain, resolution)?;
    for &e in epsilon_values {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("step radius {e} must be positive")));
        }
        check_epsilon(&grid, e)?;
    }
    // index 0 is the Aharonov-Bohm reference
    let mut radii = vec![0.0];
    radii.extend_from_slice(epsilon_values);
    let results = radii
        .par_iter()
        .map(|&e| gl_point(&grid, h, e, kappa))
        .collect::<Result<Vec<_>>>()?;
    let e_ab = results[0].energy.total;
    let rows = epsilon_values
        .iter()
        .zip(&results[1..])
        .map(|(&epsilon, r)| ConvergenceRow {
            epsilon,
            energy: r.energy.total,
            gap: (r.energy.total - e_ab).abs(),
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect();
    Ok(ConvergenceReport { h, kappa, resolution, area: measured_area(&grid), e_ab, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[(f64, f64)]) -> Vec<SweepRecord> {
        values
            .iter()
            .map(|&(h, v)| {
                let mut r = SweepRecord::new(h, 0.1, None, 64);
                r.lambda = Some(v);
                r
            })
            .collect()
    }

    #[test]
    fn increasing_column_is_monotone() {
        let t = rows(&[(0.0, 0.0), (1.0, 0.1), (2.0, 0.5), (3.0, 0.5)]);
        assert!(detect_nonmonotone(&t, Column::Lambda).is_empty());
    }

    #[test]
    fn dip_yields_witnesses() {
        let t = rows(&[(3.0, 0.2), (1.0, 0.5), (2.0, 0.7)]);
        assert_eq!(detect_nonmonotone(&t, Column::Lambda), vec![(1.0, 3.0), (2.0, 3.0)]);
        assert!(detect_nonmonotone(&t, Column::EnergyTotal).is_empty());
    }

    #[test]
    fn groups_are_separate() {
        let mut t = rows(&[(1.0, 0.5)]);
        let mut other = SweepRecord::new(2.0, 0.2, None, 64);
        other.lambda = Some(0.1);
        t.push(other);
        assert!(detect_nonmonotone(&t, Column::Lambda).is_empty());
    }

    #[test]
    fn oscillation_rejects_large_kappa() {
        let err = oscillation_report(&DomainSpec::disc(1.0), 32, 1.0, 2, 0.0).unwrap_err();
        match err {
            Error::KappaBound { kappa_sq, bound } => assert!(kappa_sq == 1.0 && bound < 1.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn convergence_checks_radii() {
        let d = DomainSpec::disc(1.0);
        assert!(convergence_report(&d, PI, 0.5, &[0.1, 0.2], 64).is_err());
        assert!(matches!(
            convergence_report(&d, PI, 0.5, &[0.3, 0.05], 32),
            Err(Error::ResolutionInsufficient(_))
        ));
    }
}
