//! The `verify` bundle: quick theorem-level checks with a CSV trail.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::reports::{detect_nonmonotone, kappa_bound, oscillation_report, Column};
use super::run::{eigenvalue_point, gl_point, with_workers, TOOL};
use super::table::{SweepRecord, SweepTable};
use crate::error::Result;
use crate::fields::{alpha, link_phases, PotentialKind};
use crate::geometry::{build_grid, measured_area, DomainSpec, MaskedGrid};
use crate::gl::{degenerate_state, energy};
use crate::spectral::{lambda_1d_twisted, lowest_eigenpair, twisted_ring_operator};

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    pub fast: bool,
    pub workers: Option<usize>,
}

impl VerifyOptions {
    pub fn resolution(&self) -> usize {
        if self.fast { 48 } else { 128 }
    }

    pub fn step_resolution(&self) -> usize {
        if self.fast { 48 } else { 256 }
    }

    pub fn epsilon(&self) -> f64 {
        if self.fast { 0.2 } else { 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub table: SweepTable,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Bundle {
    checks: Vec<Check>,
    table: SweepTable,
}

impl Bundle {
    fn record(&mut self, name: &'static str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.table
            .push_meta(format!("check.{name}"), format!("{} {detail}", if passed { "pass" } else { "fail" }));
        log::info!("{name}: {} ({detail})", if passed { "pass" } else { "fail" });
        self.checks.push(Check { name, passed, detail });
    }

    fn record_rows(&mut self, name: &'static str, outcome: Outcome) {
        let outcome = outcome.map(|(ok, detail, rows)| {
            self.table.records.extend(rows);
            (ok, detail)
        });
        self.record(name, outcome);
    }
}

pub fn verify(options: &VerifyOptions) -> Result<VerifyReport> {
    with_workers(options.workers, || run(options))?
}

fn run(options: &VerifyOptions) -> Result<VerifyReport> {
    let domain = DomainSpec::disc(1.0);
    let grid = build_grid(&domain, options.resolution())?;
    let step_grid = build_grid(&domain, options.step_resolution())?;
    let mut bundle = Bundle { checks: Vec::new(), table: SweepTable::default() };
    bundle.table.push_meta("tool", TOOL);
    bundle.table.push_meta("mode", if options.fast { "fast" } else { "full" });
    bundle.table.push_meta("domain", domain.describe());
    bundle.table.push_meta("resolution", grid.n());
    bundle.table.push_meta("step_resolution", step_grid.n());
    bundle.table.push_meta("epsilon", options.epsilon());

    bundle.record("one_d_lemma", one_d_lemma());
    bundle.record_rows("periodicity", periodicity(&grid));
    bundle.record_rows("positivity", positivity(&grid));
    bundle.record_rows("degenerate_energy", degenerate_energy(&grid));
    bundle.record_rows("nonmonotone", nonmonotone_scan(&step_grid, options.epsilon()));
    bundle.record_rows("oscillation", oscillation(&domain, options));
    bundle.table.sort();
    bundle.table.records.dedup();
    Ok(VerifyReport { checks: bundle.checks, table: bundle.table })
}

type Outcome = Result<(bool, String, Vec<SweepRecord>)>;

fn lambda_rows(grid: &MaskedGrid, hs: &[f64], epsilon: f64) -> Result<Vec<SweepRecord>> {
    hs.par_iter()
        .map(|&h| {
            let mut r = SweepRecord::new(h, epsilon, None, grid.n());
            r.lambda = Some(eigenvalue_point(grid, h, epsilon)?);
            Ok(r)
        })
        .collect()
}

fn one_d_lemma() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for h in [0.0, PI / 2.0, PI, 1.5 * PI] {
        let exact = alpha(h).powi(2);
        let v = lambda_1d_twisted(h, 4096)?;
        let err = if exact == 0.0 { v.abs() } else { (v - exact).abs() / exact };
        worst = worst.max(err);
    }
    let mut lattice: f64 = 0.0;
    for h in [0.0, PI / 2.0, PI, 1.5 * PI] {
        let r = lowest_eigenpair(&twisted_ring_operator(h, 16)?, 1e-13)?;
        lattice = lattice.max((r.value - lambda_1d_twisted(h, 16)?).abs());
    }
    Ok((worst <= 1e-5 && lattice <= 1e-12, format!("rel err {worst:.3e}, lattice err {lattice:.3e}")))
}

fn periodicity(grid: &MaskedGrid) -> Outcome {
    let hs: Vec<f64> = [PI / 2.0, PI]
        .iter()
        .flat_map(|&h| [h, h + 2.0 * PI, h + 4.0 * PI])
        .collect();
    let rows = lambda_rows(grid, &hs, 0.0)?;
    let spread = rows
        .chunks(3)
        .map(|c| {
            let v: Vec<f64> = c.iter().map(|r| r.lambda.unwrap()).collect();
            (v[0] - v[1]).abs().max((v[0] - v[2]).abs())
        })
        .fold(0.0, f64::max);
    let zeros = lambda_rows(grid, &[0.0, 2.0 * PI, 4.0 * PI], 0.0)?;
    let zero = zeros.iter().map(|r| r.lambda.unwrap().abs()).fold(0.0, f64::max);
    let mut all = rows;
    all.extend(zeros);
    Ok((spread <= 1e-10 && zero <= 1e-8, format!("spread {spread:.3e}, zero modes {zero:.3e}"), all))
}

fn positivity(grid: &MaskedGrid) -> Outcome {
    let hs: Vec<f64> = (1..=8).map(|k| 2.0 * PI * k as f64 / 9.0).chain([PI / 2.0, PI, 1.5 * PI]).collect();
    let rows = lambda_rows(grid, &hs, 0.0)?;
    let value = |h: f64| rows.iter().find(|r| r.h == h).and_then(|r| r.lambda).unwrap();
    let lambda_pi = value(PI);
    let min_pos = [PI / 2.0, PI, 1.5 * PI].iter().map(|&h| value(h)).fold(f64::INFINITY, f64::min);
    let max_grid = rows[..8].iter().map(|r| r.lambda.unwrap()).fold(0.0, f64::max);
    let ok = min_pos > 0.01 && lambda_pi >= max_grid - 1e-8;
    Ok((ok, format!("min {min_pos:.6}, lambda(pi) {lambda_pi:.6}, grid max {max_grid:.6}"), rows))
}

fn degenerate_energy(grid: &MaskedGrid) -> Outcome {
    let (h, kappa) = (2.0 * PI, 1.0);
    let area = measured_area(grid);
    let target = -0.5 * kappa * kappa * area;
    let r = gl_point(grid, h, 0.0, kappa)?;
    let field = link_phases(grid, PotentialKind::AharonovBohm, h)?;
    let explicit = energy(&degenerate_state(grid, 1), &field, h, kappa, grid)?.total;
    let explicit_err = (explicit - target).abs() / target.abs();
    let ok = r.energy.total <= 0.97 * target && explicit_err <= 0.03;
    let mut rec = SweepRecord::new(h, 0.0, Some(kappa), grid.n());
    rec.set_gl(&r, true, true);
    Ok((ok, format!("minimized {:.6}, explicit {explicit:.6}, target {target:.6}", r.energy.total), vec![rec]))
}

fn nonmonotone_scan(grid: &MaskedGrid, epsilon: f64) -> Outcome {
    let hs = [PI / 2.0, PI, 1.5 * PI, 1.75 * PI, 2.0 * PI];
    let rows = lambda_rows(grid, &hs, epsilon)?;
    let pairs = detect_nonmonotone(&rows, Column::Lambda);
    let shown: Vec<String> = pairs.iter().map(|(a, b)| format!("({a:.4},{b:.4})")).collect();
    Ok((!pairs.is_empty(), format!("{} witnesses {}", pairs.len(), shown.join(" ")), rows))
}

fn oscillation(domain: &DomainSpec, options: &VerifyOptions) -> Outcome {
    let grid = build_grid(domain, options.resolution())?;
    let (bound, _, _) = kappa_bound(&grid)?;
    let kappa = (0.5 * bound).sqrt();
    let mut runs = vec![(options.resolution(), 0.0)];
    if !options.fast {
        runs.push((options.step_resolution(), options.epsilon()));
    }
    let mut rows = Vec::new();
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, eps) in runs {
        let report = oscillation_report(domain, n, kappa, 4, eps)?;
        ok &= report.all_correct();
        let pattern: String = report
            .rows
            .iter()
            .map(|r| match r.classification {
                Some(c) if c == r.expected => 'o',
                Some(_) => 'x',
                None => '?',
            })
            .collect();
        parts.push(format!("eps {eps}: {}/{} [{pattern}]", report.correct(), report.rows.len()));
        rows.extend(report.records(n));
    }
    Ok((ok, format!("kappa {kappa:.6}; {}", parts.join(", ")), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_lemma_passes() {
        let (ok, detail) = one_d_lemma().unwrap();
        assert!(ok, "{detail}");
    }

    #[test]
    fn failed_checks_are_recorded() {
        let mut b = Bundle { checks: vec![], table: SweepTable::default() };
        b.record("x", Err(crate::error::Error::NonFinite));
        assert!(!b.checks[0].passed);
        assert!(b.table.meta[0].1.starts_with("fail error"));
    }
}
