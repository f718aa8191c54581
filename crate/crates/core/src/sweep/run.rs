//! Parallel evaluation of sweep points.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{SweepConfig, Task};
use super::table::{SweepRecord, SweepTable};
use crate::constants::{c_star, DomainConstants};
use crate::error::{Error, Result};
use crate::fields::{link_phases, PotentialKind};
use crate::geometry::{build_grid, MaskedGrid};
use crate::gl::{minimize, GLResult, Init, MAX_ITER, TOL};
use crate::spectral::{lambda_ab_on_grid, lambda_step_on_grid, AbMethod};

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// `0` selects the Aharonov-Bohm potential, anything else a step of that radius.
pub fn potential_for(epsilon: f64) -> PotentialKind {
    if epsilon == 0.0 {
        PotentialKind::AharonovBohm
    } else {
        PotentialKind::Step { epsilon }
    }
}

/// `λ_AB(h)` with the point flux when `epsilon = 0`, `λ(h F_ε)` otherwise.
pub fn eigenvalue_point(grid: &MaskedGrid, h: f64, epsilon: f64) -> Result<f64> {
    let r = if epsilon == 0.0 {
        lambda_ab_on_grid(grid, h, AbMethod::PointFlux)?
    } else {
        lambda_step_on_grid(grid, h, epsilon)?
    };
    Ok(r.value)
}

/// Multi-start minimization at one `(h, ε, κ)` point.
pub fn gl_point(grid: &MaskedGrid, h: f64, epsilon: f64, kappa: f64) -> Result<GLResult> {
    let field = link_phases(grid, potential_for(epsilon), h)?;
    minimize(grid, &field, h, kappa, Init::MultiStart, TOL, MAX_ITER)
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn push_constants(table: &mut SweepTable, c: &DomainConstants) {
    table.push_meta("lambda_dirichlet", c.lambda_dirichlet);
    table.push_meta("m_star", c.m_star);
    table.push_meta("c_star", c.c_star);
    table.push_meta("area", c.area);
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepTable> {
    config.validate()?;
    let grid = build_grid(&config.domain, config.resolution).map_err(|e| Error::Config(e.to_string()))?;
    let mut table = SweepTable::default();
    table.push_meta("tool", TOOL);
    table.push_meta("domain", config.domain.describe());
    table.push_meta("resolution", config.resolution);
    table.push_meta(
        "tasks",
        config.tasks.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" "),
    );
    if let Some(seed) = config.seed {
        table.push_meta("seed", seed);
    }
    let records = with_workers(config.workers, || evaluate(config, &grid, &mut table))?;
    table.records = records;
    table.sort();
    Ok(table)
}

fn evaluate(config: &SweepConfig, grid: &MaskedGrid, table: &mut SweepTable) -> Vec<SweepRecord> {
    if config.has(Task::Constants) {
        match c_star(grid) {
            Ok(c) => push_constants(table, &c),
            Err(e) => table.push_meta("constants_error", e),
        }
    }
    let pairs: Vec<(f64, f64)> = config
        .h_values
        .iter()
        .flat_map(|&h| config.epsilon_values.iter().map(move |&e| (h, e)))
        .collect();
    // the eigenvalue does not depend on κ, so it is computed once per (h, ε)
    let lambdas: Vec<Option<(Result<f64>, f64)>> = pairs
        .par_iter()
        .map(|&(h, e)| {
            config.has(Task::Eigenvalue).then(|| {
                let t = Instant::now();
                (eigenvalue_point(grid, h, e), t.elapsed().as_secs_f64())
            })
        })
        .collect();
    let kappas: Vec<Option<f64>> = if config.kappa_values.is_empty() {
        vec![None]
    } else {
        config.kappa_values.iter().copied().map(Some).collect()
    };
    let points: Vec<(usize, Option<f64>)> = (0..pairs.len())
        .flat_map(|p| kappas.iter().map(move |&k| (p, k)))
        .collect();
    points
        .par_iter()
        .map(|&(p, kappa)| {
            let (h, epsilon) = pairs[p];
            let mut rec = SweepRecord::new(h, epsilon, kappa, config.resolution);
            if let Some((lambda, secs)) = &lambdas[p] {
                rec.wall_time += secs;
                match lambda {
                    Ok(v) => rec.lambda = Some(*v),
                    Err(e) => rec.push_error(format!("eigenvalue: {e}")),
                }
            }
            if let (true, Some(k)) = (config.needs_gl(), kappa) {
                let t = Instant::now();
                match gl_point(grid, h, epsilon, k) {
                    Ok(r) => rec.set_gl(&r, config.has(Task::GlEnergy), config.has(Task::Classify)),
                    Err(e) => rec.push_error(format!("minimize: {e}")),
                }
                rec.wall_time += t.elapsed().as_secs_f64();
            }
            rec
        })
        .collect()
}
