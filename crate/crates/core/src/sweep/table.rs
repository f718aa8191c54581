//! Sweep records and their CSV form.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::Result;
use crate::gl::{Classification, EnergyBreakdown, GLResult};

pub const COLUMNS: [&str; 13] = [
    "h",
    "epsilon",
    "kappa",
    "resolution",
    "lambda",
    "energy_total",
    "energy_kinetic",
    "energy_condensation",
    "energy_field",
    "classification",
    "sup_psi",
    "iterations",
    "error",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub h: f64,
    /// `0` for the pure Aharonov-Bohm field.
    pub epsilon: f64,
    pub kappa: Option<f64>,
    pub resolution: usize,
    pub lambda: Option<f64>,
    pub energy: Option<EnergyBreakdown>,
    pub classification: Option<Classification>,
    pub sup_psi: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
    /// Seconds spent on this point; not written to CSV.
    pub wall_time: f64,
}

impl SweepRecord {
    pub fn new(h: f64, epsilon: f64, kappa: Option<f64>, resolution: usize) -> Self {
        SweepRecord {
            h,
            epsilon,
            kappa,
            resolution,
            lambda: None,
            energy: None,
            classification: None,
            sup_psi: None,
            iterations: None,
            error: None,
            wall_time: 0.0,
        }
    }

    pub fn set_gl(&mut self, result: &GLResult, with_energy: bool, with_class: bool) {
        if with_energy {
            self.energy = Some(result.energy);
        }
        if with_class {
            self.classification = Some(result.classification);
            self.sup_psi = Some(result.sup_psi);
        }
        self.iterations = Some(result.iterations);
        if !result.converged {
            self.push_error(format!(
                "not converged after {} iterations (grad {:e})",
                result.iterations, result.grad_norm
            ));
        }
    }

    pub fn push_error(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }

    pub fn key_cmp(&self, other: &Self) -> Ordering {
        self.h
            .total_cmp(&other.h)
            .then(self.epsilon.total_cmp(&other.epsilon))
            .then(cmp_opt(self.kappa, other.kappa))
            .then(self.resolution.cmp(&other.resolution))
    }

    fn fields(&self) -> [String; 13] {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let e = self.energy;
        [
            self.h.to_string(),
            self.epsilon.to_string(),
            num(self.kappa),
            self.resolution.to_string(),
            num(self.lambda),
            num(e.map(|e| e.total)),
            num(e.map(|e| e.kinetic)),
            num(e.map(|e| e.condensation)),
            num(e.map(|e| e.field)),
            self.classification.map(|c| c.as_str().to_string()).unwrap_or_default(),
            num(self.sup_psi),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.total_cmp(&b),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

/// Records plus `key = value` metadata written as `#` lines above the header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub meta: Vec<(String, String)>,
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    pub fn push_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.key_cmp(b));
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k} = {}", v.replace('\n', " "))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.records {
            w.write_record(r.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
