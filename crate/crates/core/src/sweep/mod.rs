//! Parameter sweeps, oscillation and convergence reports, and the
//! verification bundle behind the command line tool.

mod config;
mod reports;
mod run;
mod table;
mod verify;

pub use config::{parse_flux, SweepConfig, Task, MIN_RESOLUTION};
pub use reports::{
    convergence_report, detect_nonmonotone, oscillation_report, Column, ConvergenceReport, ConvergenceRow,
    OscillationReport, OscillationRow, NONMONOTONE_TOL,
};
pub use run::{eigenvalue_point, gl_point, potential_for, run_sweep, with_workers, TOOL};
pub use table::{SweepRecord, SweepTable, COLUMNS};
pub use verify::{verify, Check, VerifyOptions, VerifyReport};
