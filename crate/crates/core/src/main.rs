use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use flux_gl::constants::c_star;
use flux_gl::error::Error;
use flux_gl::fields::link_phases;
use flux_gl::geometry::{build_grid, DomainSpec};
use flux_gl::gl::{minimize, Init, MAX_ITER, TOL};
use flux_gl::spectral::{lambda_ab_on_grid, lambda_step_on_grid, AbMethod};
use flux_gl::sweep::{parse_flux, potential_for, run_sweep, verify, SweepConfig, VerifyOptions};

/// Magnetic eigenvalues and Ginzburg-Landau minimizers for Aharonov-Bohm
/// flux and magnetic steps on planar domains.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest Neumann eigenvalue for a single flux value
    Eig {
        #[command(flatten)]
        point: PointArgs,
        /// Remove a disc of this radius around the flux point (ε = 0 only)
        #[arg(long)]
        perforate: Option<f64>,
    },
    /// Minimize the GL functional at a single point
    Gl {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, value_enum, default_value_t = Start::Multi)]
        init: Start,
        #[arg(long, default_value_t = TOL)]
        tol: f64,
        #[arg(long, default_value_t = MAX_ITER)]
        max_iter: usize,
    },
    /// Domain constants λ^D, m_* and C_*
    Constants {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run a sweep described by a TOML config
    Sweep {
        config: PathBuf,
        /// Override the config's worker count
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the verification bundle and write its CSV trail
    Verify {
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// CSV destination; stdout when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GridArgs {
    /// disc:R, ellipse:A,B, square:SIDE or star:R1,R2,...
    #[arg(long, default_value = "disc:1", value_parser = parse_domain)]
    domain: DomainSpec,
    #[arg(short, long, default_value_t = 128)]
    n: usize,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Flux, e.g. 1.57, pi/2 or 3pi/2
    #[arg(long, value_parser = parse_h, allow_hyphen_values = true)]
    h: f64,
    /// Step radius; 0 for the Aharonov-Bohm field
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Multi,
    Normal,
    Uniform,
}

fn parse_h(s: &str) -> Result<f64, String> {
    parse_flux(s).map_err(|e| e.to_string())
}

fn parse_domain(s: &str) -> Result<DomainSpec, String> {
    let (kind, args) = s.split_once(':').ok_or("expected KIND:ARGS")?;
    let nums = args
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = match (kind, nums.as_slice()) {
        ("disc", [r]) => DomainSpec::disc(*r),
        ("ellipse", [a, b]) => DomainSpec::ellipse(*a, *b),
        ("square", [side]) => DomainSpec::square(*side, 64),
        ("star", radii) => DomainSpec::Star { radii: radii.to_vec() },
        _ => return Err(format!("unknown domain {s:?}")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

enum Failure {
    Verify,
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e),
            e => Failure::Runtime(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    match command {
        Command::Eig { point, perforate } => {
            let grid = build_grid(&point.grid.domain, point.grid.n)?;
            let r = match (point.epsilon, perforate) {
                (e, None) if e == 0.0 => lambda_ab_on_grid(&grid, point.h, AbMethod::PointFlux)?,
                (e, Some(radius)) if e == 0.0 => lambda_ab_on_grid(&grid, point.h, AbMethod::Perforated { radius })?,
                (_, Some(_)) => {
                    return Err(Failure::Config(Error::Config("--perforate needs --epsilon 0".into())));
                }
                (e, None) => lambda_step_on_grid(&grid, point.h, e)?,
            };
            writeln!(out, "lambda = {}", r.value)?;
            writeln!(out, "residual = {:e}", r.residual)?;
            writeln!(out, "iterations = {}", r.iterations)?;
        }
        Command::Gl { point, kappa, init, tol, max_iter } => {
            let grid = build_grid(&point.grid.domain, point.grid.n)?;
            let field = link_phases(&grid, potential_for(point.epsilon), point.h)?;
            let init = match init {
                Start::Multi => Init::MultiStart,
                Start::Normal => Init::NormalPerturbed,
                Start::Uniform => Init::UniformOne,
            };
            let r = minimize(&grid, &field, point.h, kappa, init, tol, max_iter)?;
            writeln!(out, "energy_total = {}", r.energy.total)?;
            writeln!(out, "energy_kinetic = {}", r.energy.kinetic)?;
            writeln!(out, "energy_condensation = {}", r.energy.condensation)?;
            writeln!(out, "energy_field = {}", r.energy.field)?;
            writeln!(out, "classification = {}", r.classification.as_str())?;
            writeln!(out, "sup_psi = {}", r.sup_psi)?;
            writeln!(out, "grad_norm = {:e}", r.grad_norm)?;
            writeln!(out, "iterations = {}", r.iterations)?;
            writeln!(out, "converged = {}", r.converged)?;
            writeln!(out, "start = {}", r.start)?;
        }
        Command::Constants { grid } => {
            let grid = build_grid(&grid.domain, grid.n)?;
            let c = c_star(&grid)?;
            writeln!(out, "lambda_dirichlet = {}", c.lambda_dirichlet)?;
            writeln!(out, "m_star = {}", c.m_star)?;
            writeln!(out, "c_star = {}", c.c_star)?;
            writeln!(out, "area = {}", c.area)?;
            writeln!(out, "resolution = {}", c.resolution)?;
        }
        Command::Sweep { config, workers } => {
            let mut config = SweepConfig::load(&config)?;
            if workers.is_some() {
                config.workers = workers;
            }
            let table = run_sweep(&config)?;
            let file = File::create(&config.output_path).map_err(|e| {
                Failure::Config(Error::Config(format!("cannot write {}: {e}", config.output_path.display())))
            })?;
            table.write_csv(BufWriter::new(file))?;
            let failed = table.records.iter().filter(|r| r.error.is_some()).count();
            writeln!(
                out,
                "{} rows ({failed} with errors) written to {}",
                table.records.len(),
                config.output_path.display()
            )?;
        }
        Command::Verify { fast, workers, output } => {
            if workers == Some(0) {
                return Err(Failure::Config(Error::Config("workers must be at least 1".into())));
            }
            let report = verify(&VerifyOptions { fast, workers })?;
            match output {
                Some(path) => report.table.write_csv(BufWriter::new(File::create(path)?))?,
                None => report.table.write_csv(&mut out)?,
            }
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if !report.passed() {
                return Err(Failure::Verify);
            }
        }
    }
    Ok(())
}
