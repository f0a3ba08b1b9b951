use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stark_cli::config::{parse_config_with, Mode, RunConfig};
use stark_cli::output::{
    direct_sums, emit_density, format_direct_sum_table, format_direct_sums, format_sm_table,
    format_table, sm_layout, sweep_rows, SmLayout,
};
use stark_cli::run::{single_row, solve_at};
use stark_cli::validate::validate;
use stark_core::assembly::{FieldDirection, Problem};
use stark_core::density::evaluate_density;
use stark_core::eigensolver::{field_free_orbitals, Orbital};
use stark_core::sweep::{field_sweep, non_monotonic_shift_report, orientation_sweep, SweepResult};

#[derive(Parser)]
#[command(
    name = "h2o-stark",
    version,
    about = "dc Stark resonances of the water valence orbitals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Skip the l_max = 4 field-free check.
        #[arg(long)]
        quick: bool,
    },
    /// Resonances at the configured field.
    Solve(Common),
    /// Field-strength sweep along one axis.
    Sweep(Common),
    /// Fixed-magnitude sweep over orientations in the x-z plane.
    Orient(Common),
    /// Orbital density on a plane.
    Density(Common),
    /// Doubly occupied direct sums over all five orbitals.
    DirectSum(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    config: Option<PathBuf>,
    /// Override one configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Use the settings of a supplementary table and also print it in that layout.
    #[arg(long, value_name = "N")]
    sm_table: Option<u32>,
}

enum Failure {
    Usage(String),
    Validation,
    Numerical(String),
}

impl From<stark_core::Error> for Failure {
    fn from(e: stark_core::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

fn io_failure(path: &str, e: io::Error) -> Failure {
    Failure::Usage(format!("cannot write {path}: {e}"))
}

fn write_text(path: &str, text: &str) -> Result<(), Failure> {
    if path == "-" {
        io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| io_failure(path, e))
    } else {
        fs::write(path, text).map_err(|e| io_failure(path, e))
    }
}

fn load(common: &Common, mode: Mode) -> Result<(RunConfig, Option<SmLayout>), Failure> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = vec![format!("mode = {}", mode.as_str())];
    let layout = match common.sm_table {
        Some(n) => {
            let layout = sm_layout(n)
                .ok_or_else(|| Failure::Usage(format!("no table {n} (expected 1..=14)")))?;
            let (sub, keys) = layout.preset();
            if sub != mode.as_str() {
                return Err(Failure::Usage(format!(
                    "table {n} is produced by the '{sub}' subcommand"
                )));
            }
            overrides.extend(keys.into_iter().map(|(k, v)| format!("{k} = {v}")));
            Some(layout)
        }
        None => None,
    };
    overrides.extend(common.set.iter().cloned());
    let cfg = parse_config_with(&text, &overrides).map_err(|e| {
        let source = common.config.as_deref().unwrap_or(Path::new("<defaults>"));
        Failure::Usage(format!("{}: {e}", source.display()))
    })?;
    eprint!("{}", cfg.echo());
    if cfg.output_table != "-" {
        let path = format!("{}.config", cfg.output_table);
        fs::write(&path, cfg.echo()).map_err(|e| io_failure(&path, e))?;
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    Ok((cfg, layout))
}

/// Reports continuation breaks; they turn the run into a numerical failure
/// after the partial table has been written.
fn report_breaks(sweep: &SweepResult) -> Result<(), Failure> {
    for b in &sweep.breaks {
        eprintln!(
            "break: {} stopped at |F| = {:.6}: {}",
            b.orbital,
            b.field.magnitude(),
            b.reason
        );
    }
    if sweep.breaks.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "{} continuation break(s)",
            sweep.breaks.len()
        )))
    }
}

fn emit_rows(
    cfg: &RunConfig,
    layout: Option<&SmLayout>,
    sweep: &SweepResult,
) -> Result<(), Failure> {
    let rows = sweep_rows(sweep);
    match layout {
        Some(l) => {
            if cfg.output_table != "-" {
                write_text(&cfg.output_table, &format_table(&rows))?;
            }
            write_text("-", &format_sm_table(l, &rows))
        }
        None => write_text(&cfg.output_table, &format_table(&rows)),
    }
}

fn prepare(
    cfg: &RunConfig,
) -> Result<
    (
        Problem,
        std::collections::BTreeMap<Orbital, stark_core::eigensolver::EigenSolution>,
    ),
    Failure,
> {
    let problem = Problem::new(cfg.problem_spec())?;
    let ff = field_free_orbitals(&problem, &cfg.solver_options())?;
    for (o, s) in &ff {
        eprintln!(
            "field-free {o}: {:.10} {:+.3e}i",
            s.eigenvalue.re, s.eigenvalue.im
        );
    }
    Ok((problem, ff))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { common, quick } => {
            let (cfg, _) = load(&common, Mode::Validate)?;
            let checks = validate(&cfg, quick);
            let mut out = String::new();
            for c in &checks {
                out.push_str(&c.to_string());
                out.push('\n');
            }
            write_text("-", &out)?;
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
        Command::Solve(common) => {
            let (cfg, _) = load(&common, Mode::Solve)?;
            let field = cfg.field()?;
            let (problem, ff) = prepare(&cfg)?;
            let sweep = solve_at(
                &problem,
                &field,
                cfg.sweep_step,
                &cfg.orbitals,
                &ff,
                &cfg.solver_options(),
            )?;
            emit_rows(&cfg, None, &sweep)?;
            report_breaks(&sweep)
        }
        Command::Sweep(common) => {
            let (cfg, layout) = load(&common, Mode::Sweep)?;
            if cfg.field_direction == FieldDirection::XzPlane {
                return Err(Failure::Usage(
                    "sweep runs along x, y or z; use 'orient' for in-plane fields".into(),
                ));
            }
            let (problem, ff) = prepare(&cfg)?;
            let sweep = field_sweep(
                &problem,
                cfg.field_direction,
                &cfg.sweep_points(),
                &cfg.orbitals,
                &ff,
                &cfg.solver_options(),
            )?;
            emit_rows(&cfg, layout.as_ref(), &sweep)?;
            for &o in &cfg.orbitals {
                match non_monotonic_shift_report(&sweep, o) {
                    Some(r) => eprintln!(
                        "{o}: shift minimum {:.6e} at F = {}, sign change {}",
                        r.minimum_shift,
                        r.minimum_field,
                        r.zero_crossing
                            .map_or("none".to_string(), |(a, b)| format!("between {a} and {b}"))
                    ),
                    None => eprintln!("{o}: shift is monotone"),
                }
            }
            report_breaks(&sweep)
        }
        Command::Orient(common) => {
            let (cfg, layout) = load(&common, Mode::Orient)?;
            let (problem, ff) = prepare(&cfg)?;
            let sweep = orientation_sweep(
                &problem,
                cfg.orient_magnitude,
                &cfg.orient_fractions,
                &cfg.orbitals,
                &ff,
                &cfg.solver_options(),
            )?;
            emit_rows(&cfg, layout.as_ref(), &sweep)?;
            report_breaks(&sweep)
        }
        Command::Density(common) => {
            let (cfg, _) = load(&common, Mode::Density)?;
            let field = cfg.field()?;
            let (problem, ff) = prepare(&cfg)?;
            let orbital = cfg.density_orbital;
            let sol = if field.is_zero() {
                ff.get(&orbital)
                    .cloned()
                    .ok_or_else(|| Failure::Numerical(format!("no field-free {orbital}")))?
            } else {
                let sweep = solve_at(
                    &problem,
                    &field,
                    cfg.sweep_step,
                    &[orbital],
                    &ff,
                    &cfg.solver_options(),
                )?;
                report_breaks(&sweep)?;
                single_row(&sweep, orbital)?.solution.clone()
            };
            let grid = evaluate_density(
                &sol,
                problem.mesh(),
                cfg.l_max,
                &problem.spec().contour,
                problem.geometry(),
                &cfg.grid(),
            )?;
            let meta = [
                ("orbital", orbital.to_string()),
                (
                    "field",
                    format!("{} {:?}", field.direction.as_str(), field.components()),
                ),
                (
                    "energy",
                    format!("{:.10} {:+.6e}i", sol.eigenvalue.re, sol.eigenvalue.im),
                ),
                ("l_max", cfg.l_max.to_string()),
            ];
            let mut buf = Vec::new();
            emit_density(&grid, &meta, &mut buf).map_err(|e| io_failure(&cfg.output_density, e))?;
            write_text(&cfg.output_density, &String::from_utf8_lossy(&buf))
        }
        Command::DirectSum(common) => {
            let (cfg, layout) = load(&common, Mode::DirectSum)?;
            if cfg.field_direction == FieldDirection::XzPlane {
                return Err(Failure::Usage("direct sums run along x, y or z".into()));
            }
            let (problem, ff) = prepare(&cfg)?;
            let sweep = field_sweep(
                &problem,
                cfg.field_direction,
                &cfg.sweep_points(),
                &Orbital::ALL,
                &ff,
                &cfg.solver_options(),
            )?;
            let sums = direct_sums(&sweep)?;
            if layout.is_some() {
                if cfg.output_table != "-" {
                    write_text(&cfg.output_table, &format_table(&sweep_rows(&sweep)))?;
                }
                write_text("-", &format_direct_sum_table(&sweep)?)?;
            } else {
                write_text(&cfg.output_table, &format_table(&sweep_rows(&sweep)))?;
                if cfg.output_table == "-" {
                    write_text("-", "\n")?;
                }
                write_text("-", &format_direct_sums(cfg.field_direction, &sums))?;
            }
            report_breaks(&sweep)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
