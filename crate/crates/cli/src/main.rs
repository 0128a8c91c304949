//! `mallows`: Monte Carlo experiments on Mallows permutations.
//!
//! Exit status is 0 when every check of the run passes, 1 when a check
//! fails and 2 on usage or runtime errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mallows_core::experiments::{
    self, constants_table, default_sub_grid, default_super_grid, emit_plot_script, parse_q_grid,
    CsvTable, ExperimentConfig, Figure,
};
use mallows_core::qseries::DEFAULT_TOL;
use mallows_core::Error;

#[derive(Parser, Debug)]
#[command(name = "mallows", version, about = "Cycle statistics of Mallows permutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Single value of q
    #[arg(long, conflicts_with = "q_grid")]
    q: Option<f64>,
    /// Grid of q values: `a,b,c` or `start:stop:step`
    #[arg(long)]
    q_grid: Option<String>,
    /// Permutation size (window half-width for parity-tail)
    #[arg(long)]
    n: Option<usize>,
    /// Monte Carlo replicates per grid point
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation tolerance for the q-series
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Clone)]
struct Curve {
    #[command(flatten)]
    common: Common,
    /// Also write a gnuplot script next to --out
    #[arg(long, requires = "out")]
    plot: bool,
}

#[derive(Args, Debug, Clone)]
struct Clt {
    #[command(flatten)]
    common: Common,
    /// Largest cycle length (or half-length for even-clt)
    #[arg(long, default_value_t = 2)]
    ell: usize,
    /// Stream steps for the regeneration estimates
    #[arg(long, default_value_t = 4_000_000)]
    regen_steps: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean fixed points per site for q < 1 against m1
    M1Curve(Curve),
    /// Mean 2-cycles per site for q > 1 against mu2
    Mu2Curve(Curve),
    /// Mean fixed points at even and odd n for q > 1 against c_e, c_o
    CecoCurve(Curve),
    /// Normal limit of cycle counts for q < 1
    Clt(Clt),
    /// Normal limit of even cycle counts for q > 1
    EvenClt(Clt),
    /// Odd cycle counts for q > 1 do not grow with n
    OddTightness(Common),
    /// Fixed points of reflected bi-infinite windows
    ParityTail {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        kmax: usize,
    },
    /// Exact limit constants over a grid
    Constants(Common),
    /// Oracle identities and sampler goodness of fit
    Selftest(Common),
}

struct Defaults {
    grid: Vec<f64>,
    n: usize,
    reps: usize,
}

fn config(name: &str, c: &Common, d: Defaults) -> Result<ExperimentConfig, Error> {
    let grid = match (&c.q, &c.q_grid) {
        (Some(q), _) => vec![*q],
        (None, Some(g)) => parse_q_grid(g)?,
        (None, None) => d.grid,
    };
    let workers = c.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let mut cfg = ExperimentConfig::new(name, grid, c.n.unwrap_or(d.n), c.reps.unwrap_or(d.reps))
        .with_seed(c.seed)
        .with_workers(workers);
    cfg.output_path = c.out.clone();
    cfg.tol = c.tol;
    Ok(cfg)
}

fn emit(table: &CsvTable, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => table.write_path(path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(table.to_csv_string().as_bytes())?;
            Ok(())
        }
    }
}

fn report(name: &str, passed: bool, detail: &str) -> bool {
    eprintln!("{name}: {} {detail}", if passed { "pass" } else { "FAIL" });
    passed
}

fn curve(name: &str, args: &Curve, figure: Figure) -> Result<bool, Error> {
    let d = match figure {
        Figure::M1 => Defaults {
            grid: default_sub_grid(),
            n: 1000,
            reps: 10_000,
        },
        _ => Defaults {
            grid: default_super_grid(),
            n: 1000,
            reps: 10_000,
        },
    };
    let cfg = config(name, &args.common, d)?;
    let r = match figure {
        Figure::M1 => experiments::run_m1_curve(&cfg)?,
        Figure::Mu2 => experiments::run_mu2_curve(&cfg)?,
        Figure::CeCo => experiments::run_ceco_curve(&cfg)?,
    };
    emit(&r.table, &cfg.output_path)?;
    if args.plot {
        let path = cfg.output_path.as_ref().expect("clap requires --out");
        let script = emit_plot_script(path, figure)?;
        eprintln!("wrote {}", script.display());
    }
    let outside = r.points.iter().filter(|p| !p.within_4se()).count();
    Ok(report(
        name,
        outside == 0,
        &format!("{outside} of {} points outside 4 SE of the limit", r.points.len()),
    ))
}

fn run(cli: Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::M1Curve(a) => curve("m1-curve", a, Figure::M1),
        Command::Mu2Curve(a) => curve("mu2-curve", a, Figure::Mu2),
        Command::CecoCurve(a) => curve("ceco-curve", a, Figure::CeCo),
        Command::Clt(a) | Command::EvenClt(a) => {
            let even = matches!(cli.command, Command::EvenClt(_));
            let (name, q) = if even { ("even-clt", 2.0) } else { ("clt", 0.5) };
            let cfg = config(
                name,
                &a.common,
                Defaults {
                    grid: vec![q],
                    n: 4000,
                    reps: 5000,
                },
            )?;
            let r = if even {
                experiments::run_even_clt_check(&cfg, a.ell, a.regen_steps)?
            } else {
                experiments::run_clt_check(&cfg, a.ell, a.regen_steps)?
            };
            emit(&r.table, &cfg.output_path)?;
            for (q, est, exact) in &r.centering {
                report(
                    &format!("{name} centring q={q}"),
                    est.within(*exact, 4.0),
                    &format!("{est} vs {exact:.10}"),
                );
            }
            let failing = r.rows.iter().filter(|row| !row.passes()).count();
            report(name, r.passed(), &format!("{failing} of {} rows fail", r.rows.len()));
            Ok(r.passed())
        }
        Command::OddTightness(c) => {
            let cfg = config(
                "odd-tightness",
                c,
                Defaults {
                    grid: vec![2.0],
                    n: 1000,
                    reps: 10_000,
                },
            )?;
            let (rows, table) = experiments::run_odd_tightness(&cfg)?;
            emit(&table, &cfg.output_path)?;
            let ok = rows.iter().all(|r| r.passes());
            Ok(report("odd-tightness", ok, ""))
        }
        Command::ParityTail { common, kmax } => {
            let cfg = config(
                "parity-tail",
                common,
                Defaults {
                    grid: vec![0.5],
                    n: 64,
                    reps: 1_000_000,
                },
            )?;
            let r = experiments::run_parity_tail(&cfg, *kmax)?;
            emit(&r.table, &cfg.output_path)?;
            Ok(report("parity-tail", r.passed(), "ordering at m = 2 and m = 3"))
        }
        Command::Constants(c) => {
            let grid = match (&c.q, &c.q_grid) {
                (Some(q), _) => vec![*q],
                (None, Some(g)) => parse_q_grid(g)?,
                (None, None) => default_sub_grid().into_iter().chain(default_super_grid()).collect(),
            };
            emit(&constants_table(&grid, c.tol)?, &c.out)?;
            Ok(true)
        }
        Command::Selftest(c) => {
            let workers = c
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let checks = experiments::run_selftest(c.seed, workers, c.reps.unwrap_or(100_000))?;
            let mut ok = true;
            for ch in &checks {
                ok &= report(&ch.name, ch.passed, &ch.detail);
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
