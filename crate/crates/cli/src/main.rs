use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use gaussian_tcl_cli::benchmark::run_benchmark;
use gaussian_tcl_cli::check::{run_suite, Mutation};
use gaussian_tcl_cli::config::{Overrides, PictureSpec, ScenarioConfig};
use gaussian_tcl_cli::convert::{convert, load_model};
use gaussian_tcl_cli::output::write_json;
use gaussian_tcl_cli::simulate::run_simulate;
use gaussian_tcl_cli::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "gtcl",
    version,
    about = "Gaussian time-convolutionless closure for the driven dissipative Kerr oscillator"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the closure order of every scenario.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: Option<u8>,
    /// Override the integration picture of every scenario.
    #[arg(long, global = true, value_enum)]
    picture: Option<PictureSpec>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the moment closure for one or more scenario files.
    Simulate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Compare the closure with the Fock-basis master equation.
    Benchmark {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run the built-in identity and consistency suite.
    Check {
        #[arg(long, value_enum, hide = true)]
        mutate: Option<Mutation>,
    },
    /// Convert between experimental and Kerr-model parameters.
    ConvertParams { config: PathBuf },
}

fn default_out(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs `job` on every path with a bounded worker pool; results keep input order.
fn run_parallel<T: Send>(paths: &[PathBuf], job: impl Fn(&Path) -> CliResult<T> + Sync) -> Vec<CliResult<T>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(paths.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<CliResult<T>>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let r = job(&paths[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot filled")).collect()
}

fn load(path: &Path, o: Overrides) -> CliResult<ScenarioConfig> {
    ScenarioConfig::load(path)?.with_overrides(o)
}

fn report_errors<T>(paths: &[PathBuf], results: &[CliResult<T>], ok: impl Fn(&T) -> String) -> i32 {
    let mut code = 0;
    for (p, r) in paths.iter().zip(results) {
        match r {
            Ok(v) => println!("ok    {}  {}", p.display(), ok(v)),
            Err(e) => {
                eprintln!("error {}  {e}", p.display());
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

fn run(cli: Cli) -> i32 {
    let overrides = Overrides { order: cli.order, picture: cli.picture };
    match &cli.command {
        Command::Simulate { configs } => {
            let out = default_out(&cli);
            let results = run_parallel(configs, |p| run_simulate(&load(p, overrides)?, &out));
            report_errors(configs, &results, |r| {
                format!(
                    "{}: {} samples, peak <N> {:.6e} at t = {}, {:.3} s",
                    r.scenario, r.samples, r.peak_n, r.peak_n_time, r.wall_time_s
                )
            })
        }
        Command::Benchmark { configs } => {
            let out = default_out(&cli);
            let results = run_parallel(configs, |p| run_benchmark(&load(p, overrides)?, &out));
            report_errors(configs, &results, |r| {
                let worst = r.errors.iter().map(|e| e.max_abs).fold(0.0, f64::max);
                format!("{}: cutoff {}, largest deviation {:.3e}", r.scenario, r.cutoff, worst)
            })
        }
        Command::Check { mutate } => {
            let report = run_suite(*mutate);
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                let extra = c.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default();
                println!(
                    "{status}  {:<28} cases {:>4}  measured {:.3e}  tol {:.1e}{extra}",
                    c.name, c.cases, c.measured, c.tolerance
                );
            }
            let out = default_out(&cli);
            if let Err(e) = write_json(&out.join("check.json"), &report) {
                eprintln!("error {e}");
                return e.exit_code();
            }
            if report.passed {
                0
            } else {
                eprintln!("error check suite failed");
                CliError::Validation(String::new()).exit_code()
            }
        }
        Command::ConvertParams { config } => {
            let result = load_model(config).and_then(|m| convert(&m)).and_then(|r| {
                if let Some(dir) = &cli.out {
                    write_json(&dir.join("convert.json"), &r)?;
                }
                Ok(r)
            });
            match result {
                Ok(r) => {
                    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                    0
                }
                Err(e) => {
                    eprintln!("error {}  {e}", config.display());
                    e.exit_code()
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    ExitCode::from(run(cli) as u8)
}
