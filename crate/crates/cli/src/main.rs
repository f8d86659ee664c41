//! `hphase`: runs the acceptance checks and demos.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hphase::hpdo::counterexample_demo;
use hphase_cli::checks::{find, registry, run_check, run_suite, Context, COUNTEREXAMPLE_WINDOWS};
use hphase_cli::report::{emit_report, CheckReport, Format};
use hphase_cli::RunConfig;

const AFTER_HELP: &str = "\
Output files (written to --out, default ./hphase-out):
  <check>.json   name, criterion, passed, metrics [{name, value, tolerance, relation, passed}],
                 error, runtime_s, config_hash, seed
  summary.json   {check: passed}
  <check>.csv    the check's table; values in %.17e, runtime excluded so reruns are byte-identical

Configuration keys (file lines `key = value`, or --set key=value):
  d, n_max, half_width, points, lambda_nodes, lambda_min, lambda_max, seed, out,
  tol.<check>.<metric>

Exit codes: 0 all selected checks passed, 1 a check failed, 2 configuration error or unknown check.";

#[derive(Parser)]
#[command(name = "hphase", version, about = "Phase-space analysis on the Heisenberg group: acceptance checks", after_help = AFTER_HELP)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override one configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutFormat::Json, global = true)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named check.
    Check { name: String },
    /// Run every check whose name matches FILTER (`*` wildcards).
    Suite {
        #[arg(default_value = "*")]
        filter: String,
    },
    /// Print a demo table.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
    /// List the registered checks.
    List,
}

#[derive(Subcommand)]
enum Demo {
    /// sup over |s| ≤ S of |s^N Op(a)f| for the non-smooth symbol with parameter k.
    Counterexample {
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long = "N", default_value_t = 6)]
        n: u32,
    },
}

fn config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(cli.set.iter().map(String::as_str))?;
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn finish(reports: &[CheckReport], cfg: &RunConfig, format: OutFormat) -> ExitCode {
    for r in reports {
        println!("{}", r.summary_line());
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("hphase-out"));
    let fmt = match format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    };
    if let Err(e) = emit_report(reports, fmt, &dir) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if reports.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    }
    match &cli.command {
        Command::List => {
            for c in registry() {
                println!("{:>2} {:<22} {}", c.criterion, c.name, c.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Check { name } => match find(name) {
            Some(check) => {
                let ctx = Context::new(cfg.clone());
                finish(&[run_check(check, &ctx)], &cfg, cli.format)
            }
            None => {
                eprintln!("unknown check {name:?}; see `hphase list`");
                ExitCode::from(2)
            }
        },
        Command::Suite { filter } => {
            let ctx = Context::new(cfg.clone());
            let reports = run_suite(filter, &ctx);
            if reports.is_empty() {
                eprintln!("no check matches {filter:?}");
                return ExitCode::from(2);
            }
            finish(&reports, &cfg, cli.format)
        }
        Command::Demo { demo: Demo::Counterexample { k, n } } => {
            println!("s_window,sup");
            for r in counterexample_demo(*k, *n, &COUNTEREXAMPLE_WINDOWS) {
                println!("{:.17e},{:.17e}", r.s_window, r.sup);
            }
            ExitCode::SUCCESS
        }
    }
}
