use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ruinsim::harness::{self, diag, report, ExperimentConfig, Format};
use ruinsim::Error;

const EXIT_OK: u8 = 0;
const EXIT_GATE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(name = "ruinsim", version, about = "Finite-time ruin asymptotics and their Monte Carlo verification")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for report files; without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment in --config.
    Simulate,
    /// Evaluates the asymptotic formulas of --config (or a bundle) without simulating.
    Asymptotic {
        /// Bundled id used when --config is absent.
        id: Option<String>,
    },
    /// Runs a bundled verification config.
    Verify {
        /// thm1.1, thm1.2, thm1.3, cor1.1, thm1.5 (thm1.4), thm4.1, thm4.2,
        /// thm4.3, lemma2.1, prop1.4-1.6, prop1.3
        id: String,
    },
    /// Tail-class diagnostics for a law or for the laws of --config.
    TailDiag {
        /// Inline law, e.g. '{ family = "pareto", alpha = 2.0, scale = 1.0 }'.
        #[arg(long)]
        law: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Gate(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Gate(_) => Failure::Gate(e.to_string()),
            Error::Config(_) | Error::Toml(_) | Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

fn read_config(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(cli: &Cli, bundle_id: Option<&str>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&cli.config, bundle_id) {
        (Some(p), _) => ExperimentConfig::from_toml(&read_config(p)?)?,
        (None, Some(id)) => harness::bundle(id)?,
        (None, None) => return Err(Failure::Usage("--config is required".into())),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn emit(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let started = Instant::now();
    let rep = harness::run(cfg)?;
    let runtime = started.elapsed();
    let dir = cli.out.clone().or_else(|| cfg.output.dir.clone());
    let mut stdout = std::io::stdout().lock();
    match dir {
        Some(dir) => {
            let written =
                report::write_report(&rep, &dir, cli.format.into(), &cfg.output.csv, &cfg.output.summary, runtime)?;
            for p in written {
                writeln!(stdout, "wrote {}", p.display())?;
            }
        }
        None => match cli.format {
            OutFormat::Csv => stdout.write_all(report::ratio_csv(&rep).as_bytes())?,
            OutFormat::Json => stdout.write_all(report::to_json(&rep)?.as_bytes())?,
        },
    }
    let s = &rep.summary;
    let devs: Vec<String> = s.deviations.iter().map(|d| format!("{d:.4}")).collect();
    eprintln!(
        "{}: verdict {:?}, deviations [{}], {} checks, {:.1}s",
        s.name,
        s.verdict,
        devs.join(", "),
        s.checks.len(),
        runtime.as_secs_f64()
    );
    Ok(())
}

fn asymptotic(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let table = harness::asymptotic_table(cfg)?;
    let body = match cli.format {
        OutFormat::Csv => report::asymptotic_csv(&table),
        OutFormat::Json => report::to_json(&table)?,
    };
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let name = match cli.format {
                OutFormat::Csv => "asymptotic.csv",
                OutFormat::Json => "asymptotic.json",
            };
            std::fs::write(dir.join(name), body)?;
        }
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn tail_diag(cli: &Cli, law: Option<&str>) -> Result<(), Failure> {
    let value = match (law, &cli.config) {
        (Some(l), _) => serde_json::to_value(diag::tail_diagnostics(&diag::parse_law(l)?)?)
            .map_err(|e| Failure::Internal(e.to_string()))?,
        (None, Some(p)) => diag::diagnose_document(&read_config(p)?)?,
        (None, None) => return Err(Failure::Usage("tail-diag needs --law or --config".into())),
    };
    let body = serde_json::to_string_pretty(&value).map_err(|e| Failure::Internal(e.to_string()))?;
    writeln!(std::io::stdout().lock(), "{body}")?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate => emit(cli, &load(cli, None)?),
        Command::Verify { id } => {
            let mut cfg = harness::bundle(id)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            emit(cli, &cfg)
        }
        Command::Asymptotic { id } => asymptotic(cli, &load(cli, id.as_deref())?),
        Command::TailDiag { law } => tail_diag(cli, law.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Gate(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_GATE)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
