use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stabgap::problems::{list_catalog, ProblemParams};
use stabgap_cli::report::to_json;
use stabgap_cli::{emit, emit_gap, load_config, run, run_gap, ExperimentConfig, OutputFormat};

#[derive(Parser)]
#[command(
    name = "stabgap",
    version,
    about = "Stability, consistency and convergence estimates for one-step methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the catalog of built-in problems and methods.
    List,
    /// Run the full analysis for one configuration.
    Run(RunArgs),
    /// Compute only the gap curve.
    Gap(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; JSON goes to stdout when neither this nor `output.dir` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, env = "STABGAP_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "STABGAP_WORKERS")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<u8, String> {
    match Cli::parse().command {
        Command::List => {
            list()?;
            Ok(0)
        }
        Command::Run(args) => run_command(args, false),
        Command::Gap(args) => run_command(args, true),
    }
}

fn list() -> Result<(), String> {
    let catalog = list_catalog(&ProblemParams::default()).map_err(|e| e.to_string())?;
    let mut text = String::new();
    for e in &catalog.entries {
        let family = match e.cap {
            Some(c) => format!("norm cap {} + {} t", c.base, c.slope),
            None => "whole domain".to_string(),
        };
        text.push_str(&format!(
            "{}\n  {}\n  dim {}, norm {}, T = {}, dt0 = {}\n  regular family: {family}\n  methods: {}\n",
            e.name,
            e.description,
            e.dim,
            e.norm.kind,
            e.horizon,
            e.dt0,
            e.methods.join(", ")
        ));
    }
    write_stdout(&text)
}

/// Writes to stdout, treating a closed pipe (`stabgap list | head`) as success.
fn write_stdout(text: &str) -> Result<(), String> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(format!("cannot write to stdout: {e}"))
        }
        _ => Ok(()),
    }
}

fn prepare(
    args: &RunArgs,
) -> Result<(ExperimentConfig, usize, OutputFormat, Option<PathBuf>), String> {
    let mut config = load_config(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let workers = match args.workers {
        Some(0) => return Err("workers must be positive".into()),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let format = args.format.unwrap_or(config.output.format);
    let dir = args.out.clone().or_else(|| config.output.dir.clone());
    Ok((config, workers, format, dir))
}

fn run_command(args: RunArgs, gap_only: bool) -> Result<u8, String> {
    let (config, workers, format, dir) = prepare(&args)?;
    if format == OutputFormat::CsvBundle && dir.is_none() {
        return Err("csv-bundle output needs a directory (--out or output.dir)".into());
    }
    if gap_only {
        let doc = run_gap(&config, workers).map_err(|e| e.to_string())?;
        match &dir {
            Some(d) => report_paths(emit_gap(&doc, format, d).map_err(|e| e.to_string())?),
            None => write_stdout(&to_json(&doc).map_err(|e| e.to_string())?)?,
        }
        eprintln!("gap verdict: {:?}", doc.gap.verdict);
        return Ok(0);
    }

    let doc = run(&config, workers);
    match &dir {
        Some(d) => report_paths(emit(&doc, format, d).map_err(|e| e.to_string())?),
        None => write_stdout(&to_json(&doc).map_err(|e| e.to_string())?)?,
    }
    if let Some(e) = &doc.error {
        eprintln!("error: {e}");
    }
    if let Some(v) = &doc.verdict {
        eprintln!(
            "consistency {:?}, local {:?}, distant {:?}, stability {:?}, gap {:?}, convergence {:?}",
            v.consistency_verdict,
            v.local_stability.verdict,
            v.distant_stability.verdict,
            v.stability.verdict,
            v.gap.verdict,
            v.convergence_verdict
        );
        for i in &v.implications {
            eprintln!("  {}: {:?} ({})", i.name, i.status, i.evidence);
        }
        for w in &v.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(doc.exit_code() as u8)
}

fn report_paths(paths: Vec<PathBuf>) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}
