use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use defense_games::parallel::with_workers;
use defense_games::Execution;
use defense_games_cli::config::{ExperimentConfig, TaskKind};
use defense_games_cli::files::{gen_instance, read_json, verify_pair, GenRequest};
use defense_games_cli::{run_experiment, CliError, Result, Summary, TranscriptLine};

const TRANSCRIPTS: &str = "transcripts.jsonl";
const SUMMARY: &str = "summary.json";

#[derive(Parser)]
#[command(
    name = "dgames",
    version,
    about = "Detection and mitigation games against adversarial inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task instance: public file, secret file and sample pairs.
    GenInstance {
        /// Read task and instance parameters from an experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: Option<TaskKind>,
        /// Security parameter in bits (at least 128).
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write transcripts plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Evaluate the error oracle on a pair of payload files.
    VerifyPair {
        /// Directory written by gen-instance.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Use the secret file and print the decoded levels.
        #[arg(long)]
        white_box: bool,
    },
    /// Recompute the summary of a finished run from its transcripts.
    Report {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(CliError::io(path))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    emit(&text)
}

/// Write one line to stdout. A closed pipe (`dgames ... | head`) is not an
/// error.
fn emit(line: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Runtime(e.to_string())),
        _ => Ok(()),
    }
}

fn cmd_gen_instance(
    config: Option<PathBuf>,
    task: Option<TaskKind>,
    n: Option<u32>,
    seed: Option<u64>,
    out: PathBuf,
) -> Result<()> {
    let cfg = match &config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let task = task
        .or(cfg.task)
        .ok_or_else(|| CliError::Config("no task given; pass --task or --config".into()))?;
    let req = GenRequest {
        task,
        n: n.unwrap_or(cfg.params.n),
        seed: seed.or(cfg.instance_seed).unwrap_or(cfg.seed),
        cap: cfg.instance.cap,
        width: cfg.instance.width,
        horizon: cfg.agents.t_train,
        eta: cfg.instance.eta,
        support: cfg.instance.support,
    };
    for path in gen_instance(&req, &out)? {
        emit(&path.display().to_string())?;
    }
    Ok(())
}

fn cmd_run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>, workers: usize) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let out = out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Config("no output directory; pass --out or set `out`".into()))?;
    let resolved = cfg.resolve()?;
    let lines = with_workers(workers, || run_experiment(&resolved, Execution::default()))?;

    std::fs::create_dir_all(&out).map_err(CliError::io(&out))?;
    let path = out.join(TRANSCRIPTS);
    let file = std::fs::File::create(&path).map_err(CliError::io(&path))?;
    let mut writer = std::io::BufWriter::new(file);
    for line in &lines {
        let text = serde_json::to_string(line).map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(writer, "{text}").map_err(CliError::io(&path))?;
    }
    writer.flush().map_err(CliError::io(&path))?;

    let config = serde_json::to_value(&resolved).map_err(|e| CliError::Runtime(e.to_string()))?;
    let summary = Summary::from_lines(&lines, Some(config))?;
    let path = out.join(SUMMARY);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(&path, format!("{text}\n")).map_err(CliError::io(&path))?;
    print_json(&summary)
}

fn cmd_verify_pair(instance: PathBuf, x: PathBuf, y: PathBuf, white_box: bool) -> Result<()> {
    let verdict = verify_pair(&instance, &read(&x)?, &read(&y)?, white_box)?;
    let text = serde_json::to_string(&verdict).map_err(|e| CliError::Runtime(e.to_string()))?;
    emit(&text)
}

fn cmd_report(out: PathBuf) -> Result<()> {
    let path = out.join(TRANSCRIPTS);
    let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let lines = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str::<TranscriptLine>(l)
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary_path = out.join(SUMMARY);
    let config = if summary_path.exists() {
        read_json::<Summary>(&summary_path)?.config
    } else {
        None
    };
    print_json(&Summary::from_lines(&lines, config)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenInstance {
            config,
            task,
            n,
            seed,
            out,
        } => cmd_gen_instance(config, task, n, seed, out),
        Command::Run {
            config,
            seed,
            out,
            workers,
        } => cmd_run(config, seed, out, workers),
        Command::VerifyPair {
            instance,
            x,
            y,
            white_box,
        } => cmd_verify_pair(instance, x, y, white_box),
        Command::Report { out } => cmd_report(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dgames: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
