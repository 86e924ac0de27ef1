use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use graphlss::pipeline::{self, Command, PipelineConfig};
use graphlss::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Ingest,
    Label,
    BuildGraphs,
    Stats,
    Train,
    Infer,
    Eval,
    Ablate,
    Calibrate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Ingest => Command::Ingest,
            Cmd::Label => Command::Label,
            Cmd::BuildGraphs => Command::BuildGraphs,
            Cmd::Stats => Command::Stats,
            Cmd::Train => Command::Train,
            Cmd::Infer => Command::Infer,
            Cmd::Eval => Command::Eval,
            Cmd::Ablate => Command::Ablate,
            Cmd::Calibrate => Command::Calibrate,
        }
    }
}

/// Graph-based extractive summarization of long documents.
#[derive(Debug, Parser)]
#[command(name = "graphlss", version)]
struct Args {
    /// Pipeline step to run.
    #[arg(value_enum)]
    command: Cmd,

    /// `key = value` configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Worker threads (default: GRAPHLSS_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Run single-threaded; results are identical either way, this only
    /// rules out scheduling effects when debugging.
    #[arg(long)]
    deterministic: bool,

    /// Skip the step when its outputs already exist.
    #[arg(long)]
    skip_existing: bool,

    /// Desk-scale sampling: keep at most this many documents per split.
    #[arg(long)]
    max_docs: Option<usize>,

    /// Seed for `--max-docs` sampling.
    #[arg(long)]
    sample_seed: Option<u64>,

    /// Training seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Config overrides, `key=value`.
    overrides: Vec<String>,
}

fn thread_count(args: &Args) -> Result<Option<usize>, Error> {
    if args.deterministic {
        return Ok(Some(1));
    }
    if let Some(t) = args.threads {
        return Ok(Some(t));
    }
    match std::env::var("GRAPHLSS_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("GRAPHLSS_THREADS must be a number, got `{v}`"))),
        _ => Ok(None),
    }
}

fn run(args: &Args) -> Result<String, Error> {
    let mut cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_overrides(&args.overrides)?;
    if args.skip_existing {
        cfg.skip_existing = true;
    }
    if let Some(m) = args.max_docs {
        cfg.max_docs = Some(m);
    }
    if let Some(s) = args.sample_seed {
        cfg.sample_seed = s;
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if let Some(n) = thread_count(args)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    pipeline::run(args.command.into(), &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&args) {
        Ok(msg) => {
            if !msg.is_empty() {
                println!("{}", msg.trim_end());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("graphlss {}: {e}", Command::from(args.command).name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
