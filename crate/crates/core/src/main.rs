use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chemlm::pipeline::{self, Command, Settings};

#[derive(Parser)]
#[command(name = "chemlm", version, about = "Train and evaluate language models on 3D chemical structure files")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` settings file; command-line flags win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $CHEMLM_OUT/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra settings as key=value, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus of structure files.
    Synth {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        precision: Option<u8>,
        #[command(flatten)]
        common: Common,
    },
    /// Parse a directory of structure files into a tokenized corpus.
    Prepare {
        #[arg(long)]
        input: Option<PathBuf>,
        /// char or atom_coord
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        precision: Option<u8>,
        /// char or whole_token
        #[arg(long)]
        lattice_mode: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model on a prepared corpus.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Random rotation (molecules, pockets) during training: on or off.
        #[arg(long, value_name = "on|off")]
        augment: Option<String>,
        #[arg(long)]
        augment_attempts: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Sample structures from a trained checkpoint.
    Sample {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to vocab.txt next to the checkpoint.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        temperature: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Score samples against the training corpus.
    Evaluate {
        /// Sample directory (samples.txt) or a directory of structure files.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Prepared training corpus.
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Render evaluation reports as a table and plot-ready CSVs.
    Report {
        /// Comma-separated evaluate directories or report.json files.
        #[arg(long)]
        input: Option<String>,
        /// Comma-separated column names.
        #[arg(long)]
        names: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn settings(common: &Common, flags: Vec<(&str, Option<String>)>) -> chemlm::Result<Settings> {
    let mut pairs: Vec<(String, String)> = flags
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
    if let Some(seed) = common.seed {
        pairs.push(("seed".into(), seed.to_string()));
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| chemlm::Error::Invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let cli = Settings::from_pairs(pairs)?;
    match &common.config {
        Some(path) => Ok(cli.over(&Settings::load(path)?)),
        None => Ok(cli),
    }
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn dispatch(cli: Cli) -> chemlm::Result<()> {
    let (command, common, flags) = match &cli.command {
        Cmd::Synth { kind, n, precision, common } => (
            Command::Synth,
            common,
            vec![("kind", kind.clone()), ("n", s(n)), ("precision", s(precision))],
        ),
        Cmd::Prepare { input, scheme, precision, lattice_mode, common } => (
            Command::Prepare,
            common,
            vec![
                ("input", p(input)),
                ("scheme", scheme.clone()),
                ("precision", s(precision)),
                ("lattice_mode", lattice_mode.clone()),
            ],
        ),
        Cmd::Train { corpus, steps, batch_size, lr, augment, augment_attempts, common } => (
            Command::Train,
            common,
            vec![
                ("corpus", p(corpus)),
                ("steps", s(steps)),
                ("batch_size", s(batch_size)),
                ("lr", s(lr)),
                ("augment", augment.clone()),
                ("augment_attempts", s(augment_attempts)),
            ],
        ),
        Cmd::Sample { checkpoint, vocab, samples, temperature, common } => (
            Command::Sample,
            common,
            vec![
                ("checkpoint", p(checkpoint)),
                ("vocab", p(vocab)),
                ("samples", s(samples)),
                ("temperature", s(temperature)),
            ],
        ),
        Cmd::Evaluate { input, train, common } => (
            Command::Evaluate,
            common,
            vec![("input", p(input)), ("train", p(train))],
        ),
        Cmd::Report { input, names, common } => (
            Command::Report,
            common,
            vec![("input", input.clone()), ("names", names.clone())],
        ),
    };
    let out = pipeline::resolve_output_dir(common.out.as_deref(), command);
    let settings = settings(common, flags)?;
    pipeline::run(command, &settings, &out)?;
    if command == Command::Report {
        if let Ok(table) = std::fs::read_to_string(out.join("table.txt")) {
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
        Err(_) => ExitCode::from(2),
    }
}
