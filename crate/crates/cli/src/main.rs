use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod svg;

use config::{CliError, CliResult, Dims, Settings};

/// Quantum image classification experiments on a statevector simulator.
///
/// Settings come from an optional `key = value` file (`--config`); flags
/// override file values. Set QSCENE_LOG to error, info or debug.
#[derive(Parser)]
#[command(name = "qscene", version)]
struct Cli {
    /// Flat `key = value` run description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice in the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, or output file for `export`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Loading scheme: aae, bae or pae.
    #[arg(long)]
    scheme: Option<String>,
    /// Register size for aae and pae.
    #[arg(long)]
    qubits: Option<usize>,
    /// Model input size, HxW.
    #[arg(long)]
    image: Option<Dims>,
    /// Block grid for bae, HxW.
    #[arg(long)]
    grid: Option<Dims>,
    /// Processing layers.
    #[arg(long)]
    layers: Option<usize>,
    /// line, ring or all_to_all.
    #[arg(long)]
    connectivity: Option<String>,
    /// cx, cz or rzz.
    #[arg(long)]
    entangler: Option<String>,
    /// Alternate even and odd edges between layers.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    brickwork: Option<bool>,
    /// Comma-separated measured qubits (bae: local index, one per block).
    #[arg(long)]
    measured: Option<String>,
    #[arg(long)]
    loader_layers: Option<usize>,
    /// Hierarchical stages, or `auto`.
    #[arg(long)]
    loader_stages: Option<String>,
    #[arg(long)]
    loader_steps: Option<usize>,
    #[arg(long)]
    loader_lr: Option<f64>,
}

#[derive(Args, Default)]
struct InputArgs {
    /// Trained model artifact.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Single image file to run instead of a dataset sample.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Dataset (tensor cache or class directory tree).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Sample index within `--data`.
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded synthetic train and test sets.
    SynthData {
        /// bright_vs_dark or gradient_4class.
        #[arg(long)]
        kind: Option<String>,
        /// Training images per class.
        #[arg(long)]
        n: Option<usize>,
        /// Test images per class.
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        image: Option<Dims>,
        #[arg(long)]
        noise: Option<f64>,
        /// Also write PNG class directories.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        png: Option<bool>,
    },
    /// Fit amplitude loaders (aae, bae) for every image of a dataset.
    TrainLoader {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train a classifier; loaders are fitted once and then frozen.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Reuse loaders written by `train-loader`.
        #[arg(long)]
        loaders: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        val_fraction: Option<f64>,
    },
    /// Score a model on a dataset and append a row to eval.csv.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        loaders: Option<PathBuf>,
    },
    /// Classify one image exactly and from finite shots.
    Infer {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated shot counts.
        #[arg(long)]
        shots: Option<String>,
        /// Repetitions per shot count.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Write a model circuit as OpenQASM 2.0.
    Export {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Accuracy a random guesser exceeds with probability 1 − q.
    Baseline {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Render SVG charts from CSV artifacts in a run directory.
    Report {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn model_flags(s: &mut Settings, m: ModelArgs) {
    s.set("scheme", m.scheme);
    s.set("qubits", m.qubits);
    s.set("image", m.image);
    s.set("grid", m.grid);
    s.set("layers", m.layers);
    s.set("connectivity", m.connectivity);
    s.set("entangler", m.entangler);
    s.set("brickwork", m.brickwork);
    s.set("measured", m.measured);
    s.set("loader_layers", m.loader_layers);
    s.set("loader_stages", m.loader_stages);
    s.set("loader_steps", m.loader_steps);
    s.set("loader_lr", m.loader_lr);
}

fn input_flags(s: &mut Settings, i: InputArgs) {
    s.set("model", i.model.map(|p| p.display().to_string()));
    s.set("input", i.input.map(|p| p.display().to_string()));
    s.set("test_data", i.data.map(|p| p.display().to_string()));
    s.set("index", i.index);
}

fn run(cli: Cli) -> CliResult<()> {
    let mut s = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
    s.set("seed", cli.seed);
    s.set("threads", cli.threads);
    s.set("out", path(cli.out));
    if let Some(n) = s.opt::<usize>("threads")? {
        if n == 0 {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("threads", e.to_string()))?;
    }
    match cli.command {
        Command::SynthData { kind, n, n_test, image, noise, png } => {
            s.set("kind", kind);
            s.set("n", n);
            s.set("n_test", n_test);
            s.set("image", image);
            s.set("noise", noise);
            s.set("png", png);
            commands::synth_data(&mut s)
        }
        Command::TrainLoader { model, data } => {
            model_flags(&mut s, model);
            s.set("train_data", path(data));
            commands::train_loader(&mut s)
        }
        Command::Train { model, data, loaders, epochs, batch_size, lr, val_fraction } => {
            model_flags(&mut s, model);
            s.set("train_data", path(data));
            s.set("loaders", path(loaders));
            s.set("epochs", epochs);
            s.set("batch_size", batch_size);
            s.set("lr", lr);
            s.set("val_fraction", val_fraction);
            commands::train(&mut s)
        }
        Command::Eval { model, data, loaders } => {
            s.set("model", path(model));
            s.set("test_data", path(data));
            s.set("loaders", path(loaders));
            commands::eval(&mut s)
        }
        Command::Infer { input, shots, seeds } => {
            input_flags(&mut s, input);
            s.set("shots", shots);
            s.set("seeds", seeds);
            commands::infer(&mut s)
        }
        Command::Export { input } => {
            input_flags(&mut s, input);
            commands::export(&mut s)
        }
        Command::Baseline { n, p, q, trials } => {
            s.set("n", n);
            s.set("p", p);
            s.set("q", q);
            s.set("trials", trials);
            commands::baseline(&mut s)
        }
        Command::Report { dir } => {
            s.set("dir", path(dir));
            commands::report(&mut s)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QSCENE_LOG", "info")).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::FAILURE
        }
    }
}
