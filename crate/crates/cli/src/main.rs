//! `pd`: synthesize scenes, clean noisy label rasters with segment votes,
//! and score the result.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parcel_denoise::relabel::RelabelMode;
use parcel_denoise::Error;

#[derive(Parser, Debug)]
#[command(
    name = "pd",
    version,
    about = "Segment-vote denoising of land-cover label rasters"
)]
struct Cli {
    /// Worker threads for clustering and voting (default: all cores).
    #[arg(long, global = true, env = "PD_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene from a SceneSpec JSON file.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write PPM renders of the clean and noisy labels.
        #[arg(long)]
        render: bool,
    },
    /// Build segments with the configured provider and relabel by vote.
    Denoise {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare a predicted label raster against a reference.
    Eval {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        class_map: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Row label in the table.
        #[arg(long, default_value = "predicted")]
        name: String,
        /// Skip pixels whose reference label is the unsure class.
        #[arg(long)]
        exclude_unsure_ref: bool,
    },
    /// Run several configs on the same scene and tabulate their accuracy.
    Compare {
        configs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Reference labels, overriding each config's own.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        no_render: bool,
    },
    /// Check a MaskSet JSON file against the schema and run-length rules.
    MasksValidate {
        path: PathBuf,
        /// Expected width; checked when given.
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
}

/// Flags that replace keys of a run config.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub min_margin: Option<f64>,
    /// Let unsure pixels vote.
    #[arg(long)]
    pub unsure_votes: bool,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub no_render: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    RelabelAll,
    RelabelUnsureOnly,
}

impl From<ModeArg> for RelabelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::RelabelAll => RelabelMode::RelabelAll,
            ModeArg::RelabelUnsureOnly => RelabelMode::RelabelUnsureOnly,
        }
    }
}

/// 0 ok, 1 I/O, 2 configuration, 3 data mismatch.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 1,
        Error::Config(_) | Error::EmptyInput | Error::InsufficientPoints { .. } => 2,
        Error::Format(_)
        | Error::Corruption(_)
        | Error::Type { .. }
        | Error::Precondition(_)
        | Error::Mapping(_)
        | Error::Shape(_) => 3,
    }
}

fn dispatch(command: Command) -> parcel_denoise::Result<()> {
    match command {
        Command::Synth {
            spec,
            out_dir,
            seed,
            render,
        } => commands::synth(&spec, &out_dir, seed, render),
        Command::Denoise { config, overrides } => commands::denoise(&config, &overrides),
        Command::Eval {
            reference,
            predicted,
            class_map,
            out_dir,
            name,
            exclude_unsure_ref,
        } => commands::eval(
            &reference,
            &predicted,
            &class_map,
            &out_dir,
            &name,
            exclude_unsure_ref,
        ),
        Command::Compare {
            configs,
            out_dir,
            reference,
            no_render,
        } => commands::compare(&configs, &out_dir, reference.as_deref(), !no_render),
        Command::MasksValidate {
            path,
            width,
            height,
        } => commands::masks_validate(&path, width, height),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("pd: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pd: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pd: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
