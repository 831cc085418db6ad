use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ctxengage_core::ingest::{atomic_write, write_tsv, TsvOptions};
use ctxengage_core::learn::Kind;
use ctxengage_core::pipeline::{self, PipelineConfig, Stage};
use ctxengage_core::synthgen::{self, SynthConfig};
use ctxengage_core::{Source, Technique};

#[derive(Parser)]
#[command(name = "ctxengage", version, about = "Context-only tweet engagement prediction pipeline")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// Artifact root directory.
    #[arg(long, global = true, env = "CTXENGAGE_ROOT")]
    root: Option<PathBuf>,
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    create_even_if_already_exist: bool,
    #[arg(long, global = true)]
    dev: bool,
    #[arg(long, global = true)]
    rewrite_existing_models: bool,
    #[arg(long, global = true)]
    recreate_missing_models: bool,
    #[arg(long, global = true, value_delimiter = ',')]
    import_datasets: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    sampling_techniques: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    sampling_percentages: Option<Vec<u32>>,
    #[arg(long, global = true, value_delimiter = ',')]
    classifier_names: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    top_ns: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    features_notes: Option<Vec<String>>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic 14-day corpus into the raw input path.
    Synthgen {
        /// TOML generator configuration.
        #[arg(long)]
        synth_config: Option<PathBuf>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        signal_strength: Option<f64>,
    },
    /// Split the raw corpus and draw all configured samples.
    Sample,
    /// Run a single stage over every configured dataset.
    Stage { name: String },
    /// Run every stage in order.
    RunAll,
    /// Print the completion matrix.
    Status,
    /// Print best results and factor statistics.
    Report,
}

fn parse_list<T: FromStr<Err = ctxengage_core::Error>>(v: &[String]) -> Result<Vec<T>> {
    v.iter().map(|s| Ok(s.parse::<T>()?)).collect()
}

fn load_config(o: &Opts) -> Result<PipelineConfig> {
    let mut cfg = match &o.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            PipelineConfig::from_toml(&text)?
        }
        None => PipelineConfig::default(),
    };
    if let Some(r) = &o.root {
        cfg.root = r.clone();
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(a) = o.alpha {
        cfg.alpha = a;
    }
    cfg.create_even_if_already_exist |= o.create_even_if_already_exist;
    cfg.dev |= o.dev;
    cfg.rewrite_existing_models |= o.rewrite_existing_models;
    cfg.recreate_missing_models |= o.recreate_missing_models;
    if let Some(v) = &o.import_datasets {
        cfg.import_datasets = parse_list::<Source>(v)?;
    }
    if let Some(v) = &o.sampling_techniques {
        cfg.sampling_techniques = parse_list::<Technique>(v)?;
    }
    if let Some(v) = &o.sampling_percentages {
        cfg.sampling_percentages = v.clone();
    }
    if let Some(v) = &o.classifier_names {
        cfg.classifier_names = parse_list::<Kind>(v)?;
    }
    if let Some(v) = &o.top_ns {
        cfg.top_ns = v.clone();
    }
    if let Some(v) = &o.features_notes {
        cfg.features_notes = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .init();
    let cfg = load_config(&cli.opts)?;
    match cli.cmd {
        Cmd::Synthgen {
            synth_config,
            rows,
            signal_strength,
        } => {
            let mut sc = match synth_config {
                Some(p) => SynthConfig::from_toml(&std::fs::read_to_string(&p)?)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = cli.opts.seed {
                sc.seed = s;
            }
            if let Some(n) = rows {
                sc.n_rows = n;
            }
            if let Some(s) = signal_strength {
                sc.signal_strength = s;
            }
            sc.validate()?;
            let table = synthgen::generate(&sc)?;
            let mut buf = Vec::new();
            write_tsv(&table, &mut buf, &TsvOptions::default())?;
            let path = cfg.input_path();
            atomic_write(&path, &buf)?;
            println!("wrote {} rows to {}", table.row_count(), path.display());
        }
        Cmd::Sample => {
            let n = pipeline::run_stage(Stage::Dataprep, &cfg)?;
            println!("dataprep: {n} datasets written");
        }
        Cmd::Stage { name } => {
            let stage: Stage = name.parse()?;
            let n = pipeline::run_stage(stage, &cfg)?;
            println!("{stage}: {n} datasets processed");
        }
        Cmd::RunAll => pipeline::run_all(&cfg)?,
        Cmd::Status => print!("{}", pipeline::status(&cfg)),
        Cmd::Report => print!("{}", pipeline::report(&cfg)?),
    }
    Ok(())
}
