use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::run::{self, write_json, EXIT_HOLDS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured check once.
    Check(Common),
    /// Run the configured check over the `sweep` axis values.
    Sweep(Common),
    /// Search covariance space as configured under `hunt`.
    Hunt(Common),
    /// Draw samples of the configured distribution.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Number of draws (defaults to `n_draws`).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Evaluate the Laplace transform at points.
    Laplace {
        #[command(flatten)]
        common: Common,
        /// Comma-separated point, repeatable.
        #[arg(long = "t", value_delimiter = ',', num_args = 1.., action = clap::ArgAction::Append)]
        t: Vec<f64>,
    },
}

#[derive(Debug, Parser)]
#[command(name = "gpi-lab", version, about = "Numerical checks of product inequalities for trace-Wishart vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn load(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_run(report: &run::RunReport, common: &Common) -> anyhow::Result<i32> {
    let out = sink(common.out.as_deref())?;
    match common.format {
        Format::Json => report.write_json(out)?,
        Format::Csv => report.write_csv(out)?,
    }
    Ok(report.exit_code())
}

/// Runs one parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Check(common) => emit_run(&run::check(&load(common)?)?, common),
        Command::Sweep(common) => emit_run(&run::sweep(&load(common)?)?, common),
        Command::Hunt(common) => {
            if common.format == Format::Csv {
                bail!("hunt reports are JSON only");
            }
            let report = run::hunt(&load(common)?)?;
            write_json(&report, sink(common.out.as_deref())?)?;
            Ok(run::exit_code([report.result.best.verdict]))
        }
        Command::Sample { common, n } => {
            let config = load(common)?;
            let params = config.distribution()?.build()?;
            let sample = params.sample(n.unwrap_or(config.n_draws), config.seed)?;
            let out = sink(common.out.as_deref())?;
            match common.format {
                Format::Csv => sample.write_csv(out)?,
                Format::Json => write_json(&sample, out)?,
            }
            Ok(EXIT_HOLDS)
        }
        Command::Laplace { common, t } => {
            let config = load(common)?;
            let d = config.distribution()?.build()?.d();
            if t.len() % d.max(1) != 0 {
                bail!("--t values must come in groups of {d}");
            }
            let extra: Vec<Vec<f64>> = t.chunks(d.max(1)).map(|c| c.to_vec()).collect();
            let points = run::laplace_points(&config, &extra)?;
            let mut out = sink(common.out.as_deref())?;
            match common.format {
                Format::Json => write_json(&points, out)?,
                Format::Csv => {
                    let header: Vec<String> = (1..=d).map(|i| format!("t{i}")).chain(["value".to_string()]).collect();
                    writeln!(out, "{}", header.join(","))?;
                    for p in &points {
                        let row: Vec<String> = p.t.iter().chain([&p.value]).map(|x| x.to_string()).collect();
                        writeln!(out, "{}", row.join(","))?;
                    }
                    out.flush()?;
                }
            }
            Ok(EXIT_HOLDS)
        }
    }
}
