//! `sweeplab` — Monte Carlo experiments on selective-sweep genealogies and
//! their approximating partition laws.
//!
//! Exit codes: 0 success, 1 failed validation checks, 2 configuration
//! error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sweeplab::harness::{run_experiment, ExperimentConfig, Mode};
use sweeplab::params::Params;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError { code: EXIT_IO, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Values resolve in three layers:
/// built-in defaults, then the `--config` file, then explicit flags.
#[derive(Args, Debug, Clone)]
struct SharedArgs {
    /// Population size N; the model holds 2N individuals
    #[arg(long = "N", value_name = "N")]
    n: Option<u32>,

    /// Selective advantage s in (0,1)
    #[arg(long)]
    s: Option<f64>,

    /// Recombination probability r per birth, in [0,1)
    #[arg(long)]
    r: Option<f64>,

    /// Lineages sampled per replicate
    #[arg(long = "sample-size", value_name = "N_SAMPLE")]
    sample_size: Option<u32>,

    /// Replicates (sweeps or law draws)
    #[arg(long)]
    reps: Option<u64>,

    /// Master seed; replicate i always runs on stream i of this seed
    #[arg(long)]
    seed: Option<u64>,

    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Flat key=value config file mirroring the long flags; flags override
    /// file values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Worker threads; defaults to one per CPU
    #[arg(long)]
    threads: Option<usize>,

    /// Suppress progress reporting on standard error
    #[arg(long)]
    quiet: bool,
}

#[derive(Parser, Debug)]
#[command(
    name = "sweeplab",
    version,
    about = "Monte Carlo laboratory for genealogies under a selective sweep",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conditioned two-locus sweeps with backward ancestry tracing
    Moran {
        #[command(flatten)]
        shared: SharedArgs,
        /// Sweep level J at which escape counts are histogrammed
        /// (repeatable)
        #[arg(long = "J", value_name = "J")]
        levels: Vec<u32>,
    },
    /// The one-coin-per-lineage partition law and its analytic statistics
    Qp {
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// The stick-breaking partition law; add --q for the thinned variant
    Paintbox {
        #[command(flatten)]
        shared: SharedArgs,
        /// Paintbox size L; defaults to floor(2N s)
        #[arg(long = "L", value_name = "L")]
        l: Option<u32>,
        /// Thinning probability in [0,1]; selects the thinned law
        #[arg(long)]
        q: Option<f64>,
    },
    /// The typed branching skeleton, compared against the paintbox law
    Skeleton {
        #[command(flatten)]
        shared: SharedArgs,
        /// Skeleton size H; defaults to floor(2N s)
        #[arg(long = "H", value_name = "H")]
        h: Option<u32>,
    },
    /// Three-row law comparison (analytic, sweep MC, paintbox) per preset
    /// rate
    Table {
        #[command(flatten)]
        shared: SharedArgs,
        /// Named rate preset; "sweep-2004" fixes r in {0.00106, 0.00516}
        /// (N and s keep their defaults 10000 and 0.1 unless overridden)
        #[arg(long)]
        preset: Option<String>,
    },
    /// Fast self-checks of the configured setup
    Validate {
        #[command(flatten)]
        shared: SharedArgs,
    },
}

/// Values read from a `--config` file; every field mirrors a long flag.
#[derive(Debug, Default)]
struct FileValues {
    n: Option<u32>,
    s: Option<f64>,
    r: Option<f64>,
    sample_size: Option<u32>,
    reps: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<FormatArg>,
    threads: Option<usize>,
    quiet: Option<bool>,
    l: Option<u32>,
    q: Option<f64>,
    h: Option<u32>,
    levels: Option<Vec<u32>>,
    preset: Option<String>,
}

fn parse_value<T: FromStr>(key: &str, value: &str, place: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::config(format!("{place}: invalid value for {key}: {e}")))
}

fn parse_config_file(path: &Path) -> Result<FileValues, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    let mut vals = FileValues::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let place = format!("{}:{}", path.display(), idx + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!("{place}: expected key=value, got {line:?}")));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "N" => vals.n = Some(parse_value(key, value, &place)?),
            "s" => vals.s = Some(parse_value(key, value, &place)?),
            "r" => vals.r = Some(parse_value(key, value, &place)?),
            "sample-size" => vals.sample_size = Some(parse_value(key, value, &place)?),
            "reps" => vals.reps = Some(parse_value(key, value, &place)?),
            "seed" => vals.seed = Some(parse_value(key, value, &place)?),
            "out" => vals.out = Some(PathBuf::from(value)),
            "format" => {
                vals.format = Some(match value {
                    "csv" => FormatArg::Csv,
                    "json" => FormatArg::Json,
                    other => {
                        return Err(CliError::config(format!(
                            "{place}: format must be csv or json, got {other:?}"
                        )))
                    }
                })
            }
            "threads" => vals.threads = Some(parse_value(key, value, &place)?),
            "quiet" => {
                vals.quiet = Some(match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(CliError::config(format!(
                            "{place}: quiet must be true or false, got {other:?}"
                        )))
                    }
                })
            }
            "L" => vals.l = Some(parse_value(key, value, &place)?),
            "q" => vals.q = Some(parse_value(key, value, &place)?),
            "H" => vals.h = Some(parse_value(key, value, &place)?),
            "J" => {
                let levels = value
                    .split(',')
                    .map(|piece| parse_value::<u32>(key, piece.trim(), &place))
                    .collect::<Result<Vec<u32>, CliError>>()?;
                vals.levels = Some(levels);
            }
            "preset" => vals.preset = Some(value.to_string()),
            other => {
                return Err(CliError::config(format!("{place}: unknown config key {other:?}")))
            }
        }
    }
    Ok(vals)
}

struct Job {
    config: ExperimentConfig,
    out: Option<PathBuf>,
    format: FormatArg,
}

fn build_job(command: Command) -> Result<Job, CliError> {
    let (base_mode, shared, mut l, mut q, mut h, cli_levels, cli_preset) = match command {
        Command::Moran { shared, levels } => (Mode::Moran, shared, None, None, None, levels, None),
        Command::Qp { shared } => (Mode::Qp, shared, None, None, None, Vec::new(), None),
        Command::Paintbox { shared, l, q } => (Mode::Paintbox, shared, l, q, None, Vec::new(), None),
        Command::Skeleton { shared, h } => (Mode::Skeleton, shared, None, None, h, Vec::new(), None),
        Command::Table { shared, preset } => (Mode::Table, shared, None, None, None, Vec::new(), preset),
        Command::Validate { shared } => (Mode::Validate, shared, None, None, None, Vec::new(), None),
    };
    let file = match &shared.config {
        Some(path) => parse_config_file(path)?,
        None => FileValues::default(),
    };

    let n = shared.n.or(file.n).unwrap_or(10_000);
    let s = shared.s.or(file.s).unwrap_or(0.1);
    let r = shared.r.or(file.r).unwrap_or(0.00106);
    let sample_size = shared.sample_size.or(file.sample_size).unwrap_or(2);
    let reps = shared.reps.or(file.reps).unwrap_or(10_000);
    let seed = shared.seed.or(file.seed).unwrap_or(1);
    let out = shared.out.or(file.out);
    let format = shared.format.or(file.format).unwrap_or(FormatArg::Csv);
    let threads = shared.threads.or(file.threads);
    let quiet = shared.quiet || file.quiet.unwrap_or(false);
    l = l.or(file.l);
    q = q.or(file.q);
    h = h.or(file.h);
    let levels = if cli_levels.is_empty() { file.levels.unwrap_or_default() } else { cli_levels };
    let preset = cli_preset.or(file.preset);

    if let Some(name) = &preset {
        if base_mode != Mode::Table {
            return Err(CliError::config(format!(
                "preset applies only to the table subcommand, not {base_mode}"
            )));
        }
        if name != "sweep-2004" {
            return Err(CliError::config(format!(
                "unknown preset {name:?}; available: sweep-2004"
            )));
        }
    }

    // --q on the paintbox subcommand selects the thinned law.
    let mode = if base_mode == Mode::Paintbox && q.is_some() { Mode::PaintboxThinned } else { base_mode };

    let params =
        Params::new(n, s, r, sample_size, seed).map_err(|e| CliError::config(e.to_string()))?;
    let mut config = ExperimentConfig::new(mode, params, reps);
    config.l = l;
    config.q = q;
    config.h = h;
    config.levels = levels;
    config.threads = threads;
    config.progress = !quiet;
    config.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(Job { config, out, format })
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    let job = build_job(cli.command)?;
    let table = run_experiment(&job.config).map_err(|e| CliError::config(e.to_string()))?;
    let rendered = match job.format {
        FormatArg::Csv => table.to_csv(),
        FormatArg::Json => {
            let mut text = serde_json::to_string_pretty(&table)
                .map_err(|e| CliError::io(format!("cannot serialize report: {e}")))?;
            text.push('\n');
            text
        }
    };
    match &job.out {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    if job.config.mode == Mode::Validate {
        let failed = table.scalar_rows.iter().filter(|row| row.estimate != 1.0).count();
        if failed > 0 {
            eprintln!("sweeplab: {failed} validation check(s) failed");
            return Ok(ExitCode::from(EXIT_VALIDATION));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("sweeplab: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
