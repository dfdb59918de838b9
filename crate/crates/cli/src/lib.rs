//! Command-line driver: trace generation and analysis, single plans,
//! simulation sweeps and threshold search, all configured from one TOML file.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use roadcache_core::metrics::write_csv;
use roadcache_core::trace::{
    derive_coverage_from_positions, load_en_layout, load_positions, write_coverage_events,
};

use crate::commands::TraceAnalysis;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "roadcache",
    version,
    about = "Probabilistic prefetching for roadside edge caches"
)]
pub struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed; simulate and optimize run this seed only.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: config `out_dir`, else ./out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic coverage trace (trace.csv) from [trace.synthetic].
    GenerateTrace,
    /// Dwell statistics, concurrent users and significant paths of a trace.
    AnalyzeTrace {
        /// Coverage-event CSV, or position samples when --en-layout is given;
        /// defaults to the configured trace.
        trace: Option<PathBuf>,
        /// EN sites CSV (`en_id,x,y,radius`) used to derive coverage.
        #[arg(long)]
        en_layout: Option<PathBuf>,
        #[arg(long)]
        path_len: Option<usize>,
        #[arg(long)]
        min_cars: Option<usize>,
    },
    /// Download probabilities and the RICH plan for the [plan] section.
    Plan {
        /// Comma-separated thresholds, one per path position.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        taus: Option<Vec<f64>>,
        /// Number of chunks of the content.
        #[arg(long)]
        chunks: Option<usize>,
        /// Chunks already held by the car.
        #[arg(long)]
        delivered: Option<usize>,
    },
    /// Run the [sweep] and write results.csv and results.json.
    Simulate {
        /// Coverage-event CSV replacing the configured trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exhaustive search of per-position RICH thresholds.
    OptimizeThresholds {
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Comma-separated candidate thresholds.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid: Option<Vec<f64>>,
        /// Number of path positions with their own threshold.
        #[arg(long)]
        dims: Option<usize>,
    },
}

/// Parses `args`, executes the command and returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match catch_unwind(AssertUnwindSafe(|| execute(&cli))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => EXIT_INTERNAL,
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.sweep.seeds = vec![seed];
        config.optimize.seeds = vec![seed];
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    match &cli.command {
        Command::GenerateTrace => {
            let events = commands::generate_trace(&config, config.seed)?;
            let path = out_dir.join("trace.csv");
            write_coverage_events(create(&path)?, &events)
                .map_err(|e| CliError::input(&path, e))?;
            log::info!(
                "wrote {} coverage events to {}",
                events.len(),
                path.display()
            );
        }
        Command::AnalyzeTrace {
            trace,
            en_layout,
            path_len,
            min_cars,
        } => {
            if let Some(n) = path_len {
                config.analysis.path_len = *n;
            }
            if let Some(n) = min_cars {
                config.analysis.min_cars = *n;
            }
            let events = match (trace, en_layout) {
                (Some(positions), Some(layout)) => {
                    let samples = load_positions(open(positions)?)
                        .map_err(|e| CliError::input(positions, e))?;
                    let sites =
                        load_en_layout(open(layout)?).map_err(|e| CliError::input(layout, e))?;
                    derive_coverage_from_positions(&samples, &sites)?
                }
                (Some(path), None) => commands::read_coverage_file(path)?,
                (None, Some(_)) => {
                    return Err(CliError::Usage("--en-layout needs a positions file".into()))
                }
                (None, None) => roadcache_core::trace::flatten_paths(&commands::trace_for_seed(
                    &config.trace,
                    config.seed,
                )?),
            };
            let analysis = commands::analyze_trace(&events, &config.analysis)?;
            write_analysis(&out_dir, &analysis)?;
        }
        Command::Plan {
            taus,
            chunks,
            delivered,
        } => {
            if let Some(t) = taus {
                config.plan.taus = t.clone();
            }
            if let Some(k) = chunks {
                config.plan.n_chunks = *k;
            }
            if let Some(d) = delivered {
                config.plan.delivered = *d;
            }
            let out = commands::plan(&config)?;
            write_text(&out_dir.join("phi.json"), &out.phi.to_json()?)?;
            write_text(&out_dir.join("plan.json"), &out.plan.to_json()?)?;
            let laws: Vec<&[f64]> = out.laws.iter().map(|l| l.probs()).collect();
            write_text(
                &out_dir.join("count_laws.json"),
                &serde_json::to_string(&laws)?,
            )?;
        }
        Command::Simulate { trace } => {
            if let Some(path) = trace {
                config.trace.file = Some(path.clone());
            }
            let runs = commands::simulate(&config)?;
            let reports: Vec<_> = runs.iter().map(|r| r.report.clone()).collect();
            let path = out_dir.join("results.csv");
            write_csv(create(&path)?, &reports).map_err(|e| CliError::input(&path, e))?;
            write_text(
                &out_dir.join("results.json"),
                &serde_json::to_string_pretty(&runs)?,
            )?;
        }
        Command::OptimizeThresholds { trace, grid, dims } => {
            if let Some(path) = trace {
                config.trace.file = Some(path.clone());
            }
            if let Some(g) = grid {
                config.optimize.grid = g.clone();
            }
            if let Some(d) = dims {
                config.optimize.dims = *d;
            }
            let search = commands::optimize(&config)?;
            write_text(
                &out_dir.join("thresholds.json"),
                &serde_json::to_string_pretty(&serde_json::json!({
                    "taus": search.best.taus(),
                    "value": search.best_value,
                    "objective": config.optimize.objective,
                }))?,
            )?;
            let path = out_dir.join("surface.csv");
            let mut w = csv_writer(&path)?;
            let mut header: Vec<String> = (1..=config.optimize.dims)
                .map(|i| format!("tau_{i}"))
                .collect();
            header.push("value".into());
            w.write_record(&header).map_err(|e| csv_error(&path, e))?;
            for point in &search.surface {
                let mut row: Vec<String> = point.taus.iter().map(f64::to_string).collect();
                row.push(point.value.to_string());
                w.write_record(&row).map_err(|e| csv_error(&path, e))?;
            }
            w.flush().map_err(|e| CliError::io(&path, e))?;
        }
    }
    Ok(())
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = create(path)?;
    writeln!(f, "{text}")
        .and_then(|_| f.flush())
        .map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::input(path, e.into())
}

fn write_analysis(out_dir: &Path, analysis: &TraceAnalysis) -> CliResult<()> {
    let path = out_dir.join("dwell_stats.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "en_id",
        "samples",
        "mean_s",
        "std_dev_s",
        "skewness",
        "kurtosis",
        "avg_concurrent_users",
        "fast_count",
        "slow_count",
    ])
    .map_err(|e| csv_error(&path, e))?;
    for s in &analysis.edge_nodes {
        w.write_record([
            s.en_id.clone(),
            s.sample_count.to_string(),
            s.mean.to_string(),
            s.std_dev.to_string(),
            s.skewness.to_string(),
            s.kurtosis.to_string(),
            s.avg_concurrent_users.to_string(),
            s.fast_count.to_string(),
            s.slow_count.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = out_dir.join("significant_paths.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["en_sequence", "car_count"])
        .map_err(|e| csv_error(&path, e))?;
    for p in &analysis.significant_paths {
        w.write_record([p.en_sequence.join(" "), p.car_count.to_string()])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    write_text(
        &out_dir.join("trace_stats.json"),
        &serde_json::to_string_pretty(analysis)?,
    )
}
