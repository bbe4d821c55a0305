//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimation::{fit_varfi, FitOptions, FitReport};
use crate::infodecomp::{decompose_multiscale, DecompositionProfile};
use crate::io::config::{parse_scales, parse_sources, AnalysisConfig};
use crate::io::model_json::{load_model, save_model};
use crate::io::plot::{render_svg, series_from_table};
use crate::io::profile::{read_table, write_profile_csv, write_profile_json, write_sweep_csv, Unit};
use crate::io::series::{load_csv, preprocess, TimeSeriesSet};
use crate::model::VarfiModel;
use crate::simulate::{
    benchmark_var, simulate_realization, sweep_experiment, BenchmarkParams, Experiment, DEFAULT_BURN_IN,
};

#[derive(Debug, Parser)]
#[command(name = "msid", version, about = "Multiscale information decomposition of VARFI processes")]
struct Cli {
    /// JSON config file (overridden by MSID_* variables, then by flags).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a realization of a model (CSV output).
    Simulate(SimulateArgs),
    /// Fit a VARFI model to a CSV of series (model JSON output).
    Fit(FitArgs),
    /// Multiscale decomposition of a model or of data (profile output).
    Decompose(DecomposeArgs),
    /// Memory-parameter sweep on the benchmark model (sweep CSV output).
    Benchmark(BenchmarkArgs),
    /// Render a profile or sweep CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args, Default)]
struct Overrides {
    /// Truncation lag of the fractional integration.
    #[arg(long)]
    q: Option<usize>,
    /// FIR low-pass filter order (even).
    #[arg(long)]
    r: Option<usize>,
    /// Scales: N (for 1..N), A..B, or a comma list.
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    p_max: Option<usize>,
    /// Whittle bandwidth exponent.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    dare_tol: Option<f64>,
    #[arg(long)]
    dare_max_iter: Option<usize>,
    /// nats or bits.
    #[arg(long)]
    unit: Option<String>,
    #[arg(long)]
    target: Option<String>,
    /// Two source labels, e.g. S,R.
    #[arg(long)]
    sources: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Model JSON (defaults to the benchmark model).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Memory parameters d_r,d_s,d_h of the benchmark model.
    #[arg(long, default_value = "0,0,0")]
    d: String,
    #[arg(long, short = 'n', default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Input CSV with a header of channel names.
    #[arg(long, short)]
    input: PathBuf,
    /// Fixed VAR order instead of BIC selection (allows 0).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    model: Option<PathBuf>,
    /// CSV series; a model is fitted first.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long)]
    experiment: u32,
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Profile or sweep CSV.
    #[arg(long, short)]
    input: PathBuf,
    /// Measure column to plot (required for sweeps).
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn resolve(file: Option<&Path>, o: &Overrides) -> Result<AnalysisConfig> {
    let mut cfg = match file {
        Some(p) => AnalysisConfig::from_file(p)?,
        None => AnalysisConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(v) = o.q {
        cfg.q = v;
    }
    if let Some(v) = o.r {
        cfg.r = v;
    }
    if let Some(v) = &o.scales {
        cfg.scales = parse_scales(v)?;
    }
    if let Some(v) = o.p_max {
        cfg.p_max = v;
    }
    if let Some(v) = o.bandwidth {
        cfg.bandwidth = v;
    }
    if let Some(v) = o.dare_tol {
        cfg.dare_tol = v;
    }
    if let Some(v) = o.dare_max_iter {
        cfg.dare_max_iter = v;
    }
    if let Some(v) = &o.unit {
        cfg.unit = v.parse()?;
    }
    if let Some(v) = &o.target {
        cfg.target = Some(v.clone());
    }
    if let Some(v) = &o.sources {
        cfg.sources = Some(parse_sources(v)?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn parse_d3(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("--d expects three numbers d_r,d_s,d_h, got {s:?}")))?;
    <[f64; 3]>::try_from(v).map_err(|_| Error::Config(format!("--d expects three numbers, got {s:?}")))
}

fn load_series(path: &Path, cfg: &AnalysisConfig) -> Result<TimeSeriesSet> {
    let ts = preprocess(&load_csv(path)?)?;
    if ts.len() < cfg.min_length_warning {
        warn(&format!(
            "series has {} samples, fewer than the recommended {}",
            ts.len(),
            cfg.min_length_warning
        ));
    }
    Ok(ts)
}

fn fit_series(ts: &TimeSeriesSet, cfg: &AnalysisConfig, order: Option<usize>) -> Result<FitReport> {
    let opts = FitOptions {
        q: cfg.q,
        p_max: cfg.p_max,
        bandwidth: cfg.bandwidth,
        order,
    };
    let report = fit_varfi(&ts.data, &ts.labels, &opts)?;
    for w in &report.warnings {
        warn(w);
    }
    Ok(report)
}

fn channel_index(model: &VarfiModel, label: &str) -> Result<usize> {
    model.channel(label).ok_or_else(|| {
        Error::Config(format!(
            "unknown channel {label:?} (model has {})",
            model.labels.join(", ")
        ))
    })
}

/// Decomposition for the configured target and sources.
pub fn decompose_model(model: &VarfiModel, cfg: &AnalysisConfig) -> Result<DecompositionProfile> {
    let target = cfg
        .target
        .as_deref()
        .ok_or_else(|| Error::Config("--target is required".into()))?;
    let sources = cfg
        .sources
        .as_ref()
        .ok_or_else(|| Error::Config("--sources is required".into()))?;
    let j = channel_index(model, target)?;
    let i = channel_index(model, &sources[0])?;
    let k = channel_index(model, &sources[1])?;
    decompose_multiscale(model, j, (i, k), &cfg.decompose_settings())
}

fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => {
            let cfg = resolve(file, &a.cfg)?;
            let model = match &a.model {
                Some(p) => load_model(p)?.0,
                None => benchmark_var(&BenchmarkParams::default().with_d(parse_d3(&a.d)?))?,
            };
            let ts = simulate_realization(&model, a.samples, a.seed, cfg.q, a.burn_in)?;
            ts.write_csv(output(a.out.as_deref())?)
        }
        Command::Fit(a) => {
            let cfg = resolve(file, &a.cfg)?;
            let ts = load_series(&a.input, &cfg)?;
            let report = fit_series(&ts, &cfg, a.order)?;
            let model = report.model();
            for (label, est) in model.labels.iter().zip(&report.d) {
                eprintln!("d[{label}] = {:.6} (bandwidth {})", est.d, est.bandwidth);
            }
            eprintln!(
                "p = {}; spectral radius = {:.6}; stationary = {}",
                report.p, report.spectral_radius, report.stationary
            );
            match &a.out {
                Some(p) => save_model(p, model, cfg.q, &cfg.hash()),
                None => {
                    let doc = crate::io::model_json::ModelDocument::from_model(model, cfg.q, cfg.hash());
                    writeln!(output(None)?, "{}", doc.to_json())?;
                    Ok(())
                }
            }
        }
        Command::Decompose(a) => {
            let cfg = resolve(file, &a.cfg)?;
            let model = match (&a.model, &a.input) {
                (Some(p), _) => {
                    let (model, doc) = load_model(p)?;
                    if doc.q != cfg.q {
                        warn(&format!("model was fitted with q={}, decomposing with q={}", doc.q, cfg.q));
                    }
                    model
                }
                (None, Some(p)) => {
                    let ts = load_series(p, &cfg)?;
                    fit_series(&ts, &cfg, None)?.model.expect("fitted model")
                }
                (None, None) => return Err(Error::Config("--model or --input is required".into())),
            };
            let profile = decompose_model(&model, &cfg)?;
            for w in &profile.provenance.warnings {
                warn(w);
            }
            let out = output(a.out.as_deref())?;
            match a.format.as_str() {
                "csv" => write_profile_csv(&profile, cfg.unit, out),
                "json" => write_profile_json(&profile, cfg.unit, out),
                other => Err(Error::Config(format!("--format must be csv or json, got {other:?}"))),
            }
        }
        Command::Benchmark(a) => {
            let cfg = resolve(file, &a.cfg)?;
            let which = Experiment::from_number(a.experiment)?;
            let sweep = sweep_experiment(which, a.points, &cfg.decompose_settings())?;
            write_sweep_csv(&sweep, cfg.unit, which.swept(), output(a.out.as_deref())?)
        }
        Command::Plot(a) => {
            let f = std::fs::File::open(&a.input)
                .map_err(|e| Error::Io(format!("{}: {e}", a.input.display())))?;
            let table = read_table(f)?;
            let series = series_from_table(&table, a.measure.as_deref())?;
            let unit = table.attribute("unit").unwrap_or(Unit::Nats.name()).to_string();
            let title = a.title.unwrap_or_else(|| {
                match (table.attribute("target"), table.attribute("sources")) {
                    (Some(t), Some(s)) => format!("{s} -> {t}"),
                    _ => a.input.display().to_string(),
                }
            });
            let y_label = match &a.measure {
                Some(m) => format!("{m} [{unit}]"),
                None => unit,
            };
            let svg = render_svg(&series, &title, &y_label)?;
            output(a.out.as_deref())?.write_all(svg.as_bytes())?;
            Ok(())
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    let message = message.replace(['\n', '\r'], " ");
    format!("error: kind={kind} message={}", message.trim())
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            eprint!("{e}");
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            1
        }
    }
}
