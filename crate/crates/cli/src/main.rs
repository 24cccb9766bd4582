use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use havok_cli::input::{series_csv, InputSource};
use havok_cli::output::{to_json, Artifacts};
use havok_cli::pipeline::{run, PipelineConfig, Stage};
use havok_cli::scenarios::{run_named, SCENARIOS};
use havok_cli::sweep::{run_sweep, sweep_csv, SweepConfig, DEFAULT_COLUMNS, DEFAULT_DT_GRID};
use havok_cli::{CliError, Result};
use havok_core::models::{DerivativeScheme, Method};

#[derive(Parser)]
#[command(
    name = "havok",
    version,
    about = "HAVOK and structured HAVOK delay models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a preset and write its observed series as CSV.
    Simulate {
        #[arg(long)]
        input: String,
        /// Keep only the first N samples.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Fit a model; writes model, spectrum, report and plot data.
    Fit(FitArgs),
    /// Fit a model and write only its spectrum.
    Spectrum(FitArgs),
    /// Fit a model and write only its structure report.
    Diagnose(FitArgs),
    /// Structure scores over a grid of sampling steps and column counts.
    Sweep(SweepArgs),
    /// Run named reproduction scenarios.
    Reproduce {
        /// Scenario name, or `all`.
        scenario: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Havok,
    Shavok,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Forward,
    Central,
}

#[derive(Args)]
struct ModelArgs {
    /// Preset name or path to a `time,value` CSV file.
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 101)]
    delays: usize,
    #[arg(long, default_value_t = 5)]
    rank: usize,
    #[arg(long, value_enum, default_value = "havok")]
    method: MethodArg,
    #[arg(long)]
    no_centering: bool,
    #[arg(long)]
    no_forcing: bool,
    #[arg(long, value_enum, default_value = "forward")]
    derivative: SchemeArg,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Spline-resample to this step before fitting.
    #[arg(long)]
    dt_resample: Option<f64>,
    /// Keep the resampled edges instead of trimming one delay window.
    #[arg(long)]
    no_trim: bool,
    /// sHAVOK: center each shifted half separately.
    #[arg(long)]
    per_half_centering: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DT_GRID)]
    dt_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_COLUMNS)]
    columns: Vec<usize>,
    #[arg(long, default_value_t = 0.001)]
    columns_dt: f64,
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Havok => Method::Havok,
        MethodArg::Shavok => Method::Shavok,
    }
}

fn scheme(s: SchemeArg) -> DerivativeScheme {
    match s {
        SchemeArg::Forward => DerivativeScheme::Forward,
        SchemeArg::Central => DerivativeScheme::Central,
    }
}

fn pipeline_config(a: &FitArgs) -> PipelineConfig {
    let m = &a.model;
    let mut cfg = PipelineConfig::new(
        InputSource::parse(&m.input),
        m.delays,
        m.rank,
        method(m.method),
    );
    cfg.centering = !m.no_centering;
    cfg.forcing = !m.no_forcing;
    cfg.derivative_scheme = scheme(m.derivative);
    cfg.dt_resample = a.dt_resample;
    cfg.trim_edges = !a.no_trim;
    cfg.per_half_centering = a.per_half_centering;
    cfg
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            input,
            samples,
            out_dir,
        } => {
            let source = InputSource::parse(&input);
            if !matches!(source, InputSource::Preset(_)) {
                return Err(CliError::Config(format!("{input} is not a preset")));
            }
            let mut x = source.load()?;
            if let Some(n) = samples {
                x = x
                    .window(0..n.min(x.len()))
                    .map_err(CliError::core("input"))?;
            }
            let mut out = Artifacts::new();
            out.add("series.csv", series_csv(&x)?);
            report(&out.write_all(&out_dir)?);
            Ok(true)
        }
        Command::Fit(a) => {
            report(&run(Stage::Fit, &pipeline_config(&a))?.write_all(&a.model.out_dir)?);
            Ok(true)
        }
        Command::Spectrum(a) => {
            report(&run(Stage::Spectrum, &pipeline_config(&a))?.write_all(&a.model.out_dir)?);
            Ok(true)
        }
        Command::Diagnose(a) => {
            report(&run(Stage::Diagnose, &pipeline_config(&a))?.write_all(&a.model.out_dir)?);
            Ok(true)
        }
        Command::Sweep(a) => {
            let m = &a.model;
            let mut cfg = SweepConfig::new(m.delays, m.rank);
            cfg.method = method(m.method);
            cfg.centering = !m.no_centering;
            cfg.forcing = !m.no_forcing;
            cfg.derivative_scheme = scheme(m.derivative);
            cfg.dt_grid = a.dt_grid.clone();
            cfg.columns = a.columns.clone();
            cfg.columns_dt = a.columns_dt;
            let source = InputSource::parse(&m.input);
            let x = source.load()?;
            let result = run_sweep(&x, &source.to_string(), &cfg)?;
            let mut out = Artifacts::new();
            out.add("sweep.json", to_json(&result)?);
            out.add("sweep.csv", sweep_csv(&result)?);
            report(&out.write_all(&m.out_dir)?);
            for (axis, mono) in [
                ("dt", &result.dt_monotonicity),
                ("columns", &result.column_monotonicity),
            ] {
                println!("{axis} sweep nonincreasing: {}", mono.nonincreasing);
            }
            Ok(true)
        }
        Command::Reproduce { scenario, out_dir } => {
            let names: Vec<&str> = if scenario == "all" {
                SCENARIOS.to_vec()
            } else {
                vec![scenario.as_str()]
            };
            let mut all_passed = true;
            let mut out = Artifacts::new();
            for name in names {
                let (doc, checks) = run_named(name)?;
                for c in &checks {
                    println!(
                        "[{}] {name}: {} ({})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    );
                    all_passed &= c.passed;
                }
                out.add(format!("{name}.json"), to_json(&doc)?);
            }
            report(&out.write_all(&out_dir)?);
            Ok(all_passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // Scenario checks failed; the run itself completed.
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
