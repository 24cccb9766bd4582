//! Structure of HAVOK models across sampling steps and column counts.

use havok_core::diagnostics::{antisymmetry_score, tridiagonality_score};
use havok_core::embedding::TimeSeries;
use havok_core::models::{fit, DerivativeScheme, FitConfig, Method};
use havok_core::preprocess::decimate;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const DEFAULT_DT_GRID: [f64; 4] = [0.01, 0.005, 0.001, 0.0005];
pub const DEFAULT_COLUMNS: [usize; 4] = [1001, 2001, 5001, 10001];
/// Largest relative rise between neighbouring scores still counted as
/// noise rather than a trend reversal.
pub const NOISE_GUARD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub delays: usize,
    pub rank: usize,
    pub method: Method,
    pub centering: bool,
    pub forcing: bool,
    pub derivative_scheme: DerivativeScheme,
    /// Sampling steps, each an integer multiple of the input step; the
    /// whole input span is used at every step.
    pub dt_grid: Vec<f64>,
    /// Column counts, taken from the start of the input at `columns_dt`.
    pub columns: Vec<usize>,
    pub columns_dt: f64,
}

impl SweepConfig {
    pub fn new(delays: usize, rank: usize) -> Self {
        SweepConfig {
            delays,
            rank,
            method: Method::Havok,
            centering: true,
            forcing: true,
            derivative_scheme: DerivativeScheme::Forward,
            dt_grid: DEFAULT_DT_GRID.to_vec(),
            columns: DEFAULT_COLUMNS.to_vec(),
            columns_dt: 0.001,
        }
    }

    fn fit_config(&self, dt: f64) -> FitConfig {
        FitConfig::new(self.delays, self.rank, dt, self.method)
            .with_centering(self.centering)
            .with_forcing(self.forcing)
            .with_scheme(self.derivative_scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub dt: f64,
    pub columns: usize,
    pub antisymmetry: f64,
    pub tridiagonality: f64,
}

/// A rise from `scores[index]` to `scores[index + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub relative_rise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monotonicity {
    pub violations: Vec<Violation>,
    /// At most one rise, and that one within the noise guard.
    pub nonincreasing: bool,
}

pub fn monotonicity(scores: &[f64], guard: f64) -> Monotonicity {
    let violations: Vec<Violation> = scores
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0])
        .map(|(index, w)| Violation {
            index,
            relative_rise: (w[1] - w[0]) / w[0],
        })
        .collect();
    let nonincreasing = match violations.as_slice() {
        [] => true,
        [v] => v.relative_rise <= guard,
        _ => false,
    };
    Monotonicity {
        violations,
        nonincreasing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub input: String,
    pub dt_sweep: Vec<SweepPoint>,
    pub dt_monotonicity: Monotonicity,
    pub column_sweep: Vec<SweepPoint>,
    pub column_monotonicity: Monotonicity,
}

fn stride_for(x: &TimeSeries, dt: f64) -> Result<usize> {
    let ratio = dt / x.dt;
    let stride = ratio.round();
    if !(stride >= 1.0) || (ratio - stride).abs() > 1e-9 * ratio {
        return Err(CliError::Config(format!(
            "sweep step {dt} is not a whole multiple of the input step {}",
            x.dt
        )));
    }
    Ok(stride as usize)
}

fn score(x: &TimeSeries, cfg: &FitConfig) -> Result<SweepPoint> {
    let model = fit(x, cfg).map_err(CliError::core("models"))?;
    let a = &model.a_continuous;
    Ok(SweepPoint {
        dt: cfg.dt,
        columns: x.len() + 1 - cfg.delays,
        antisymmetry: antisymmetry_score(a).map_err(CliError::core("diagnostics"))?,
        tridiagonality: tridiagonality_score(a).map_err(CliError::core("diagnostics"))?,
    })
}

/// Fits every grid point independently (in parallel) and collects the
/// scores in grid order.
pub fn run_sweep(x: &TimeSeries, input: &str, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.fit_config(x.dt)
        .validate()
        .map_err(CliError::core("config"))?;
    let mut jobs: Vec<(TimeSeries, FitConfig)> = Vec::new();
    for &dt in &cfg.dt_grid {
        let series = decimate(x, stride_for(x, dt)?).map_err(CliError::core("preprocess"))?;
        jobs.push((series, cfg.fit_config(dt)));
    }
    let stride = stride_for(x, cfg.columns_dt)?;
    let base = decimate(x, stride).map_err(CliError::core("preprocess"))?;
    for &n in &cfg.columns {
        let samples = n + cfg.delays - 1;
        if samples > base.len() {
            return Err(CliError::Config(format!(
                "{n} columns need {samples} samples at step {}, the input has {}",
                cfg.columns_dt,
                base.len()
            )));
        }
        let series = base
            .window(0..samples)
            .map_err(CliError::core("embedding"))?;
        jobs.push((series, cfg.fit_config(cfg.columns_dt)));
    }
    let points = jobs
        .par_iter()
        .map(|(s, c)| score(s, c))
        .collect::<Result<Vec<_>>>()?;
    let (dt_sweep, column_sweep) = points.split_at(cfg.dt_grid.len());
    let anti = |p: &[SweepPoint]| p.iter().map(|q| q.antisymmetry).collect::<Vec<_>>();
    Ok(SweepResult {
        config: cfg.clone(),
        input: input.to_string(),
        dt_monotonicity: monotonicity(&anti(dt_sweep), NOISE_GUARD),
        column_monotonicity: monotonicity(&anti(column_sweep), NOISE_GUARD),
        dt_sweep: dt_sweep.to_vec(),
        column_sweep: column_sweep.to_vec(),
    })
}

/// Flat table of both sweeps for plotting.
pub fn sweep_csv(r: &SweepResult) -> Result<Vec<u8>> {
    let enc = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["axis", "dt", "columns", "antisymmetry", "tridiagonality"])
        .map_err(enc)?;
    for (axis, points) in [("dt", &r.dt_sweep), ("columns", &r.column_sweep)] {
        for p in points {
            w.write_record([
                axis.to_string(),
                p.dt.to_string(),
                p.columns.to_string(),
                p.antisymmetry.to_string(),
                p.tridiagonality.to_string(),
            ])
            .map_err(enc)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv encoding: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_rules() {
        assert!(monotonicity(&[3.0, 2.0, 1.0], 0.05).nonincreasing);
        assert!(monotonicity(&[3.0, 2.0, 2.0], 0.05).nonincreasing);
        let one_small = monotonicity(&[3.0, 2.0, 2.08, 1.0], 0.05);
        assert!(one_small.nonincreasing);
        assert_eq!(one_small.violations.len(), 1);
        assert_eq!(one_small.violations[0].index, 1);
        assert!(!monotonicity(&[3.0, 2.0, 2.2, 1.0], 0.05).nonincreasing);
        assert!(!monotonicity(&[3.0, 3.01, 2.0, 2.01], 0.05).nonincreasing);
    }

    #[test]
    fn strides() {
        let x = TimeSeries::from_fn(0.0, 0.0005, 100, f64::sin).unwrap();
        assert_eq!(stride_for(&x, 0.01).unwrap(), 20);
        assert_eq!(stride_for(&x, 0.0005).unwrap(), 1);
        assert!(stride_for(&x, 0.0007).is_err());
        assert!(stride_for(&x, 0.0001).is_err());
    }

    #[test]
    fn small_sweep_runs_in_grid_order() {
        let x = TimeSeries::from_fn(0.0, 0.001, 4001, |t| t.sin() + (2.0 * t).sin()).unwrap();
        let mut cfg = SweepConfig::new(21, 4);
        cfg.forcing = false;
        cfg.dt_grid = vec![0.004, 0.002, 0.001];
        cfg.columns = vec![500, 1000, 2000];
        let r = run_sweep(&x, "two-tone", &cfg).unwrap();
        assert_eq!(
            r.dt_sweep.iter().map(|p| p.dt).collect::<Vec<_>>(),
            [0.004, 0.002, 0.001]
        );
        assert_eq!(
            r.column_sweep.iter().map(|p| p.columns).collect::<Vec<_>>(),
            [500, 1000, 2000]
        );
        assert_eq!(r.dt_sweep[2].columns, 4001 - 20);
        let csv = String::from_utf8(sweep_csv(&r).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 7);
        cfg.columns = vec![5000];
        assert_eq!(run_sweep(&x, "two-tone", &cfg).unwrap_err().exit_code(), 2);
    }
}
