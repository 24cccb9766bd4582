//! Load, optionally resample, fit, and encode the model, spectrum, report
//! and plot-data artifacts.

use havok_core::diagnostics::{structure_report, sv_decay_report, StructureReport};
use havok_core::embedding::TimeSeries;
use havok_core::geometry::curvatures_from_model;
use havok_core::linalg::norm;
use havok_core::models::{
    fit, model_spectrum, reconstruct, DelayModel, DerivativeScheme, FitConfig, Method,
};
use havok_core::preprocess::resample_series;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::input::InputSource;
use crate::output::{complex_list, to_json, Artifacts, ComplexJson, MatrixJson};

/// Relative singular-value cutoff used for the reported effective rank.
pub const SV_DECAY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input: InputSource,
    /// Spline-resample to this step before fitting.
    pub dt_resample: Option<f64>,
    /// After resampling, drop one delay window from each end.
    pub trim_edges: bool,
    pub delays: usize,
    pub rank: usize,
    pub method: Method,
    pub centering: bool,
    pub forcing: bool,
    pub derivative_scheme: DerivativeScheme,
    pub per_half_centering: bool,
}

impl PipelineConfig {
    pub fn new(input: InputSource, delays: usize, rank: usize, method: Method) -> Self {
        PipelineConfig {
            input,
            dt_resample: None,
            trim_edges: true,
            delays,
            rank,
            method,
            centering: true,
            forcing: true,
            derivative_scheme: DerivativeScheme::Forward,
            per_half_centering: false,
        }
    }

    pub fn fit_config(&self, dt: f64) -> FitConfig {
        let mut cfg = FitConfig::new(self.delays, self.rank, dt, self.method)
            .with_centering(self.centering)
            .with_forcing(self.forcing)
            .with_scheme(self.derivative_scheme);
        cfg.per_half_centering = self.per_half_centering;
        cfg
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt_resample {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Config(format!(
                    "--dt-resample must be positive, got {dt}"
                )));
            }
        }
        self.fit_config(1.0)
            .validate()
            .map_err(CliError::core("config"))
    }
}

/// Everything an output file needs to be self-describing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub input: String,
    pub dt_resample: Option<f64>,
    pub trim_edges: bool,
    pub samples: usize,
    pub t0: f64,
    pub fit: FitConfig,
}

pub fn prepare(cfg: &PipelineConfig) -> Result<TimeSeries> {
    let x = cfg.input.load()?;
    match cfg.dt_resample {
        Some(dt) => resample_series(&x, dt, cfg.delays, cfg.trim_edges)
            .map_err(CliError::core("preprocess")),
        None => Ok(x),
    }
}

pub struct Fitted {
    pub config: ResolvedConfig,
    pub model: DelayModel,
}

pub fn fit_pipeline(cfg: &PipelineConfig) -> Result<Fitted> {
    cfg.validate()?;
    let x = prepare(cfg)?;
    let fit_cfg = cfg.fit_config(x.dt);
    let model = fit(&x, &fit_cfg).map_err(CliError::core("models"))?;
    let config = ResolvedConfig {
        input: cfg.input.to_string(),
        dt_resample: cfg.dt_resample,
        trim_edges: cfg.trim_edges,
        samples: x.len(),
        t0: x.t0,
        fit: fit_cfg,
    };
    Ok(Fitted { config, model })
}

#[derive(Serialize)]
struct ModelFile<'a> {
    config: &'a ResolvedConfig,
    a_discrete: MatrixJson,
    a_continuous: MatrixJson,
    b_discrete: Option<&'a [f64]>,
    b_continuous: Option<&'a [f64]>,
    singular_values: &'a [f64],
    speed: Option<f64>,
    t0: f64,
    residual: f64,
}

#[derive(Serialize)]
pub struct SpectrumFile<'a> {
    pub config: &'a ResolvedConfig,
    /// Eigenvalues of the continuous generator `A`.
    pub continuous: Vec<ComplexJson>,
    /// `ln(λ)/Δt` for the eigenvalues of the discrete map.
    pub from_discrete: Vec<ComplexJson>,
    pub max_real_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutSummary {
    pub steps: usize,
    pub initial_norm: f64,
    pub max_norm: f64,
    /// `max_norm / initial_norm`.
    pub growth: f64,
}

#[derive(Serialize)]
pub struct ReportFile<'a> {
    pub config: &'a ResolvedConfig,
    pub structure: StructureReport,
    /// Superdiagonal of `K = A/‖h₀′‖`; centered fits only.
    pub curvatures: Option<Vec<f64>>,
    pub speed: Option<f64>,
    pub singular_values: &'a [f64],
    pub effective_rank: usize,
    pub max_real_part: f64,
    pub residual: f64,
    pub rollout: RolloutSummary,
}

/// Rolls the model over its own fitted window from the first state,
/// driven by the measured forcing coordinate.
pub fn rollout(model: &DelayModel) -> Result<havok_core::linalg::Matrix> {
    let v = model.state_trajectory();
    let forcing = model.forcing_coordinate();
    reconstruct(model, v.row(0), v.rows(), forcing.as_deref()).map_err(CliError::core("models"))
}

pub fn rollout_summary(model: &DelayModel) -> Result<RolloutSummary> {
    let r = rollout(model)?;
    let initial_norm = norm(r.row(0));
    let norms: Vec<f64> = (0..r.rows()).map(|k| norm(r.row(k))).collect();
    // A rollout that overflowed to NaN counts as unbounded.
    let max_norm = if norms.iter().any(|n| n.is_nan()) {
        f64::INFINITY
    } else {
        norms.iter().copied().fold(0.0, f64::max)
    };
    Ok(RolloutSummary {
        steps: r.rows(),
        initial_norm,
        max_norm,
        growth: max_norm / initial_norm,
    })
}

pub fn model_json(f: &Fitted) -> Result<Vec<u8>> {
    let m = &f.model;
    to_json(&ModelFile {
        config: &f.config,
        a_discrete: (&m.a_discrete).into(),
        a_continuous: (&m.a_continuous).into(),
        b_discrete: m.b_discrete.as_deref(),
        b_continuous: m.b_continuous.as_deref(),
        singular_values: &m.basis.sigma,
        speed: m.speed,
        t0: m.t0,
        residual: m.residual,
    })
}

pub fn spectrum_json(f: &Fitted) -> Result<Vec<u8>> {
    let spec = model_spectrum(&f.model).map_err(CliError::core("models"))?;
    to_json(&SpectrumFile {
        config: &f.config,
        continuous: complex_list(&spec.continuous.eigenvalues),
        from_discrete: complex_list(&spec.from_discrete),
        max_real_part: spec.continuous.max_real_part(),
    })
}

pub fn report_json(f: &Fitted) -> Result<Vec<u8>> {
    let m = &f.model;
    let structure = structure_report(&m.a_continuous).map_err(CliError::core("diagnostics"))?;
    let curvatures = match m.speed {
        Some(s) if s > 0.0 => Some(
            curvatures_from_model(&m.a_continuous, s)
                .map_err(CliError::core("geometry"))?
                .curvatures,
        ),
        _ => None,
    };
    let effective_rank =
        sv_decay_report(&m.basis.sigma, SV_DECAY_EPS).map_err(CliError::core("diagnostics"))?;
    to_json(&ReportFile {
        config: &f.config,
        structure,
        curvatures,
        speed: m.speed,
        singular_values: &m.basis.sigma,
        effective_rank,
        max_real_part: m.spectrum.max_real_part(),
        residual: m.residual,
        rollout: rollout_summary(m)?,
    })
}

/// One row per sample: time, `v_1..v_r`, the forcing coordinate when the
/// model is forced, and the rollout of the state coordinates.
pub fn plot_csv(f: &Fitted) -> Result<Vec<u8>> {
    let m = &f.model;
    let v = &m.basis.v;
    let r = v.cols();
    let s = m.state_dim();
    let recon = rollout(m)?;
    let mut header = vec!["time".to_string()];
    header.extend((1..=r).map(|j| format!("v{j}")));
    if m.has_forcing() {
        header.push("forcing".into());
    }
    header.extend((1..=s).map(|j| format!("recon_v{j}")));
    let enc = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(enc)?;
    for k in 0..v.rows() {
        let mut row = vec![(m.t0 + k as f64 * m.config.dt).to_string()];
        row.extend(v.row(k).iter().map(f64::to_string));
        if m.has_forcing() {
            row.push(v[(k, r - 1)].to_string());
        }
        row.extend(recon.row(k).iter().map(f64::to_string));
        w.write_record(&row).map_err(enc)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv encoding: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Fit,
    Spectrum,
    Diagnose,
}

/// Fits once and encodes the artifacts of `stage`. Nothing is written here.
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<Artifacts> {
    let fitted = fit_pipeline(cfg)?;
    let mut out = Artifacts::new();
    match stage {
        Stage::Fit => {
            out.add("model.json", model_json(&fitted)?);
            out.add("spectrum.json", spectrum_json(&fitted)?);
            out.add("report.json", report_json(&fitted)?);
            out.add("plot.csv", plot_csv(&fitted)?);
        }
        Stage::Spectrum => out.add("spectrum.json", spectrum_json(&fitted)?),
        Stage::Diagnose => out.add("report.json", report_json(&fitted)?),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tone(method: Method) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(InputSource::Preset("two_tone".into()), 41, 4, method);
        cfg.forcing = false;
        cfg
    }

    #[test]
    fn shavok_two_tone_report() {
        let out = run(Stage::Diagnose, &two_tone(Method::Shavok)).unwrap();
        let report: serde_json::Value =
            serde_json::from_slice(out.get("report.json").unwrap()).unwrap();
        let anti = report["structure"]["antisymmetry"].as_f64().unwrap();
        assert!(anti <= 1e-2, "antisymmetry {anti}");
        assert_eq!(report["config"]["fit"]["delays"], 41);
        assert_eq!(report["config"]["fit"]["method"], "shavok");
        assert_eq!(report["config"]["fit"]["centering"], true);
        assert_eq!(report["config"]["samples"], 10_001);
        assert_eq!(report["curvatures"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn fit_stage_writes_four_artifacts() {
        let mut cfg = two_tone(Method::Havok);
        cfg.forcing = true;
        cfg.rank = 5;
        let out = run(Stage::Fit, &cfg).unwrap();
        let names: Vec<&str> = out.names().collect();
        assert_eq!(
            names,
            ["model.json", "spectrum.json", "report.json", "plot.csv"]
        );
        let model: serde_json::Value =
            serde_json::from_slice(out.get("model.json").unwrap()).unwrap();
        assert_eq!(model["a_discrete"]["rows"], 4);
        assert_eq!(model["b_discrete"].as_array().unwrap().len(), 4);
        let plot = std::str::from_utf8(out.get("plot.csv").unwrap()).unwrap();
        let header = plot.lines().next().unwrap();
        assert_eq!(
            header,
            "time,v1,v2,v3,v4,v5,forcing,recon_v1,recon_v2,recon_v3,recon_v4"
        );
        assert_eq!(plot.lines().count(), 1 + 9961);
    }

    #[test]
    fn spectrum_stage() {
        let out = run(Stage::Spectrum, &two_tone(Method::Havok)).unwrap();
        let spec: serde_json::Value =
            serde_json::from_slice(out.get("spectrum.json").unwrap()).unwrap();
        assert_eq!(spec["continuous"].as_array().unwrap().len(), 4);
        assert_eq!(spec["from_discrete"].as_array().unwrap().len(), 4);
        let top = spec["continuous"][3]["im"].as_f64().unwrap();
        assert!((top - 2.0).abs() < 1e-2, "{top}");
    }

    #[test]
    fn config_errors_come_first() {
        let mut cfg = two_tone(Method::Havok);
        cfg.delays = 40;
        assert_eq!(run(Stage::Fit, &cfg).unwrap_err().exit_code(), 2);
        let mut cfg = two_tone(Method::Havok);
        cfg.dt_resample = Some(-1.0);
        assert_eq!(run(Stage::Fit, &cfg).unwrap_err().exit_code(), 2);
        let mut cfg = two_tone(Method::Havok);
        cfg.rank = 7;
        assert_eq!(run(Stage::Fit, &cfg).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn resampling_changes_the_grid() {
        let mut cfg = two_tone(Method::Havok);
        cfg.dt_resample = Some(0.0005);
        let f = fit_pipeline(&cfg).unwrap();
        assert_eq!(f.config.fit.dt, 0.0005);
        assert_eq!(f.config.samples, 20_001 - 2 * 41);
    }
}
