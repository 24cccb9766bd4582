//! Named experiments behind `havok reproduce`.
//!
//! Each scenario returns the quantities it measured together with its own
//! pass/fail checks, so the same numbers feed both the CLI report and any
//! external verification.

use havok_core::diagnostics::{
    antisymmetry_score, spectrum_distance, structure_report, SpectrumComparison, StructureReport,
};
use havok_core::embedding::{build_hankel, TimeSeries};
use havok_core::geometry::{
    analytic_curvatures_gram, central_row_derivatives, curvatures_from_model,
    derivative_norm_ratio, discrete_orthopoly,
};
use havok_core::linalg::{dot, norm, thin_svd};
use havok_core::models::{fit, FitConfig, Method};
use havok_core::preprocess::resample_series;
use havok_core::systems::preset_series;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::MatrixJson;
use crate::pipeline::{rollout_summary, RolloutSummary};
use crate::sweep::{run_sweep, SweepConfig, SweepResult};

pub const SCENARIOS: [&str; 7] = [
    "two_tone",
    "polynomials",
    "sweep",
    "interpolation",
    "fidelity",
    "stability",
    "derivative_ratio",
];

/// Delays and rank of the two-tone experiments.
pub const TWO_TONE_DELAYS: usize = 41;
pub const TWO_TONE_RANK: usize = 4;
pub const REFERENCE_CURVATURES: [f64; 3] = [1.205e-2, 4.46e-3, 6.62e-3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn core<T>(context: &'static str, r: havok_core::Result<T>) -> Result<T> {
    r.map_err(CliError::core(context))
}

fn two_tone_series(samples: usize) -> Result<TimeSeries> {
    core(
        "input",
        TimeSeries::from_fn(0.0, 0.001, samples, |t| t.sin() + (2.0 * t).sin()),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoTone {
    /// Gram-determinant curvatures of the central row.
    pub gram: [f64; 3],
    pub speed: f64,
    pub havok_k: MatrixJson,
    pub shavok_k: MatrixJson,
    pub havok: StructureReport,
    pub shavok: StructureReport,
    pub checks: Vec<Check>,
}

pub fn two_tone() -> Result<TwoTone> {
    let x = two_tone_series(10_001)?;
    let d = core("geometry", central_row_derivatives(&x, TWO_TONE_DELAYS, 4))?;
    let gram = core(
        "geometry",
        analytic_curvatures_gram(&d[0], &d[1], &d[2], &d[3]),
    )?;
    let cfg =
        FitConfig::new(TWO_TONE_DELAYS, TWO_TONE_RANK, x.dt, Method::Havok).with_forcing(false);
    let h = core("models", fit(&x, &cfg))?;
    let s = core(
        "models",
        fit(
            &x,
            &FitConfig {
                method: Method::Shavok,
                ..cfg
            },
        ),
    )?;
    let speed = h.speed.unwrap_or(f64::NAN);
    let hk = core("geometry", curvatures_from_model(&h.a_continuous, speed))?.k;
    let sk = core("geometry", curvatures_from_model(&s.a_continuous, speed))?.k;
    let havok = core("diagnostics", structure_report(&hk))?;
    let shavok = core("diagnostics", structure_report(&sk))?;

    let gram_err = gram
        .iter()
        .zip(REFERENCE_CURVATURES)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let sup_err = shavok
        .superdiagonal
        .iter()
        .zip(gram)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let skew_err = shavok
        .superdiagonal
        .iter()
        .zip(&shavok.subdiagonal)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    let checks = vec![
        Check::new(
            "gram curvatures match reference values (5e-5)",
            gram_err <= 5e-5,
            format!("{gram:?}, max error {gram_err:.2e}"),
        ),
        Check::new(
            "sHAVOK superdiagonal matches gram curvatures (5e-4)",
            sup_err <= 5e-4,
            format!("max error {sup_err:.2e}"),
        ),
        Check::new(
            "sHAVOK subdiagonal is the negated superdiagonal (2e-5)",
            skew_err <= 2e-5,
            format!("max error {skew_err:.2e}"),
        ),
        Check::new(
            "sHAVOK off-band entries (5e-5)",
            shavok.offband_max <= 5e-5,
            format!("{:.2e}", shavok.offband_max),
        ),
        Check::new(
            "sHAVOK more antisymmetric than HAVOK",
            shavok.antisymmetry < havok.antisymmetry,
            format!("{:.3e} vs {:.3e}", shavok.antisymmetry, havok.antisymmetry),
        ),
        Check::new(
            "sHAVOK more tridiagonal than HAVOK",
            shavok.tridiagonality < havok.tridiagonality,
            format!(
                "{:.3e} vs {:.3e}",
                shavok.tridiagonality, havok.tridiagonality
            ),
        ),
    ];
    Ok(TwoTone {
        gram,
        speed,
        havok_k: (&hk).into(),
        shavok_k: (&sk).into(),
        havok,
        shavok,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomials {
    pub orthonormality_error: f64,
    /// `|cos|` between centered delay vectors and discrete polynomials.
    pub cosines: Vec<f64>,
    /// Max deviation from the mean of the first uncentered delay vector,
    /// relative to its norm.
    pub uncentered_deviation: f64,
    pub checks: Vec<Check>,
}

pub fn polynomials() -> Result<Polynomials> {
    let m = TWO_TONE_DELAYS;
    let k = TWO_TONE_RANK;
    let p = core("geometry", discrete_orthopoly(m, k))?;
    let mut orthonormality_error = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { 1.0 } else { 0.0 };
            orthonormality_error =
                orthonormality_error.max((dot(&p.column(i), &p.column(j)) - expect).abs());
        }
    }
    let x = two_tone_series(10_001)?;
    let model = core(
        "models",
        fit(
            &x,
            &FitConfig::new(m, k, x.dt, Method::Havok).with_forcing(false),
        ),
    )?;
    let cosines: Vec<f64> = (0..k)
        .map(|j| {
            let u = model.basis.u.col(j);
            (dot(&u, &p.column(j)) / norm(&u)).abs()
        })
        .collect();
    let raw = core("embedding", build_hankel(&x, m))?;
    let u0 = core("linalg", thin_svd(&raw.h, k))?.u.col(0);
    let mean = u0.iter().sum::<f64>() / u0.len() as f64;
    let uncentered_deviation = u0.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / norm(&u0);
    let min_cos = cosines.iter().copied().fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::new(
            "polynomials orthonormal (1e-10)",
            orthonormality_error <= 1e-10,
            format!("{orthonormality_error:.2e}"),
        ),
        Check::new(
            "centered delay vectors match polynomials (0.999)",
            min_cos >= 0.999,
            format!("{cosines:?}"),
        ),
        Check::new(
            "uncentered leading vector near-constant (1%)",
            uncentered_deviation <= 0.01,
            format!("{uncentered_deviation:.2e}"),
        ),
    ];
    Ok(Polynomials {
        orthonormality_error,
        cosines,
        uncentered_deviation,
        checks,
    })
}

/// Rows and rank used for the Lorenz structure sweep.
pub const SWEEP_DELAYS: usize = 101;
pub const SWEEP_RANK: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub result: SweepResult,
    pub checks: Vec<Check>,
}

pub fn sweep() -> Result<Sweep> {
    let x = core("systems", preset_series("lorenz_sweep"))?;
    let result = run_sweep(
        &x,
        "lorenz_sweep",
        &SweepConfig::new(SWEEP_DELAYS, SWEEP_RANK),
    )?;
    let fmt = |p: &[crate::sweep::SweepPoint]| {
        p.iter()
            .map(|q| format!("{:.4}", q.antisymmetry))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let checks = vec![
        Check::new(
            "antisymmetry nonincreasing in dt",
            result.dt_monotonicity.nonincreasing,
            fmt(&result.dt_sweep),
        ),
        Check::new(
            "antisymmetry nonincreasing in columns",
            result.column_monotonicity.nonincreasing,
            fmt(&result.column_sweep),
        ),
    ];
    Ok(Sweep { result, checks })
}

pub const INTERPOLATION_DELAYS: usize = 201;
pub const INTERPOLATION_RANK: usize = 5;
pub const INTERPOLATION_DT: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interpolation {
    pub coarse_dt: f64,
    pub coarse_antisymmetry: f64,
    pub resampled_antisymmetry: f64,
    /// `|cos|` between the resampled fit's state delay vectors and the
    /// discrete polynomials.
    pub resampled_cosines: Vec<f64>,
    pub checks: Vec<Check>,
}

pub fn interpolation() -> Result<Interpolation> {
    let coarse = core("systems", preset_series("lorenz_sparse"))?;
    let m = INTERPOLATION_DELAYS;
    let fine = core(
        "preprocess",
        resample_series(&coarse, INTERPOLATION_DT, m, true),
    )?;
    let before = core(
        "models",
        fit(
            &coarse,
            &FitConfig::new(m, INTERPOLATION_RANK, coarse.dt, Method::Havok),
        ),
    )?;
    let after = core(
        "models",
        fit(
            &fine,
            &FitConfig::new(m, INTERPOLATION_RANK, fine.dt, Method::Havok),
        ),
    )?;
    let coarse_antisymmetry = core("diagnostics", antisymmetry_score(&before.a_continuous))?;
    let resampled_antisymmetry = core("diagnostics", antisymmetry_score(&after.a_continuous))?;
    let p = core("geometry", discrete_orthopoly(m, after.state_dim()))?;
    let resampled_cosines: Vec<f64> = (0..after.state_dim())
        .map(|j| dot(&after.basis.u.col(j), &p.column(j)).abs())
        .collect();
    let checks = vec![Check::new(
        "resampling at least halves antisymmetry",
        resampled_antisymmetry * 2.0 <= coarse_antisymmetry,
        format!("{coarse_antisymmetry:.4} -> {resampled_antisymmetry:.4}"),
    )];
    Ok(Interpolation {
        coarse_dt: coarse.dt,
        coarse_antisymmetry,
        resampled_antisymmetry,
        resampled_cosines,
        checks,
    })
}

/// Short record, long reference record and fit settings for one system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelitySetup {
    pub system: &'static str,
    pub short: &'static str,
    pub long: &'static str,
    pub delays: usize,
    pub rank: usize,
    pub forcing: bool,
}

pub const FIDELITY_SETUPS: [FidelitySetup; 3] = [
    FidelitySetup {
        system: "lorenz",
        short: "lorenz_short",
        long: "lorenz_long",
        delays: 101,
        rank: 5,
        forcing: true,
    },
    FidelitySetup {
        system: "rossler",
        short: "rossler_short",
        long: "rossler_long",
        delays: 101,
        rank: 5,
        forcing: true,
    },
    FidelitySetup {
        system: "pendulum",
        short: "pendulum_short",
        long: "pendulum_long",
        delays: 301,
        rank: 4,
        forcing: true,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fidelity {
    pub setup: FidelitySetup,
    /// HAVOK on the short record against HAVOK on the long record.
    pub havok: SpectrumComparison,
    /// sHAVOK on the short record against the same reference.
    pub shavok: SpectrumComparison,
    pub checks: Vec<Check>,
}

fn fit_preset(
    name: &str,
    setup: &FidelitySetup,
    method: Method,
) -> Result<havok_core::models::DelayModel> {
    let x = core("systems", preset_series(name))?;
    let cfg = FitConfig::new(setup.delays, setup.rank, x.dt, method).with_forcing(setup.forcing);
    core("models", fit(&x, &cfg))
}

pub fn fidelity_for(setup: &FidelitySetup) -> Result<Fidelity> {
    let reference = fit_preset(setup.long, setup, Method::Havok)?;
    let h = fit_preset(setup.short, setup, Method::Havok)?;
    let s = fit_preset(setup.short, setup, Method::Shavok)?;
    let havok = core(
        "diagnostics",
        spectrum_distance(&h.spectrum, &reference.spectrum),
    )?;
    let shavok = core(
        "diagnostics",
        spectrum_distance(&s.spectrum, &reference.spectrum),
    )?;
    let checks = vec![Check::new(
        &format!(
            "{}: sHAVOK spectrum closer to the long-record reference",
            setup.system
        ),
        shavok.mean_distance < havok.mean_distance,
        format!(
            "sHAVOK {:.4} vs HAVOK {:.4}",
            shavok.mean_distance, havok.mean_distance
        ),
    )];
    Ok(Fidelity {
        setup: *setup,
        havok,
        shavok,
        checks,
    })
}

pub fn fidelity() -> Result<Vec<Fidelity>> {
    FIDELITY_SETUPS.iter().map(fidelity_for).collect()
}

/// Rollouts growing past this multiple of their initial norm are unbounded.
pub const ROLLOUT_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stability {
    pub setup: FidelitySetup,
    pub havok_max_real_part: f64,
    pub shavok_max_real_part: f64,
    pub havok_rollout: RolloutSummary,
    pub shavok_rollout: RolloutSummary,
    /// Recorded, not required: whether the HAVOK rollout left the bound.
    pub havok_exceeds_bound: bool,
    pub checks: Vec<Check>,
}

pub fn stability() -> Result<Stability> {
    let setup = FIDELITY_SETUPS[2];
    let h = fit_preset(setup.short, &setup, Method::Havok)?;
    let s = fit_preset(setup.short, &setup, Method::Shavok)?;
    let (hr, sr) = (h.spectrum.max_real_part(), s.spectrum.max_real_part());
    let havok_rollout = rollout_summary(&h)?;
    let shavok_rollout = rollout_summary(&s)?;
    let checks = vec![
        Check::new(
            "sHAVOK max real part <= HAVOK max real part",
            sr <= hr,
            format!("{sr:.4} vs {hr:.4}"),
        ),
        Check::new(
            "sHAVOK rollout stays within 10x its initial norm",
            shavok_rollout.growth <= ROLLOUT_BOUND,
            format!("growth {:.3}", shavok_rollout.growth),
        ),
    ];
    Ok(Stability {
        setup,
        havok_max_real_part: hr,
        shavok_max_real_part: sr,
        havok_exceeds_bound: !(havok_rollout.growth <= ROLLOUT_BOUND),
        havok_rollout,
        shavok_rollout,
        checks,
    })
}

pub const RATIO_COLUMNS: [usize; 3] = [1_000, 10_000, 100_000];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeRatio {
    pub columns: Vec<usize>,
    pub ratios: Vec<f64>,
    /// `2√(17/5)`.
    pub limit: f64,
    pub checks: Vec<Check>,
}

pub fn derivative_ratio() -> Result<DerivativeRatio> {
    let limit = 2.0 * (17.0f64 / 5.0).sqrt();
    let ratios = RATIO_COLUMNS
        .iter()
        .map(|&n| {
            core(
                "geometry",
                derivative_norm_ratio(&two_tone_series(n + TWO_TONE_DELAYS - 1)?, TWO_TONE_DELAYS),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let last = ratios[ratios.len() - 1];
    let rel = (last - limit).abs() / limit;
    let checks = vec![Check::new(
        "ratio within 1% of the limit at the largest n",
        rel <= 0.01,
        format!("{ratios:?}, limit {limit:.4}"),
    )];
    Ok(DerivativeRatio {
        columns: RATIO_COLUMNS.to_vec(),
        ratios,
        limit,
        checks,
    })
}

/// Runs a scenario by name; returns its JSON document and checks.
pub fn run_named(name: &str) -> Result<(serde_json::Value, Vec<Check>)> {
    fn pack<T: Serialize>(v: T, checks: Vec<Check>) -> Result<(serde_json::Value, Vec<Check>)> {
        Ok((serde_json::to_value(v)?, checks))
    }
    match name {
        "two_tone" => {
            let r = two_tone()?;
            let c = r.checks.clone();
            pack(r, c)
        }
        "polynomials" => {
            let r = polynomials()?;
            let c = r.checks.clone();
            pack(r, c)
        }
        "sweep" => {
            let r = sweep()?;
            let c = r.checks.clone();
            pack(r, c)
        }
        "interpolation" => {
            let r = interpolation()?;
            let c = r.checks.clone();
            pack(r, c)
        }
        "fidelity" => {
            let r = fidelity()?;
            let c = r.iter().flat_map(|f| f.checks.clone()).collect();
            pack(r, c)
        }
        "stability" => {
            let r = stability()?;
            let c = r.checks.clone();
            pack(r, c)
        }
        "derivative_ratio" => {
            let r = derivative_ratio()?;
            let c = r.checks.clone();
            pack(r, c)
        }
        other => Err(CliError::Config(format!(
            "unknown scenario {other}; expected one of {}",
            SCENARIOS.join(", ")
        ))),
    }
}
