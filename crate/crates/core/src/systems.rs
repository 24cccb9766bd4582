//! Synthetic test systems: two-tone signal, Lorenz, Rössler and the double
//! pendulum, with fixed-step RK4 integration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{HavokError, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    TwoTone,
    Lorenz,
    Rossler,
    DoublePendulum,
}

impl SystemKind {
    /// Parameter names with their default values.
    pub fn default_parameters(self) -> &'static [(&'static str, f64)] {
        match self {
            SystemKind::TwoTone => &[],
            SystemKind::Lorenz => &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)],
            SystemKind::Rossler => &[("a", 0.1), ("b", 0.1), ("c", 14.0)],
            SystemKind::DoublePendulum => &[("m", 1.0), ("l", 1.0), ("g", 10.0)],
        }
    }

    pub fn state_dim(self) -> usize {
        match self {
            SystemKind::TwoTone => 1,
            SystemKind::Lorenz | SystemKind::Rossler => 3,
            SystemKind::DoublePendulum => 4,
        }
    }
}

/// A fully specified simulation.
///
/// `initial_state` is `(x, y, z)` for Lorenz/Rössler, `(θ₁, θ₂, θ̇₁, θ̇₂)` for
/// the pendulum and `(t₀)` for the two-tone signal `sin t + sin 2t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub parameters: BTreeMap<String, f64>,
    pub initial_state: Vec<f64>,
    pub dt: f64,
    pub samples: usize,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, initial_state: Vec<f64>, dt: f64, samples: usize) -> Self {
        SystemSpec {
            kind,
            parameters: BTreeMap::new(),
            initial_state,
            dt,
            samples,
        }
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    /// Parameter value, falling back to the kind's default.
    pub fn parameter(&self, name: &str) -> Result<f64> {
        if let Some(&v) = self.parameters.get(name) {
            return Ok(v);
        }
        self.kind
            .default_parameters()
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
            .ok_or_else(|| HavokError::Config(format!("{:?} has no parameter {name}", self.kind)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HavokError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.samples < 2 {
            return Err(HavokError::Config(format!(
                "need at least 2 samples, got {}",
                self.samples
            )));
        }
        let known = self.kind.default_parameters();
        for (name, v) in &self.parameters {
            if !known.iter().any(|(n, _)| n == name) {
                return Err(HavokError::Config(format!(
                    "unknown parameter {name} for {:?}",
                    self.kind
                )));
            }
            if !v.is_finite() {
                return Err(HavokError::Config(format!(
                    "parameter {name} is not finite"
                )));
            }
        }
        if self.initial_state.len() != self.kind.state_dim() {
            return Err(HavokError::Config(format!(
                "{:?} needs an initial state of length {}, got {}",
                self.kind,
                self.kind.state_dim(),
                self.initial_state.len()
            )));
        }
        if self.initial_state.iter().any(|x| !x.is_finite()) {
            return Err(HavokError::Config("initial state is not finite".into()));
        }
        Ok(())
    }
}

/// Simulated trajectory, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: SystemKind,
    pub t0: f64,
    pub dt: f64,
    pub states: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    X,
    SinTheta1,
    SinTheta2,
}

fn rk4<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    x0: [f64; N],
    dt: f64,
    samples: usize,
) -> Result<Matrix> {
    let axpy = |x: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| x[i] + h * k[i])
    };
    let mut out = Vec::with_capacity(samples * N);
    let mut x = x0;
    out.extend_from_slice(&x);
    for step in 1..samples {
        let k1 = f(&x);
        let k2 = f(&axpy(&x, &k1, dt / 2.0));
        let k3 = f(&axpy(&x, &k2, dt / 2.0));
        let k4 = f(&axpy(&x, &k3, dt));
        x = std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HavokError::Divergence { step });
        }
        out.extend_from_slice(&x);
    }
    Matrix::from_vec(samples, N, out)
}

/// Right-hand side of the double pendulum in `(θ₁, θ₂, θ̇₁, θ̇₂)`.
///
/// Euler-Lagrange equations of
/// `L = (ml²/6)(θ̇₂² + 4θ̇₁² + 3θ̇₁θ̇₂ cos Δ) + (mgl/2)(3 cos θ₁ + cos θ₂)`, `Δ = θ₁ − θ₂`:
///
/// ```text
/// 8 θ̈₁ + 3 cos Δ θ̈₂ = −3 θ̇₂² sin Δ − 9 (g/l) sin θ₁
/// 3 cos Δ θ̈₁ + 2 θ̈₂ =  3 θ̇₁² sin Δ − 3 (g/l) sin θ₂
/// ```
fn pendulum_rhs(g_over_l: f64, s: &[f64; 4]) -> [f64; 4] {
    let [t1, t2, w1, w2] = *s;
    let (sd, cd) = (t1 - t2).sin_cos();
    let r1 = -3.0 * w2 * w2 * sd - 9.0 * g_over_l * t1.sin();
    let r2 = 3.0 * w1 * w1 * sd - 3.0 * g_over_l * t2.sin();
    let det = 16.0 - 9.0 * cd * cd;
    let a1 = (2.0 * r1 - 3.0 * cd * r2) / det;
    let a2 = (8.0 * r2 - 3.0 * cd * r1) / det;
    [w1, w2, a1, a2]
}

pub fn simulate(spec: &SystemSpec) -> Result<Trajectory> {
    spec.validate()?;
    let x0 = &spec.initial_state;
    let (t0, states) = match spec.kind {
        SystemKind::TwoTone => {
            let t0 = x0[0];
            let data = (0..spec.samples)
                .map(|k| {
                    let t = t0 + k as f64 * spec.dt;
                    t.sin() + (2.0 * t).sin()
                })
                .collect();
            (t0, Matrix::from_vec(spec.samples, 1, data)?)
        }
        SystemKind::Lorenz => {
            let (sigma, rho, beta) = (
                spec.parameter("sigma")?,
                spec.parameter("rho")?,
                spec.parameter("beta")?,
            );
            let f = |s: &[f64; 3]| {
                [
                    sigma * (s[1] - s[0]),
                    s[0] * (rho - s[2]) - s[1],
                    s[0] * s[1] - beta * s[2],
                ]
            };
            (0.0, rk4(f, [x0[0], x0[1], x0[2]], spec.dt, spec.samples)?)
        }
        SystemKind::Rossler => {
            let (a, b, c) = (
                spec.parameter("a")?,
                spec.parameter("b")?,
                spec.parameter("c")?,
            );
            let f = |s: &[f64; 3]| [-s[1] - s[2], s[0] + a * s[1], b + s[2] * (s[0] - c)];
            (0.0, rk4(f, [x0[0], x0[1], x0[2]], spec.dt, spec.samples)?)
        }
        SystemKind::DoublePendulum => {
            let l = spec.parameter("l")?;
            let g = spec.parameter("g")?;
            if !(l > 0.0) {
                return Err(HavokError::Config(format!(
                    "pendulum length must be positive, got {l}"
                )));
            }
            let gl = g / l;
            (
                0.0,
                rk4(
                    |s| pendulum_rhs(gl, s),
                    [x0[0], x0[1], x0[2], x0[3]],
                    spec.dt,
                    spec.samples,
                )?,
            )
        }
    };
    Ok(Trajectory {
        kind: spec.kind,
        t0,
        dt: spec.dt,
        states,
    })
}

/// Scalar measurement of a trajectory.
pub fn measure(traj: &Trajectory, observable: Observable) -> Result<TimeSeries> {
    let col = match (traj.kind, observable) {
        (SystemKind::DoublePendulum, Observable::SinTheta1) => 0,
        (SystemKind::DoublePendulum, Observable::SinTheta2) => 1,
        (SystemKind::DoublePendulum, Observable::X) => {
            return Err(HavokError::param(
                "double pendulum is observed through sin_theta1 or sin_theta2",
            ))
        }
        (_, Observable::X) => 0,
        (kind, obs) => {
            return Err(HavokError::param(format!(
                "observable {obs:?} is not defined for {kind:?}"
            )))
        }
    };
    let raw = traj.states.col(col);
    let values = match observable {
        Observable::X => raw,
        _ => raw.into_iter().map(f64::sin).collect(),
    };
    TimeSeries::new(traj.t0, traj.dt, values)
}

/// Total energy `T + V` of a pendulum state under the Lagrangian above.
pub fn pendulum_energy(spec: &SystemSpec, state: &[f64]) -> Result<f64> {
    if spec.kind != SystemKind::DoublePendulum || state.len() != 4 {
        return Err(HavokError::param(
            "pendulum energy needs a double-pendulum state",
        ));
    }
    let (m, l, g) = (
        spec.parameter("m")?,
        spec.parameter("l")?,
        spec.parameter("g")?,
    );
    let [t1, t2, w1, w2] = [state[0], state[1], state[2], state[3]];
    let kinetic = m * l * l / 6.0 * (w2 * w2 + 4.0 * w1 * w1 + 3.0 * w1 * w2 * (t1 - t2).cos());
    let potential = -0.5 * m * g * l * (3.0 * t1.cos() + t2.cos());
    Ok(kinetic + potential)
}

/// Named simulation plus the scalar observable used for fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub spec: SystemSpec,
    pub observable: Observable,
    /// The observed series keeps every `stride`-th simulated sample.
    pub stride: usize,
}

pub const PRESET_NAMES: [&str; 9] = [
    "lorenz_short",
    "lorenz_long",
    "lorenz_sweep",
    "lorenz_sparse",
    "rossler_short",
    "rossler_long",
    "pendulum_short",
    "pendulum_long",
    "two_tone",
];

pub fn preset(name: &str) -> Result<Preset> {
    let lorenz =
        |samples| SystemSpec::new(SystemKind::Lorenz, vec![-8.0, 8.0, 27.0], 0.001, samples);
    let rossler =
        |samples| SystemSpec::new(SystemKind::Rossler, vec![1.0, 1.0, 1.0], 0.001, samples);
    let pendulum = |samples| {
        let half_pi = std::f64::consts::FRAC_PI_2;
        SystemSpec::new(
            SystemKind::DoublePendulum,
            vec![half_pi, half_pi, -0.01, -0.005],
            0.001,
            samples,
        )
    };
    let mut stride = 1;
    let (spec, observable) = match name {
        "lorenz_short" => (lorenz(3_000), Observable::X),
        "lorenz_long" => (lorenz(300_000), Observable::X),
        // 20 s at dt = 0.0005; coarser steps are taken by decimation.
        "lorenz_sweep" => (
            SystemSpec {
                dt: 0.0005,
                ..lorenz(40_001)
            },
            Observable::X,
        ),
        // 100 s observed every 0.1 time units.
        "lorenz_sparse" => {
            stride = 100;
            (lorenz(100_001), Observable::X)
        }
        "rossler_short" => (rossler(70_000), Observable::X),
        "rossler_long" => (rossler(300_000), Observable::X),
        "pendulum_short" => (pendulum(1_200), Observable::SinTheta1),
        "pendulum_long" => (pendulum(100_000), Observable::SinTheta1),
        "two_tone" => (
            SystemSpec::new(SystemKind::TwoTone, vec![0.0], 0.001, 10_001),
            Observable::X,
        ),
        other => {
            return Err(HavokError::Config(format!(
                "unknown preset {other}; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: name.to_string(),
        spec,
        observable,
        stride,
    })
}

/// Simulates a preset and returns its observed scalar series.
pub fn preset_series(name: &str) -> Result<TimeSeries> {
    let p = preset(name)?;
    let x = measure(&simulate(&p.spec)?, p.observable)?;
    if p.stride == 1 {
        Ok(x)
    } else {
        crate::preprocess::decimate(&x, p.stride)
    }
}
