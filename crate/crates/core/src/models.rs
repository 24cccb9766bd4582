//! HAVOK and structured HAVOK (sHAVOK) delay models.
//!
//! Both methods regress the dynamics of the eigen-time-delay coordinates (the
//! right singular vectors of the centered Hankel matrix). HAVOK takes one SVD
//! and shifts its coordinates by one sample; sHAVOK takes separate SVDs of the
//! two column-shifted halves so that the state and its successor are both
//! expressed in orthonormal bases.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    build_hankel, center_hankel, split_shift, split_shift3, HankelEmbedding, TimeSeries,
};
use crate::error::{HavokError, Result};
use crate::linalg::{
    dot, eigen_nonsymmetric, pseudo_inverse, thin_svd, Matrix, Spectrum, SvdTriple, PINV_REL_TOL,
};

/// Singular values below this fraction of `σ_1` count as numerically zero.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Havok,
    Shavok,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeScheme {
    Forward,
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub delays: usize,
    pub rank: usize,
    pub dt: f64,
    pub centering: bool,
    pub forcing: bool,
    pub method: Method,
    pub derivative_scheme: DerivativeScheme,
    /// sHAVOK only: center each shifted half by its own central row instead
    /// of centering the full Hankel matrix once.
    pub per_half_centering: bool,
}

impl FitConfig {
    pub fn new(delays: usize, rank: usize, dt: f64, method: Method) -> Self {
        FitConfig {
            delays,
            rank,
            dt,
            centering: true,
            forcing: true,
            method,
            derivative_scheme: DerivativeScheme::Forward,
            per_half_centering: false,
        }
    }

    pub fn with_forcing(mut self, forcing: bool) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_centering(mut self, centering: bool) -> Self {
        self.centering = centering;
        self
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.derivative_scheme = scheme;
        self
    }

    /// Dimension of the modeled state: `r`, or `r - 1` when the last
    /// coordinate is split off as forcing.
    pub fn state_dim(&self) -> usize {
        if self.forcing {
            self.rank - 1
        } else {
            self.rank
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank < 2 || self.rank > self.delays {
            return Err(HavokError::Config(format!(
                "rank {} must satisfy 2 <= rank <= delays ({})",
                self.rank, self.delays
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HavokError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.centering && self.delays % 2 == 0 {
            return Err(HavokError::Config(format!(
                "centering needs an odd delay count, got {}; drop one delay",
                self.delays
            )));
        }
        Ok(())
    }
}

/// Rank-r SVD factors the model was regressed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl From<SvdTriple> for ReducedBasis {
    fn from(s: SvdTriple) -> Self {
        ReducedBasis {
            u: s.u,
            sigma: s.sigma,
            v: s.v,
        }
    }
}

/// Fitted linear delay model `v_{k+1} = Â v_k (+ B̂ v_r,k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub a_discrete: Matrix,
    pub a_continuous: Matrix,
    pub b_discrete: Option<Vec<f64>>,
    pub b_continuous: Option<Vec<f64>>,
    pub basis: ReducedBasis,
    pub spectrum: Spectrum,
    pub config: FitConfig,
    /// `‖h₀′‖` estimated from the central Hankel row (centered fits only).
    pub speed: Option<f64>,
    /// Time of the first row of `basis.v` (center of its delay window).
    pub t0: f64,
    /// Frobenius norm of the one-step regression residual.
    pub residual: f64,
}

impl DelayModel {
    pub fn state_dim(&self) -> usize {
        self.a_discrete.rows()
    }

    pub fn has_forcing(&self) -> bool {
        self.b_discrete.is_some()
    }

    /// Eigen-time-delay trajectory restricted to the state coordinates
    /// (one row per time sample).
    pub fn state_trajectory(&self) -> Matrix {
        let v = &self.basis.v;
        v.slice(0..v.rows(), 0..self.state_dim())
    }

    /// The raw r-th coordinate `v_r(t)` that drives the forced model.
    pub fn forcing_coordinate(&self) -> Option<Vec<f64>> {
        self.has_forcing()
            .then(|| self.basis.v.col(self.config.rank - 1))
    }
}

/// Fits a model with the method named in `cfg`.
pub fn fit(x: &TimeSeries, cfg: &FitConfig) -> Result<DelayModel> {
    match cfg.method {
        Method::Havok => fit_havok(x, cfg),
        Method::Shavok => fit_shavok(x, cfg),
    }
}

fn check_inputs(x: &TimeSeries, cfg: &FitConfig, min_columns: usize) -> Result<()> {
    cfg.validate()?;
    if ((x.dt - cfg.dt) / cfg.dt).abs() > 1e-9 {
        return Err(HavokError::Config(format!(
            "config dt {} does not match series dt {}",
            cfg.dt, x.dt
        )));
    }
    if x.len() < cfg.delays + min_columns - 1 {
        return Err(HavokError::param(format!(
            "{} samples are too few for {} delays (need at least {})",
            x.len(),
            cfg.delays,
            cfg.delays + min_columns - 1
        )));
    }
    Ok(())
}

fn embed(x: &TimeSeries, cfg: &FitConfig) -> Result<(HankelEmbedding, Option<f64>)> {
    let h = build_hankel(x, cfg.delays)?;
    if !cfg.centering {
        return Ok((h, None));
    }
    let c = center_hankel(&h)?;
    let speed = c.h0.as_deref().map(|h0| central_speed(h0, cfg.dt));
    Ok((c, speed))
}

/// `‖h₀′‖` from second-order central differences over interior samples.
pub fn central_speed(h0: &[f64], dt: f64) -> f64 {
    if h0.len() < 3 {
        return 0.0;
    }
    h0.windows(3)
        .map(|w| {
            let d = (w[2] - w[0]) / (2.0 * dt);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn reduced_svd(h: &Matrix, rank: usize, state_rank: usize) -> Result<SvdTriple> {
    if rank > h.rows().min(h.cols()) {
        return Err(HavokError::param(format!(
            "rank {rank} exceeds the Hankel dimensions {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let svd = thin_svd(h, rank)?;
    let s1 = svd.sigma[0];
    let ratio = if s1 > 0.0 {
        svd.sigma[state_rank - 1] / s1
    } else {
        0.0
    };
    if s1 == 0.0 || ratio < RANK_TOL {
        return Err(HavokError::DegenerateRank {
            requested: state_rank,
            ratio,
        });
    }
    Ok(svd)
}

/// Orients each singular pair so the last delay row of `u` is nonnegative.
///
/// With centering the delay-side vectors approach orthogonal polynomials
/// with positive leading coefficient, which pairs the time-side vectors with
/// the Frenet frame and makes the curvature superdiagonal positive.
fn orient(svd: &mut SvdTriple) {
    let last = svd.u.rows() - 1;
    for j in 0..svd.sigma.len() {
        if svd.u[(last, j)] < 0.0 {
            svd.u.negate_col(j);
            svd.v.negate_col(j);
        }
    }
}

/// Flips pairs of `other` whose delay vectors point away from `reference`.
fn align(reference: &SvdTriple, other: &mut SvdTriple) {
    for j in 0..other.sigma.len().min(reference.sigma.len()) {
        if dot(&reference.u.col(j), &other.u.col(j)) < 0.0 {
            other.u.negate_col(j);
            other.v.negate_col(j);
        }
    }
}

/// Least squares `coef = targetᵀ (regressorᵀ)†` with samples as rows.
fn regress(target: &Matrix, regressor: &Matrix) -> Result<Matrix> {
    let pinv = pseudo_inverse(&regressor.transpose(), PINV_REL_TOL)?;
    target.tr_matmul(&pinv)
}

struct Coefficients {
    a_discrete: Matrix,
    a_continuous: Matrix,
    b_discrete: Option<Vec<f64>>,
    b_continuous: Option<Vec<f64>>,
}

/// Splits an `s x r` operator into the state block and the forcing column,
/// given either the discrete map (forward scheme) or the generator (central).
fn assemble(op: &Matrix, forcing: bool, dt: f64, op_is_discrete: bool) -> Coefficients {
    let s = op.rows();
    let a = op.slice(0..s, 0..s);
    let b = forcing.then(|| op.col(s));
    let eye = Matrix::identity(s);
    if op_is_discrete {
        let a_continuous = a.sub(&eye).expect("square").scale(1.0 / dt);
        let b_continuous = b.as_ref().map(|b| b.iter().map(|x| x / dt).collect());
        Coefficients {
            a_discrete: a,
            a_continuous,
            b_discrete: b,
            b_continuous,
        }
    } else {
        let a_discrete = eye.add(&a.scale(dt)).expect("square");
        let b_discrete = b.as_ref().map(|b| b.iter().map(|x| x * dt).collect());
        Coefficients {
            a_discrete,
            a_continuous: a,
            b_discrete,
            b_continuous: b,
        }
    }
}

fn finish(
    cfg: &FitConfig,
    coef: Coefficients,
    basis: SvdTriple,
    speed: Option<f64>,
    t0: f64,
    residual: f64,
) -> Result<DelayModel> {
    let spectrum = eigen_nonsymmetric(&coef.a_continuous)?;
    Ok(DelayModel {
        a_discrete: coef.a_discrete,
        a_continuous: coef.a_continuous,
        b_discrete: coef.b_discrete,
        b_continuous: coef.b_continuous,
        basis: basis.into(),
        spectrum,
        config: cfg.clone(),
        speed,
        t0,
        residual,
    })
}

fn window_center_time(x: &TimeSeries, cfg: &FitConfig, first_column: usize) -> f64 {
    x.time(first_column) + (cfg.delays - 1) as f64 / 2.0 * cfg.dt
}

/// Rows `range` of `v`, columns `0..cols`.
fn rows_of(v: &Matrix, range: std::ops::Range<usize>, cols: usize) -> Matrix {
    v.slice(range, 0..cols)
}

/// HAVOK: one SVD of the (centered) Hankel matrix, then regression of the
/// shifted eigen-time-delay coordinates.
pub fn fit_havok(x: &TimeSeries, cfg: &FitConfig) -> Result<DelayModel> {
    if cfg.method != Method::Havok {
        return Err(HavokError::Config(
            "fit_havok called with a non-HAVOK config".into(),
        ));
    }
    check_inputs(x, cfg, 4)?;
    let r = cfg.rank;
    let s = cfg.state_dim();
    let (h, speed) = embed(x, cfg)?;
    let mut svd = reduced_svd(&h.h, r, s)?;
    orient(&mut svd);
    let v = &svd.v;
    let n = v.rows();

    let (coef, residual) = match cfg.derivative_scheme {
        DerivativeScheme::Forward => {
            let regressor = rows_of(v, 0..n - 1, r);
            let target = rows_of(v, 1..n, s);
            let op = regress(&target, &regressor)?;
            let residual = target
                .sub(&regressor.matmul(&op.transpose())?)?
                .frobenius_norm();
            (assemble(&op, cfg.forcing, cfg.dt, true), residual)
        }
        DerivativeScheme::Central => {
            let regressor = rows_of(v, 1..n - 1, r);
            let deriv = rows_of(v, 2..n, s)
                .sub(&rows_of(v, 0..n - 2, s))?
                .scale(0.5 / cfg.dt);
            let op = regress(&deriv, &regressor)?;
            let residual = deriv
                .sub(&regressor.matmul(&op.transpose())?)?
                .frobenius_norm()
                * cfg.dt;
            (assemble(&op, cfg.forcing, cfg.dt, false), residual)
        }
    };
    finish(
        cfg,
        coef,
        svd,
        speed,
        window_center_time(x, cfg, 0),
        residual,
    )
}

/// sHAVOK: separate SVDs of the column-shifted halves of the centered Hankel
/// matrix; the dynamics are `V₂ᵀ V₁` in the aligned orthonormal bases.
pub fn fit_shavok(x: &TimeSeries, cfg: &FitConfig) -> Result<DelayModel> {
    if cfg.method != Method::Shavok {
        return Err(HavokError::Config(
            "fit_shavok called with a non-sHAVOK config".into(),
        ));
    }
    check_inputs(x, cfg, 4)?;
    let r = cfg.rank;
    let s = cfg.state_dim();

    let halves = |count: usize| -> Result<(Vec<HankelEmbedding>, Option<f64>)> {
        if cfg.per_half_centering && cfg.centering {
            let raw = build_hankel(x, cfg.delays)?;
            let parts = split_parts(&raw, count)?;
            let centered = parts
                .iter()
                .map(center_hankel)
                .collect::<Result<Vec<_>>>()?;
            let speed = centered[0]
                .h0
                .as_deref()
                .map(|h0| central_speed(h0, cfg.dt));
            Ok((centered, speed))
        } else {
            let (h, speed) = embed(x, cfg)?;
            Ok((split_parts(&h, count)?, speed))
        }
    };

    match cfg.derivative_scheme {
        DerivativeScheme::Forward => {
            let (parts, speed) = halves(2)?;
            let mut state = reduced_svd(&parts[0].h, r, s)?;
            orient(&mut state);
            let mut next = reduced_svd(&parts[1].h, s, s)?;
            align(&state, &mut next);
            let op = next.v.tr_matmul(&state.v)?;
            let residual = next
                .v
                .sub(&state.v.matmul(&op.transpose())?)?
                .frobenius_norm();
            let coef = assemble(&op, cfg.forcing, cfg.dt, true);
            finish(
                cfg,
                coef,
                state,
                speed,
                window_center_time(x, cfg, 0),
                residual,
            )
        }
        DerivativeScheme::Central => {
            let (parts, speed) = halves(3)?;
            let mut state = reduced_svd(&parts[1].h, r, s)?;
            orient(&mut state);
            let mut prev = reduced_svd(&parts[0].h, s, s)?;
            let mut next = reduced_svd(&parts[2].h, s, s)?;
            align(&state, &mut prev);
            align(&state, &mut next);
            let op = next
                .v
                .tr_matmul(&state.v)?
                .sub(&prev.v.tr_matmul(&state.v)?)?
                .scale(0.5 / cfg.dt);
            let deriv = next.v.sub(&prev.v)?.scale(0.5 / cfg.dt);
            let residual = deriv
                .sub(&state.v.matmul(&op.transpose())?)?
                .frobenius_norm()
                * cfg.dt;
            let coef = assemble(&op, cfg.forcing, cfg.dt, false);
            finish(
                cfg,
                coef,
                state,
                speed,
                window_center_time(x, cfg, 1),
                residual,
            )
        }
    }
}

fn split_parts(h: &HankelEmbedding, count: usize) -> Result<Vec<HankelEmbedding>> {
    if count == 2 {
        let (a, b) = split_shift(h)?;
        Ok(vec![a, b])
    } else {
        Ok(split_shift3(h)?.to_vec())
    }
}

/// Continuous-time spectra of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpectrum {
    /// Eigenpairs of the continuous generator `A`.
    pub continuous: Spectrum,
    /// `ω = ln(λ)/Δt` for the eigenvalues `λ` of the discrete map `Â`.
    pub from_discrete: Vec<Complex64>,
}

pub fn model_spectrum(model: &DelayModel) -> Result<ModelSpectrum> {
    Ok(ModelSpectrum {
        continuous: model.spectrum.clone(),
        from_discrete: discrete_to_continuous(&model.a_discrete, model.config.dt)?,
    })
}

/// Eigenvalues of a discrete map normalized by the sampling interval.
pub fn discrete_to_continuous(a_discrete: &Matrix, dt: f64) -> Result<Vec<Complex64>> {
    let mut w: Vec<Complex64> = crate::linalg::eigenvalues(a_discrete)?
        .into_iter()
        .map(|l| l.ln() / dt)
        .collect();
    w.sort_by(crate::linalg::cmp_eigenvalues);
    Ok(w)
}

/// Rolls the discrete model forward from `v0`; row `k` of the result is `v_k`.
///
/// Produces `steps` snapshots starting with `v0`. Forced models need a
/// forcing value for every transition (`steps - 1` values).
pub fn reconstruct(
    model: &DelayModel,
    v0: &[f64],
    steps: usize,
    forcing_series: Option<&[f64]>,
) -> Result<Matrix> {
    let s = model.state_dim();
    if v0.len() != s {
        return Err(HavokError::param(format!(
            "initial state has dimension {}, model state is {s}",
            v0.len()
        )));
    }
    let transitions = steps.saturating_sub(1);
    let forcing = match (&model.b_discrete, forcing_series) {
        (Some(_), None) if transitions > 0 => {
            return Err(HavokError::param("forced model needs a forcing series"));
        }
        (Some(_), Some(f)) if f.len() < transitions => {
            return Err(HavokError::param(format!(
                "forcing series has {} values, {transitions} transitions requested",
                f.len()
            )));
        }
        (None, Some(_)) => return Err(HavokError::param("model has no forcing term")),
        (_, f) => f,
    };
    let mut out = Matrix::zeros(steps, s);
    if steps == 0 {
        return Ok(out);
    }
    out.row_mut(0).copy_from_slice(v0);
    let mut v = v0.to_vec();
    for k in 0..transitions {
        let mut next = model.a_discrete.matvec(&v)?;
        if let (Some(b), Some(f)) = (&model.b_discrete, forcing) {
            next.iter_mut().zip(b).for_each(|(x, bi)| *x += bi * f[k]);
        }
        out.row_mut(k + 1).copy_from_slice(&next);
        v = next;
    }
    Ok(out)
}

/// The forcing coordinate in signal units, `σ_r v_r(t)`, as a time series.
///
/// This is the projection of each delay window onto the r-th delay mode,
/// so its magnitude is comparable across coordinates.
pub fn forcing_signal(model: &DelayModel) -> Result<TimeSeries> {
    let raw = model
        .forcing_coordinate()
        .ok_or_else(|| HavokError::param("model was fitted without forcing"))?;
    let sigma = model.basis.sigma[model.config.rank - 1];
    TimeSeries::new(
        model.t0,
        model.config.dt,
        raw.into_iter().map(|v| v * sigma).collect(),
    )
}

/// Coordinate `j` (0-based) of the trajectory in signal units, `σ_j v_j(t)`.
pub fn delay_coordinate(model: &DelayModel, j: usize) -> Result<TimeSeries> {
    if j >= model.basis.sigma.len() {
        return Err(HavokError::param(format!(
            "coordinate {j} beyond rank {}",
            model.basis.sigma.len()
        )));
    }
    let sigma = model.basis.sigma[j];
    TimeSeries::new(
        model.t0,
        model.config.dt,
        model
            .basis
            .v
            .col(j)
            .into_iter()
            .map(|v| v * sigma)
            .collect(),
    )
}
