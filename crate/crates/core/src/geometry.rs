//! Frenet-Serret frames, curvature matrices and the orthogonal polynomial
//! bases that the delay-side singular vectors converge to.

use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{HavokError, Result};
use crate::linalg::{dot, gram_schmidt, norm, Matrix};

/// Cholesky pivots below this fraction of the largest Gram diagonal mark
/// the Gram matrix as singular.
pub const GRAM_PIVOT_TOL: f64 = 1e-12;

/// Moving frame at one point of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrenetApparatus {
    /// Orthonormal vectors `e_1..e_k`.
    pub frame: Vec<Vec<f64>>,
    /// `κ_1..κ_{k-1}`; empty when only the frame was computed.
    pub curvatures: Vec<f64>,
    /// `‖γ′‖` at the evaluation point.
    pub speed: f64,
    pub k_matrix: Matrix,
    /// Indices of derivatives that were linearly dependent on earlier ones.
    pub dropped: Vec<usize>,
}

impl FrenetApparatus {
    pub fn rank(&self) -> usize {
        self.frame.len()
    }
}

/// Frame from the derivative list `γ′, γ″, …` by Gram-Schmidt.
///
/// Dependent (including zero) higher derivatives are dropped and reported;
/// the frame then has reduced rank.
pub fn frenet_frame<V: AsRef<[f64]>>(derivatives: &[V]) -> Result<FrenetApparatus> {
    let first = derivatives
        .first()
        .ok_or_else(|| HavokError::param("frenet frame needs at least one derivative"))?
        .as_ref();
    let len = first.len();
    if let Some(i) = derivatives.iter().position(|d| d.as_ref().len() != len) {
        return Err(HavokError::param(format!(
            "derivative {i} has a different length"
        )));
    }
    let speed = norm(first);
    if !(speed > 0.0) {
        return Err(HavokError::DegenerateInput {
            index: 0,
            reason: "first derivative vanishes".into(),
        });
    }
    let mut dropped = Vec::new();
    let mut kept_idx = Vec::new();
    for (i, d) in derivatives.iter().enumerate().skip(1) {
        if d.as_ref().iter().all(|&x| x == 0.0) {
            dropped.push(i);
        } else {
            kept_idx.push(i);
        }
    }
    let mut inputs: Vec<&[f64]> = vec![first];
    inputs.extend(kept_idx.iter().map(|&i| derivatives[i].as_ref()));
    let gs = gram_schmidt(&inputs)?;
    for &k in &gs.dropped {
        dropped.push(kept_idx[k - 1]);
    }
    dropped.sort_unstable();
    let r = gs.vectors.len();
    Ok(FrenetApparatus {
        frame: gs.vectors,
        curvatures: Vec::new(),
        speed,
        k_matrix: Matrix::zeros(r, r),
        dropped,
    })
}

/// Curvature matrix estimated from a time-indexed frame sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    /// `(1/‖γ′‖) (dQ/dt) Qᵀ` before symmetrization.
    pub raw: Matrix,
    /// Skew part `(raw − rawᵀ)/2`.
    pub k: Matrix,
    /// Frobenius norm of the discarded symmetric part.
    pub symmetric_residual: f64,
}

impl CurvatureEstimate {
    /// Superdiagonal of the skew estimate.
    pub fn curvatures(&self) -> Vec<f64> {
        self.k.off_diagonal(1)
    }
}

fn frame_matrix(f: &FrenetApparatus) -> Result<Matrix> {
    Matrix::from_rows(&f.frame)
}

/// `K = (1/‖γ′‖)(dQ/dt)Qᵀ` by forward differences, averaged over consecutive
/// frame pairs, then skew-symmetrized.
pub fn curvature_matrix_from_frame(
    frames: &[FrenetApparatus],
    dt: f64,
) -> Result<CurvatureEstimate> {
    if frames.len() < 2 {
        return Err(HavokError::param(
            "curvature estimate needs at least two frames",
        ));
    }
    if !(dt > 0.0) {
        return Err(HavokError::param(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let r = frames[0].rank();
    let len = frames[0].frame.first().map_or(0, Vec::len);
    for (i, f) in frames.iter().enumerate() {
        if f.rank() != r || f.frame.iter().any(|e| e.len() != len) {
            return Err(HavokError::param(format!(
                "frame {i} has inconsistent dimensions"
            )));
        }
        if !(f.speed > 0.0) {
            return Err(HavokError::param(format!(
                "frame {i} has nonpositive speed"
            )));
        }
    }
    let mut raw = Matrix::zeros(r, r);
    for pair in frames.windows(2) {
        let q0 = frame_matrix(&pair[0])?;
        let q1 = frame_matrix(&pair[1])?;
        let dq = q1.sub(&q0)?.scale(1.0 / (dt * pair[0].speed));
        raw = raw.add(&dq.matmul(&q0.transpose())?)?;
    }
    let raw = raw.scale(1.0 / (frames.len() - 1) as f64);
    let rt = raw.transpose();
    let k = raw.sub(&rt)?.scale(0.5);
    let symmetric_residual = raw.add(&rt)?.scale(0.5).frobenius_norm();
    Ok(CurvatureEstimate {
        raw,
        k,
        symmetric_residual,
    })
}

/// Determinant of a symmetric positive semidefinite matrix by Cholesky;
/// `None` when a pivot falls below `GRAM_PIVOT_TOL` times the largest diagonal.
fn gram_det(g: &Matrix) -> Option<f64> {
    let n = g.rows();
    let scale = g.diag().into_iter().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    let mut det = 1.0;
    for j in 0..n {
        let pivot = g[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if !(pivot >= GRAM_PIVOT_TOL * scale) {
            return None;
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        det *= pivot;
        for i in j + 1..n {
            let s = g[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / d;
        }
    }
    Some(det)
}

/// Gram determinants `G_1..G_k` of the leading derivative columns.
fn leading_gram_dets(d: &[&[f64]]) -> Vec<Option<f64>> {
    let k = d.len();
    let g = Matrix::from_fn(k, k, |i, j| dot(d[i], d[j]));
    (1..=k).map(|i| gram_det(&g.slice(0..i, 0..i))).collect()
}

/// `κ_1, κ_2, κ_3` from Gram determinants of the derivative vectors:
///
/// `κ_i = √(G_{i−1} G_{i+1}) / (G_i ‖γ′‖)` with `G_0 = 1`.
pub fn analytic_curvatures_gram(
    d1: &[f64],
    d2: &[f64],
    d3: &[f64],
    d4: &[f64],
) -> Result<[f64; 3]> {
    let len = d1.len();
    if [d2, d3, d4].iter().any(|d| d.len() != len) {
        return Err(HavokError::param(
            "derivative vectors must have equal length",
        ));
    }
    let speed = norm(d1);
    if !(speed > 0.0) {
        return Err(HavokError::DegenerateInput {
            index: 0,
            reason: "first derivative vanishes".into(),
        });
    }
    let g = leading_gram_dets(&[d1, d2, d3, d4]);
    let mut out = [0.0; 3];
    let mut prev = 1.0;
    for i in 1..=3 {
        let (gi, gnext) = match (g[i - 1], g[i]) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(HavokError::UndefinedCurvature {
                    index: i,
                    gram: if g[i - 1].is_none() { i } else { i + 1 },
                    partial: out[..i - 1].to_vec(),
                })
            }
        };
        out[i - 1] = (prev * gnext).sqrt() / (gi * speed);
        prev = gi;
    }
    Ok(out)
}

/// Coefficient `a_i` of the singular-value curvature formula, from
/// `a_{j−1} = (j/(j + (−1)^j))² (4j² − 1)/3` with `j = i + 1`.
pub fn sv_curvature_coefficient(i: usize) -> f64 {
    let j = (i + 1) as f64;
    let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let ratio = j / (j + sign);
    ratio * ratio * (4.0 * j * j - 1.0) / 3.0
}

/// `κ_i = √a_i · σ_{i+1} / (σ_1 σ_i)` for `i = 1..len−1`.
pub fn curvatures_from_singular_values(sigma: &[f64]) -> Result<Vec<f64>> {
    if sigma.len() < 2 {
        return Err(HavokError::param("need at least two singular values"));
    }
    if let Some(i) = sigma.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(HavokError::param(format!(
            "singular value {i} is not positive"
        )));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(HavokError::param("singular values must be nonincreasing"));
    }
    Ok((1..sigma.len())
        .map(|i| sv_curvature_coefficient(i).sqrt() * sigma[i] / (sigma[0] * sigma[i - 1]))
        .collect())
}

/// Orthonormal polynomials sampled on `n ∈ {−p..p}`, one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialBasis {
    pub degrees: Vec<usize>,
    pub vectors: Matrix,
    pub half_width: usize,
}

impl PolynomialBasis {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.vectors.col(j)
    }
}

fn check_grid(m: usize, k: usize) -> Result<usize> {
    if m % 2 == 0 || m < 3 {
        return Err(HavokError::param(format!(
            "polynomial grid needs an odd size >= 3, got {m}"
        )));
    }
    let p = (m - 1) / 2;
    if k == 0 || k > p {
        return Err(HavokError::param(format!(
            "degree count {k} must be in 1..={p} for m = {m}"
        )));
    }
    Ok(p)
}

/// Closed-form discrete orthonormal polynomials of degrees `1..=k` (k ≤ 5)
/// without the constant, as they appear for a centered Hankel matrix.
pub fn discrete_orthopoly(m: usize, k: usize) -> Result<PolynomialBasis> {
    if k > 5 {
        return Err(HavokError::param(format!(
            "closed forms exist only up to degree 5, got {k}; use orthopoly_gram_schmidt"
        )));
    }
    let half = check_grid(m, k)?;
    let p = half as f64;
    let q = 3.0 * p * p + 3.0 * p - 1.0;
    let s = 3.0 * p.powi(4) + 6.0 * p.powi(3) - 3.0 * p + 1.0;
    let base = p * (2.0 * p + 1.0) * (p + 1.0);
    let wide = base * (2.0 * p - 1.0) * (2.0 * p + 3.0) * (p - 1.0) * (p + 2.0);
    let c = [
        (base / 3.0).sqrt(),
        (base * q / 15.0).sqrt(),
        (wide / 175.0).sqrt(),
        (wide * (15.0 * p.powi(4) + 30.0 * p.powi(3) - 35.0 * p * p - 50.0 * p + 12.0)
            / (2205.0 * q))
            .sqrt(),
        (4.0 * wide * (2.0 * p - 3.0) * (2.0 * p + 5.0) * (p - 2.0) * (p + 3.0) / 43659.0).sqrt(),
    ];
    let poly = |deg: usize, n: f64| -> f64 {
        match deg {
            1 => n,
            2 => n * n,
            3 => n.powi(3) - n * q / 5.0,
            4 => n.powi(4) - 5.0 * n * n * s / (7.0 * q),
            _ => {
                5.0 * (n * q / 5.0 - n.powi(3)) * (2.0 * p * p + 2.0 * p - 3.0) / 9.0 - n * s / 7.0
                    + n.powi(5)
            }
        }
    };
    let vectors = Matrix::from_fn(m, k, |i, j| poly(j + 1, i as f64 - p) / c[j]);
    Ok(PolynomialBasis {
        degrees: (1..=k).collect(),
        vectors,
        half_width: half,
    })
}

/// Orthonormal polynomials of degrees `1..=k` by Gram-Schmidt on the
/// monomials `n, n², …` over the grid; any degree, numerically orthogonal.
pub fn orthopoly_gram_schmidt(m: usize, k: usize) -> Result<PolynomialBasis> {
    let half = check_grid(m, k)?;
    let p = half as f64;
    // Monomials on the unit interval keep the high powers well scaled.
    let monomials: Vec<Vec<f64>> = (1..=k)
        .map(|d| {
            (0..m)
                .map(|i| ((i as f64 - p) / p).powi(d as i32))
                .collect()
        })
        .collect();
    let gs = gram_schmidt(&monomials)?;
    if gs.vectors.len() != k {
        return Err(HavokError::Numerical(format!(
            "monomials of degree up to {k} lost rank on {m} points"
        )));
    }
    let mut vectors = Matrix::from_columns(&gs.vectors)?;
    for j in 0..k {
        // Positive leading coefficient: positive at the right end of the grid.
        if vectors[(m - 1, j)] < 0.0 {
            vectors.negate_col(j);
        }
    }
    Ok(PolynomialBasis {
        degrees: (1..=k).collect(),
        vectors,
        half_width: half,
    })
}

/// Curvature matrix `K = A/‖h₀′‖` and its superdiagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCurvatures {
    pub k: Matrix,
    pub curvatures: Vec<f64>,
}

pub fn curvatures_from_model(a_continuous: &Matrix, speed: f64) -> Result<ModelCurvatures> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(HavokError::param(format!(
            "speed must be positive, got {speed}"
        )));
    }
    if !a_continuous.is_square() {
        return Err(HavokError::param("curvature matrix must be square"));
    }
    let k = a_continuous.scale(1.0 / speed);
    let curvatures = k.off_diagonal(1);
    Ok(ModelCurvatures { k, curvatures })
}

/// Derivatives `f′..f^(order)` by repeated second-order central differences,
/// trimmed to the common interior so all have `len − 2·order` samples.
pub fn derivative_stack(f: &[f64], dt: f64, order: usize) -> Result<Vec<Vec<f64>>> {
    if order == 0 || f.len() <= 2 * order {
        return Err(HavokError::param(format!(
            "{} samples are too few for {order} central-difference derivatives",
            f.len()
        )));
    }
    let mut out = Vec::with_capacity(order);
    let mut cur = f.to_vec();
    for _ in 0..order {
        cur = cur.windows(3).map(|w| (w[2] - w[0]) / (2.0 * dt)).collect();
        out.push(cur.clone());
    }
    let target = f.len() - 2 * order;
    Ok(out
        .into_iter()
        .map(|d| {
            let skip = (d.len() - target) / 2;
            d[skip..skip + target].to_vec()
        })
        .collect())
}

/// Derivatives of `x` at the times of the central Hankel row for `m` delays,
/// i.e. on samples `(m−1)/2 .. len−(m−1)/2`, using the samples outside that
/// span so no trimming is needed.
pub fn central_row_derivatives(x: &TimeSeries, m: usize, order: usize) -> Result<Vec<Vec<f64>>> {
    let half = m.saturating_sub(1) / 2;
    if m < 3 || m % 2 == 0 || m > x.len() {
        return Err(HavokError::param(format!(
            "central row needs an odd delay count in 3..={}, got {m}",
            x.len()
        )));
    }
    if order > half {
        return Err(HavokError::param(format!(
            "{order} derivatives need {order} samples beyond the central row on each side, {m} delays give {half}"
        )));
    }
    let n = x.len() - m + 1;
    let stack = derivative_stack(&x.values, x.dt, order)?;
    Ok(stack
        .into_iter()
        .map(|d| d[half - order..half - order + n].to_vec())
        .collect())
}

/// `2‖h₀″‖/‖h₀′‖` for the central row of an `m`-delay embedding of `x`.
pub fn derivative_norm_ratio(x: &TimeSeries, m: usize) -> Result<f64> {
    let d = central_row_derivatives(x, m, 2)?;
    let speed = norm(&d[0]);
    if !(speed > 0.0) {
        return Err(HavokError::DegenerateInput {
            index: 0,
            reason: "first derivative vanishes".into(),
        });
    }
    Ok(2.0 * norm(&d[1]) / speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_frame() {
        let f = frenet_frame(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(f.frame, vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
        assert_eq!(f.speed, 1.0);
        assert!(f.dropped.is_empty());
    }

    #[test]
    fn line_drops_second_derivative() {
        let f = frenet_frame(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.dropped, vec![1]);
        let f = frenet_frame(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.dropped, vec![1]);
    }

    #[test]
    fn helix_frame() {
        // γ = (cos t, sin t, t) at t = 0: γ′ = (0,1,1), γ″ = (−1,0,0), already orthogonal.
        let f = frenet_frame(&[vec![0.0, 1.0, 1.0], vec![-1.0, 0.0, 0.0]]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        for (a, b) in f.frame[0].iter().zip([0.0, s, s]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(f.frame[1], vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_first_derivative() {
        assert!(matches!(
            frenet_frame(&[vec![0.0, 0.0], vec![1.0, 0.0]]),
            Err(HavokError::DegenerateInput { index: 0, .. })
        ));
    }

    fn circle_frame_at(t: f64) -> FrenetApparatus {
        frenet_frame(&[vec![-t.sin(), t.cos()], vec![-t.cos(), -t.sin()]]).unwrap()
    }

    #[test]
    fn circle_curvature_matrix() {
        let dt = 1e-4;
        let est =
            curvature_matrix_from_frame(&[circle_frame_at(0.3), circle_frame_at(0.3 + dt)], dt)
                .unwrap();
        assert_abs_diff_eq!(est.k[(0, 1)], 1.0, epsilon = 10.0 * dt);
        assert_abs_diff_eq!(est.k[(1, 0)], -1.0, epsilon = 10.0 * dt);
        assert!(est.symmetric_residual < 10.0 * dt);
    }

    #[test]
    fn identical_frames_give_zero() {
        let f = circle_frame_at(1.0);
        let est = curvature_matrix_from_frame(&[f.clone(), f], 0.01).unwrap();
        assert_eq!(est.k.max_abs(), 0.0);
        assert_eq!(est.symmetric_residual, 0.0);
    }

    fn helix_frame_at(t: f64) -> FrenetApparatus {
        frenet_frame(&[
            vec![-t.sin(), t.cos(), 1.0],
            vec![-t.cos(), -t.sin(), 0.0],
            vec![t.sin(), -t.cos(), 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn helix_curvature_and_torsion() {
        // a = b = 1: κ = a/(a²+b²) = 1/2, τ = b/(a²+b²) = 1/2.
        let dt = 1e-4;
        let est =
            curvature_matrix_from_frame(&[helix_frame_at(0.0), helix_frame_at(dt)], dt).unwrap();
        let k = est.curvatures();
        assert_abs_diff_eq!(k[0], 0.5, epsilon = 10.0 * dt);
        assert_abs_diff_eq!(k[1], 0.5, epsilon = 10.0 * dt);
        assert_abs_diff_eq!(est.k[(0, 2)], 0.0, epsilon = 10.0 * dt);
    }

    #[test]
    fn inconsistent_frames_rejected() {
        let a = circle_frame_at(0.0);
        let b = helix_frame_at(0.0);
        assert!(curvature_matrix_from_frame(&[a.clone(), b], 0.1).is_err());
        assert!(curvature_matrix_from_frame(&[a], 0.1).is_err());
    }

    #[test]
    fn gram_planar_circle() {
        // Radius-2 circle sampled around the full loop; in the plane G_3 is singular.
        let ts: Vec<f64> = (0..200).map(|k| k as f64 * 0.0314).collect();
        let d1: Vec<Vec<f64>> = vec![
            ts.iter().map(|t| -2.0 * t.sin()).collect(),
            ts.iter().map(|t| 2.0 * t.cos()).collect(),
        ];
        // Flatten the two coordinates of each derivative into one ambient vector.
        let flat = |a: &[Vec<f64>]| -> Vec<f64> { a.concat() };
        let d2 = flat(&[
            ts.iter().map(|t| -2.0 * t.cos()).collect(),
            ts.iter().map(|t| -2.0 * t.sin()).collect(),
        ]);
        let d3 = flat(&[
            ts.iter().map(|t| 2.0 * t.sin()).collect(),
            ts.iter().map(|t| -2.0 * t.cos()).collect(),
        ]);
        let d4 = flat(&[
            ts.iter().map(|t| 2.0 * t.cos()).collect(),
            ts.iter().map(|t| 2.0 * t.sin()).collect(),
        ]);
        let d1 = flat(&d1);
        let err = analytic_curvatures_gram(&d1, &d2, &d3, &d4).unwrap_err();
        match err {
            HavokError::UndefinedCurvature {
                index,
                gram,
                partial,
            } => {
                assert_eq!((index, gram), (2, 3));
                // d1 ⟂ d2 here, so κ₁ = ‖d2‖/‖d1‖².
                assert_abs_diff_eq!(partial[0], norm(&d2) / norm(&d1).powi(2), epsilon = 1e-12);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn gram_rejects_zero_speed_and_lengths() {
        let z = vec![0.0; 3];
        let o = vec![1.0; 3];
        assert!(analytic_curvatures_gram(&z, &o, &o, &o).is_err());
        assert!(analytic_curvatures_gram(&o, &o, &o, &o[..2]).is_err());
    }

    #[test]
    fn sv_coefficients() {
        assert_abs_diff_eq!(sv_curvature_coefficient(1), 20.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sv_curvature_coefficient(2), 105.0 / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn sv_curvatures_examples() {
        let k = curvatures_from_singular_values(&[1.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(k[0], (20.0f64 / 9.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(k[0], 1.4907, epsilon = 1e-4);
        let k = curvatures_from_singular_values(&[1.0, 1e-12]).unwrap();
        assert!(k[0] < 1e-11);
        let base = curvatures_from_singular_values(&[3.0, 1.0, 0.2]).unwrap();
        let scaled = curvatures_from_singular_values(&[6.0, 2.0, 0.4]).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert_abs_diff_eq!(*b, a / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sv_curvatures_errors() {
        assert!(curvatures_from_singular_values(&[1.0]).is_err());
        assert!(curvatures_from_singular_values(&[1.0, 0.0]).is_err());
        assert!(curvatures_from_singular_values(&[1.0, -1.0]).is_err());
        assert!(curvatures_from_singular_values(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn orthopoly_first_column_m5() {
        let b = discrete_orthopoly(5, 1).unwrap();
        let s = 10f64.sqrt();
        for (a, e) in b.column(0).iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*a, e / s, epsilon = 1e-15);
        }
        assert_eq!(b.half_width, 2);
    }

    #[test]
    fn orthopoly_orthonormal_and_parity() {
        for m in [11, 21, 41, 101] {
            let b = discrete_orthopoly(m, 5).unwrap();
            let g = b.vectors.tr_matmul(&b.vectors).unwrap();
            assert!(
                g.sub(&Matrix::identity(5)).unwrap().max_abs() < 1e-10,
                "m = {m}"
            );
            for j in 0..5 {
                let c = b.column(j);
                let parity = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
                for i in 0..m {
                    assert_abs_diff_eq!(c[i], parity * c[m - 1 - i], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn orthopoly_degree_limits() {
        assert!(discrete_orthopoly(41, 6).is_err());
        assert!(discrete_orthopoly(40, 2).is_err());
        assert!(discrete_orthopoly(5, 3).is_err());
        assert!(orthopoly_gram_schmidt(41, 8).is_ok());
    }

    #[test]
    fn orthopoly_matches_gram_schmidt_oracle() {
        // Independent oracle: classical Gram-Schmidt on raw integer monomials.
        let m = 41;
        let p = 20i64;
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for d in 1..=5u32 {
            let mut v: Vec<f64> = (-p..=p).map(|n| (n as f64).powi(d as i32)).collect();
            for _ in 0..2 {
                for b in &basis {
                    let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            basis.push(v.iter().map(|x| x / nv).collect());
        }
        let closed = discrete_orthopoly(m, 5).unwrap();
        let fallback = orthopoly_gram_schmidt(m, 5).unwrap();
        for j in 0..5 {
            for i in 0..m {
                assert_abs_diff_eq!(closed.vectors[(i, j)], basis[j][i], epsilon = 1e-8);
                assert_abs_diff_eq!(fallback.vectors[(i, j)], basis[j][i], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn model_curvature_examples() {
        let a = Matrix::from_rows(&[[0.0, 2.0], [-2.0, 0.0]]).unwrap();
        let c = curvatures_from_model(&a, 2.0).unwrap();
        assert_eq!(c.k, Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap());
        assert_eq!(c.curvatures, vec![1.0]);
        let z = curvatures_from_model(&Matrix::zeros(3, 3), 5.0).unwrap();
        assert_eq!(z.curvatures, vec![0.0, 0.0]);
        assert!(curvatures_from_model(&a, 0.0).is_err());
        assert!(curvatures_from_model(&a, -1.0).is_err());
    }

    #[test]
    fn central_row_derivatives_cover_the_row() {
        let x = TimeSeries::from_fn(0.0, 0.001, 2001, f64::sin).unwrap();
        let d = central_row_derivatives(&x, 41, 3).unwrap();
        assert_eq!(d.len(), 3);
        for (j, t) in [(0usize, 0.02f64), (1960, 1.98)] {
            assert_eq!(d[0].len(), 1961);
            assert_abs_diff_eq!(d[0][j], t.cos(), epsilon = 1e-6);
            assert_abs_diff_eq!(d[1][j], -t.sin(), epsilon = 1e-5);
            assert_abs_diff_eq!(d[2][j], -t.cos(), epsilon = 1e-4);
        }
        assert!(central_row_derivatives(&x, 5, 3).is_err());
        assert!(central_row_derivatives(&x, 40, 3).is_err());
    }

    #[test]
    fn derivative_ratio_of_a_single_tone() {
        // For sin(ωt) the ratio tends to 2ω as the span grows.
        let x = TimeSeries::from_fn(0.0, 0.001, 200_001, |t| (3.0 * t).sin()).unwrap();
        let r = derivative_norm_ratio(&x, 41).unwrap();
        assert_abs_diff_eq!(r, 6.0, epsilon = 5e-3);
        let flat = TimeSeries::from_fn(0.0, 0.1, 50, |_| 1.0).unwrap();
        assert!(derivative_norm_ratio(&flat, 5).is_err());
    }

    #[test]
    fn derivative_stack_on_cubic() {
        // Central differences are exact for the first derivative of a quadratic
        // and for every derivative of low-degree polynomials up to rounding.
        let dt = 0.1;
        let f: Vec<f64> = (0..20).map(|k| (k as f64 * dt).powi(2)).collect();
        let d = derivative_stack(&f, dt, 2).unwrap();
        assert_eq!(d[0].len(), 16);
        assert_eq!(d[1].len(), 16);
        for (i, v) in d[0].iter().enumerate() {
            assert_abs_diff_eq!(*v, 2.0 * (i + 2) as f64 * dt, epsilon = 1e-12);
        }
        assert!(d[1].iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    fn frame_from_q(q: &nalgebra::DMatrix<f64>, speed: f64) -> FrenetApparatus {
        let r = q.nrows();
        FrenetApparatus {
            frame: (0..r).map(|i| q.row(i).iter().copied().collect()).collect(),
            curvatures: Vec::new(),
            speed,
            k_matrix: Matrix::zeros(r, r),
            dropped: Vec::new(),
        }
    }

    /// Frames `Q(t) = exp(s K t) Q₀`, which solve `dQ/dt = s K Q` exactly.
    fn exact_frames(
        k: &nalgebra::DMatrix<f64>,
        speed: f64,
        dt: f64,
        count: usize,
    ) -> Vec<FrenetApparatus> {
        let r = k.nrows();
        let q0 = nalgebra::DMatrix::<f64>::identity(r, r + 2);
        (0..count)
            .map(|i| {
                let q = (k * (speed * dt * i as f64)).exp() * &q0;
                frame_from_q(&q, speed)
            })
            .collect()
    }

    fn skew_from(params: &[f64], r: usize) -> nalgebra::DMatrix<f64> {
        let mut k = nalgebra::DMatrix::zeros(r, r);
        let mut it = params.iter();
        for i in 0..r {
            for j in i + 1..r {
                let v = *it.next().unwrap();
                k[(i, j)] = v;
                k[(j, i)] = -v;
            }
        }
        k
    }

    fn generator_error(k: &nalgebra::DMatrix<f64>, speed: f64, dt: f64) -> f64 {
        let est = curvature_matrix_from_frame(&exact_frames(k, speed, dt, 2), dt).unwrap();
        let r = k.nrows();
        (0..r)
            .flat_map(|i| (0..r).map(move |j| (i, j)))
            .map(|(i, j)| (est.k[(i, j)] - k[(i, j)]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn polynomial_curve_raw_estimate_is_tridiagonal() {
        // γ(t) = (t, t², t³, t⁴) near t = 1.
        let frame_at = |t: f64| {
            frenet_frame(&[
                vec![1.0, 2.0 * t, 3.0 * t * t, 4.0 * t.powi(3)],
                vec![0.0, 2.0, 6.0 * t, 12.0 * t * t],
                vec![0.0, 0.0, 6.0, 24.0 * t],
                vec![0.0, 0.0, 0.0, 24.0],
            ])
            .unwrap()
        };
        let mut prev = f64::INFINITY;
        for dt in [1e-2, 1e-3, 1e-4] {
            let est =
                curvature_matrix_from_frame(&[frame_at(1.0), frame_at(1.0 + dt)], dt).unwrap();
            let mut off = 0.0f64;
            for i in 0..4usize {
                for j in 0..4usize {
                    if i.abs_diff(j) > 1 {
                        off = off.max(est.raw[(i, j)].abs());
                    }
                }
            }
            assert!(off < 10.0 * dt, "dt {dt}: off-band {off}");
            assert!(off < prev);
            prev = off;
        }
    }

    #[test]
    fn gram_matches_direct_determinants() {
        let d: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                (0..30)
                    .map(|i| ((i * (k + 2)) as f64 * 0.37).sin() + 0.1 * k as f64)
                    .collect()
            })
            .collect();
        let ours = analytic_curvatures_gram(&d[0], &d[1], &d[2], &d[3]).unwrap();
        let cols = nalgebra::DMatrix::from_fn(30, 4, |i, j| d[j][i]);
        let gdet = |i: usize| {
            if i == 0 {
                1.0
            } else {
                let c = cols.columns(0, i);
                (c.transpose() * c).determinant()
            }
        };
        let speed = cols.column(0).norm();
        for i in 1..=3 {
            let direct = (gdet(i - 1) * gdet(i + 1)).sqrt() / (gdet(i) * speed);
            assert_abs_diff_eq!(ours[i - 1], direct, epsilon = 1e-10 * direct);
        }
        // Scaling every derivative by c scales each Gram determinant G_i by
        // c^(2i), so each κ_i by c^(i−1 + i+1 − 2i − 1) = 1/c.
        let c = 2.0;
        let scaled: Vec<Vec<f64>> = d
            .iter()
            .map(|v| v.iter().map(|x| c * x).collect())
            .collect();
        let again =
            analytic_curvatures_gram(&scaled[0], &scaled[1], &scaled[2], &scaled[3]).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(again[i], ours[i] / c, epsilon = 1e-12 * ours[i]);
        }
    }

    #[test]
    fn generator_recovery_order() {
        let k = skew_from(&[0.8, 0.0, 0.0, 0.5, 0.0, 1.1], 4);
        let coarse = generator_error(&k, 1.7, 1e-3);
        let fine = generator_error(&k, 1.7, 5e-4);
        let order = (coarse / fine).log2();
        assert!(order >= 0.9, "order {order}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn skew_generator_recovered(params in prop::collection::vec(-2.0f64..2.0, 6), speed in 0.5f64..3.0) {
                let k = skew_from(&params, 4);
                let dt = 1e-4;
                let err = generator_error(&k, speed, dt);
                let scale = k.norm().max(1.0);
                // Forward-difference truncation is (dt/2)·s·‖K‖² in size.
                prop_assert!(err <= dt * speed * scale * scale + 1e-10, "err {err}");
            }

            #[test]
            fn frame_is_orthonormal(vals in prop::collection::vec(-5.0f64..5.0, 24)) {
                let d: Vec<&[f64]> = vals.chunks(6).collect();
                prop_assume!(norm(d[0]) > 1e-3);
                let f = frenet_frame(&d).unwrap();
                for i in 0..f.rank() {
                    for j in 0..f.rank() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        prop_assert!((dot(&f.frame[i], &f.frame[j]) - expect).abs() <= 1e-10);
                    }
                }
                let e1: Vec<f64> = d[0].iter().map(|x| x / norm(d[0])).collect();
                for (a, b) in e1.iter().zip(&f.frame[0]) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
