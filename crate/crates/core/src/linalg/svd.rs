//! Thin singular value decomposition.
//!
//! The matrix is first reduced to a small square triangular factor with
//! Householder QR along its long dimension, then the factor is diagonalized
//! with one-sided (Hestenes) Jacobi rotations. Jacobi keeps small singular
//! values accurate to high relative precision, which matters for centered
//! Hankel matrices whose spectra span many decades.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, norm, Matrix};
use crate::error::{HavokError, Result};

const MAX_SWEEPS: usize = 80;

/// Rank-`r` truncated SVD `m ≈ u · diag(sigma) · vᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdTriple {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
    pub rank: usize,
}

impl SvdTriple {
    /// `u · diag(sigma) · vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.transpose())
            .expect("svd factors are conformable")
    }
}

/// Computes the leading `r` singular triplets of `m`.
///
/// Singular vectors are sign-normalized so that the largest-magnitude entry
/// of every left vector is positive (ties go to the lowest index).
pub fn thin_svd(m: &Matrix, r: usize) -> Result<SvdTriple> {
    let k = m.rows().min(m.cols());
    if r == 0 || r > k {
        return Err(HavokError::param(format!(
            "svd rank {r} out of range 1..={k} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(HavokError::data("matrix has non-finite entries"));
    }

    let tall = m.rows() >= m.cols();
    // Columns of the tall orientation X (N x k).
    let columns: Vec<Vec<f64>> = if tall { m.to_columns() } else { m.to_rows() };
    let n_long = columns[0].len();

    let qr = HouseholderQr::new(columns);
    let r_factor = qr.r_columns();
    let (w_cols, sigma, jac) = jacobi_svd_square(r_factor)?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let order = &order[..r];

    let sigma_r: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let long_vectors: Vec<Vec<f64>> = order.iter().map(|&j| qr.apply_q(&w_cols[j])).collect();
    let short_vectors: Vec<Vec<f64>> = order.iter().map(|&j| jac[j].clone()).collect();
    debug_assert!(long_vectors.iter().all(|v| v.len() == n_long));

    let (mut u_cols, mut v_cols) = if tall {
        (long_vectors, short_vectors)
    } else {
        (short_vectors, long_vectors)
    };

    for (u, v) in u_cols.iter_mut().zip(v_cols.iter_mut()) {
        let mut lead = 0;
        for (i, x) in u.iter().enumerate() {
            if x.abs() > u[lead].abs() {
                lead = i;
            }
        }
        if u[lead] < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(SvdTriple {
        u: Matrix::from_columns(&u_cols)?,
        sigma: sigma_r,
        v: Matrix::from_columns(&v_cols)?,
        rank: r,
    })
}

/// All `min(rows, cols)` singular values in nonincreasing order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    Ok(thin_svd(m, m.rows().min(m.cols()))?.sigma)
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(thin_svd(m, 1)?.sigma[0])
}

/// Householder QR of a tall matrix given by its columns, stored in place.
///
/// After factorization column `j` holds the strict upper part of R in rows
/// `0..j` and the Householder vector in rows `j..`.
struct HouseholderQr {
    cols: Vec<Vec<f64>>,
    diag: Vec<f64>,
    betas: Vec<f64>,
}

impl HouseholderQr {
    fn new(mut cols: Vec<Vec<f64>>) -> Self {
        let k = cols.len();
        let mut diag = vec![0.0; k];
        let mut betas = vec![0.0; k];
        for p0 in (0..k).step_by(PANEL) {
            let p1 = (p0 + PANEL).min(k);
            for j in p0..p1 {
                let (head, tail) = cols.split_at_mut(j + 1);
                let (alpha, beta) = reflect(&mut head[j][j..]);
                diag[j] = alpha;
                betas[j] = beta;
                let v = &head[j][j..];
                for c in tail[..p1 - j - 1].iter_mut() {
                    apply_reflector(v, beta, &mut c[j..]);
                }
            }
            if p1 < k {
                let (panel, trailing) = cols.split_at_mut(p1);
                apply_block(&panel[p0..p1], &betas[p0..p1], p0, trailing);
            }
        }
        HouseholderQr { cols, diag, betas }
    }

    /// Columns of the k x k upper-triangular factor.
    fn r_columns(&self) -> Vec<Vec<f64>> {
        let k = self.cols.len();
        (0..k)
            .map(|j| {
                let mut c = vec![0.0; k];
                c[..j].copy_from_slice(&self.cols[j][..j]);
                c[j] = self.diag[j];
                c
            })
            .collect()
    }

    /// `Q · [w; 0]` for a length-k vector `w`.
    fn apply_q(&self, w: &[f64]) -> Vec<f64> {
        let k = self.cols.len();
        let n = self.cols[0].len();
        let mut y = vec![0.0; n];
        y[..k].copy_from_slice(w);
        for j in (0..k).rev() {
            let beta = self.betas[j];
            if beta == 0.0 {
                continue;
            }
            let v = &self.cols[j][j..];
            let seg = &mut y[j..];
            let s = beta * dot(v, seg);
            if s != 0.0 {
                for (x, vi) in seg.iter_mut().zip(v) {
                    *x -= s * vi;
                }
            }
        }
        y
    }
}

/// Householder reflectors factored per panel before the trailing columns
/// are updated in one blocked pass.
const PANEL: usize = 24;
/// Rows per cache block in the blocked update.
const ROW_BLOCK: usize = 512;

/// Turns `x` into the Householder vector `v` with `(I − β v vᵀ) x = α e₁`.
fn reflect(x: &mut [f64]) -> (f64, f64) {
    let xnorm = norm(x);
    if xnorm == 0.0 {
        return (0.0, 0.0);
    }
    let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
    x[0] -= alpha;
    let vnorm2 = dot(x, x);
    (alpha, if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 })
}

fn apply_reflector(v: &[f64], beta: f64, c: &mut [f64]) {
    if beta == 0.0 {
        return;
    }
    let s = beta * dot(v, c);
    if s != 0.0 {
        for (x, vi) in c.iter_mut().zip(v) {
            *x -= s * vi;
        }
    }
}

/// Applies `H_{p1−1} ⋯ H_{p0}` to the trailing columns as `C − V Tᵀ (Vᵀ C)`.
///
/// `panel[a]` holds reflector `p0 + a` in rows `p0 + a..`; entries above
/// that row belong to R and are skipped.
fn apply_block(panel: &[Vec<f64>], betas: &[f64], p0: usize, trailing: &mut [Vec<f64>]) {
    let b = panel.len();
    let n = panel[0].len();
    let start = |a: usize| p0 + a;

    // Compact WY factor: T upper triangular with V T Vᵀ = I − H_{p0} ⋯ H_{p1−1}.
    let mut t = vec![vec![0.0; b]; b];
    for j in 0..b {
        t[j][j] = betas[j];
        if betas[j] == 0.0 {
            continue;
        }
        let vj = &panel[j][start(j)..];
        let w: Vec<f64> = (0..j).map(|a| dot(&panel[a][start(j)..], vj)).collect();
        for i in 0..j {
            let s: f64 = (i..j).map(|l| t[i][l] * w[l]).sum();
            t[i][j] = -betas[j] * s;
        }
    }

    let cols = trailing.len();
    let mut w = vec![vec![0.0; b]; cols];
    for r0 in (p0..n).step_by(ROW_BLOCK) {
        let r1 = (r0 + ROW_BLOCK).min(n);
        for (c, wc) in trailing.iter().zip(w.iter_mut()) {
            for (a, v) in panel.iter().enumerate() {
                let lo = start(a).max(r0);
                if lo < r1 {
                    wc[a] += dot(&v[lo..r1], &c[lo..r1]);
                }
            }
        }
    }
    // Y = Tᵀ W per column.
    for wc in w.iter_mut() {
        let y: Vec<f64> = (0..b)
            .map(|a| (0..=a).map(|l| t[l][a] * wc[l]).sum())
            .collect();
        *wc = y;
    }
    for r0 in (p0..n).step_by(ROW_BLOCK) {
        let r1 = (r0 + ROW_BLOCK).min(n);
        for (c, yc) in trailing.iter_mut().zip(&w) {
            for (a, v) in panel.iter().enumerate() {
                let lo = start(a).max(r0);
                if lo < r1 && yc[a] != 0.0 {
                    let s = yc[a];
                    for (x, vi) in c[lo..r1].iter_mut().zip(&v[lo..r1]) {
                        *x -= s * vi;
                    }
                }
            }
        }
    }
}

/// One-sided Jacobi SVD of a square matrix given by columns.
///
/// Returns normalized left vectors, singular values and right vectors (as
/// columns) in the original column order.
#[allow(clippy::type_complexity)]
fn jacobi_svd_square(mut b: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let k = b.len();
    let mut jac: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    // Rounding in a length-k inner product is about k·ε relative.
    let eps = f64::EPSILON * k.max(1) as f64;
    let mut converged = k < 2;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..k - 1 {
            for q in p + 1..k {
                let alpha = dot(&b[p], &b[p]);
                let beta = dot(&b[q], &b[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&b[p], &b[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut b, p, q, c, s);
                rotate(&mut jac, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(HavokError::Numerical(format!(
            "one-sided Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let sigma: Vec<f64> = b.iter().map(|c| norm(c)).collect();
    let mut w: Vec<Option<Vec<f64>>> = b
        .into_iter()
        .zip(&sigma)
        .map(|(c, &s)| (s > 0.0).then(|| c.into_iter().map(|x| x / s).collect()))
        .collect();

    // Zero columns carry no direction; complete them to an orthonormal set.
    if w.iter().any(Option::is_none) {
        let mut basis: Vec<Vec<f64>> = w.iter().flatten().cloned().collect();
        let mut candidate = 0;
        for slot in w.iter_mut().filter(|s| s.is_none()) {
            loop {
                let mut e = vec![0.0; k];
                e[candidate] = 1.0;
                candidate += 1;
                for _ in 0..2 {
                    for q in &basis {
                        let d = dot(&e, q);
                        e.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
                    }
                }
                let n = norm(&e);
                if n > 1e-8 {
                    e.iter_mut().for_each(|x| *x /= n);
                    basis.push(e.clone());
                    *slot = Some(e);
                    break;
                }
            }
        }
    }

    Ok((
        w.into_iter().map(|c| c.expect("completed")).collect(),
        sigma,
        jac,
    ))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let bp = &mut lo[p];
    let bq = &mut hi[0];
    for (x, y) in bp.iter_mut().zip(bq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}
