//! Eigendecomposition of small dense nonsymmetric real matrices.
//!
//! Householder reduction to upper Hessenberg form, Francis double-shift QR
//! for the eigenvalues, then complex inverse iteration on the original matrix
//! for one eigenvector per eigenvalue.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{HavokError, Result};

const MAX_QR_ITERATIONS: usize = 60;

/// Eigenvalues with matching eigenvectors (unit 2-norm, stored as columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: Vec<Vec<Complex64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Maps every eigenvalue through `f`, keeping eigenvectors and re-sorting.
    pub fn map_eigenvalues(&self, f: impl Fn(Complex64) -> Complex64) -> Spectrum {
        let mut pairs: Vec<(Complex64, Vec<Complex64>)> = self
            .eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&l, w)| (f(l), w.clone()))
            .collect();
        pairs.sort_by(|a, b| cmp_eigenvalues(&a.0, &b.0));
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }
}

/// Ordering by imaginary part, then real part.
pub fn cmp_eigenvalues(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

/// Eigenvalues of a real square matrix (conjugate pairs are exact conjugates).
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    check_square(m)?;
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = to_rows(m);
    hessenberg(&mut h);
    let (wr, wi) = hqr(&mut h)?;
    let mut ev: Vec<Complex64> = wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect();
    ev.sort_by(cmp_eigenvalues);
    Ok(ev)
}

/// Full eigendecomposition of a real square matrix.
pub fn eigen_nonsymmetric(m: &Matrix) -> Result<Spectrum> {
    let ev = eigenvalues(m)?;
    let n = m.rows();
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut eigenvectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for &lambda in &ev {
        eigenvectors.push(inverse_iteration(m, lambda, scale));
    }
    // Make conjugate partners exact conjugates of each other.
    for i in 0..n {
        if ev[i].im < 0.0 {
            if let Some(j) = (0..n).find(|&j| ev[j] == ev[i].conj()) {
                eigenvectors[i] = eigenvectors[j].iter().map(|z| z.conj()).collect();
            }
        }
    }
    Ok(Spectrum {
        eigenvalues: ev,
        eigenvectors,
    })
}

fn check_square(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(HavokError::param(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(HavokError::data("matrix has non-finite entries"));
    }
    Ok(())
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        let xnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        let beta = 2.0 / vv;
        // A <- (I - beta v vᵀ) A
        for j in 0..n {
            let s: f64 = (k + 1..n).zip(&v).map(|(i, vi)| vi * a[i][j]).sum::<f64>() * beta;
            for (i, vi) in (k + 1..n).zip(&v) {
                a[i][j] -= s * vi;
            }
        }
        // A <- A (I - beta v vᵀ)
        for row in a.iter_mut() {
            let s: f64 = (k + 1..n).zip(&v).map(|(j, vj)| vj * row[j]).sum::<f64>() * beta;
            for (j, vj) in (k + 1..n).zip(&v) {
                row[j] -= s * vj;
            }
        }
        for row in a.iter_mut().skip(k + 2) {
            row[k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hqr(a: &mut [Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.len();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
    let (mut x, mut y, mut z, mut w);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nn;
            while l >= 1 {
                let lu = l as usize;
                let mut s = a[lu - 1][lu - 1].abs() + a[lu][lu].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[lu][lu - 1].abs() + s == s {
                    a[lu][lu - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nu][nu];
            if l == nn {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            y = a[nu - 1][nu - 1];
            w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_QR_ITERATIONS {
                return Err(HavokError::Numerical(format!(
                    "QR iteration did not converge for eigenvalue {nu} after {MAX_QR_ITERATIONS} sweeps"
                )));
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for (i, row) in a.iter_mut().enumerate().take(nu + 1) {
                    row[i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            while m >= l {
                let mu = m as usize;
                z = a[mu][mu];
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / a[mu + 1][mu] + a[mu][mu + 1];
                q = a[mu + 1][mu + 1] - z - r - s0;
                r = a[mu + 2][mu + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[mu][mu - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[mu - 1][mu - 1].abs() + z.abs() + a[mu + 1][mu + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            let mu = m as usize;
            for i in mu + 2..=nu {
                a[i][i - 2] = 0.0;
                if i != mu + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = mu;
            while k < nu {
                if k != mu {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nu - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == mu {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l as usize) {
                        p = x * row[k] + y * row[k + 1];
                        if k != nu - 1 {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k + 1] -= p * q;
                        row[k] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((wr, wi))
}

/// Eigenvector for `lambda` by inverse iteration with a complex LU.
fn inverse_iteration(m: &Matrix, lambda: Complex64, scale: f64) -> Vec<Complex64> {
    let n = m.rows();
    // An exactly singular shift stalls on defective eigenvalues.
    let shift = lambda + Complex64::new(1e-10 * scale, 0.0);
    let mut a: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = if i == j {
                        shift
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    Complex64::new(m[(i, j)], 0.0) - d
                })
                .collect()
        })
        .collect();
    let tiny = f64::EPSILON * scale;
    let perm = lu_in_place(&mut a, tiny);

    // Deterministic, generic starting vector.
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * (i as f64 + 1.0).sqrt(), 0.0))
        .collect();
    normalize(&mut x);
    for _ in 0..6 {
        x = lu_solve(&a, &perm, &x);
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            x = (0..n)
                .map(|i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
                .collect();
        }
        normalize(&mut x);
    }
    // Fix the phase: largest component real and positive.
    let lead = x.iter().enumerate().fold(0, |best, (i, z)| {
        if z.norm() > x[best].norm() * (1.0 + 1e-12) {
            i
        } else {
            best
        }
    });
    let phase = x[lead].conj() / x[lead].norm();
    x.iter_mut().for_each(|z| *z *= phase);
    x
}

fn normalize(x: &mut [Complex64]) {
    let n = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|z| *z /= n);
    }
}

fn lu_in_place(a: &mut [Vec<Complex64>], tiny: f64) -> Vec<usize> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .unwrap_or(k);
        a.swap(k, piv);
        perm.swap(k, piv);
        if a[k][k].norm() < tiny {
            a[k][k] = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
        }
        let pivot = a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / pivot;
            a[i][k] = f;
            for j in k + 1..n {
                let akj = a[k][j];
                a[i][j] -= f * akj;
            }
        }
    }
    perm
}

fn lu_solve(lu: &[Vec<Complex64>], perm: &[usize], b: &[Complex64]) -> Vec<Complex64> {
    let n = lu.len();
    let mut y: Vec<Complex64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let l = lu[i][j];
            let yj = y[j];
            y[i] -= l * yj;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let u = lu[i][j];
            let yj = y[j];
            y[i] -= u * yj;
        }
        y[i] /= lu[i][i];
    }
    y
}
