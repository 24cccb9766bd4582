//! Dense real matrix kernels.

mod eigen;
mod gram_schmidt;
mod matrix;
mod svd;

pub use eigen::{cmp_eigenvalues, eigen_nonsymmetric, eigenvalues, Spectrum};
pub use gram_schmidt::{gram_schmidt, Orthonormalized, DEPENDENCE_TOL};
pub use matrix::{dot, norm, Matrix};
pub use svd::{singular_values, spectral_norm, thin_svd, SvdTriple};

use crate::error::{HavokError, Result};

/// Default relative cutoff for [`pseudo_inverse`].
pub const PINV_REL_TOL: f64 = 1e-12;

/// Moore-Penrose pseudoinverse.
///
/// Singular values `σ_i ≤ rel_tol · σ_1` are treated as zero.
pub fn pseudo_inverse(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if m.is_empty() {
        return Err(HavokError::param("pseudoinverse of an empty matrix"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(HavokError::param(format!(
            "pseudoinverse tolerance {rel_tol} not in (0, 1)"
        )));
    }
    let k = m.rows().min(m.cols());
    let svd = thin_svd(m, k)?;
    let cutoff = rel_tol * svd.sigma[0];
    let mut out = Matrix::zeros(m.cols(), m.rows());
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..m.cols() {
            let vi = svd.v[(i, j)] / s;
            if vi == 0.0 {
                continue;
            }
            for l in 0..m.rows() {
                out[(i, l)] += vi * svd.u[(l, j)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        assert!(a.sub(b).unwrap().max_abs() <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn diagonal_inverse() {
        let p = pseudo_inverse(&Matrix::from_diag(&[2.0, 4.0]), PINV_REL_TOL).unwrap();
        assert_close(&p, &Matrix::from_diag(&[0.5, 0.25]), 1e-15);
    }

    #[test]
    fn orthonormal_columns_give_transpose() {
        let s = 1.0 / 3f64.sqrt();
        let t = 1.0 / 2f64.sqrt();
        let q = Matrix::from_rows(&[[s, t], [s, -t], [s, 0.0]]).unwrap();
        let p = pseudo_inverse(&q, PINV_REL_TOL).unwrap();
        assert_close(&p, &q.transpose(), 1e-14);
    }

    #[test]
    fn rank_one() {
        // A = 5 u vᵀ with u = v = (1,2)/√5, so A† = (1/5) v uᵀ = A / 25.
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let p = pseudo_inverse(&a, PINV_REL_TOL).unwrap();
        assert_close(&p, &a.scale(1.0 / 25.0), 1e-14);
        // Moore-Penrose identities
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        assert_close(&apa, &a, 1e-12);
        let pap = p.matmul(&a).unwrap().matmul(&p).unwrap();
        assert_close(&pap, &p, 1e-12);
        let ap = a.matmul(&p).unwrap();
        assert_close(&ap, &ap.transpose(), 1e-12);
        let pa = p.matmul(&a).unwrap();
        assert_close(&pa, &pa.transpose(), 1e-12);
    }

    #[test]
    fn empty_and_bad_tolerance() {
        assert!(pseudo_inverse(&Matrix::zeros(0, 3), PINV_REL_TOL).is_err());
        assert!(pseudo_inverse(&Matrix::identity(2), 0.0).is_err());
        assert_abs_diff_eq!(
            pseudo_inverse(&Matrix::identity(2), 0.5).unwrap()[(1, 1)],
            1.0
        );
    }
}
