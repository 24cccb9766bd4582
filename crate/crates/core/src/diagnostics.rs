//! Structure scores for fitted operators and spectrum comparison.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HavokError, Result};
use crate::linalg::{Matrix, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub antisymmetry: f64,
    pub tridiagonality: f64,
    /// Largest magnitude outside the three central diagonals.
    pub offband_max: f64,
    pub superdiagonal: Vec<f64>,
    pub subdiagonal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComparison {
    /// `(index in a, index in b)` of each matched pair.
    pub pairs: Vec<(usize, usize)>,
    pub pair_distances: Vec<f64>,
    pub mean_distance: f64,
    pub max_real_part_a: f64,
    pub max_real_part_b: f64,
}

fn check_scorable(a: &Matrix) -> Result<f64> {
    if !a.is_square() || a.is_empty() {
        return Err(HavokError::param(format!(
            "score needs a nonempty square matrix, got {:?}",
            a.shape()
        )));
    }
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(HavokError::Numerical(
            "structure score is undefined for the zero matrix".into(),
        ));
    }
    Ok(norm)
}

/// `‖A + Aᵀ‖_F / (2‖A‖_F)`: 0 for skew matrices, 1 for symmetric ones.
pub fn antisymmetry_score(a: &Matrix) -> Result<f64> {
    let norm = check_scorable(a)?;
    let sym = a.add(&a.transpose())?.frobenius_norm();
    Ok(sym / (2.0 * norm))
}

/// Fraction of Frobenius energy outside the three central diagonals.
pub fn tridiagonality_score(a: &Matrix) -> Result<f64> {
    let norm = check_scorable(a)?;
    let mut off = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if i.abs_diff(j) > 1 {
                off += a[(i, j)] * a[(i, j)];
            }
        }
    }
    Ok(off / (norm * norm))
}

pub fn structure_report(a: &Matrix) -> Result<StructureReport> {
    let antisymmetry = antisymmetry_score(a)?;
    let tridiagonality = tridiagonality_score(a)?;
    let mut offband_max = 0.0f64;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if i.abs_diff(j) > 1 {
                offband_max = offband_max.max(a[(i, j)].abs());
            }
        }
    }
    Ok(StructureReport {
        antisymmetry,
        tridiagonality,
        offband_max,
        superdiagonal: a.off_diagonal(1),
        subdiagonal: a.off_diagonal(-1),
    })
}

/// Minimum-cost perfect matching for a square cost matrix (Hungarian
/// algorithm with potentials). Returns `assign[row] = column`.
pub fn min_cost_assignment(cost: &Matrix) -> Result<Vec<usize>> {
    if !cost.is_square() {
        return Err(HavokError::param("assignment needs a square cost matrix"));
    }
    if !cost.is_finite() {
        return Err(HavokError::param("assignment costs must be finite"));
    }
    let n = cost.rows();
    // 1-based arrays with a virtual row/column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    Ok(assign)
}

/// Matches eigenvalues one-to-one minimizing the total `|ω_i − ω′_j|`.
pub fn eigenvalue_distance(a: &[Complex64], b: &[Complex64]) -> Result<SpectrumComparison> {
    if a.len() != b.len() {
        return Err(HavokError::param(format!(
            "spectra have {} and {} eigenvalues",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(HavokError::param("cannot compare empty spectra"));
    }
    let cost = Matrix::from_fn(a.len(), b.len(), |i, j| (a[i] - b[j]).norm());
    let assign = min_cost_assignment(&cost)?;
    let pairs: Vec<(usize, usize)> = assign.into_iter().enumerate().collect();
    let pair_distances: Vec<f64> = pairs.iter().map(|&(i, j)| cost[(i, j)]).collect();
    let mean_distance = pair_distances.iter().sum::<f64>() / pair_distances.len() as f64;
    let max_re = |s: &[Complex64]| s.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumComparison {
        pairs,
        pair_distances,
        mean_distance,
        max_real_part_a: max_re(a),
        max_real_part_b: max_re(b),
    })
}

pub fn spectrum_distance(a: &Spectrum, b: &Spectrum) -> Result<SpectrumComparison> {
    eigenvalue_distance(&a.eigenvalues, &b.eigenvalues)
}

/// Smallest `r` with `σ_{r+1} ≤ eps·σ_1`, or the list length if none.
pub fn sv_decay_report(sigma: &[f64], eps: f64) -> Result<usize> {
    let first = *sigma
        .first()
        .ok_or_else(|| HavokError::param("empty singular value list"))?;
    if !(first > 0.0) {
        return Err(HavokError::param("leading singular value must be positive"));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(HavokError::param("singular values must be nonincreasing"));
    }
    Ok(sigma
        .iter()
        .skip(1)
        .position(|&s| s <= eps * first)
        .map_or(sigma.len(), |k| k + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn antisymmetry_examples() {
        assert_eq!(
            antisymmetry_score(&m(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap(),
            0.0
        );
        assert_eq!(
            antisymmetry_score(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap(),
            1.0
        );
        assert!(antisymmetry_score(&Matrix::zeros(2, 2)).is_err());
        assert!(antisymmetry_score(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn tridiagonality_examples() {
        let tri = m(&[&[1.0, 2.0, 0.0], &[3.0, 4.0, 5.0], &[0.0, 6.0, 7.0]]);
        assert_eq!(tridiagonality_score(&tri).unwrap(), 0.0);
        let mut corner = Matrix::zeros(4, 4);
        corner[(0, 3)] = 2.5;
        assert_eq!(tridiagonality_score(&corner).unwrap(), 1.0);
        assert!(tridiagonality_score(&Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn report_fields() {
        let a = m(&[&[0.0, 1.0, 0.1], &[-1.0, 0.0, 2.0], &[-0.3, -2.0, 0.0]]);
        let r = structure_report(&a).unwrap();
        assert_eq!(r.superdiagonal, vec![1.0, 2.0]);
        assert_eq!(r.subdiagonal, vec![-1.0, -2.0]);
        assert_eq!(r.offband_max, 0.3);
    }

    #[test]
    fn identical_spectra() {
        let s = [c(0.0, 1.0), c(0.0, -1.0), c(-0.5, 0.0)];
        let r = eigenvalue_distance(&s, &s).unwrap();
        assert!(r.pair_distances.iter().all(|&d| d == 0.0));
        assert_eq!(r.max_real_part_a, 0.0);
    }

    #[test]
    fn tone_pairing() {
        let r = eigenvalue_distance(&[c(0.0, 1.0), c(0.0, -1.0)], &[c(0.0, -2.0), c(0.0, 2.0)])
            .unwrap();
        assert_abs_diff_eq!(r.mean_distance, 1.0, epsilon = 1e-15);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn hungarian_beats_greedy() {
        // Greedy takes the 1.0 cell first and is then forced into 10.
        let cost = m(&[&[1.0, 2.0], &[2.0, 10.0]]);
        assert_eq!(min_cost_assignment(&cost).unwrap(), vec![1, 0]);
    }

    #[test]
    fn count_mismatch() {
        assert!(eigenvalue_distance(&[c(0.0, 1.0)], &[c(0.0, 1.0), c(0.0, -1.0)]).is_err());
    }

    #[test]
    fn decay_examples() {
        assert_eq!(sv_decay_report(&[1.0, 0.1, 0.01], 0.05).unwrap(), 2);
        assert_eq!(sv_decay_report(&[2.0; 5], 0.5).unwrap(), 5);
        assert!(sv_decay_report(&[], 0.1).is_err());
        assert!(sv_decay_report(&[1.0, 2.0], 0.1).is_err());
    }

    fn brute_force_min(cost: &Matrix) -> f64 {
        fn rec(cost: &Matrix, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.rows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[(row, j)] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.cols()])
    }

    proptest! {
        #[test]
        fn antisymmetry_transpose_negation(v in prop::collection::vec(-10.0f64..10.0, 16)) {
            let a = Matrix::from_vec(4, 4, v).unwrap();
            prop_assume!(a.frobenius_norm() > 1e-6);
            let b = a.transpose().scale(-1.0);
            let (sa, sb) = (antisymmetry_score(&a).unwrap(), antisymmetry_score(&b).unwrap());
            prop_assert!((sa - sb).abs() < 1e-14);
            prop_assert!((0.0..=1.0).contains(&sa));
            let t = tridiagonality_score(&a).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
        }

        #[test]
        fn hungarian_is_optimal(v in prop::collection::vec(0.0f64..10.0, 25)) {
            let cost = Matrix::from_vec(5, 5, v).unwrap();
            let assign = min_cost_assignment(&cost).unwrap();
            let mut seen = assign.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..5).collect::<Vec<_>>());
            let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            prop_assert!((total - brute_force_min(&cost)).abs() < 1e-9);
        }

        #[test]
        fn distance_symmetric_and_zero_on_permutation(
            parts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6),
            other in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 6),
        ) {
            let a: Vec<Complex64> = parts.iter().map(|&(r, i)| c(r, i)).collect();
            let b: Vec<Complex64> = other[..a.len()].iter().map(|&(r, i)| c(r, i)).collect();
            let ab = eigenvalue_distance(&a, &b).unwrap().mean_distance;
            let ba = eigenvalue_distance(&b, &a).unwrap().mean_distance;
            prop_assert!((ab - ba).abs() < 1e-12);
            let mut shuffled = a.clone();
            shuffled.reverse();
            prop_assert!(eigenvalue_distance(&a, &shuffled).unwrap().mean_distance <= 1e-12);
        }
    }
}
