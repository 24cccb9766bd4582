//! Time series and Hankel delay embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{HavokError, Result};
use crate::linalg::Matrix;

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HavokError::param(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if !t0.is_finite() {
            return Err(HavokError::param("series origin must be finite"));
        }
        if values.len() < 2 {
            return Err(HavokError::data(format!(
                "time series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(HavokError::data(format!("sample {i} is not finite")));
        }
        Ok(TimeSeries { t0, dt, values })
    }

    /// Samples `f` at `t0 + k dt` for `k = 0..samples`.
    pub fn from_fn(t0: f64, dt: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..samples).map(|k| f(t0 + k as f64 * dt)).collect();
        TimeSeries::new(t0, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Samples `range` as a new series with the origin moved accordingly.
    pub fn window(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(HavokError::param(format!(
                "window {range:?} out of bounds for {} samples",
                self.len()
            )));
        }
        TimeSeries::new(self.time(range.start), self.dt, self.values[range].to_vec())
    }
}

/// Delay matrix `H` (m rows x n columns) with optional centering record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HankelEmbedding {
    pub h: Matrix,
    pub m: usize,
    pub dt: f64,
    /// Central row removed by centering; `None` when uncentered.
    pub h0: Option<Vec<f64>>,
}

impl HankelEmbedding {
    pub fn centered(&self) -> bool {
        self.h0.is_some()
    }

    pub fn columns(&self) -> usize {
        self.h.cols()
    }

    /// Adds `h0` back to every row, recovering the uncentered Hankel matrix.
    pub fn uncenter(&self) -> HankelEmbedding {
        match &self.h0 {
            None => self.clone(),
            Some(h0) => {
                let mut h = self.h.clone();
                for i in 0..h.rows() {
                    h.row_mut(i).iter_mut().zip(h0).for_each(|(x, c)| *x += c);
                }
                HankelEmbedding {
                    h,
                    m: self.m,
                    dt: self.dt,
                    h0: None,
                }
            }
        }
    }

    fn with_columns(&self, cols: std::ops::Range<usize>) -> HankelEmbedding {
        HankelEmbedding {
            h: self.h.slice(0..self.h.rows(), cols.clone()),
            m: self.m,
            dt: self.dt,
            h0: self.h0.clone(),
        }
    }
}

/// Stacks `m` time-shifted copies of `x`: entry `(i, j)` is `x[i + j]`.
pub fn build_hankel(x: &TimeSeries, m: usize) -> Result<HankelEmbedding> {
    if m < 2 || m > x.len() {
        return Err(HavokError::param(format!(
            "delay count {m} out of range 2..={} for this series",
            x.len()
        )));
    }
    let n = x.len() - m + 1;
    let mut h = Matrix::zeros(m, n);
    for i in 0..m {
        h.row_mut(i).copy_from_slice(&x.values[i..i + n]);
    }
    Ok(HankelEmbedding {
        h,
        m,
        dt: x.dt,
        h0: None,
    })
}

/// Subtracts the central row from every row.
pub fn center_hankel(h: &HankelEmbedding) -> Result<HankelEmbedding> {
    if h.centered() {
        return Err(HavokError::param("embedding is already centered"));
    }
    if h.m % 2 == 0 {
        return Err(HavokError::param(format!(
            "centering needs an odd delay count so a central row exists, got {}; drop one delay",
            h.m
        )));
    }
    let mid = (h.m - 1) / 2;
    let h0 = h.h.row(mid).to_vec();
    let mut out = h.h.clone();
    for i in 0..out.rows() {
        out.row_mut(i)
            .iter_mut()
            .zip(&h0)
            .for_each(|(x, c)| *x -= c);
    }
    Ok(HankelEmbedding {
        h: out,
        m: h.m,
        dt: h.dt,
        h0: Some(h0),
    })
}

/// Splits into the column windows `0..n-1` and `1..n`.
pub fn split_shift(h: &HankelEmbedding) -> Result<(HankelEmbedding, HankelEmbedding)> {
    let n = h.columns();
    if n < 3 {
        return Err(HavokError::param(format!(
            "split needs at least 3 columns, got {n}"
        )));
    }
    Ok((h.with_columns(0..n - 1), h.with_columns(1..n)))
}

/// Column windows `0..n-2`, `1..n-1`, `2..n` for central differences.
pub fn split_shift3(h: &HankelEmbedding) -> Result<[HankelEmbedding; 3]> {
    let n = h.columns();
    if n < 4 {
        return Err(HavokError::param(format!(
            "three-way split needs at least 4 columns, got {n}"
        )));
    }
    Ok([
        h.with_columns(0..n - 2),
        h.with_columns(1..n - 1),
        h.with_columns(2..n),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(v: &[f64]) -> TimeSeries {
        TimeSeries::new(0.0, 1.0, v.to_vec()).unwrap()
    }

    #[test]
    fn hankel_hand_case() {
        let e = build_hankel(&series(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(
            e.h,
            Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 3.0, 4.0]]).unwrap()
        );
        assert!(!e.centered());
    }

    #[test]
    fn hankel_constant() {
        let e = build_hankel(&series(&[5.0, 5.0, 5.0]), 3).unwrap();
        assert_eq!(e.h, Matrix::from_rows(&[[5.0], [5.0], [5.0]]).unwrap());
    }

    #[test]
    fn hankel_delay_range() {
        let x = series(&[1.0, 2.0, 3.0]);
        assert!(build_hankel(&x, 1).is_err());
        assert!(build_hankel(&x, 4).is_err());
    }

    #[test]
    fn centering_hand_case() {
        let e = HankelEmbedding {
            h: Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap(),
            m: 3,
            dt: 1.0,
            h0: None,
        };
        let c = center_hankel(&e).unwrap();
        assert_eq!(
            c.h,
            Matrix::from_rows(&[[-2.0, -2.0], [0.0, 0.0], [2.0, 2.0]]).unwrap()
        );
        assert_eq!(c.h0, Some(vec![3.0, 4.0]));
    }

    #[test]
    fn centering_constant_is_zero() {
        let e = build_hankel(&series(&[2.5; 10]), 5).unwrap();
        let c = center_hankel(&e).unwrap();
        assert_eq!(c.h.max_abs(), 0.0);
    }

    #[test]
    fn centering_rejects_even_delays() {
        let e = build_hankel(&series(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        let err = center_hankel(&e).unwrap_err();
        assert!(err.to_string().contains("drop one"));
    }

    #[test]
    fn split_hand_case() {
        let e = build_hankel(&series(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        let (a, b) = split_shift(&e).unwrap();
        assert_eq!(a.h, Matrix::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap());
        assert_eq!(b.h, Matrix::from_rows(&[[2.0, 3.0], [3.0, 4.0]]).unwrap());
    }

    #[test]
    fn split_needs_three_columns() {
        let e = build_hankel(&series(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert!(split_shift(&e).is_err());
    }

    #[test]
    fn split_carries_centering() {
        let e = build_hankel(&series(&[1.0, 4.0, 2.0, 8.0, 5.0, 7.0]), 3).unwrap();
        let c = center_hankel(&e).unwrap();
        let (a, b) = split_shift(&c).unwrap();
        assert!(a.centered() && b.centered());
        assert_eq!(a.h0, c.h0);
        assert_eq!(b.h0, c.h0);
    }

    proptest! {
        #[test]
        fn antidiagonals_constant(values in prop::collection::vec(-1e3f64..1e3, 4..40), m in 2usize..6) {
            prop_assume!(m <= values.len());
            let e = build_hankel(&series(&values), m).unwrap();
            for i in 1..e.h.rows() {
                for j in 0..e.h.cols() - 1 {
                    prop_assert_eq!(e.h[(i, j)], e.h[(i - 1, j + 1)]);
                }
            }
        }

        #[test]
        fn center_round_trip_exact_on_dyadic_data(
            ints in prop::collection::vec(-8000i32..8000, 8..40),
            half in 1usize..4,
        ) {
            // Dyadic samples keep the subtraction and re-addition exact.
            let values: Vec<f64> = ints.iter().map(|&k| k as f64 / 8.0).collect();
            let m = 2 * half + 1;
            prop_assume!(m <= values.len());
            let e = build_hankel(&series(&values), m).unwrap();
            let c = center_hankel(&e).unwrap();
            prop_assert!(c.h.row(half).iter().all(|&x| x == 0.0));
            prop_assert_eq!(c.uncenter().h, e.h);
        }

        #[test]
        fn center_round_trip_general(values in prop::collection::vec(-1e3f64..1e3, 8..40)) {
            let e = build_hankel(&series(&values), 5).unwrap();
            let back = center_hankel(&e).unwrap().uncenter();
            for (a, b) in back.h.as_slice().iter().zip(e.h.as_slice()) {
                prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * 1e3);
            }
        }
    }
}
