//! Natural cubic spline interpolation and uniform resampling.

use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{HavokError, Result};

/// Knot positions closer than this fraction of a step to the span ends are
/// accepted as inside the span.
const SPAN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Natural,
}

/// Piecewise cubic `a + b s + c s² + d s³` with `s = t − knots[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineModel {
    pub knots: Vec<f64>,
    pub coefficients: Vec<[f64; 4]>,
    pub boundary: Boundary,
}

/// Natural cubic spline through every sample of `x`.
pub fn spline_fit(x: &TimeSeries) -> Result<SplineModel> {
    let n = x.len();
    if n < 4 {
        return Err(HavokError::param(format!(
            "spline needs at least 4 samples, got {n}"
        )));
    }
    let h = x.dt;
    let y = &x.values;
    // Second derivatives M_1..M_{n-2} from the tridiagonal system
    // h M_{i-1} + 4h M_i + h M_{i+1} = 6 (y_{i+1} − 2 y_i + y_{i-1}) / h, M_0 = M_{n-1} = 0.
    let k = n - 2;
    let rhs: Vec<f64> = (1..n - 1)
        .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
        .collect();
    let interior = solve_tridiagonal(&vec![1.0; k], &vec![4.0; k], &vec![1.0; k], &rhs);
    let mut m = Vec::with_capacity(n);
    m.push(0.0);
    m.extend(interior);
    m.push(0.0);
    let coefficients = (0..n - 1)
        .map(|i| {
            let b = (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
            [y[i], b, m[i] / 2.0, (m[i + 1] - m[i]) / (6.0 * h)]
        })
        .collect();
    let knots = (0..n).map(|i| x.time(i)).collect();
    Ok(SplineModel {
        knots,
        coefficients,
        boundary: Boundary::Natural,
    })
}

/// Thomas algorithm; `sub[0]` and `sup[k-1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let denom = diag[i] - if i > 0 { sub[i] * c[i - 1] } else { 0.0 };
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - if i > 0 { sub[i] * d[i - 1] } else { 0.0 }) / denom;
    }
    let mut out = vec![0.0; k];
    for i in (0..k).rev() {
        out[i] = d[i] - if i + 1 < k { c[i] * out[i + 1] } else { 0.0 };
    }
    out
}

impl SplineModel {
    pub fn span(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.span();
        let h = self.knots[1] - self.knots[0];
        if !(t >= lo - SPAN_SLACK * h && t <= hi + SPAN_SLACK * h) {
            return Err(HavokError::Extrapolation {
                lo,
                hi,
                detail: format!("t = {t}"),
            });
        }
        let i = (((t - lo) / h).floor().max(0.0) as usize).min(self.coefficients.len() - 1);
        Ok((i, t - self.knots[i]))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        let [a, b, c, d] = self.coefficients[i];
        Ok(a + s * (b + s * (c + s * d)))
    }

    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        let [_, _, c, d] = self.coefficients[i];
        Ok(2.0 * c + 6.0 * d * s)
    }
}

/// Evaluates the spline on a uniform grid `t₀ + k·dt_new` covering the knot span.
pub fn resample(s: &SplineModel, dt_new: f64) -> Result<TimeSeries> {
    if !(dt_new > 0.0 && dt_new.is_finite()) {
        return Err(HavokError::param(format!(
            "resampling step must be positive, got {dt_new}"
        )));
    }
    let (lo, hi) = s.span();
    let steps = ((hi - lo) / dt_new + SPAN_SLACK).floor();
    if steps < 1.0 {
        return Err(HavokError::Extrapolation {
            lo,
            hi,
            detail: format!("step {dt_new} leaves fewer than two samples in the span"),
        });
    }
    let values = (0..=steps as usize)
        .map(|k| s.eval(lo + k as f64 * dt_new))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(lo, dt_new, values)
}

/// Drops `window` samples from each end.
pub fn trim(x: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if 2 * window + 2 > x.len() {
        return Err(HavokError::param(format!(
            "trimming {window} samples from each end of {} leaves too little data",
            x.len()
        )));
    }
    x.window(window..x.len() - window)
}

/// Keeps every `stride`-th sample, starting with the first.
pub fn decimate(x: &TimeSeries, stride: usize) -> Result<TimeSeries> {
    if stride == 0 {
        return Err(HavokError::param("decimation stride must be positive"));
    }
    TimeSeries::new(
        x.t0,
        x.dt * stride as f64,
        x.values.iter().step_by(stride).copied().collect(),
    )
}

/// Spline-resamples `x` to `dt_new`, optionally trimming one delay window of
/// `delays` samples from each end to discard the natural-boundary error.
pub fn resample_series(
    x: &TimeSeries,
    dt_new: f64,
    delays: usize,
    trim_edges: bool,
) -> Result<TimeSeries> {
    let fine = resample(&spline_fit(x)?, dt_new)?;
    if trim_edges {
        trim(&fine, delays)
    } else {
        Ok(fine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sampled(dt: f64, n: usize, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries::from_fn(0.0, dt, n, f).unwrap()
    }

    #[test]
    fn linear_data_is_reproduced() {
        let s = spline_fit(&sampled(0.5, 10, |t| 2.0 * t + 1.0)).unwrap();
        for k in 0..=450 {
            let t = k as f64 * 0.01;
            assert_abs_diff_eq!(s.eval(t).unwrap(), 2.0 * t + 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.second_derivative(t).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_data() {
        let s = spline_fit(&sampled(1.0, 6, |_| 3.5)).unwrap();
        for k in 0..=50 {
            assert_abs_diff_eq!(s.eval(k as f64 * 0.1).unwrap(), 3.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn sine_upsampling_error() {
        let s = spline_fit(&sampled(0.1, 101, f64::sin)).unwrap();
        let fine = resample(&s, 0.001).unwrap();
        assert_eq!(fine.len(), 10_001);
        let max_err = |x: &TimeSeries| {
            x.values
                .iter()
                .enumerate()
                .map(|(k, v)| (v - x.time(k).sin()).abs())
                .fold(0.0, f64::max)
        };
        // The natural end condition is wrong at t = 10 (sin″(10) ≠ 0), which
        // costs 2.67e-4 next to that end; one trimmed delay window removes it.
        let full = max_err(&fine);
        assert!(full > 1e-4 && full < 3e-4, "edge error {full}");
        let trimmed = trim(&fine, 201).unwrap();
        let err = max_err(&trimmed);
        assert!(err <= 1e-4, "max error {err}");
    }

    #[test]
    fn resample_at_original_step() {
        let x = sampled(0.25, 40, |t| (3.0 * t).cos() + t);
        let back = resample(&spline_fit(&x).unwrap(), 0.25).unwrap();
        assert_eq!(back.len(), x.len());
        for (a, b) in back.values.iter().zip(&x.values) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn extrapolation_rejected() {
        let s = spline_fit(&sampled(0.1, 11, f64::sin)).unwrap();
        assert!(matches!(s.eval(1.5), Err(HavokError::Extrapolation { .. })));
        assert!(matches!(
            s.eval(-0.01),
            Err(HavokError::Extrapolation { .. })
        ));
        assert!(matches!(
            resample(&s, 2.0),
            Err(HavokError::Extrapolation { .. })
        ));
        assert!(resample(&s, 0.0).is_err());
    }

    #[test]
    fn too_few_points() {
        assert!(spline_fit(&sampled(1.0, 3, f64::sin)).is_err());
    }

    #[test]
    fn trimming() {
        let x = sampled(0.1, 20, |t| t);
        let t = trim(&x, 3).unwrap();
        assert_eq!(t.len(), 14);
        assert_abs_diff_eq!(t.t0, 0.3, epsilon = 1e-15);
        assert!(trim(&x, 10).is_err());
        let r = resample_series(&x, 0.05, 4, true).unwrap();
        assert_eq!(r.len(), 39 - 8);
        assert_eq!(resample_series(&x, 0.05, 4, false).unwrap().len(), 39);
    }

    #[test]
    fn decimation() {
        let x = sampled(0.01, 11, |t| t);
        let d = decimate(&x, 5).unwrap();
        assert_eq!(d.values, vec![0.0, 0.05, 0.1]);
        assert_abs_diff_eq!(d.dt, 0.05, epsilon = 1e-15);
        assert_eq!(decimate(&x, 1).unwrap(), x);
        assert!(decimate(&x, 0).is_err());
        assert!(decimate(&x, 20).is_err());
    }

    proptest! {
        #[test]
        fn interpolates_knots(values in prop::collection::vec(-100.0f64..100.0, 4..40)) {
            let x = TimeSeries::new(1.0, 0.3, values.clone()).unwrap();
            let s = spline_fit(&x).unwrap();
            let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for (i, v) in values.iter().enumerate() {
                prop_assert!((s.eval(x.time(i)).unwrap() - v).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn second_derivative_continuous(values in prop::collection::vec(-100.0f64..100.0, 4..40)) {
            let x = TimeSeries::new(0.0, 0.5, values).unwrap();
            let s = spline_fit(&x).unwrap();
            let h = 0.5;
            let max_m = s.coefficients.iter().map(|c| (2.0 * c[2]).abs()).fold(1e-300, f64::max);
            for i in 1..s.coefficients.len() {
                let [_, _, c0, d0] = s.coefficients[i - 1];
                let left = 2.0 * c0 + 6.0 * d0 * h;
                let right = 2.0 * s.coefficients[i][2];
                prop_assert!((left - right).abs() <= 1e-10 * max_m);
            }
        }
    }
}
