use super::matrix::{dot, norm};
use crate::error::{HavokError, Result};

/// Relative residual below which a vector counts as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-12;

/// Orthonormal vectors plus the input indices that were dropped as dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthonormalized {
    pub vectors: Vec<Vec<f64>>,
    /// Index in the input list of each output vector.
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
///
/// Inputs whose residual after projection falls below
/// `DEPENDENCE_TOL * ‖input‖` are dropped and reported; an exactly zero
/// input is an error.
pub fn gram_schmidt<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Orthonormalized> {
    let len = vectors.first().map_or(0, |v| v.as_ref().len());
    let mut out = Orthonormalized {
        vectors: Vec::new(),
        kept: Vec::new(),
        dropped: Vec::new(),
    };
    for (idx, v) in vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != len {
            return Err(HavokError::param(format!(
                "vector {idx} has length {}, expected {len}",
                v.len()
            )));
        }
        let input_norm = norm(v);
        if input_norm == 0.0 || !input_norm.is_finite() {
            return Err(HavokError::DegenerateInput {
                index: idx,
                reason: "zero or non-finite vector".into(),
            });
        }
        let mut w = v.to_vec();
        for _pass in 0..2 {
            for q in &out.vectors {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        let residual = norm(&w);
        if residual < DEPENDENCE_TOL * input_norm {
            out.dropped.push(idx);
            continue;
        }
        w.iter_mut().for_each(|x| *x /= residual);
        out.vectors.push(w);
        out.kept.push(idx);
    }
    Ok(out)
}
