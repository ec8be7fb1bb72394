//! Gram-Schmidt reorthogonalization of error-vector frames.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::{dot, norm};

/// Orthogonalized vectors shorter than this fraction of their input are
/// treated as collapsed onto the span of the preceding vectors.
pub const DEPENDENCE_RTOL: f64 = 1e-12;
const DEPENDENCE_ATOL: f64 = 1e-300;

fn check_frame(vectors: &[Vec<f64>]) -> Result<usize> {
    let n = vectors
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::invalid("frame must contain at least one vector"))?;
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    Ok(n)
}

/// Classical Gram-Schmidt without normalization:
/// `d'_1 = d_1`, `d'_k = d_k - sum_{j<k} (d_k, d'_j) / (d'_j, d'_j) d'_j`.
///
/// Projection coefficients use the original `d_k`, so each output depends
/// only on its input and the previous outputs.
pub fn gsr_orthogonalize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = check_frame(vectors)?;
    if vectors.len() > n {
        return Err(Error::invalid(format!(
            "{} vectors cannot be independent in dimension {n}",
            vectors.len()
        )));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    let mut sq_norms: Vec<f64> = Vec::with_capacity(vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        let coeffs: Vec<f64> = out
            .iter()
            .zip(&sq_norms)
            .map(|(prev, sq)| dot(v, prev) / sq)
            .collect();
        let mut w = v.clone();
        for (prev, c) in out.iter().zip(&coeffs) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= c * pi;
            }
        }
        let wn = norm(&w);
        let vn = norm(v);
        if !wn.is_finite() || wn <= DEPENDENCE_ATOL || wn <= DEPENDENCE_RTOL * vn {
            return Err(Error::DependentFrame { index: k, norm: wn });
        }
        sq_norms.push(wn * wn);
        out.push(w);
    }
    Ok(out)
}

/// m-dimensional volume `sqrt(det(G^T G))` of the parallelotope spanned by
/// the vectors (the columns of `G`). Zero for dependent frames.
pub fn volume_m(vectors: &[Vec<f64>]) -> f64 {
    let Some(first) = vectors.first() else {
        return 0.0;
    };
    let n = first.len();
    assert!(
        vectors.iter().all(|v| v.len() == n),
        "all frame vectors must have the same dimension"
    );
    if vectors.len() > n {
        return 0.0;
    }
    let m = vectors.len();
    let gram = DMatrix::from_fn(m, m, |i, j| dot(&vectors[i], &vectors[j]));
    gram.determinant().max(0.0).sqrt()
}
