//! Dense vector helpers shared by the analyses.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cosine similarity is undefined for a zero vector")]
pub struct ZeroVector;

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]` against rounding.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, ZeroVector> {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 || !nu.is_finite() || !nv.is_finite() {
        return Err(ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Cosine between an `f64` vector and an `f32` frame row.
pub fn cosine_f32(u: &[f64], row: &[f32]) -> Result<f64, ZeroVector> {
    debug_assert_eq!(u.len(), row.len());
    let (mut uv, mut vv) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(row) {
        let b = f64::from(b);
        uv += a * b;
        vv += b * b;
    }
    let nu = norm(u);
    let nv = vv.sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(ZeroVector);
    }
    Ok((uv / (nu * nv)).clamp(-1.0, 1.0))
}

/// `b - a + c`, the analogy estimate of `d`.
pub fn offset_add(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter().zip(b).zip(c).map(|((a, b), c)| b - a + c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.2, 4.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine(&v, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[0.0, 1.0]), Err(ZeroVector));
    }

    #[test]
    fn f32_variant_agrees() {
        let u = [0.5, 2.0, -1.0];
        let r = [1.5f32, -0.25, 3.0];
        let r64: Vec<f64> = r.iter().map(|&x| f64::from(x)).collect();
        assert!((cosine(&u, &r64).unwrap() - cosine_f32(&u, &r).unwrap()).abs() < 1e-15);
    }
}
