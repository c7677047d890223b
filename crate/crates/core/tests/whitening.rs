mod common;

use std::collections::BTreeMap;

use common::small_oracle;
use nalgebra::{DMatrix, DVector};
use phonoscope_core::corpus::FeatureMatrix;
use phonoscope_core::whitening::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::tempdir;

fn gaussian(rows: usize, dim: usize, mix: &DMatrix<f64>, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let z = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        data.extend((mix * z).iter().map(|&v| v as f32));
    }
    FeatureMatrix::new(0, rows, dim, data).unwrap()
}

fn mixing(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(dim, dim, |i, j| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        if i == j { 1.0 + 0.4 * noise } else { 0.4 * noise }
    })
}

fn whitened_cov(w: &WhiteningTransform, m: &FeatureMatrix) -> DMatrix<f64> {
    let z = w.apply(m.all_rows()).unwrap();
    let n = z.len() as f64;
    let d = w.dim;
    let mut c = DMatrix::zeros(d, d);
    for r in &z {
        let v = DVector::from_column_slice(r);
        c += &v * v.transpose();
    }
    c / n
}

/// Population covariance of the raw rows, computed directly.
fn raw_cov(m: &FeatureMatrix) -> DMatrix<f64> {
    let d = m.cols();
    let n = m.rows() as f64;
    let mut mu = DVector::zeros(d);
    for t in 0..m.rows() {
        mu += DVector::from_iterator(d, m.row(t).iter().map(|&v| v as f64));
    }
    mu /= n;
    let mut c = DMatrix::zeros(d, d);
    for t in 0..m.rows() {
        let x = DVector::from_iterator(d, m.row(t).iter().map(|&v| v as f64)) - &mu;
        c += &x * x.transpose();
    }
    c / n
}

#[test]
fn whitened_fit_set_has_identity_covariance() {
    let m = gaussian(3000, 6, &mixing(6, 1), 2);
    let w = fit_zca_on(0, &[&m]).unwrap();
    let c = whitened_cov(&w, &m);
    let eig = raw_cov(&m).symmetric_eigen();
    let eps = EPSILON_SCALE * eig.eigenvalues.mean();
    assert!((w.epsilon - eps).abs() <= 1e-12 * eps.max(1.0));
    let shrink = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l / (l + eps)));
    let expected = &eig.eigenvectors * shrink * eig.eigenvectors.transpose();
    for i in 0..6 {
        for j in 0..6 {
            assert!((c[(i, j)] - expected[(i, j)]).abs() <= 1e-4, "({i},{j}) = {}", c[(i, j)]);
            let identity = if i == j { 1.0 } else { 0.0 };
            assert!((c[(i, j)] - identity).abs() <= 1e-3);
        }
    }
}

#[test]
fn inverse_transform_round_trips() {
    let m = gaussian(500, 5, &mixing(5, 3), 4);
    let w = fit_zca_on(0, &[&m]).unwrap();
    let inv = w.matrix().try_inverse().unwrap();
    let mean = DVector::from_column_slice(&w.mean);
    for t in 0..20 {
        let x: Vec<f64> = m.row(t).iter().map(|&v| v as f64).collect();
        let z = DVector::from_vec(w.apply_vec(&x).unwrap());
        let back = &inv * z + &mean;
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-4);
        }
    }
}

#[test]
fn whitening_commutes_with_rotation() {
    let dim = 4;
    let m = gaussian(800, dim, &mixing(dim, 5), 6);
    let q = DMatrix::<f64>::from_fn(dim, dim, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0).qr().q();
    let rotated: Vec<f32> = (0..m.rows())
        .flat_map(|t| {
            let x = DVector::from_iterator(dim, m.row(t).iter().map(|&v| v as f64));
            (&q * x).iter().map(|&v| v as f32).collect::<Vec<_>>()
        })
        .collect();
    let mr = FeatureMatrix::new(0, m.rows(), dim, rotated).unwrap();
    let (w, wr) = (fit_zca_on(0, &[&m]).unwrap(), fit_zca_on(0, &[&mr]).unwrap());
    let expected = &q * w.matrix() * q.transpose();
    let got = wr.matrix();
    for (a, b) in expected.iter().zip(got.iter()) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn fit_zca_samples_are_reproducible() {
    let s = small_oracle(0.05, 1, 40);
    let a = fit_zca(&s.corpus, None, 0, 10, 3).unwrap();
    let b = fit_zca(&s.corpus, None, 0, 10, 3).unwrap();
    assert_eq!(a, b);
    let err = fit_zca(&s.corpus, None, 0, 41, 3).unwrap_err();
    assert!(matches!(err, WhiteningError::InsufficientUtterances { needed: 41, available: 40 }), "{err}");
}

fn pairs(n: usize, dim: usize, null: bool, seed: u64) -> Vec<MaskedPair> {
    (0..n)
        .map(|i| {
            let o = gaussian(30, dim, &DMatrix::identity(dim, dim), seed + 2 * i as u64);
            let m = if null { gaussian(30, dim, &DMatrix::identity(dim, dim), seed + 2 * i as u64 + 1) } else { o.clone() };
            MaskedPair {
                utterance_id: format!("p{i}"),
                layers: BTreeMap::from([(0, (o, m))]),
                masked_frame_indices: (5..15).collect(),
            }
        })
        .collect()
}

#[test]
fn identical_pairs_score_one_and_null_pairs_score_zero() {
    let same = pairs(20, 16, false, 10);
    let ws = fit_on_originals(&same, &[0], DEFAULT_FIT_UTTERANCES, 1).unwrap();
    let r = mask_filling_similarity(&same, &ws).unwrap();
    assert!((r[0].mean - 1.0).abs() < 1e-9);

    let null = pairs(40, 16, true, 100);
    let ws = fit_on_originals(&null, &[0], DEFAULT_FIT_UTTERANCES, 1).unwrap();
    let r = mask_filling_similarity(&null, &ws).unwrap();
    let bound = 3.0 / ((r[0].n_frames * 16) as f64).sqrt();
    assert!(r[0].mean.abs() <= bound, "{} > {bound}", r[0].mean);
}

#[test]
fn pair_files_round_trip() {
    let ps = pairs(3, 4, true, 7);
    let dir = tempdir().unwrap();
    let path = write_pairs(dir.path(), "masked", &ps).unwrap();
    assert_eq!(load_pairs(&path).unwrap(), ps);
}

#[test]
fn bad_mask_is_rejected() {
    let mut ps = pairs(1, 4, true, 9);
    ps[0].masked_frame_indices = vec![3, 2];
    assert!(matches!(ps[0].validate(), Err(WhiteningError::InvalidPair { .. })));
    ps[0].masked_frame_indices = vec![99];
    assert!(ps[0].validate().is_err());
    ps[0].masked_frame_indices.clear();
    assert!(matches!(ps[0].validate(), Err(WhiteningError::EmptyMask { .. })));
}
