mod common;

use common::{oracle, random_corpus, small_oracle, toy};
use phonoscope_core::corpus::{Corpus, UtteranceRecord};
use phonoscope_core::phonology::{PhoneMapping, PhonoFeatureTable};
use phonoscope_core::phonovec::*;
use phonoscope_core::vector::{cosine, norm};
use proptest::prelude::*;
use tempfile::tempdir;

fn extract(corpus: &Corpus, table: &PhonoFeatureTable) -> PositionalVectorSet {
    let m = PhoneMapping::identity(table);
    extract_vector_set(corpus, None, 0, table, &m, &analysis_features(), &POSITIONS, &ExtractOptions::default()).unwrap()
}

#[test]
fn noiseless_oracle_recovers_planted_directions() {
    let (t, _) = toy();
    let s = oracle(0.0, 1);
    let set = extract(&s.corpus, &t);
    assert_eq!(set.present().count(), 40);
    for (cell, v) in set.present() {
        let gt = s.ground_truth.get(&cell.feature.name, cell.position).unwrap();
        let c = cosine(&v.vector, &gt.vector).unwrap();
        assert!(c >= 0.95, "{}@{}: {c}", cell.feature.name, cell.position);
        assert!(v.n_plus >= DEFAULT_MIN_SAMPLES && v.n_minus >= DEFAULT_MIN_SAMPLES);
    }
}

#[test]
fn norm_profile_tracks_position_weights() {
    let (t, _) = toy();
    let s = oracle(0.0, 2);
    let prof = vector_norm_profile(&extract(&s.corpus, &t), &POSITIONS);
    let center = prof[2].mean_norm.unwrap();
    for (e, w) in prof.iter().zip([0.25, 0.5, 1.0, 0.5, 0.25]) {
        let ratio = e.mean_norm.unwrap() / center;
        assert!((ratio - w).abs() / w <= 0.05, "position {}: {ratio}", e.position);
    }
}

fn flip_column(text: &str, column: &str) -> String {
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let idx = header.split(',').position(|h| h == column).unwrap();
    let mut out = vec![header.to_string()];
    for line in lines {
        let cells: Vec<String> = line
            .split(',')
            .enumerate()
            .map(|(i, c)| match (i == idx, c) {
                (true, "+") => "-".into(),
                (true, "-") => "+".into(),
                _ => c.into(),
            })
            .collect();
        out.push(cells.join(","));
    }
    out.join("\n") + "\n"
}

#[test]
fn flipping_polarity_negates_exactly() {
    let (t, _) = toy();
    let flipped = PhonoFeatureTable::parse(&flip_column(phonoscope_core::phonology::TOY_TABLE, "voi")).unwrap();
    let s = small_oracle(0.05, 3, 150);
    let (a, b) = (extract(&s.corpus, &t), extract(&s.corpus, &flipped));
    for k in POSITIONS {
        let (x, y) = (a.get("voicing", k).unwrap(), b.get("voicing", k).unwrap());
        let neg: Vec<f64> = y.vector.iter().map(|v| -v).collect();
        assert_eq!(x.vector, neg);
        assert_eq!((x.n_plus, x.n_minus), (y.n_minus, y.n_plus));
        assert_eq!(a.get("nasal", k).unwrap().vector, b.get("nasal", k).unwrap().vector);
    }
}

#[test]
fn one_sided_population_is_absent_with_reason() {
    let (t, m) = toy();
    // C0..C3 only; check which are voiced to build an all-plus population.
    let voiced: Vec<&str> = t
        .phones()
        .iter()
        .map(String::as_str)
        .filter(|p| t.value(p, "voi").unwrap() == phonoscope_core::phonology::FeatureValue::Plus)
        .collect();
    let utts: Vec<Vec<&str>> = (0..40).map(|i| vec![voiced[i % voiced.len()]; 3]).collect();
    let corpus = random_corpus(&utts, 2, 4, 1);
    let set =
        extract_vector_set(&corpus, None, 0, &t, &m, &[AnalysisFeature::Voicing.spec()], &[0], &ExtractOptions::default())
            .unwrap();
    let cell = set.cell("voicing", 0).unwrap();
    assert!(cell.vector.is_none());
    assert!(cell.absent_reason.as_deref().unwrap().contains("minus"), "{:?}", cell.absent_reason);
    let err = extract_phonological_vector(
        &corpus,
        None,
        &AnalysisFeature::Voicing.spec(),
        0,
        0,
        &t,
        &m,
        &ExtractOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, PhonovecError::InsufficientSamples { side: Side::Minus, .. }), "{err}");
}

#[test]
fn similarity_matrix_is_symmetric_with_unit_diagonal() {
    let (t, _) = toy();
    let s = small_oracle(0.05, 4, 200);
    let set = extract(&s.corpus, &t);
    let feats = analysis_features();
    let m = vector_similarity_matrix(&set, &feats, &POSITIONS).unwrap();
    assert_eq!(m.labels.len(), 40);
    for i in 0..40 {
        assert_eq!(m.values[i][i], 1.0);
        for j in 0..40 {
            assert_eq!(m.values[i][j], m.values[j][i]);
        }
    }
    let single = positional_orthogonality_summary(&set, &[0]);
    assert!(single.across.is_none() && single.within.is_some());
}

#[test]
fn identical_vectors_across_positions_show_up_in_across_mean() {
    let (t, _) = toy();
    let s = small_oracle(0.05, 5, 200);
    let mut set = extract(&s.corpus, &t);
    let honest = positional_orthogonality_summary(&set, &[0, 1]);
    let copy: Vec<(String, Vec<f64>)> =
        set.present().filter(|(c, _)| c.position == 0).map(|(c, v)| (c.feature.name.clone(), v.vector.clone())).collect();
    for cell in set.cells.iter_mut().filter(|c| c.position == 1) {
        let v = cell.vector.as_mut().unwrap();
        v.vector = copy.iter().find(|(f, _)| *f == cell.feature.name).unwrap().1.clone();
    }
    let planted = positional_orthogonality_summary(&set, &[0, 1]);
    assert!(honest.across.unwrap() < 0.15);
    assert!(planted.across.unwrap() > honest.across.unwrap() + 0.05);
}

#[test]
fn scaling_corpus_scales_vectors() {
    let (t, _) = toy();
    let s = small_oracle(0.05, 6, 150);
    let a = extract(&s.corpus, &t);
    let b = extract(&s.corpus.scaled(2.0), &t);
    for ((_, x), (_, y)) in a.present().zip(b.present()) {
        assert!((norm(&y.vector) / norm(&x.vector) - 2.0).abs() < 1e-12);
    }
}

#[test]
fn vector_set_round_trips_through_files() {
    let (t, _) = toy();
    let s = small_oracle(0.05, 7, 120);
    let set = extract(&s.corpus, &t);
    let dir = tempdir().unwrap();
    let path = dir.path().join("v.phf");
    write_vector_set(&path, &set).unwrap();
    assert!(sidecar_path(&path).is_file());
    let back = read_vector_set(&path).unwrap();
    assert_eq!(back.cells.len(), set.cells.len());
    for (x, y) in set.cells.iter().zip(&back.cells) {
        assert_eq!(x.feature, y.feature);
        assert_eq!(x.position, y.position);
        match (&x.vector, &y.vector) {
            (Some(a), Some(b)) => {
                assert_eq!((a.n_plus, a.n_minus), (b.n_plus, b.n_minus));
                for (p, q) in a.vector.iter().zip(&b.vector) {
                    assert_eq!(*p as f32, *q as f32);
                }
            }
            (None, None) => {}
            _ => panic!("presence differs for {}", cell_label(&x.feature.name, x.position)),
        }
    }
}

fn duplicated(c: &Corpus) -> Corpus {
    let mut records: Vec<UtteranceRecord> = c.utterances().to_vec();
    for u in c.utterances() {
        records.push(UtteranceRecord { utterance_id: format!("{}-dup", u.utterance_id), ..u.clone() });
    }
    Corpus::from_records("dup", records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn duplicating_population_leaves_vectors_unchanged(seed in 0u64..1000) {
        let (t, _) = toy();
        let s = small_oracle(0.05, seed, 80);
        let a = extract(&s.corpus, &t);
        let b = extract(&duplicated(&s.corpus), &t);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            prop_assert_eq!(x.vector.is_some(), y.vector.is_some());
            if let (Some(p), Some(q)) = (&x.vector, &y.vector) {
                prop_assert_eq!(2 * p.n_plus, q.n_plus);
                for (u, v) in p.vector.iter().zip(&q.vector) {
                    prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
                }
            }
        }
    }
}
