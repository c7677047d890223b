use phonoscope_core::corpus::{load_corpus, LoadOptions};
use phonoscope_core::phonology::PhonoFeatureTable;
use phonoscope_core::synth::*;
use phonoscope_core::vector::{dot, norm};
use tempfile::tempdir;

fn cfg() -> SynthConfig {
    SynthConfig { n_utterances: 25, n_layers: 2, seed: 5, ..Default::default() }
}

#[test]
fn written_corpus_reads_back_bit_exact() {
    let t = PhonoFeatureTable::toy();
    let dir = tempdir().unwrap();
    let (manifest, s) = generate_synthetic_corpus(&cfg(), &t, dir.path()).unwrap();
    let back = load_corpus(&manifest, LoadOptions::default()).unwrap();
    assert_eq!(back.utterances(), s.corpus.utterances());
    assert_eq!(back.layer_ids, vec![0, 1]);
    assert!(back.manifest_sha256().is_some());

    let gt = ground_truth_vectors(dir.path()).unwrap();
    for (x, y) in s.ground_truth.cells.iter().zip(&gt.cells) {
        let (a, b) = (x.vector.as_ref().unwrap(), y.vector.as_ref().unwrap());
        assert_eq!((&x.feature.name, x.position), (&y.feature.name, y.position));
        assert!(a.vector.iter().zip(&b.vector).all(|(p, q)| (*p as f32) == (*q as f32)));
    }
    let saved: SynthConfig = serde_json::from_str(&std::fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap()).unwrap();
    assert_eq!(saved, cfg());
}

#[test]
fn same_seed_same_bytes() {
    let t = PhonoFeatureTable::toy();
    let (d1, d2) = (tempdir().unwrap(), tempdir().unwrap());
    generate_synthetic_corpus(&cfg(), &t, d1.path()).unwrap();
    generate_synthetic_corpus(&cfg(), &t, d2.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 50);
    for n in names {
        assert_eq!(std::fs::read(d1.path().join(&n)).unwrap(), std::fs::read(d2.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn planted_vectors_follow_weights_and_are_orthogonal() {
    let t = PhonoFeatureTable::toy();
    let s = generate(&cfg(), &t).unwrap();
    let w = cfg().position_weights;
    let cells: Vec<_> = s.ground_truth.present().collect();
    assert_eq!(cells.len(), 40);
    for (c, v) in &cells {
        let k = (c.position + 2) as usize;
        assert!((norm(&v.vector) - w[k]).abs() < 1e-12);
    }
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            assert!(dot(&cells[i].1.vector, &cells[j].1.vector).abs() < 1e-12);
        }
    }
}

#[test]
fn shape_and_split_follow_the_config() {
    let t = PhonoFeatureTable::toy();
    let s = generate(&cfg(), &t).unwrap();
    for (i, u) in s.corpus.utterances().iter().enumerate() {
        assert!((10..=20).contains(&u.segments.len()));
        assert!(u.segments.iter().all(|g| (3..=8).contains(&g.len())));
        assert_eq!(u.split_tag, split_tag(i));
        assert_eq!(u.layer(0).unwrap().cols(), 64);
    }
    assert_eq!(s.corpus.split(Some("test")).count(), 5);
}

#[test]
fn undersized_dimension_is_rejected() {
    let t = PhonoFeatureTable::toy();
    let err = generate(&SynthConfig { dim: 39, ..cfg() }, &t).unwrap_err();
    assert!(matches!(err, SynthError::DimensionTooSmall { dim: 39, features: 8 }), "{err}");
}
