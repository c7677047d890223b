mod common;

use common::{small_oracle, toy};
use phonoscope_core::boundary::*;
use phonoscope_core::phonology::FeatureValue;
use phonoscope_core::phonovec::{analysis_features, extract_vector_set, ExtractOptions, POSITIONS};
use proptest::prelude::*;

#[test]
fn windows_satisfy_their_invariants() {
    let (t, m) = toy();
    let s = small_oracle(0.05, 2, 80);
    for f in analysis_features() {
        let col = t.feature_index(&f.column).unwrap();
        for kind in [BoundaryKind::Onset, BoundaryKind::Offset] {
            let ws = collect_boundary_windows(&s.corpus, None, &t, &m, &f, kind).unwrap();
            assert!(!ws.is_empty());
            for w in &ws {
                let u = &s.corpus.utterances()[w.utterance_index];
                assert!(w.boundary_frame >= BOUNDARY_INDEX && w.boundary_frame + BOUNDARY_INDEX < u.frames());
                assert_eq!(u.segments[w.right_segment].start_frame, w.boundary_frame);
                let (l, r) = (t.row(&w.left_phone).unwrap()[col], t.row(&w.right_phone).unwrap()[col]);
                let p0 = match kind {
                    BoundaryKind::Onset => {
                        assert_eq!((l, r), (FeatureValue::Minus, FeatureValue::Plus));
                        &w.right_phone
                    }
                    BoundaryKind::Offset => {
                        assert_eq!((l, r), (FeatureValue::Plus, FeatureValue::Minus));
                        &w.left_phone
                    }
                };
                assert_eq!(Some(t.natural_class_of(p0).unwrap()), f.class);
                assert_eq!(w.frames(&s.corpus, 0).unwrap().len(), WINDOW_LEN);
            }
        }
    }
}

#[test]
fn oracle_crossings_sit_near_the_boundary() {
    let (t, m) = toy();
    let s = small_oracle(0.0, 3, 300);
    let feats = analysis_features();
    let set = extract_vector_set(&s.corpus, None, 0, &t, &m, &feats, &POSITIONS, &ExtractOptions::default()).unwrap();
    for f in &feats {
        for kind in [BoundaryKind::Onset, BoundaryKind::Offset] {
            let ws = collect_boundary_windows(&s.corpus, None, &t, &m, f, kind).unwrap();
            let r = boundary_similarity_curves(&s.corpus, 0, &ws, &set, &f.name, kind).unwrap();
            let c = r.crossing.unwrap();
            // The switch happens between the last left frame and the boundary frame.
            assert!((4.0..=5.0).contains(&c), "{} {}: {c}", f.name, kind.as_str());
            assert_eq!(r.sign_changes, 1);
        }
    }
}

#[test]
fn frame_trace_steps_at_planted_boundaries() {
    let (t, m) = toy();
    let s = small_oracle(0.0, 4, 120);
    let feats = analysis_features();
    let set = extract_vector_set(&s.corpus, None, 0, &t, &m, &feats, &POSITIONS, &ExtractOptions::default()).unwrap();
    let mut checked = 0;
    for u in s.corpus.utterances().iter().take(20) {
        let tr = frame_trace(u, 0, &set, &feats, &[0]).unwrap();
        for (fi, f) in feats.iter().enumerate() {
            let col = t.feature_index(&f.column).unwrap();
            for i in 1..u.segments.len() {
                let (l, r) = (&u.segments[i - 1], &u.segments[i]);
                let (lv, rv) = (t.row(&l.phone).unwrap()[col], t.row(&r.phone).unwrap()[col]);
                let in_class = |p: &str| Some(t.natural_class_of(p).unwrap()) == f.class;
                if lv == rv || lv == FeatureValue::Zero || rv == FeatureValue::Zero {
                    continue;
                }
                if !in_class(&l.phone) || !in_class(&r.phone) {
                    continue;
                }
                let seg = &tr.values[fi][l.start_frame..r.end_frame];
                let zero = vec![0.0; seg.len()];
                let (c, _) = detect_crossing(seg, &zero);
                let at = l.start_frame as f64 + c.expect("trace changes sign");
                assert!((at - r.start_frame as f64).abs() <= 1.0, "{}: {at} vs {}", f.name, r.start_frame);
                checked += 1;
            }
        }
    }
    assert!(checked > 50);
}

proptest! {
    #[test]
    fn crossing_ignores_a_shared_offset(
        a in proptest::collection::vec(-1.0f64..1.0, 11),
        b in proptest::collection::vec(-1.0f64..1.0, 11),
        shift in -5.0f64..5.0,
    ) {
        let (c0, n0) = detect_crossing(&a, &b);
        let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
        let (c1, n1) = detect_crossing(&sa, &sb);
        prop_assert_eq!(n0, n1);
        match (c0, c1) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (x, y) => prop_assert_eq!(x, y),
        }
        if let Some(x) = c0 {
            prop_assert!((0.0..=10.0).contains(&x));
        }
    }

    #[test]
    fn crossing_is_symmetric_in_its_curves(
        a in proptest::collection::vec(-1.0f64..1.0, 11),
        b in proptest::collection::vec(-1.0f64..1.0, 11),
    ) {
        let (c0, n0) = detect_crossing(&a, &b);
        let (c1, n1) = detect_crossing(&b, &a);
        prop_assert_eq!(n0, n1);
        match (c0, c1) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }
}
