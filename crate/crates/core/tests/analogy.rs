mod common;

use common::{random_corpus, small_oracle, strings, toy};
use phonoscope_core::analogy::{
    positional_window_sweep, success_rate, AnalogyEngine, IndexMode, InstanceIndex, TrialConfig,
};
use phonoscope_core::corpus::Corpus;
use phonoscope_core::phonology::{enumerate_quadruplets, AnalogyQuadruplet};
use phonoscope_core::pooling::{mean_pool, PoolingKind};
use phonoscope_core::synth::{generate, SynthConfig};
use phonoscope_core::vector::{cosine, offset_add};

fn tiny() -> Corpus {
    random_corpus(
        &[vec!["V0", "V1", "C0", "C1"], vec!["V1", "V0", "C1", "C0"], vec!["C0", "V0", "C1", "V1", "C2"]],
        3,
        8,
        5,
    )
}

fn pooled(corpus: &Corpus, phone: &str) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for u in corpus.utterances() {
        let m = u.layer(0).unwrap();
        for s in u.segments.iter().filter(|s| s.phone == phone) {
            out.push(mean_pool(m.slice(s.start_frame, s.end_frame)).unwrap());
        }
    }
    out
}

#[test]
fn sampled_similarity_matches_exhaustive_mean() {
    let (t, m) = toy();
    let corpus = tiny();
    let inv = strings(&["V0", "V1", "C0", "C1", "C2"]);
    let index = InstanceIndex::build(&corpus, None, &t, &m, &inv, IndexMode::Standard).unwrap();
    let q = AnalogyQuadruplet::new("V0", "V1", "C0", "C1");
    let [a, b, c, d] = q.phones().map(|p| pooled(&corpus, p));
    let mut sum = 0.0;
    let mut n = 0.0;
    for va in &a {
        for vb in &b {
            for vc in &c {
                for vd in &d {
                    sum += cosine(vd, &offset_add(va, vb, vc)).unwrap();
                    n += 1.0;
                }
            }
        }
    }
    let exhaustive = sum / n;
    let cfg = TrialConfig { samples: 20_000, seed: 3, ..Default::default() };
    let engine = AnalogyEngine::new(&corpus, &index, 0, cfg).unwrap();
    for rep in 0..3 {
        let s = engine.analogy_similarity(&q, rep).unwrap();
        assert!((s - exhaustive).abs() < 0.02, "rep {rep}: {s} vs {exhaustive}");
    }
}

#[test]
fn baselines_match_exhaustive_means() {
    let (t, m) = toy();
    let corpus = tiny();
    let inv = strings(&["V0", "V1", "C0", "C1", "C2"]);
    let index = InstanceIndex::build(&corpus, None, &t, &m, &inv, IndexMode::Standard).unwrap();
    let cfg = TrialConfig { samples: 20_000, seed: 9, ..Default::default() };
    let engine = AnalogyEngine::new(&corpus, &index, 0, cfg).unwrap();

    // Instance lists by utterance, for the "different utterance" condition.
    let mut d_by_utt = Vec::new();
    let mut others = Vec::new();
    for (ui, u) in corpus.utterances().iter().enumerate() {
        let lm = u.layer(0).unwrap();
        for s in &u.segments {
            let v = mean_pool(lm.slice(s.start_frame, s.end_frame)).unwrap();
            if s.phone == "C1" {
                d_by_utt.push((ui, v));
            } else {
                others.push(v);
            }
        }
    }
    // Upper: uniform first draw, then uniform over d instances in other utterances.
    let mut upper = 0.0;
    for (ui, x) in &d_by_utt {
        let rest: Vec<_> = d_by_utt.iter().filter(|(uj, _)| uj != ui).collect();
        upper += rest.iter().map(|(_, y)| cosine(x, y).unwrap()).sum::<f64>() / rest.len() as f64;
    }
    upper /= d_by_utt.len() as f64;
    let mut lower = 0.0;
    for (_, x) in &d_by_utt {
        lower += others.iter().map(|y| cosine(x, y).unwrap()).sum::<f64>() / others.len() as f64;
    }
    lower /= d_by_utt.len() as f64;

    assert!((engine.baseline_upper("C1", 0).unwrap() - upper).abs() < 0.02);
    assert!((engine.baseline_lower("C1", 0).unwrap() - lower).abs() < 0.02);
}

#[test]
fn singleton_utterance_phone_is_skipped_with_reason() {
    let (t, m) = toy();
    let corpus = tiny();
    let inv = strings(&["V0", "V1", "C0", "C1", "C2"]);
    let index = InstanceIndex::build(&corpus, None, &t, &m, &inv, IndexMode::Standard).unwrap();
    let quads = vec![AnalogyQuadruplet::new("V0", "V1", "C1", "C2"), AnalogyQuadruplet::new("V0", "V1", "C0", "C1")];
    let cfg = TrialConfig { samples: 50, replications: 3, ..Default::default() };
    let r = success_rate(&quads, &index, &corpus, &cfg, 0).unwrap();
    assert_eq!(r.n_evaluated, 1);
    assert_eq!(r.skipped.len(), 1);
    assert!(r.skipped[0].reason.contains("C2"), "{}", r.skipped[0].reason);
}

/// Counts 5-phone windows by direct enumeration.
fn brute_window_count(corpus: &Corpus, key: &str, k: i32) -> usize {
    let mut n = 0;
    for u in corpus.utterances() {
        let len = u.segments.len() as i32;
        for c in 2..len - 2 {
            if u.segments[(c + k) as usize].phone == key {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn contextual_index_counts_match_enumeration() {
    let (t, m) = toy();
    let s = small_oracle(0.05, 4, 40);
    let inv = t.phones().to_vec();
    for k in -2..=2 {
        let index = InstanceIndex::build(&s.corpus, None, &t, &m, &inv, IndexMode::Contextual(k)).unwrap();
        for p in &inv {
            assert_eq!(index.count(p), brute_window_count(&s.corpus, p, k), "{p} at {k}");
        }
        let sweep = InstanceIndex::build(&s.corpus, None, &t, &m, &inv, IndexMode::Sweep(k)).unwrap();
        for p in &inv {
            assert_eq!(sweep.count(p), brute_window_count(&s.corpus, p, 0));
        }
    }
    assert!(InstanceIndex::build(&s.corpus, None, &t, &m, &inv, IndexMode::Contextual(3)).is_err());
}

#[test]
fn one_bin_sweep_equals_random_contextual_rate() {
    let (t, m) = toy();
    let s = small_oracle(0.05, 6, 60);
    let inv = t.phones().to_vec();
    let quads: Vec<_> = enumerate_quadruplets(&inv, &t).unwrap().into_iter().take(12).collect();
    let cfg = TrialConfig { samples: 100, replications: 3, seed: 21, pooling: PoolingKind::Random, ..Default::default() };
    let sweep = positional_window_sweep(&s.corpus, None, &t, &m, &inv, &quads, &cfg, 0, &[-1, 0, 1], 1).unwrap();
    for j in [-1, 0, 1] {
        let index = InstanceIndex::build(&s.corpus, None, &t, &m, &inv, IndexMode::Sweep(j)).unwrap();
        let direct = success_rate(&quads, &index, &s.corpus, &cfg, 0).unwrap();
        assert_eq!(sweep.cell(j, 0).unwrap().summary, direct.summary, "offset {j}");
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let (t, m) = toy();
    let s = small_oracle(0.05, 8, 60);
    let inv = t.phones().to_vec();
    let quads: Vec<_> = enumerate_quadruplets(&inv, &t).unwrap().into_iter().take(20).collect();
    let index = InstanceIndex::build(&s.corpus, None, &t, &m, &inv, IndexMode::Contextual(1)).unwrap();
    let cfg = TrialConfig { samples: 80, replications: 4, seed: 2, pooling: PoolingKind::Center, ..Default::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&success_rate(&quads, &index, &s.corpus, &cfg, 0).unwrap()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn scaling_features_keeps_every_flag() {
    let (t, m) = toy();
    let s = small_oracle(0.05, 10, 60);
    let inv = t.phones().to_vec();
    let quads: Vec<_> = enumerate_quadruplets(&inv, &t).unwrap().into_iter().take(20).collect();
    let cfg = TrialConfig { samples: 80, replications: 3, seed: 4, ..Default::default() };
    let big = s.corpus.scaled(3.0);
    let rate = |c: &Corpus| {
        let index = InstanceIndex::build(c, None, &t, &m, &inv, IndexMode::Standard).unwrap();
        success_rate(&quads, &index, c, &cfg, 0).unwrap()
    };
    let (r1, r3) = (rate(&s.corpus), rate(&big));
    for (x, y) in r1.quadruplets.iter().zip(&r3.quadruplets) {
        assert_eq!(x.success, y.success);
        for (p, q) in x.analogy_sim.iter().zip(&y.analogy_sim) {
            assert!((p - q).abs() < 1e-6);
        }
    }
    assert_eq!(r1.summary.unwrap().per_replication, r3.summary.unwrap().per_replication);
}

#[test]
fn exact_composition_gives_unit_similarity() {
    let (t, m) = toy();
    let cfg = SynthConfig {
        noise_sigma: 0.0,
        position_weights: [0.0, 0.0, 1.0, 0.0, 0.0],
        n_utterances: 80,
        seed: 12,
        ..Default::default()
    };
    let s = generate(&cfg, &t).unwrap();
    let inv = t.phones().to_vec();
    let quads: Vec<_> = enumerate_quadruplets(&inv, &t).unwrap().into_iter().take(10).collect();
    let index = InstanceIndex::build(&s.corpus, None, &t, &m, &inv, IndexMode::Standard).unwrap();
    let tc = TrialConfig { samples: 20, replications: 2, ..Default::default() };
    let engine = AnalogyEngine::new(&s.corpus, &index, 0, tc).unwrap();
    for q in &quads {
        let sim = engine.analogy_similarity(q, 0).unwrap();
        assert!((sim - 1.0).abs() < 1e-6, "{q}: {sim}");
    }
}

#[test]
fn bin_filter_requires_random_pooling() {
    let cfg = TrialConfig {
        bin: Some(phonoscope_core::analogy::BinFilter { bins: 3, bin: 0 }),
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
    let ok = TrialConfig { pooling: PoolingKind::Random, ..cfg };
    ok.validate().unwrap();
}
