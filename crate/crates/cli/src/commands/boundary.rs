//! `boundary` and `trace`.

use clap::Args;
use log::warn;
use phonoscope_core::boundary::{
    boundary_similarity_curves, collect_boundary_windows, frame_trace, BoundaryKind, CrossingReport, BOUNDARY_INDEX,
    WINDOW_LEN,
};
use phonoscope_core::svg::{heatmap, line_plot, Series};
use phonoscope_core::PoolingKind;
use serde::Serialize;
use serde_json::json;

use crate::args::{split_arg, Common, CorpusArgs, VectorArgs};
use crate::commands::vectors::{check_positions, extract, vector_config};
use crate::error::{CliError, CliResult};
use crate::report::{num, Run};

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub vectors: VectorArgs,
    /// Split the boundary windows are taken from; `all` for every utterance.
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub vectors: VectorArgs,
    /// Utterance to trace.
    #[arg(long)]
    pub utterance: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub positions: Vec<i32>,
}

#[derive(Serialize)]
struct Absent {
    layer: u32,
    feature: String,
    kind: BoundaryKind,
    reason: String,
}

const KINDS: [BoundaryKind; 2] = [BoundaryKind::Onset, BoundaryKind::Offset];

pub fn run_boundary(a: &BoundaryArgs) -> CliResult<()> {
    let loaded = a.corpus.load()?;
    let positions = [-1, 0, 1];
    let config = json!({
        "corpus": loaded.sources,
        "vectors": vector_config(&a.vectors, &positions, PoolingKind::Center),
        "split": a.split,
    });
    let run = Run::start("boundary", &config, a.common.seed, loaded.corpus.manifest_sha256().map(Into::into), &a.common.out)?;
    let sets = extract(&loaded, &a.vectors, &positions, PoolingKind::Center, a.common.seed)?;
    let features = a.vectors.features();
    let mut windows = Vec::new();
    for f in &features {
        for kind in KINDS {
            let w = collect_boundary_windows(&loaded.corpus, split_arg(&a.split), &loaded.table, &loaded.mapping, f, kind)?;
            windows.push((f, kind, w));
        }
    }

    let mut reports: Vec<CrossingReport> = Vec::new();
    let mut absent = Vec::new();
    for set in &sets {
        for (f, kind, w) in &windows {
            match boundary_similarity_curves(&loaded.corpus, set.layer, w, set, &f.name, *kind) {
                Ok(r) => reports.push(r),
                Err(e) => {
                    warn!("layer {}, {} {}: {e}", set.layer, f.name, kind.as_str());
                    absent.push(Absent { layer: set.layer, feature: f.name.clone(), kind: *kind, reason: e.to_string() });
                }
            }
        }
    }

    let mut crossing_rows = Vec::new();
    let mut curve_rows = Vec::new();
    for r in &reports {
        crossing_rows.push(vec![
            r.layer.to_string(),
            r.feature.clone(),
            r.kind.as_str().into(),
            num(r.crossing),
            r.sign_changes.to_string(),
            r.n_boundaries.to_string(),
            String::new(),
        ]);
        for t in 0..WINDOW_LEN {
            curve_rows.push(vec![
                r.layer.to_string(),
                r.feature.clone(),
                r.kind.as_str().into(),
                t.to_string(),
                r.curve_a[t].to_string(),
                r.curve_b[t].to_string(),
            ]);
        }
    }
    for x in &absent {
        crossing_rows.push(vec![
            x.layer.to_string(),
            x.feature.clone(),
            x.kind.as_str().into(),
            String::new(),
            String::new(),
            String::new(),
            x.reason.clone(),
        ]);
    }
    run.csv(
        "boundary_crossings.csv",
        &["layer", "feature", "kind", "crossing", "sign_changes", "n_boundaries", "absent_reason"],
        &crossing_rows,
    )?;
    run.csv("boundary_curves.csv", &["layer", "feature", "kind", "frame", "curve_a", "curve_b"], &curve_rows)?;

    let labels: Vec<String> = (0..WINDOW_LEN).map(|t| format!("{:+}", t as i64 - BOUNDARY_INDEX as i64)).collect();
    for r in &reports {
        let (pa, pb) = r.kind.curve_positions();
        let series = vec![
            Series { name: format!("{}@{pa:+}", r.feature), values: r.curve_a.iter().map(|&v| Some(v)).collect() },
            Series { name: format!("{}@{pb:+}", r.feature), values: r.curve_b.iter().map(|&v| Some(v)).collect() },
        ];
        let title = format!("{} {}, layer {} ({} boundaries)", r.feature, r.kind.as_str(), r.layer, r.n_boundaries);
        run.svg(
            &format!("boundary_L{}_{}_{}.svg", r.layer, r.feature, r.kind.as_str()),
            &line_plot(&title, &labels, &series, "mean cosine"),
        )?;
    }
    run.json("boundary.json", &json!({ "crossings": reports, "absent": absent }))
}

pub fn run_trace(a: &TraceArgs) -> CliResult<()> {
    check_positions(&a.positions)?;
    let loaded = a.corpus.load()?;
    let ui = loaded
        .corpus
        .utterance_index(&a.utterance)
        .ok_or_else(|| CliError::input(format!("utterance {} not in corpus", a.utterance)))?;
    let config = json!({
        "corpus": loaded.sources,
        "vectors": vector_config(&a.vectors, &a.positions, PoolingKind::Center),
        "utterance": a.utterance,
    });
    let run = Run::start("trace", &config, a.common.seed, loaded.corpus.manifest_sha256().map(Into::into), &a.common.out)?;
    let sets = extract(&loaded, &a.vectors, &a.positions, PoolingKind::Center, a.common.seed)?;
    let u = &loaded.corpus.utterances()[ui];
    let features = a.vectors.features();
    let mut traces = Vec::new();
    for set in &sets {
        let tr = frame_trace(u, set.layer, set, &features, &a.positions)?;
        let phone_at = |t: usize| {
            u.segments.iter().find(|s| s.start_frame <= t && t < s.end_frame).map(|s| s.phone.clone()).unwrap_or_default()
        };
        let mut header = vec!["frame", "phone"];
        header.extend(tr.labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = (0..u.frames())
            .map(|t| {
                let mut r = vec![t.to_string(), phone_at(t)];
                r.extend(tr.values.iter().map(|row| row[t].to_string()));
                r
            })
            .collect();
        run.csv(&format!("trace_L{}.csv", set.layer), &header, &rows)?;
        let cols: Vec<String> = (0..u.frames())
            .map(|t| match u.segments.iter().find(|s| s.start_frame == t) {
                Some(s) => format!("{t} {}", s.phone),
                None => t.to_string(),
            })
            .collect();
        run.svg(
            &format!("trace_L{}.svg", set.layer),
            &heatmap(&format!("{} layer {}", u.utterance_id, set.layer), &tr.labels, &cols, &tr.values),
        )?;
        traces.push(tr);
    }
    run.json("trace.json", &traces)
}
