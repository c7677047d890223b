//! `phonovec`, `orthogonality` and `norms`.

use clap::Args;
use phonoscope_core::phonovec::{
    cell_label, extract_layers, positional_orthogonality_summary, vector_norm_profile, write_vector_set,
    ExtractOptions, PositionalVectorSet,
};
use phonoscope_core::svg::{heatmap, line_plot, Series};
use phonoscope_core::vector::{cosine, norm};
use phonoscope_core::PoolingKind;
use serde_json::json;

use crate::args::{Common, CorpusArgs, Loaded, VectorArgs};
use crate::error::{CliError, CliResult};
use crate::report::{num, Run};

#[derive(Debug, Args)]
pub struct PhonovecArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub vectors: VectorArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,0,1,2")]
    pub positions: Vec<i32>,
    #[arg(long, default_value_t = PoolingKind::Center)]
    pub pooling: PoolingKind,
}

pub fn check_positions(positions: &[i32]) -> CliResult<()> {
    if positions.is_empty() {
        return Err(CliError::input("no positions given"));
    }
    if let Some(k) = positions.iter().find(|k| !(-2..=2).contains(*k)) {
        return Err(CliError::input(format!("position {k} outside -2..=2")));
    }
    Ok(())
}

pub fn extract(loaded: &Loaded, v: &VectorArgs, positions: &[i32], pooling: PoolingKind, seed: u64) -> CliResult<Vec<PositionalVectorSet>> {
    let opts = ExtractOptions { pooling, min_samples: v.min_samples, seed };
    Ok(extract_layers(
        &loaded.corpus,
        v.split(),
        &loaded.layers,
        &loaded.table,
        &loaded.mapping,
        &v.features(),
        positions,
        &opts,
    )?)
}

pub fn vector_config(v: &VectorArgs, positions: &[i32], pooling: PoolingKind) -> serde_json::Value {
    let features: Vec<_> = v.features().into_iter().map(|f| json!({"name": f.name, "column": f.column, "class": f.class})).collect();
    json!({
        "fit_split": v.fit_split,
        "features": features,
        "min_samples": v.min_samples,
        "positions": positions,
        "pooling": pooling,
    })
}

fn start(name: &str, a: &PhonovecArgs, loaded: &Loaded) -> CliResult<Run> {
    let config = json!({
        "corpus": loaded.sources,
        "vectors": vector_config(&a.vectors, &a.positions, a.pooling),
    });
    Run::start(name, &config, a.common.seed, loaded.corpus.manifest_sha256().map(Into::into), &a.common.out)
}

/// Cosines between the present cells, position-major.
fn present_matrix(set: &PositionalVectorSet, positions: &[i32]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut cells = Vec::new();
    for &k in positions {
        for f in set.features() {
            if let Some(v) = set.get(&f.name, k).filter(|v| norm(&v.vector) > 0.0) {
                cells.push((cell_label(&f.name, k), &v.vector));
            }
        }
    }
    let values = cells
        .iter()
        .enumerate()
        .map(|(i, (_, a))| {
            cells
                .iter()
                .enumerate()
                .map(|(j, (_, b))| if i == j { 1.0 } else { cosine(a, b).expect("non-zero vectors") })
                .collect()
        })
        .collect();
    (cells.into_iter().map(|(l, _)| l).collect(), values)
}

pub fn run_phonovec(a: &PhonovecArgs) -> CliResult<()> {
    check_positions(&a.positions)?;
    let loaded = a.corpus.load()?;
    let run = start("phonovec", a, &loaded)?;
    let sets = extract(&loaded, &a.vectors, &a.positions, a.pooling, a.common.seed)?;
    let mut cell_rows = Vec::new();
    let mut layers = Vec::new();
    for set in &sets {
        let l = set.layer;
        let path = run.path(&format!("vectors_L{l}.phf"));
        write_vector_set(&path, set).map_err(|e| CliError::write(&path, e))?;
        let (labels, values) = present_matrix(set, &a.positions);
        let mut rows = Vec::new();
        for (label, row) in labels.iter().zip(&values) {
            let mut r = vec![label.clone()];
            r.extend(row.iter().map(|v| v.to_string()));
            rows.push(r);
        }
        let mut header = vec!["cell"];
        header.extend(labels.iter().map(String::as_str));
        run.csv(&format!("similarity_L{l}.csv"), &header, &rows)?;
        run.svg(
            &format!("similarity_L{l}.svg"),
            &heatmap(&format!("Phonological vector similarity, layer {l}"), &labels, &labels, &values),
        )?;
        let mut cells = Vec::new();
        for c in &set.cells {
            let v = c.vector.as_ref();
            cell_rows.push(vec![
                l.to_string(),
                c.feature.name.clone(),
                c.position.to_string(),
                v.is_some().to_string(),
                v.map_or(0, |v| v.n_plus).to_string(),
                v.map_or(0, |v| v.n_minus).to_string(),
                num(v.map(|v| norm(&v.vector))),
                c.absent_reason.clone().unwrap_or_default(),
            ]);
            cells.push(json!({
                "feature": c.feature.name,
                "position": c.position,
                "present": v.is_some(),
                "n_plus": v.map(|v| v.n_plus),
                "n_minus": v.map(|v| v.n_minus),
                "norm": v.map(|v| norm(&v.vector)),
                "absent_reason": c.absent_reason,
            }));
        }
        layers.push(json!({
            "layer": l,
            "vectors_file": format!("vectors_L{l}.phf"),
            "cells": cells,
            "similarity": {"labels": labels, "values": values},
        }));
    }
    run.csv(
        "phonovec_cells.csv",
        &["layer", "feature", "position", "present", "n_plus", "n_minus", "norm", "absent_reason"],
        &cell_rows,
    )?;
    run.json("phonovec.json", &json!({ "layers": layers }))
}

pub fn run_orthogonality(a: &PhonovecArgs) -> CliResult<()> {
    check_positions(&a.positions)?;
    let loaded = a.corpus.load()?;
    let run = start("orthogonality", a, &loaded)?;
    let sets = extract(&loaded, &a.vectors, &a.positions, a.pooling, a.common.seed)?;
    let summaries: Vec<_> = sets.iter().map(|s| positional_orthogonality_summary(s, &a.positions)).collect();
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| vec![s.layer.to_string(), num(s.within), num(s.across), s.n_within.to_string(), s.n_across.to_string()])
        .collect();
    run.csv("orthogonality.csv", &["layer", "within", "across", "n_within", "n_across"], &rows)?;
    let labels: Vec<String> = summaries.iter().map(|s| s.layer.to_string()).collect();
    let series = vec![
        Series { name: "within".into(), values: summaries.iter().map(|s| s.within).collect() },
        Series { name: "across".into(), values: summaries.iter().map(|s| s.across).collect() },
    ];
    run.svg("orthogonality.svg", &line_plot("Mean |cos| within and across positions", &labels, &series, "mean |cos|"))?;
    run.json("orthogonality.json", &summaries)
}

pub fn run_norms(a: &PhonovecArgs) -> CliResult<()> {
    check_positions(&a.positions)?;
    let loaded = a.corpus.load()?;
    let run = start("norms", a, &loaded)?;
    let sets = extract(&loaded, &a.vectors, &a.positions, a.pooling, a.common.seed)?;
    let profiles: Vec<_> = sets.iter().flat_map(|s| vector_norm_profile(s, &a.positions)).collect();
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|e| vec![e.layer.to_string(), e.position.to_string(), num(e.mean_norm), e.n_features.to_string()])
        .collect();
    run.csv("norms.csv", &["layer", "position", "mean_norm", "n_features"], &rows)?;
    let labels: Vec<String> = loaded.layers.iter().map(|l| l.to_string()).collect();
    let series: Vec<Series> = a
        .positions
        .iter()
        .map(|&k| Series {
            name: format!("position {k:+}"),
            values: loaded
                .layers
                .iter()
                .map(|&l| profiles.iter().find(|e| e.layer == l && e.position == k).and_then(|e| e.mean_norm))
                .collect(),
        })
        .collect();
    run.svg("norms.svg", &line_plot("Mean phonological vector norm", &labels, &series, "mean norm"))?;
    run.json("norms.json", &profiles)
}
