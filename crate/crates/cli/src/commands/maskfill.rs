//! `maskfill`: whitened similarity between original and masked-input frames.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use phonoscope_core::svg::{line_plot, Series};
use phonoscope_core::whitening::{fit_on_originals, load_pairs, mask_filling_similarity, DEFAULT_FIT_UTTERANCES};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::args::Common;
use crate::error::{CliError, CliResult};
use crate::report::Run;

#[derive(Debug, Args)]
pub struct MaskfillArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pair manifest (JSON).
    #[arg(long)]
    pub pairs: PathBuf,
    /// Layers, comma-separated; all pair layers when omitted.
    #[arg(long = "layers", alias = "layer", value_delimiter = ',')]
    pub layers: Vec<u32>,
    /// Utterances the whitener is fitted on, sampled from the originals.
    #[arg(long, default_value_t = DEFAULT_FIT_UTTERANCES)]
    pub fit_utterances: usize,
}

pub fn run(a: &MaskfillArgs) -> CliResult<()> {
    let bytes = fs::read(&a.pairs).map_err(|e| CliError::input(format!("cannot read {}: {e}", a.pairs.display())))?;
    let pairs = load_pairs(&a.pairs)?;
    let first = pairs.first().ok_or_else(|| CliError::input("pair manifest lists no pairs"))?;
    let layers: Vec<u32> = if a.layers.is_empty() { first.layers.keys().copied().collect() } else { a.layers.clone() };
    if a.fit_utterances == 0 {
        return Err(CliError::input("--fit-utterances must be at least 1"));
    }
    let config = json!({
        "pairs": a.pairs,
        "layers": layers,
        "fit_utterances": a.fit_utterances,
    });
    let run = Run::start("maskfill", &config, a.common.seed, Some(hex::encode(Sha256::digest(&bytes))), &a.common.out)?;
    let whiteners = fit_on_originals(&pairs, &layers, a.fit_utterances, a.common.seed)?;
    let results = mask_filling_similarity(&pairs, &whiteners)?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.layer.to_string(), r.mean.to_string(), r.std.to_string(), r.n_frames.to_string()])
        .collect();
    run.csv("maskfill.csv", &["layer", "mean", "std", "n_frames"], &rows)?;
    let labels: Vec<String> = results.iter().map(|r| r.layer.to_string()).collect();
    let series = vec![Series { name: "mean cosine".into(), values: results.iter().map(|r| Some(r.mean)).collect() }];
    run.svg("maskfill.svg", &line_plot("Whitened mask-filling similarity", &labels, &series, "mean cosine"))?;
    let fits: Vec<_> = whiteners
        .values()
        .map(|w| json!({"layer": w.layer, "epsilon": w.epsilon, "n_frames_fit": w.n_frames_fit}))
        .collect();
    run.json("maskfill.json", &json!({ "n_pairs": pairs.len(), "whiteners": fits, "layers": results }))
}
