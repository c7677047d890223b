//! `synth`: writes a synthetic oracle corpus.

use std::fs;
use std::path::Path;

use clap::Args;
use phonoscope_core::phonology::{PhonoFeatureTable, TOY_TABLE};
use phonoscope_core::synth::{generate_synthetic_corpus, SynthConfig};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::args::{Common, MAP_FILE, TABLE_FILE};
use crate::error::{CliError, CliResult};
use crate::report::Run;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 500)]
    pub utterances: usize,
    #[arg(long, default_value_t = 10)]
    pub min_phones: usize,
    #[arg(long, default_value_t = 20)]
    pub max_phones: usize,
    #[arg(long, default_value_t = 3)]
    pub min_frames: usize,
    #[arg(long, default_value_t = 8)]
    pub max_frames: usize,
    /// Weights of positions -2..=2.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,0.5,0.25")]
    pub weights: Vec<f64>,
    /// Standard deviation of the isotropic frame noise.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Layers to generate; they share the planted basis, noise differs.
    #[arg(long, default_value_t = 1)]
    pub n_layers: usize,
    /// Feature table CSV with the eight analysis columns; the toy inventory
    /// when omitted.
    #[arg(long)]
    pub features_table: Option<std::path::PathBuf>,
}

pub fn run(a: &SynthArgs) -> CliResult<()> {
    let weights: [f64; 5] = a
        .weights
        .as_slice()
        .try_into()
        .map_err(|_| CliError::input(format!("--weights needs 5 values, got {}", a.weights.len())))?;
    let table_text = match &a.features_table {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::input(format!("cannot read {}: {e}", p.display())))?,
        None => TOY_TABLE.to_string(),
    };
    let table = PhonoFeatureTable::parse(&table_text)?;
    let cfg = SynthConfig {
        dim: a.dim,
        n_utterances: a.utterances,
        phones_per_utterance: (a.min_phones, a.max_phones),
        frames_per_phone: (a.min_frames, a.max_frames),
        position_weights: weights,
        noise_sigma: a.sigma,
        n_layers: a.n_layers,
        seed: a.common.seed,
    };
    let out = &a.common.out;
    let (manifest, _) = generate_synthetic_corpus(&cfg, &table, out)?;
    write(&out.join(TABLE_FILE), &table_text)?;
    let map: String = table.phones().iter().map(|p| format!("{p}\t{p}\n")).collect();
    write(&out.join(MAP_FILE), &map)?;
    let bytes = fs::read(&manifest).map_err(|e| CliError::Internal(format!("{}: {e}", manifest.display())))?;
    let table_hash = hex::encode(Sha256::digest(table_text.as_bytes()));
    Run::start(
        "synth",
        &json!({ "synth": cfg, "features_table_sha256": table_hash }),
        a.common.seed,
        Some(hex::encode(Sha256::digest(&bytes))),
        out,
    )?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}
