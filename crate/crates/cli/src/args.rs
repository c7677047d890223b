//! Argument groups shared by the subcommands, and their resolution against
//! a loaded corpus.

use std::path::{Path, PathBuf};

use clap::Args;
use log::{info, warn};
use phonoscope_core::analogy::TrialConfig;
use phonoscope_core::corpus::{load_corpus, Corpus, LoadOptions};
use phonoscope_core::phonology::{PhoneMapping, PhonoFeatureTable};
use phonoscope_core::phonovec::FeatureSpec;
use phonoscope_core::PoolingKind;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Table file looked up next to the manifest when `--features-table` is not given.
pub const TABLE_FILE: &str = "features.csv";
/// Mapping file looked up next to the manifest when `--phone-map` is not given.
pub const MAP_FILE: &str = "phone_map.tsv";

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "phonoscope_out")]
    pub out: PathBuf,
    /// Seed for every random stream.
    #[arg(long, env = "PHONOSCOPE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Layers to analyse, comma-separated; all corpus layers when omitted.
    #[arg(long = "layers", alias = "layer", value_delimiter = ',')]
    pub layers: Vec<u32>,
    /// Feature table: `panphon`, `toy` or a CSV path. Defaults to
    /// `features.csv` beside the manifest, else `panphon`.
    #[arg(long)]
    pub features_table: Option<String>,
    /// Label mapping: `timit`, `identity` or a TSV path. Defaults to
    /// `phone_map.tsv` beside the manifest, else `timit`.
    #[arg(long)]
    pub phone_map: Option<String>,
    /// Skip invalid utterances instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrialArgs {
    /// Draws per similarity estimate.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.99)]
    pub ci_level: f64,
    /// Split tag to analyse; all utterances when omitted.
    #[arg(long)]
    pub split: Option<String>,
    /// Minimum occurrences for a phone to enter the inventory.
    #[arg(long, default_value_t = phonoscope_core::phonology::DEFAULT_MIN_COUNT)]
    pub min_count: usize,
}

impl TrialArgs {
    pub fn trial(&self, pooling: PoolingKind, seed: u64) -> TrialConfig {
        TrialConfig {
            samples: self.samples,
            replications: self.replications,
            ci_level: self.ci_level,
            pooling,
            seed,
            bin: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VectorArgs {
    /// Split the vectors are fitted on; `all` for every utterance.
    #[arg(long, default_value = "train")]
    pub fit_split: String,
    /// Features, comma-separated; `name=column[:vowel|:consonant]` adds a
    /// custom one. Defaults to the eight analysis features.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, default_value_t = phonoscope_core::phonovec::DEFAULT_MIN_SAMPLES)]
    pub min_samples: usize,
}

impl VectorArgs {
    pub fn split(&self) -> Option<&str> {
        split_arg(&self.fit_split)
    }

    pub fn features(&self) -> Vec<FeatureSpec> {
        if self.features.is_empty() {
            phonoscope_core::phonovec::analysis_features()
        } else {
            self.features.iter().map(|f| FeatureSpec::parse(f)).collect()
        }
    }
}

pub fn split_arg(s: &str) -> Option<&str> {
    (s != "all").then_some(s)
}

/// Everything loaded from the corpus arguments.
pub struct Loaded {
    pub corpus: Corpus,
    pub table: PhonoFeatureTable,
    pub mapping: PhoneMapping,
    pub layers: Vec<u32>,
    pub sources: Sources,
}

/// Which table and mapping were used, for `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Sources {
    pub manifest: PathBuf,
    pub features_table: String,
    pub phone_map: String,
    pub layers: Vec<u32>,
    pub skip_invalid: bool,
}

fn beside(manifest: &Path, name: &str) -> Option<PathBuf> {
    let p = manifest.parent().unwrap_or(Path::new(".")).join(name);
    p.is_file().then_some(p)
}

fn load_table(spec: &str) -> CliResult<PhonoFeatureTable> {
    Ok(match spec {
        "panphon" => PhonoFeatureTable::panphon(),
        "toy" => PhonoFeatureTable::toy(),
        path => PhonoFeatureTable::load(Path::new(path))?,
    })
}

fn load_mapping(spec: &str, table: &PhonoFeatureTable) -> CliResult<PhoneMapping> {
    Ok(match spec {
        "timit" => PhoneMapping::timit(),
        "identity" => PhoneMapping::identity(table),
        path => PhoneMapping::load(Path::new(path))?,
    })
}

impl CorpusArgs {
    pub fn load(&self) -> CliResult<Loaded> {
        let corpus = load_corpus(&self.manifest, LoadOptions { skip_invalid: self.skip_invalid })?;
        let table_spec = match &self.features_table {
            Some(s) => s.clone(),
            None => beside(&self.manifest, TABLE_FILE).map_or("panphon".into(), |p| p.display().to_string()),
        };
        let map_spec = match &self.phone_map {
            Some(s) => s.clone(),
            None => beside(&self.manifest, MAP_FILE).map_or("timit".into(), |p| p.display().to_string()),
        };
        let table = load_table(&table_spec)?;
        let mapping = load_mapping(&map_spec, &table)?;
        mapping.validate(&table)?;
        info!("feature table {table_spec}, phone map {map_spec}");

        let layers = if self.layers.is_empty() { corpus.layer_ids.clone() } else { self.layers.clone() };
        if let Some(l) = layers.iter().find(|l| !corpus.layer_ids.contains(l)) {
            return Err(CliError::input(format!("layer {l} is not in the corpus (has {:?})", corpus.layer_ids)));
        }
        if !corpus.rejected().is_empty() {
            warn!("{} utterances skipped as invalid", corpus.rejected().len());
        }
        let sources = Sources {
            manifest: self.manifest.clone(),
            features_table: table_spec,
            phone_map: map_spec,
            layers: layers.clone(),
            skip_invalid: self.skip_invalid,
        };
        Ok(Loaded { corpus, table, mapping, layers, sources })
    }
}
