use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// JSON manifest describing an on-disk corpus. Relative paths are resolved
/// against the directory containing the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_name: String,
    pub layer_ids: Vec<u32>,
    pub dim_per_layer: BTreeMap<u32, usize>,
    pub utterances: Vec<UtteranceEntry>,
    #[serde(default)]
    pub frame_hop_info: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    pub utterance_id: String,
    pub feature_files: BTreeMap<u32, PathBuf>,
    pub alignment_file: PathBuf,
    pub split_tag: String,
}

impl CorpusManifest {
    pub fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}
