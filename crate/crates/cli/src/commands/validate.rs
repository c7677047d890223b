//! `validate`: loads every file of a corpus and reports what is wrong.

use clap::Args;
use phonoscope_core::corpus::{load_corpus, LoadOptions};
use phonoscope_core::phonology::filter_inventory;
use serde_json::json;

use crate::args::{Common, CorpusArgs};
use crate::error::{CliError, CliResult};
use crate::report::Run;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = phonoscope_core::phonology::DEFAULT_MIN_COUNT)]
    pub min_count: usize,
}

pub fn run(a: &ValidateArgs) -> CliResult<()> {
    let corpus = load_corpus(&a.corpus.manifest, LoadOptions { skip_invalid: true })?;
    let problems: Vec<String> = corpus.rejected().iter().map(|r| r.error.to_string()).collect();
    for p in &problems {
        eprintln!("invalid: {p}");
    }
    let config = json!({ "manifest": a.corpus.manifest, "min_count": a.min_count });
    let run = Run::start("validate", &config, a.common.seed, corpus.manifest_sha256().map(Into::into), &a.common.out)?;
    if !problems.is_empty() {
        run.json("validation.json", &json!({ "valid": false, "problems": problems }))?;
        return Err(CliError::input(format!("{} of {} utterances invalid", problems.len(), problems.len() + corpus.utterances().len())));
    }

    let loaded = a.corpus.load()?;
    let inventory = filter_inventory(&loaded.corpus, None, &loaded.table, &loaded.mapping, a.min_count);
    let frames: usize = loaded.corpus.utterances().iter().map(|u| u.frames()).sum();
    let splits: std::collections::BTreeMap<&str, usize> =
        loaded.corpus.utterances().iter().fold(Default::default(), |mut m, u| {
            *m.entry(u.split_tag.as_str()).or_default() += 1;
            m
        });
    println!(
        "ok: {} utterances, {} frames, layers {:?}, {} inventory phones, {} unmapped labels",
        loaded.corpus.utterances().len(),
        frames,
        loaded.corpus.layer_ids,
        inventory.phones.len(),
        inventory.unmapped.len()
    );
    run.json(
        "validation.json",
        &json!({
            "valid": true,
            "corpus_name": loaded.corpus.name,
            "utterances": loaded.corpus.utterances().len(),
            "frames": frames,
            "layers": loaded.corpus.dim_per_layer,
            "splits": splits,
            "frame_hop_info": loaded.corpus.frame_hop_info,
            "inventory": inventory,
            "sources": loaded.sources,
        }),
    )
}
