//! `analogy`, `context-analogy` and `window-sweep`.

use clap::Args;
use log::info;
use phonoscope_core::analogy::{positional_window_sweep, success_rate, IndexMode, InstanceIndex, SuccessRateReport};
use phonoscope_core::phonology::{enumerate_quadruplets, filter_inventory, AnalogyQuadruplet, Inventory};
use phonoscope_core::svg::{line_plot, Series};
use phonoscope_core::PoolingKind;
use serde::Serialize;
use serde_json::json;

use crate::args::{Common, CorpusArgs, Loaded, TrialArgs};
use crate::error::{CliError, CliResult};
use crate::report::{num, Run};

#[derive(Debug, Args)]
pub struct AnalogyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long, default_value_t = PoolingKind::Mean)]
    pub pooling: PoolingKind,
}

#[derive(Debug, Args)]
pub struct ContextArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub trial: TrialArgs,
    /// Offsets of the phone each window is keyed by.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,0,1,2")]
    pub positions: Vec<i32>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub trial: TrialArgs,
    /// Offsets of the segment the frame is drawn from.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,0,1,2")]
    pub offsets: Vec<i32>,
    /// Normalized-position bins per segment.
    #[arg(long, default_value_t = 4)]
    pub bins: usize,
}

struct Prepared {
    loaded: Loaded,
    inventory: Inventory,
    quadruplets: Vec<AnalogyQuadruplet>,
}

fn prepare(corpus: &CorpusArgs, trial: &TrialArgs) -> CliResult<Prepared> {
    let loaded = corpus.load()?;
    let split = trial.split.as_deref();
    let inventory = filter_inventory(&loaded.corpus, split, &loaded.table, &loaded.mapping, trial.min_count);
    let quadruplets = enumerate_quadruplets(&inventory.phone_names(), &loaded.table)?;
    if quadruplets.is_empty() {
        return Err(CliError::input(format!(
            "no analogy quadruplets among {} inventory phones (min count {})",
            inventory.phones.len(),
            trial.min_count
        )));
    }
    info!("{} phones, {} quadruplets", inventory.phones.len(), quadruplets.len());
    Ok(Prepared { loaded, inventory, quadruplets })
}

fn trial_config(trial: &TrialArgs) -> serde_json::Value {
    json!({
        "samples": trial.samples,
        "replications": trial.replications,
        "ci_level": trial.ci_level,
        "split": trial.split,
        "min_count": trial.min_count,
    })
}

fn summary_row(r: &SuccessRateReport) -> [String; 3] {
    let s = r.summary.as_ref();
    [num(s.map(|s| s.mean)), num(s.map(|s| s.ci_low)), num(s.map(|s| s.ci_high))]
}

fn quadruplet_rows(reports: &[(Option<i32>, &SuccessRateReport)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (pos, r) in reports {
        for q in &r.quadruplets {
            for rep in 0..q.success.len() {
                rows.push(vec![
                    r.layer.to_string(),
                    pos.map(|p| p.to_string()).unwrap_or_default(),
                    q.quadruplet.a.clone(),
                    q.quadruplet.b.clone(),
                    q.quadruplet.c.clone(),
                    q.quadruplet.d.clone(),
                    rep.to_string(),
                    q.analogy_sim[rep].to_string(),
                    q.upper_sim[rep].to_string(),
                    q.lower_sim[rep].to_string(),
                    q.success[rep].to_string(),
                ]);
            }
        }
    }
    rows
}

const QUAD_HEADER: [&str; 11] =
    ["layer", "position", "a", "b", "c", "d", "replication", "analogy_sim", "upper_sim", "lower_sim", "success"];

#[derive(Serialize)]
struct AnalogyReport<'a> {
    inventory: &'a Inventory,
    n_quadruplets: usize,
    layers: Vec<SuccessRateReport>,
}

pub fn run_analogy(a: &AnalogyArgs) -> CliResult<()> {
    let p = prepare(&a.corpus, &a.trial)?;
    let cfg = a.trial.trial(a.pooling, a.common.seed);
    cfg.validate()?;
    let config = json!({
        "corpus": p.loaded.sources,
        "trial": trial_config(&a.trial),
        "pooling": a.pooling,
    });
    let run = Run::start("analogy", &config, a.common.seed, p.loaded.corpus.manifest_sha256().map(Into::into), &a.common.out)?;
    let c = &p.loaded;
    let index = InstanceIndex::build(
        &c.corpus,
        a.trial.split.as_deref(),
        &c.table,
        &c.mapping,
        &p.inventory.phone_names(),
        IndexMode::Standard,
    )?;
    let mut reports = Vec::new();
    for &layer in &c.layers {
        let r = success_rate(&p.quadruplets, &index, &c.corpus, &cfg, layer)?;
        info!("layer {layer}: rate {:?}", r.summary.as_ref().map(|s| s.mean));
        reports.push(r);
    }

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let [m, lo, hi] = summary_row(r);
            vec![
                r.layer.to_string(),
                r.config.pooling.to_string(),
                m,
                lo,
                hi,
                r.n_quadruplets.to_string(),
                r.n_evaluated.to_string(),
                r.skipped.len().to_string(),
            ]
        })
        .collect();
    run.csv(
        "analogy.csv",
        &["layer", "pooling", "rate", "ci_low", "ci_high", "n_quadruplets", "n_evaluated", "n_skipped"],
        &rows,
    )?;
    let detail: Vec<_> = reports.iter().map(|r| (None, r)).collect();
    run.csv("analogy_quadruplets.csv", &QUAD_HEADER, &quadruplet_rows(&detail))?;
    let labels: Vec<String> = reports.iter().map(|r| r.layer.to_string()).collect();
    let series = rate_series("rate", &reports);
    run.svg("analogy.svg", &line_plot("Analogy success rate by layer", &labels, &series, "success rate"))?;
    run.json("analogy.json", &AnalogyReport { inventory: &p.inventory, n_quadruplets: p.quadruplets.len(), layers: reports })
}

fn rate_series(name: &str, reports: &[SuccessRateReport]) -> Vec<Series> {
    let get = |f: fn(&phonoscope_core::stats::RateSummary) -> f64| -> Vec<Option<f64>> {
        reports.iter().map(|r| r.summary.as_ref().map(f)).collect()
    };
    vec![
        Series { name: name.into(), values: get(|s| s.mean) },
        Series { name: "ci low".into(), values: get(|s| s.ci_low) },
        Series { name: "ci high".into(), values: get(|s| s.ci_high) },
    ]
}

#[derive(Serialize)]
struct ContextEntry {
    position: i32,
    report: SuccessRateReport,
}

#[derive(Serialize)]
struct ContextReport<'a> {
    inventory: &'a Inventory,
    n_quadruplets: usize,
    results: Vec<ContextEntry>,
}

fn check_offsets(offsets: &[i32], what: &str) -> CliResult<()> {
    if offsets.is_empty() {
        return Err(CliError::input(format!("no {what} given")));
    }
    if let Some(k) = offsets.iter().find(|k| !(-2..=2).contains(*k)) {
        return Err(CliError::input(format!("{what} {k} outside -2..=2")));
    }
    Ok(())
}

pub fn run_context(a: &ContextArgs) -> CliResult<()> {
    check_offsets(&a.positions, "position")?;
    let p = prepare(&a.corpus, &a.trial)?;
    let cfg = a.trial.trial(PoolingKind::Center, a.common.seed);
    cfg.validate()?;
    let config = json!({
        "corpus": p.loaded.sources,
        "trial": trial_config(&a.trial),
        "positions": a.positions,
    });
    let run =
        Run::start("context-analogy", &config, a.common.seed, p.loaded.corpus.manifest_sha256().map(Into::into), &a.common.out)?;
    let c = &p.loaded;
    let names = p.inventory.phone_names();
    let mut results = Vec::new();
    for &k in &a.positions {
        let index =
            InstanceIndex::build(&c.corpus, a.trial.split.as_deref(), &c.table, &c.mapping, &names, IndexMode::Contextual(k))?;
        for &layer in &c.layers {
            let report = success_rate(&p.quadruplets, &index, &c.corpus, &cfg, layer)?;
            info!("position {k:+}, layer {layer}: rate {:?}", report.summary.as_ref().map(|s| s.mean));
            results.push(ContextEntry { position: k, report });
        }
    }
    results.sort_by_key(|e| (e.report.layer, e.position));

    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|e| {
            let [m, lo, hi] = summary_row(&e.report);
            vec![
                e.report.layer.to_string(),
                e.position.to_string(),
                m,
                lo,
                hi,
                e.report.n_quadruplets.to_string(),
                e.report.n_evaluated.to_string(),
                e.report.skipped.len().to_string(),
            ]
        })
        .collect();
    run.csv(
        "context_analogy.csv",
        &["layer", "position", "rate", "ci_low", "ci_high", "n_quadruplets", "n_evaluated", "n_skipped"],
        &rows,
    )?;
    let detail: Vec<_> = results.iter().map(|e| (Some(e.position), &e.report)).collect();
    run.csv("context_analogy_quadruplets.csv", &QUAD_HEADER, &quadruplet_rows(&detail))?;
    let labels: Vec<String> = c.layers.iter().map(|l| l.to_string()).collect();
    let series: Vec<Series> = a
        .positions
        .iter()
        .map(|&k| Series {
            name: format!("position {k:+}"),
            values: c
                .layers
                .iter()
                .map(|&l| {
                    results
                        .iter()
                        .find(|e| e.position == k && e.report.layer == l)
                        .and_then(|e| e.report.summary.as_ref().map(|s| s.mean))
                })
                .collect(),
        })
        .collect();
    run.svg("context_analogy.svg", &line_plot("Contextual analogy success rate", &labels, &series, "success rate"))?;
    run.json(
        "context_analogy.json",
        &ContextReport { inventory: &p.inventory, n_quadruplets: p.quadruplets.len(), results },
    )
}

pub fn run_sweep(a: &SweepArgs) -> CliResult<()> {
    check_offsets(&a.offsets, "offset")?;
    if a.bins == 0 {
        return Err(CliError::input("--bins must be at least 1"));
    }
    let p = prepare(&a.corpus, &a.trial)?;
    let cfg = a.trial.trial(PoolingKind::Random, a.common.seed);
    cfg.validate()?;
    let config = json!({
        "corpus": p.loaded.sources,
        "trial": trial_config(&a.trial),
        "offsets": a.offsets,
        "bins": a.bins,
    });
    let run =
        Run::start("window-sweep", &config, a.common.seed, p.loaded.corpus.manifest_sha256().map(Into::into), &a.common.out)?;
    let c = &p.loaded;
    let names = p.inventory.phone_names();
    let mut reports = Vec::new();
    for &layer in &c.layers {
        let r = positional_window_sweep(
            &c.corpus,
            a.trial.split.as_deref(),
            &c.table,
            &c.mapping,
            &names,
            &p.quadruplets,
            &cfg,
            layer,
            &a.offsets,
            a.bins,
        )?;
        reports.push(r);
    }

    let mut rows = Vec::new();
    for r in &reports {
        for cell in &r.cells {
            let s = cell.summary.as_ref();
            rows.push(vec![
                r.layer.to_string(),
                cell.offset.to_string(),
                cell.bin.to_string(),
                num(s.map(|s| s.mean)),
                num(s.map(|s| s.ci_low)),
                num(s.map(|s| s.ci_high)),
                cell.n_evaluated.to_string(),
                cell.n_skipped.to_string(),
                cell.absent_reason.clone().unwrap_or_default(),
            ]);
        }
    }
    run.csv(
        "window_sweep.csv",
        &["layer", "offset", "bin", "rate", "ci_low", "ci_high", "n_evaluated", "n_skipped", "absent_reason"],
        &rows,
    )?;
    let labels: Vec<String> =
        a.offsets.iter().flat_map(|&j| (0..a.bins).map(move |b| format!("{j:+}:{b}"))).collect();
    let series: Vec<Series> = reports
        .iter()
        .map(|r| Series {
            name: format!("layer {}", r.layer),
            values: r.cells.iter().map(|c| c.summary.as_ref().map(|s| s.mean)).collect(),
        })
        .collect();
    run.svg("window_sweep.svg", &line_plot("Success rate by frame position", &labels, &series, "success rate"))?;
    run.json("window_sweep.json", &json!({ "inventory": p.inventory, "n_quadruplets": p.quadruplets.len(), "layers": reports }))
}
