use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tnshap::attribute::{Evaluation, ExplainOptions, Explainer, ProbeMode, Subsets};
use tnshap::io::write_attributions_csv;

use crate::commands::{load, require_path};
use crate::instances::read_instances;
use crate::manifest::{write_data, RunManifest};
use crate::Outcome;

#[derive(Debug, Args, Serialize)]
pub struct ExplainArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// CSV with header f1..fn.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<PathBuf>,
    /// Interaction order k (1 = Shapley values).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// ie (inclusion-exclusion) or st (signed toggle); default ie for k = 1, st otherwise.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// direct or shared-environments.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    pub order: Option<usize>,
    pub mode: Option<String>,
    pub evaluation: Evaluation,
}

pub fn run(name: &str, cfg: ExplainConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::new(name, cfg.seed, &cfg)?;
    let model_path = require_path(&cfg.model, "model")?;
    let inst_path = require_path(&cfg.instances, "instances")?;
    manifest.input(model_path);
    manifest.input(inst_path);
    let (model, lifts) = manifest.timed("load", || load(model_path))?;
    let n = model.n();
    let instances = manifest.timed("load", || read_instances(inst_path, n))?;
    let k = cfg.order.unwrap_or(1);
    if k == 0 || k > n {
        bail!("order {k} is out of range for {n} features");
    }
    let mode = match &cfg.mode {
        Some(m) => m.parse::<ProbeMode>()?,
        None => ProbeMode::default_for_order(k),
    };
    let options = ExplainOptions::for_order(k).with_mode(mode).with_evaluation(cfg.evaluation);
    let explainer = Explainer::new(n, k)?;
    let sets = manifest.timed("attribute", || {
        explainer
            .explain_batch(&model, &lifts, &instances, &Subsets::All, options)
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| anyhow::anyhow!("instance {}: {e}", i + 1)))
            .collect::<Result<Vec<_>>>()
    })?;
    let forwards: u64 = sets.iter().map(|s| s.forwards_used).sum();
    manifest.forwards("attribution", forwards);
    let mut buf = Vec::new();
    write_attributions_csv(&mut buf, sets.iter().enumerate().map(|(i, s)| (i + 1, s)))?;
    manifest.timed("write", || write_data(cfg.out.as_deref(), &buf))?;
    if let Some(p) = &cfg.out {
        manifest.output(p);
    }
    manifest.emit(cfg.out.as_deref())?;
    Ok(Outcome::Success)
}
