use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tnshap::attribute::{ExplainOptions, Explainer, Subsets};
use tnshap::io::parse_subset;
use tnshap::oracle::{enumerate_game, exact_sii};

use crate::commands::{load, require_path};
use crate::instances::read_instances;
use crate::manifest::{write_data, RunManifest};
use crate::Outcome;

/// Largest feature count `verify` accepts.
pub const MAX_VERIFY_FEATURES: usize = 16;

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<PathBuf>,
    /// Check orders 1..=max-order (capped at n).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    /// Attribution CSV to check instead of recomputing by interpolation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributions: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    pub max_order: usize,
    pub attributions: Option<PathBuf>,
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            out: None,
            model: None,
            instances: None,
            max_order: 3,
            attributions: None,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OrderCheck {
    pub order: usize,
    pub max_abs_diff: f64,
    pub compared: usize,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub instances: usize,
    pub tolerance: f64,
    pub orders: Vec<OrderCheck>,
    pub pass: bool,
}

type Key = (usize, usize, Vec<usize>);

fn read_attributions(path: &Path) -> Result<BTreeMap<Key, f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).with_context(|| format!("line {line}: missing column {}", i + 1));
        let id: usize = field(0)?.parse().with_context(|| format!("line {line}: bad instance_id"))?;
        let order: usize = field(1)?.parse().with_context(|| format!("line {line}: bad order"))?;
        let subset = parse_subset(field(2)?).with_context(|| format!("line {line}: bad subset"))?;
        let value: f64 = field(3)?.parse().with_context(|| format!("line {line}: bad value"))?;
        out.insert((id, order, subset), value);
    }
    Ok(out)
}

pub fn run(name: &str, cfg: VerifyConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::new(name, cfg.seed, &cfg)?;
    let model_path = require_path(&cfg.model, "model")?;
    let inst_path = require_path(&cfg.instances, "instances")?;
    manifest.input(model_path);
    manifest.input(inst_path);
    let (model, lifts) = manifest.timed("load", || load(model_path))?;
    let n = model.n();
    if n > MAX_VERIFY_FEATURES {
        bail!("verify enumerates 2^n coalitions and accepts at most {MAX_VERIFY_FEATURES} features, the model has {n}");
    }
    let instances = manifest.timed("load", || read_instances(inst_path, n))?;
    let given = match &cfg.attributions {
        Some(p) => {
            manifest.input(p);
            Some(manifest.timed("load", || read_attributions(p))?)
        }
        None => None,
    };
    let max_order = cfg.max_order.min(n);
    let mut checks: Vec<OrderCheck> = (1..=max_order)
        .map(|order| OrderCheck {
            order,
            max_abs_diff: 0.0,
            compared: 0,
            pass: true,
        })
        .collect();
    let explainers = (1..=max_order).map(|k| Explainer::new(n, k)).collect::<Result<Vec<_>, _>>()?;

    for (idx, x) in instances.iter().enumerate() {
        let table = manifest.timed("oracle", || enumerate_game(&model, &lifts, x))?;
        manifest.forwards("oracle", table.values().len() as u64);
        for check in checks.iter_mut() {
            let k = check.order;
            let truth = exact_sii(&table, k)?;
            let diffs: Vec<f64> = match &given {
                Some(map) => truth
                    .entries
                    .iter()
                    .filter_map(|e| map.get(&(idx + 1, k, e.subset.clone())).map(|v| (v - e.value).abs()))
                    .collect(),
                None => {
                    let set = manifest.timed("attribute", || {
                        explainers[k - 1].explain(&model, &lifts, x, &Subsets::All, ExplainOptions::for_order(k))
                    })?;
                    manifest.forwards("attribution", set.forwards_used);
                    set.values().iter().zip(truth.values()).map(|(a, b)| (a - b).abs()).collect()
                }
            };
            check.compared += diffs.len();
            for d in diffs {
                // NaN counts as a failure and sticks
                if d.is_nan() || check.max_abs_diff.is_nan() {
                    check.max_abs_diff = f64::NAN;
                } else {
                    check.max_abs_diff = check.max_abs_diff.max(d);
                }
            }
        }
    }
    if given.is_some() {
        // orders absent from the file are not reported
        checks.retain(|c| c.compared > 0);
        if checks.is_empty() {
            bail!("the attributions file holds no values of order 1..={max_order} for these instances");
        }
    }
    for check in checks.iter_mut() {
        check.pass = check.max_abs_diff <= cfg.tolerance;
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        n,
        instances: instances.len(),
        tolerance: cfg.tolerance,
        orders: checks,
        pass,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_data(cfg.out.as_deref(), text.as_bytes())?;
    if let Some(p) = &cfg.out {
        manifest.output(p);
    }
    manifest.emit(cfg.out.as_deref())?;
    Ok(if pass { Outcome::Success } else { Outcome::VerificationFailed })
}
