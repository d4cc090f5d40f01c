use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tnshap::fit::{build_training_set_multi, eval_quality, fit_student, uniform_instances, FitConfig};
use tnshap::io::model_to_json;

use crate::commands::{load, require_path};
use crate::instances::read_instances;
use crate::manifest::{write_data, RunManifest};
use crate::Outcome;

/// Neighborhood sampling flags, nested under `fit.sampling`.
#[derive(Debug, Default, Args, Serialize)]
pub struct SamplingFlags {
    /// Gaussian samples per center.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<usize>,
    /// Neighborhood σ relative to each feature's standard deviation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_frac: Option<f64>,
}

/// Student flags, nested under `fit`.
#[derive(Debug, Default, Args, Serialize)]
pub struct FitFlags {
    /// tt or btree.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bond_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[command(flatten)]
    pub sampling: SamplingFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub teacher: Option<PathBuf>,
    /// CSV of sampling centers (header f1..fn).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<PathBuf>,
    /// Number of uniform random centers when --centers is absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_centers: Option<usize>,
    /// CSV of instances on which to score student attributions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_instances: Option<PathBuf>,
    /// Interaction orders to score, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_orders: Option<Vec<usize>>,
    /// Where to write the fit report (default: `<out>.report.json`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitCommandConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub teacher: Option<PathBuf>,
    pub centers: Option<PathBuf>,
    pub n_centers: usize,
    pub eval_instances: Option<PathBuf>,
    pub eval_orders: Vec<usize>,
    pub report: Option<PathBuf>,
    pub fit: FitConfig,
}

impl Default for FitCommandConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            out: None,
            teacher: None,
            centers: None,
            n_centers: 1,
            eval_instances: None,
            eval_orders: vec![1, 2, 3],
            report: None,
            fit: FitConfig::default(),
        }
    }
}

pub(crate) fn report_path(explicit: Option<&Path>, out: Option<&Path>, suffix: &str) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        out.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        })
    })
}

/// Writes pretty JSON to `path`, or to standard error.
pub(crate) fn write_report(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{text}"),
    }
    Ok(())
}

pub fn run(name: &str, mut cfg: FitCommandConfig) -> Result<Outcome> {
    cfg.fit.seed = cfg.seed;
    let mut manifest = RunManifest::new(name, cfg.seed, &cfg)?;
    let teacher_path = require_path(&cfg.teacher, "teacher")?;
    manifest.input(teacher_path);
    let (teacher, lifts) = manifest.timed("load", || load(teacher_path))?;
    let n = teacher.n();
    let centers = match &cfg.centers {
        Some(p) => {
            manifest.input(p);
            read_instances(p, n)?
        }
        None => {
            if cfg.n_centers == 0 {
                bail!("--n-centers must be at least 1");
            }
            uniform_instances(n, cfg.n_centers, cfg.seed)
        }
    };
    let set = manifest.timed("sample", || {
        build_training_set_multi(&teacher, &lifts, &centers, &cfg.fit.sampling, cfg.seed)
    })?;
    manifest.forwards("teacher", set.teacher_calls);
    let (student, mut report) = manifest.timed("fit", || fit_student(&set, &cfg.fit))?;
    if let Some(p) = &cfg.eval_instances {
        manifest.input(p);
        let instances = read_instances(p, n)?;
        if cfg.eval_orders.iter().any(|&k| k == 0 || k > n) {
            bail!("evaluation orders must lie in 1..={n}");
        }
        report.quality = manifest.timed("evaluate", || {
            eval_quality(&student, &teacher, &lifts, &instances, &cfg.eval_orders)
        })?;
    }
    let json = model_to_json(&student, &lifts)?;
    write_data(cfg.out.as_deref(), json.as_bytes())?;
    if let Some(p) = &cfg.out {
        manifest.output(p);
    }
    let rpath = report_path(cfg.report.as_deref(), cfg.out.as_deref(), ".report.json");
    write_report(rpath.as_deref(), &report)?;
    if let Some(p) = &rpath {
        manifest.output(p);
    }
    log::info!("train R² {:.6} after {} sweeps", report.train_r2, report.sweeps);
    manifest.emit(cfg.out.as_deref())?;
    Ok(Outcome::Success)
}

