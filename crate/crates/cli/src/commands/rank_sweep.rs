use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tnshap::fit::{build_training_set_multi, eval_quality, fit_student, uniform_instances, FitConfig, FitReport};
use tnshap::{LiftSpec, TensorNetworkModel};

use crate::commands::fit::FitFlags;
use crate::commands::{load, require_path};
use crate::instances::read_instances;
use crate::manifest::{write_data, RunManifest};
use crate::Outcome;

#[derive(Debug, Args, Serialize)]
pub struct RankSweepArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub teacher: Option<PathBuf>,
    /// Student bond dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    /// Student initialization seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Test instances (header f1..fn); training samples are drawn around them.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<PathBuf>,
    /// Uniform random test instances when --instances is absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_instances: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_orders: Option<Vec<usize>>,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSweepConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub teacher: Option<PathBuf>,
    pub ranks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub instances: Option<PathBuf>,
    pub n_instances: usize,
    pub eval_orders: Vec<usize>,
    /// Base student configuration; `bond_dim` and `seed` are set per cell.
    pub fit: FitConfig,
}

impl Default for RankSweepConfig {
    fn default() -> Self {
        let mut fit = FitConfig::default();
        fit.sampling.sigma_frac = 1.0;
        Self {
            seed: 0,
            threads: None,
            out: None,
            teacher: None,
            ranks: vec![2, 4, 8, 16],
            seeds: vec![0, 1, 2],
            instances: None,
            n_instances: 10,
            eval_orders: vec![1, 2, 3],
            fit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub rank: usize,
    pub seed: u64,
    pub report: FitReport,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics; NaN entries propagate.
    pub fn of(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderSummary {
    pub order: usize,
    /// NaN where the reference attributions had zero variance.
    pub r2: MeanStd,
    pub cosine: MeanStd,
    pub mse: MeanStd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankSummary {
    pub rank: usize,
    pub train_r2: MeanStd,
    pub orders: Vec<OrderSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub n: usize,
    pub instances: usize,
    pub rows: usize,
    pub teacher_calls: u64,
    pub cells: Vec<SweepCell>,
    pub summary: Vec<RankSummary>,
}

/// Fits one student per `(rank, seed)` on a single training set drawn
/// around `instances` and scores each student's attributions there.
pub fn sweep(
    teacher: &TensorNetworkModel,
    lifts: &LiftSpec,
    instances: &[Vec<f64>],
    cfg: &RankSweepConfig,
) -> Result<SweepReport> {
    let n = teacher.n();
    if cfg.ranks.is_empty() || cfg.seeds.is_empty() {
        bail!("at least one rank and one seed are required");
    }
    if cfg.eval_orders.iter().any(|&k| k == 0 || k > n) {
        bail!("evaluation orders must lie in 1..={n}");
    }
    let set = build_training_set_multi(teacher, lifts, instances, &cfg.fit.sampling, cfg.seed)?;
    let mut cells = Vec::new();
    for &rank in &cfg.ranks {
        for &seed in &cfg.seeds {
            let fit = FitConfig {
                bond_dim: rank,
                seed,
                ..cfg.fit.clone()
            };
            let (student, mut report) = fit_student(&set, &fit)?;
            report.quality = eval_quality(&student, teacher, lifts, instances, &cfg.eval_orders)?;
            log::info!(
                "rank {rank} seed {seed}: train R² {:.6} in {:.2} s",
                report.train_r2,
                report.wall_time_s
            );
            cells.push(SweepCell { rank, seed, report });
        }
    }
    let summary = cfg
        .ranks
        .iter()
        .map(|&rank| {
            let mine: Vec<&FitReport> = cells.iter().filter(|c| c.rank == rank).map(|c| &c.report).collect();
            let pick = |f: &dyn Fn(&FitReport) -> f64| MeanStd::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            RankSummary {
                rank,
                train_r2: pick(&|r| r.train_r2),
                orders: cfg
                    .eval_orders
                    .iter()
                    .enumerate()
                    .map(|(j, &order)| OrderSummary {
                        order,
                        r2: pick(&|r| r.quality[j].r2.unwrap_or(f64::NAN)),
                        cosine: pick(&|r| r.quality[j].cosine),
                        mse: pick(&|r| r.quality[j].mse),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(SweepReport {
        n,
        instances: instances.len(),
        rows: set.len(),
        teacher_calls: set.teacher_calls,
        cells,
        summary,
    })
}

pub fn run(name: &str, cfg: RankSweepConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::new(name, cfg.seed, &cfg)?;
    let teacher_path = require_path(&cfg.teacher, "teacher")?;
    manifest.input(teacher_path);
    let (teacher, lifts) = manifest.timed("load", || load(teacher_path))?;
    let n = teacher.n();
    let instances = match &cfg.instances {
        Some(p) => {
            manifest.input(p);
            read_instances(p, n)?
        }
        None => {
            if cfg.n_instances == 0 {
                bail!("--n-instances must be at least 1");
            }
            uniform_instances(n, cfg.n_instances, cfg.seed.wrapping_add(1))
        }
    };
    let report = manifest.timed("sweep", || sweep(&teacher, &lifts, &instances, &cfg))?;
    manifest.forwards("teacher", report.teacher_calls);
    let text = serde_json::to_string_pretty(&report)? + "\n";
    write_data(cfg.out.as_deref(), text.as_bytes())?;
    if let Some(p) = &cfg.out {
        manifest.output(p);
    }
    manifest.emit(cfg.out.as_deref())?;
    Ok(Outcome::Success)
}
