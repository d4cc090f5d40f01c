use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tnshap::attribute::{Evaluation, ExplainOptions, Explainer, ProbeMode, Subsets};
use tnshap::fit::{gen_cp_teacher, gen_tree_teacher, uniform_instances};
use tnshap::LiftSpec;

use crate::commands::gen::TeacherKind;
use crate::manifest::{write_data, RunManifest};
use crate::Outcome;

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Ascending feature counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<TeacherKind>,
    /// ie or st.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub dims: Vec<usize>,
    pub rank: usize,
    pub repeats: usize,
    pub warmup: usize,
    pub kind: TeacherKind,
    pub mode: String,
    pub evaluation: Evaluation,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            out: None,
            dims: vec![10, 20, 30, 40, 50],
            rank: 16,
            repeats: 5,
            warmup: 1,
            kind: TeacherKind::Tree,
            mode: "ie".into(),
            evaluation: Evaluation::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub rank: usize,
    pub cut_rank: usize,
    /// Logical forward passes of one all-feature attribution.
    pub forwards: u64,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub median_ms: f64,
    pub per_feature_ms: f64,
    pub samples_ms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log(median time) against log(n).
    pub loglog_slope: Option<f64>,
    pub monotone_median: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

pub fn run(name: &str, cfg: BenchConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::new(name, cfg.seed, &cfg)?;
    if cfg.dims.is_empty() || cfg.dims.windows(2).any(|w| w[0] >= w[1]) || cfg.dims[0] == 0 {
        bail!("--dims must be a non-empty, strictly ascending list of positive counts");
    }
    if cfg.repeats == 0 || cfg.rank == 0 {
        bail!("--repeats and --rank must be at least 1");
    }
    let mode: ProbeMode = cfg.mode.parse()?;
    let options = ExplainOptions::for_order(1).with_mode(mode).with_evaluation(cfg.evaluation);
    let mut rows = Vec::new();
    for &n in &cfg.dims {
        let lifts = LiftSpec::binary(n);
        let x = uniform_instances(n, 1, cfg.seed).remove(0);
        let explainer = Explainer::new(n, 1)?;
        let (forwards, cut_rank, samples) = match cfg.kind {
            TeacherKind::Tree => {
                let model = gen_tree_teacher(&lifts, cfg.rank, cfg.seed)?;
                let (f, s) = time_runs(&explainer, &model, &lifts, &x, options, &cfg)?;
                (f, model.cut_rank(), s)
            }
            TeacherKind::Cp => {
                let model = gen_cp_teacher(&lifts, cfg.rank, cfg.seed)?;
                let (f, s) = time_runs(&explainer, &model, &lifts, &x, options, &cfg)?;
                (f, cfg.rank, s)
            }
        };
        manifest.forwards("attribution", forwards * (cfg.repeats + cfg.warmup) as u64);
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / samples.len() as f64;
        let med = median(&sorted);
        log::info!("n = {n}: median {med:.3} ms over {} repeats", cfg.repeats);
        rows.push(BenchRow {
            n,
            rank: cfg.rank,
            cut_rank,
            forwards,
            mean_ms: mean,
            std_ms: var.sqrt(),
            median_ms: med,
            per_feature_ms: med / n as f64,
            samples_ms: samples,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.median_ms)).collect();
    let report = BenchReport {
        loglog_slope: loglog_slope(&points),
        monotone_median: rows.windows(2).all(|w| w[1].median_ms > w[0].median_ms),
        rows,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_data(cfg.out.as_deref(), text.as_bytes())?;
    if let Some(p) = &cfg.out {
        manifest.output(p);
    }
    manifest.emit(cfg.out.as_deref())?;
    Ok(Outcome::Success)
}

/// Attribution wall times in milliseconds (model generation excluded).
fn time_runs<M: tnshap::MultilinearMap>(
    explainer: &Explainer,
    model: &M,
    lifts: &LiftSpec,
    x: &[f64],
    options: ExplainOptions,
    cfg: &BenchConfig,
) -> Result<(u64, Vec<f64>)> {
    let mut forwards = 0;
    for _ in 0..cfg.warmup {
        forwards = explainer.explain(model, lifts, x, &Subsets::All, options)?.forwards_used;
    }
    let mut samples = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        let set = explainer.explain(model, lifts, x, &Subsets::All, options)?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        forwards = set.forwards_used;
    }
    Ok((forwards, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(1.5))).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }
}
