use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use tnshap::fit::{gen_cp_teacher, gen_tree_teacher};
use tnshap::io::model_to_json;
use tnshap::{FeatureMap, LiftSpec};

use crate::manifest::{write_data, RunManifest};
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeacherKind {
    Cp,
    Tree,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<TeacherKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// CP rank or tree bond dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Feature map for every feature: binary, poly:K, fourier:K[:OMEGA].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub kind: TeacherKind,
    pub n: Option<usize>,
    pub rank: Option<usize>,
    pub lift: String,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            out: None,
            kind: TeacherKind::Tree,
            n: None,
            rank: None,
            lift: "binary".into(),
        }
    }
}

pub fn run(name: &str, cfg: GenConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::new(name, cfg.seed, &cfg)?;
    let Some(n) = cfg.n.filter(|&n| n >= 1) else {
        bail!("--n must be given and at least 1");
    };
    let Some(rank) = cfg.rank.filter(|&r| r >= 1) else {
        bail!("--rank must be given and at least 1");
    };
    let map: FeatureMap = cfg.lift.parse()?;
    let lifts = LiftSpec::uniform(map, n)?;
    let model = manifest.timed("generate", || -> Result<_> {
        Ok(match cfg.kind {
            TeacherKind::Cp => gen_cp_teacher(&lifts, rank, cfg.seed)?.to_tensor_train()?,
            TeacherKind::Tree => gen_tree_teacher(&lifts, rank, cfg.seed)?,
        })
    })?;
    let json = manifest.timed("write", || model_to_json(&model, &lifts))?;
    write_data(cfg.out.as_deref(), json.as_bytes())?;
    if let Some(p) = &cfg.out {
        manifest.output(p);
    }
    manifest.emit(cfg.out.as_deref())?;
    Ok(Outcome::Success)
}
