pub mod bench;
pub mod explain;
pub mod fit;
pub mod gen;
pub mod rank_sweep;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tnshap::io::load_model;
use tnshap::{LiftSpec, TensorNetworkModel};

pub(crate) fn require_path<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().with_context(|| format!("missing required option --{what}"))
}

pub(crate) fn load(path: &Path) -> Result<(TensorNetworkModel, LiftSpec)> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}
