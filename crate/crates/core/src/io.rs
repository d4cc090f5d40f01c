//! Model JSON and attribution CSV formats.
//!
//! Model files are a single JSON object:
//!
//! ```text
//! {"version":1,"topology":"tt"|"btree","n":…,"phys_dims":[…],
//!  "bond_dims":[…],"cores":[{"shape":[…],"data":[…]},…],
//!  "feature_maps":[{"kind":"binary"},…]}
//! ```
//!
//! `bond_dims` are in chain order for tensor trains and in BFS order
//! (`bond_dims[u − 1]` joins node `u` to its parent) for trees. Numbers are
//! written in the shortest form that parses back to the identical double.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attribute::AttributionSet;
use crate::error::{Error, Result};
use crate::lift::LiftSpec;
use crate::tensor::{DenseTensor, TensorNetworkModel, TnTopology, TopologyKind};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    version: u32,
    topology: TopologyKind,
    n: usize,
    phys_dims: Vec<usize>,
    bond_dims: Vec<usize>,
    cores: Vec<DenseTensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_maps: Option<LiftSpec>,
}

pub fn model_to_json(model: &TensorNetworkModel, lifts: &LiftSpec) -> Result<String> {
    lifts.check_dims(model.topology().phys_dims())?;
    let topo = model.topology();
    let doc = ModelJson {
        version: MODEL_FORMAT_VERSION,
        topology: topo.kind(),
        n: topo.n(),
        phys_dims: topo.phys_dims().to_vec(),
        bond_dims: topo.bond_dims().to_vec(),
        cores: model.cores().to_vec(),
        feature_maps: Some(lifts.clone()),
    };
    let mut s = serde_json::to_string(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Parses a model file. Without `feature_maps`, every feature must have
/// physical extent 2 and gets the binary lift.
pub fn model_from_json(s: &str) -> Result<(TensorNetworkModel, LiftSpec)> {
    let doc: ModelJson = serde_json::from_str(s)?;
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported model version {}", doc.version)));
    }
    if doc.n != doc.phys_dims.len() {
        return Err(Error::Format(format!(
            "n = {} but {} physical dims listed",
            doc.n,
            doc.phys_dims.len()
        )));
    }
    let topo = TnTopology::new(doc.topology, doc.phys_dims, doc.bond_dims)?;
    let lifts = match doc.feature_maps {
        Some(l) => l,
        None if topo.phys_dims().iter().all(|&d| d == 2) => LiftSpec::binary(topo.n()),
        None => {
            return Err(Error::Format(
                "feature_maps is required when a physical dim differs from 2".into(),
            ))
        }
    };
    lifts.check_dims(topo.phys_dims())?;
    let model = TensorNetworkModel::new(topo, doc.cores)?;
    Ok((model, lifts))
}

pub fn save_model(path: impl AsRef<Path>, model: &TensorNetworkModel, lifts: &LiftSpec) -> Result<()> {
    std::fs::write(path, model_to_json(model, lifts)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(TensorNetworkModel, LiftSpec)> {
    model_from_json(&std::fs::read_to_string(path)?)
}

pub const ATTRIBUTION_HEADER: &str = "instance_id,order,subset,value,flag";

/// `2;5` for the zero-based subset `[1, 4]`.
pub fn format_subset(subset: &[usize]) -> String {
    subset
        .iter()
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Inverse of [`format_subset`].
pub fn parse_subset(s: &str) -> Result<Vec<usize>> {
    s.split(';')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(Error::Format(format!("bad subset entry {t:?} in {s:?}"))),
        })
        .collect()
}

/// Attribution CSV rows, one per `(instance, subset)`; rows follow the
/// order of `sets` and then each set's entry order.
pub fn write_attributions_csv<'a>(
    mut w: impl Write,
    sets: impl IntoIterator<Item = (usize, &'a AttributionSet)>,
) -> Result<()> {
    writeln!(w, "{ATTRIBUTION_HEADER}")?;
    for (id, set) in sets {
        for e in &set.entries {
            let flag = if e.ill_conditioned { "ill_conditioned" } else { "" };
            writeln!(w, "{id},{},{},{:?},{flag}", set.order, format_subset(&e.subset), e.value)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribute::Attribution;

    #[test]
    fn subset_format() {
        assert_eq!(format_subset(&[1, 4]), "2;5");
        assert_eq!(parse_subset("2;5").unwrap(), vec![1, 4]);
        assert!(parse_subset("0").is_err());
        assert!(parse_subset("a;1").is_err());
    }

    #[test]
    fn csv_layout() {
        let set = AttributionSet {
            order: 2,
            entries: vec![Attribution {
                subset: vec![0, 2],
                value: 0.5,
                residual: 0.0,
                ill_conditioned: true,
            }],
            forwards_used: 3,
            max_solve_residual: 0.0,
        };
        let mut buf = Vec::new();
        write_attributions_csv(&mut buf, [(4, &set)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "instance_id,order,subset,value,flag\n4,2,1;3,0.5,ill_conditioned\n"
        );
    }

    #[test]
    fn missing_feature_maps_default_to_binary() {
        let s = r#"{"version":1,"topology":"tt","n":1,"phys_dims":[2],"bond_dims":[],
                    "cores":[{"shape":[1,2,1],"data":[1.0,0.5]}]}"#;
        let (m, l) = model_from_json(s).unwrap();
        assert_eq!(l, LiftSpec::binary(1));
        assert_eq!(m.forward(&[vec![2.0, 1.0]]).unwrap(), 2.5);
    }

    #[test]
    fn rejects_core_shape_mismatch() {
        let s = r#"{"version":1,"topology":"tt","n":2,"phys_dims":[2,2],"bond_dims":[3],
                    "cores":[{"shape":[1,2,2],"data":[0,0,0,0]},{"shape":[3,2,1],"data":[0,0,0,0,0,0]}]}"#;
        assert!(model_from_json(s).is_err());
    }
}
