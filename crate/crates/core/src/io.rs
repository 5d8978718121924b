//! JSON file formats: instances, partitions, ball sets, tree decompositions
//! and the simple inputs accepted by the encoders.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BallSet, GeoMode};
use crate::model::{Instance, Partition};
use crate::problems::{CspConstraint, VisionPotential};
use crate::treedecomp::TreeDecomposition;

/// On-disk instance. Edge potentials are `q × q` nested arrays indexed
/// `[label of first endpoint][label of second endpoint]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub q: usize,
    #[serde(default)]
    pub directed: bool,
    pub num_vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub vertex_potentials: Vec<Vec<f64>>,
    pub edge_potentials: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_labels: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let q = inst.q();
        InstanceFile {
            q,
            directed: inst.is_directed(),
            num_vertices: inst.num_vertices(),
            edges: inst.edges().iter().map(|&(u, v)| [u, v]).collect(),
            vertex_potentials: (0..inst.num_vertices())
                .map(|v| inst.vertex_potential(v).to_vec())
                .collect(),
            edge_potentials: (0..inst.edges().len())
                .map(|e| inst.edge_table(e).chunks(q).map(<[f64]>::to_vec).collect())
                .collect(),
            allowed_labels: inst.explicit_allowed_labels().map(<[Vec<usize>]>::to_vec),
            coords: None,
            metadata: None,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let q = self.q;
        let mut tables = Vec::with_capacity(self.edge_potentials.len());
        for (e, rows) in self.edge_potentials.iter().enumerate() {
            if rows.len() != q || rows.iter().any(|r| r.len() != q) {
                return Err(Error::InvalidInstance(format!(
                    "edge potential {e} must be a {q}x{q} table"
                )));
            }
            tables.push(rows.concat());
        }
        let inst = Instance::new(
            q,
            self.directed,
            self.num_vertices,
            self.edges.iter().map(|&[u, v]| (u, v)).collect(),
            self.vertex_potentials.clone(),
            tables,
        )?;
        match &self.allowed_labels {
            Some(allowed) => inst.with_allowed_labels(allowed.clone()),
            None => Ok(inst),
        }
    }

    /// Planar coordinates, required by the crossing scheme.
    pub fn planar_coords(&self) -> Result<Vec<[f64; 2]>> {
        let coords = self
            .coords
            .as_ref()
            .ok_or_else(|| Error::Consistency("instance has no coords".into()))?;
        if coords.len() != self.num_vertices {
            return Err(Error::Consistency(format!(
                "{} coordinates for {} vertices",
                coords.len(),
                self.num_vertices
            )));
        }
        coords
            .iter()
            .enumerate()
            .map(|(i, c)| match c.as_slice() {
                &[x, y] => Ok([x, y]),
                _ => Err(Error::Consistency(format!(
                    "coordinate {i} is not two-dimensional"
                ))),
            })
            .collect()
    }

    /// Ball set stored under `metadata.balls`, if any.
    pub fn embedded_balls(&self) -> Result<Option<BallFile>> {
        match self.metadata.as_ref().and_then(|m| m.get("balls")) {
            Some(value) => serde_json::from_value(value.clone())
                .map(Some)
                .map_err(|e| Error::Format(format!("metadata.balls: {e}"))),
            None => Ok(None),
        }
    }
}

/// Partition file: one `[α_uv, α_vu]` pair per edge, in edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartitionFile(pub Vec<[f64; 2]>);

impl PartitionFile {
    pub fn to_partition(&self) -> Result<Partition> {
        Partition::new(self.0.iter().map(|&[a, b]| (a, b)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFile {
    pub d: usize,
    pub centers: Vec<Vec<f64>>,
    pub diameters: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<GeoMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
}

impl BallFile {
    pub fn balls(&self) -> Result<BallSet> {
        BallSet::new(self.d, self.centers.clone(), self.diameters.clone())
    }
}

/// Edge with an optional weight (default 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightedEdge {
    Unit(usize, usize),
    Weighted(usize, usize, f64),
}

impl WeightedEdge {
    pub fn triple(self) -> (usize, usize, f64) {
        match self {
            WeightedEdge::Unit(u, v) => (u, v, 1.0),
            WeightedEdge::Weighted(u, v, w) => (u, v, w),
        }
    }
}

/// Input of `encode maxcut`, `encode dicut` and `encode kcut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeListFile {
    pub num_vertices: usize,
    pub edges: Vec<WeightedEdge>,
    /// Number of classes for `encode kcut`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl EdgeListFile {
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        self.edges.iter().map(|e| e.triple()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspFile {
    pub q: usize,
    pub num_vars: usize,
    pub constraints: Vec<CspConstraint>,
}

/// Lattice description for `encode ea`. `couplings` holds one value for every
/// lattice edge or a single value shared by all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeFile {
    pub dims: Vec<usize>,
    pub couplings: Vec<f64>,
    #[serde(default)]
    pub field: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionFile {
    pub width: usize,
    pub height: usize,
    pub q: usize,
    pub observed: Vec<f64>,
    pub smoothness: VisionPotential,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_instance(path: &Path) -> Result<(InstanceFile, Instance)> {
    let file: InstanceFile = read_json(path)?;
    let inst = file.to_instance()?;
    Ok((file, inst))
}

pub fn read_decomposition(path: &Path) -> Result<TreeDecomposition> {
    let td: TreeDecomposition = read_json(path)?;
    Ok(TreeDecomposition::new(td.bags, td.tree_edges, td.root))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Instance {
        Instance::new(
            2,
            false,
            3,
            vec![(0, 1), (1, 2)],
            vec![vec![0.5, 1.0 / 3.0], vec![0.0, 2.0], vec![1e-13, 7.25]],
            vec![vec![0.0, 1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3, 0.4]],
        )
        .unwrap()
    }

    #[test]
    fn instance_round_trip_preserves_values() {
        let inst = sample();
        let text = to_json(&InstanceFile::from_instance(&inst)).unwrap();
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_instance().unwrap(), inst);
    }

    #[test]
    fn edge_tables_are_row_major() {
        let file = InstanceFile::from_instance(&sample());
        assert_eq!(
            file.edge_potentials[0],
            vec![vec![0.0, 1.0], vec![2.0, 3.0]]
        );
    }

    #[test]
    fn ragged_table_rejected() {
        let mut file = InstanceFile::from_instance(&sample());
        file.edge_potentials[1][0].pop();
        assert!(matches!(file.to_instance(), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn allowed_labels_survive() {
        let inst = sample()
            .with_allowed_labels(vec![vec![1], vec![0, 1], vec![0]])
            .unwrap();
        let file = InstanceFile::from_instance(&inst);
        assert_eq!(file.to_instance().unwrap(), inst);
    }

    #[test]
    fn directed_defaults_to_false() {
        let text =
            r#"{"q":1,"num_vertices":1,"edges":[],"vertex_potentials":[[0]],"edge_potentials":[]}"#;
        let file: InstanceFile = serde_json::from_str(text).unwrap();
        assert!(!file.directed);
    }

    #[test]
    fn weighted_edges_parse_both_forms() {
        let file: EdgeListFile =
            serde_json::from_str(r#"{"num_vertices":3,"edges":[[0,1],[1,2,2.5]]}"#).unwrap();
        assert_eq!(file.triples(), vec![(0, 1, 1.0), (1, 2, 2.5)]);
    }

    #[test]
    fn partition_file_is_pair_list() {
        let file: PartitionFile = serde_json::from_str("[[0.25, 0.75], [1, 0]]").unwrap();
        assert_eq!(file.to_partition().unwrap().get(0), (0.25, 0.75));
    }

    #[test]
    fn embedded_balls_read_from_metadata() {
        let mut file = InstanceFile::from_instance(&sample());
        file.metadata = Some(serde_json::json!({
            "balls": {"d": 1, "centers": [[0.0], [1.0], [2.0]], "diameters": [1.0, 1.0, 1.0], "mode": "intersection"}
        }));
        let balls = file.embedded_balls().unwrap().unwrap();
        assert_eq!(balls.mode, Some(GeoMode::Intersection));
        assert_eq!(balls.balls().unwrap().len(), 3);
    }
}
