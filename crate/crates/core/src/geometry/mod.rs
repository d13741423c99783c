//! Point clouds, normal estimation, k-NN adjacency and synthetic scenes.

mod knn;
mod normals;
pub mod synthetic;

pub use knn::{build_knn_graph, nearest_neighbors};
pub use normals::{estimate_normals, NormalEstimate, NormalOptions};
pub use synthetic::{generate_scene, Primitive, SyntheticScene, SyntheticSceneSpec};

use nalgebra::Vector3;

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `|‖n‖ − 1|` for a normal to count as unit length.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// A 3D scene as positions with optional unit normals and an undirected
/// adjacency edge list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    /// Either empty (no normals yet) or one entry per position.
    pub normals: Vec<Vec3>,
    /// Undirected edges stored as `(i, j)` with `i < j`.
    pub edges: Vec<(u32, u32)>,
}

impl PointCloud {
    pub fn from_positions(positions: Vec<Vec3>) -> Self {
        PointCloud {
            positions,
            normals: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn has_normals(&self) -> bool {
        !self.positions.is_empty() && self.normals.len() == self.positions.len()
    }

    /// Checks the structural invariants: unit normals, in-range edge indices,
    /// no self-loops and no duplicate edges.
    pub fn validate(&self) -> Result<()> {
        if !self.normals.is_empty() && self.normals.len() != self.positions.len() {
            return Err(Error::invalid(format!(
                "{} normals for {} positions",
                self.normals.len(),
                self.positions.len()
            )));
        }
        for (i, p) in self.positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite(format!("position {i}")));
            }
        }
        for (i, n) in self.normals.iter().enumerate() {
            if (n.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::invalid(format!("normal {i} is not unit length")));
            }
        }
        let n = self.positions.len() as u32;
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(())
    }

    /// Replaces the edge list with canonical `(min, max)` pairs, sorted and
    /// deduplicated, dropping self-loops.
    pub fn set_edges(&mut self, edges: impl IntoIterator<Item = (u32, u32)>) {
        let mut e: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        self.edges = e;
    }
}
