//! Normal-based graph-cut over-segmentation.
//!
//! Greedy Felzenszwalb-Huttenlocher clustering over the cloud's adjacency
//! graph with edge weights derived from normal disagreement. The resulting
//! segments are the geometric consistency sets.

use serde::{Deserialize, Serialize};

use crate::geometry::{PointCloud, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    /// The `k` of the merge predicate `w <= Int(C) + k / |C|`.
    pub k_threshold: f64,
    pub min_size: usize,
    /// Square the weight of locally convex edges.
    pub convexity_relaxation: bool,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            k_threshold: 0.05,
            min_size: 20,
            convexity_relaxation: false,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_threshold > 0.0) {
            return Err(Error::invalid("k_threshold must be positive"));
        }
        if self.min_size == 0 {
            return Err(Error::invalid("min_size must be at least 1"));
        }
        Ok(())
    }
}

/// Dense labelling of points into sets `0..set_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoSetPartition {
    pub labels: Vec<u32>,
    pub set_count: u32,
}

impl GeoSetPartition {
    /// Builds a partition from arbitrary labels, relabelling densely in order
    /// of first appearance.
    pub fn from_labels(raw: &[u32]) -> Self {
        let mut map = std::collections::BTreeMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = map.len() as u32;
                *map.entry(l).or_insert(next)
            })
            .collect();
        GeoSetPartition {
            labels,
            set_count: map.len() as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn set_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.set_count as usize];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Labels are in `0..set_count` and every set is non-empty.
    pub fn validate(&self) -> Result<()> {
        if self.labels.iter().any(|&l| l >= self.set_count) {
            return Err(Error::invalid("partition label out of range"));
        }
        if self.set_sizes().contains(&0) {
            return Err(Error::invalid("partition has an empty set"));
        }
        Ok(())
    }
}

/// `1 − n_i·n_j`, squared on locally convex edges when `convexity_relaxation`
/// is on. An edge is convex when `n_i·(p_j − p_i) < 0`.
pub fn edge_weight(n_i: &Vec3, n_j: &Vec3, p_i: &Vec3, p_j: &Vec3, convexity_relaxation: bool) -> f64 {
    let w = (1.0 - n_i.dot(n_j)).max(0.0);
    if convexity_relaxation && n_i.dot(&(p_j - p_i)) < 0.0 {
        w * w
    } else {
        w
    }
}

struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Largest merged edge weight inside each root's component.
    internal: Vec<f64>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    /// Joins two roots; the larger component (smaller index on ties) keeps
    /// its root.
    fn union(&mut self, a: u32, b: u32, w: f64) {
        let (big, small) = match self.size[a as usize].cmp(&self.size[b as usize]) {
            std::cmp::Ordering::Less => (b, a),
            std::cmp::Ordering::Greater => (a, b),
            std::cmp::Ordering::Equal => (a.min(b), a.max(b)),
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        let internal = self.internal[a as usize].max(self.internal[b as usize]).max(w);
        self.internal[big as usize] = internal;
    }
}

/// Over-segments `cloud` along its edge list.
///
/// Edges are processed in ascending weight (ties by index pair) and two
/// components merge when the edge weight is at most
/// `min(Int(A) + k/|A|, Int(B) + k/|B|)`. A second pass over the same order
/// folds every component smaller than `min_size` into the neighbour across
/// its cheapest crossing edge. Labels are dense in order of first point.
pub fn segment(cloud: &PointCloud, params: &SegmentationParams) -> Result<GeoSetPartition> {
    params.validate()?;
    if !cloud.has_normals() {
        return Err(Error::invalid("segmentation needs per-point normals"));
    }
    let n = cloud.len();
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(cloud.edges.len());
    for &(a, b) in &cloud.edges {
        if a as usize >= n || b as usize >= n {
            return Err(Error::invalid(format!("edge ({a}, {b}) out of range")));
        }
        let (i, j) = (a.min(b), a.max(b));
        let w = edge_weight(
            &cloud.normals[i as usize],
            &cloud.normals[j as usize],
            &cloud.positions[i as usize],
            &cloud.positions[j as usize],
            params.convexity_relaxation,
        );
        if !w.is_finite() {
            return Err(Error::NonFinite(format!("weight of edge ({i}, {j})")));
        }
        edges.push((w, i, j));
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let k = params.k_threshold;
    let mut sets = DisjointSets::new(n);
    for &(w, i, j) in &edges {
        let (a, b) = (sets.find(i), sets.find(j));
        if a == b {
            continue;
        }
        let ta = sets.internal[a as usize] + k / sets.size[a as usize] as f64;
        let tb = sets.internal[b as usize] + k / sets.size[b as usize] as f64;
        if w <= ta.min(tb) {
            sets.union(a, b, w);
        }
    }

    let min_size = params.min_size as u32;
    if min_size > 1 {
        for &(w, i, j) in &edges {
            let (a, b) = (sets.find(i), sets.find(j));
            if a != b && (sets.size[a as usize] < min_size || sets.size[b as usize] < min_size) {
                sets.union(a, b, w);
            }
        }
    }

    let roots: Vec<u32> = (0..n as u32).map(|i| sets.find(i)).collect();
    Ok(GeoSetPartition::from_labels(&roots))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z).normalize()
    }

    #[test]
    fn edge_weight_cases() {
        let p = Vec3::zeros();
        let q = Vec3::new(3.0, -1.0, 2.0);
        let n = unit(1.0, 2.0, 3.0);
        assert_eq!(edge_weight(&n, &n, &p, &q, false), 0.0);
        assert_eq!(edge_weight(&n, &n, &p, &q, true), 0.0);

        let up = Vec3::z();
        let down = -Vec3::z();
        // Concave: p_j sits on the side n_i points to.
        let above = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(edge_weight(&up, &down, &p, &above, false), 2.0);
        assert_eq!(edge_weight(&up, &down, &p, &above, true), 2.0);
        let below = Vec3::new(0.0, 0.0, -1.0);
        assert_eq!(edge_weight(&up, &down, &p, &below, true), 4.0);
    }

    fn chain(normals: &[Vec3]) -> PointCloud {
        let mut c = PointCloud {
            positions: (0..normals.len()).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect(),
            normals: normals.to_vec(),
            edges: vec![],
        };
        c.set_edges((1..normals.len() as u32).map(|i| (i - 1, i)));
        c
    }

    #[test]
    fn identical_normals_give_one_set() {
        let c = chain(&vec![Vec3::z(); 30]);
        for k in [1e-6, 0.01, 10.0] {
            let part = segment(
                &c,
                &SegmentationParams {
                    k_threshold: k,
                    min_size: 1,
                    convexity_relaxation: false,
                },
            )
            .unwrap();
            assert_eq!(part.set_count, 1);
        }
    }

    #[test]
    fn no_edges_every_point_alone() {
        let c = PointCloud {
            positions: vec![Vec3::zeros(); 4],
            normals: vec![Vec3::z(); 4],
            edges: vec![],
        };
        let part = segment(&c, &SegmentationParams::default()).unwrap();
        assert_eq!(part.labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn hand_worked_small_instance() {
        // 0-1-2 share +z, 3-4 share +x, edge 2-3 bridges the two groups,
        // and 1-4 is a second weak bridge. Worked through by hand:
        // zero-weight edges merge {0,1,2} and {3,4}; the bridges weigh 1,
        // which exceeds 0 + 0.05/2.
        let z = Vec3::z();
        let x = Vec3::x();
        let mut c = chain(&[z, z, z, x, x]);
        c.set_edges([(0, 1), (1, 2), (2, 3), (3, 4), (1, 4)]);
        let params = SegmentationParams {
            k_threshold: 0.05,
            min_size: 1,
            convexity_relaxation: false,
        };
        assert_eq!(segment(&c, &params).unwrap().labels, vec![0, 0, 0, 1, 1]);

        // With a huge k the bridge passes the predicate: 1 <= 0 + 10/2.
        let big = SegmentationParams {
            k_threshold: 10.0,
            ..params
        };
        assert_eq!(segment(&c, &big).unwrap().set_count, 1);

        // min_size 3 folds {3,4} into its neighbour.
        let merged = SegmentationParams { min_size: 3, ..params };
        assert_eq!(segment(&c, &merged).unwrap().set_count, 1);
    }

    #[test]
    fn small_isolated_components_survive_min_size() {
        let z = Vec3::z();
        let mut c = chain(&[z, z, z, z]);
        c.set_edges([(0, 1), (2, 3)]);
        let part = segment(
            &c,
            &SegmentationParams {
                min_size: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(part.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn requires_normals_and_valid_params() {
        let mut c = chain(&[Vec3::z(); 3]);
        assert!(segment(
            &c,
            &SegmentationParams {
                k_threshold: 0.0,
                ..Default::default()
            }
        )
        .is_err());
        c.normals.clear();
        assert!(segment(&c, &SegmentationParams::default()).is_err());
    }

    #[test]
    fn from_labels_relabels_densely() {
        let p = GeoSetPartition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels, vec![0, 0, 1, 2, 1]);
        assert_eq!(p.set_count, 3);
        assert_eq!(p.set_sizes(), vec![2, 2, 1]);
    }
}
