//! Deterministic synthetic scenes built from planar rectangles and boxes.
//!
//! Every rectangular face of every primitive gets its own ground-truth label,
//! in primitive order. Scenes can also be ray cast, which is how synthetic
//! depth maps are rendered.

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{PointCloud, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Rectangle `origin + s·edge_u + t·edge_v` for `s, t ∈ [0, 1]`; its normal
    /// is `edge_u × edge_v` normalised.
    Plane {
        origin: [f64; 3],
        edge_u: [f64; 3],
        edge_v: [f64; 3],
        /// Points per square metre.
        density: f64,
    },
    /// Oriented box; each of the six faces is labelled separately and has an
    /// outward normal.
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        /// Roll, pitch, yaw in radians.
        #[serde(default)]
        rotation: [f64; 3],
        density: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub primitives: Vec<Primitive>,
    /// Standard deviation of positional noise along the face normal, metres.
    #[serde(default)]
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSceneSpec {
    /// Two parallel 1 m × 1 m planes at `z = 0` and `z = gap`.
    pub fn parallel_planes(gap: f64, density: f64, seed: u64) -> Self {
        let plane = |z: f64| Primitive::Plane {
            origin: [-0.5, -0.5, z],
            edge_u: [1.0, 0.0, 0.0],
            edge_v: [0.0, 1.0, 0.0],
            density,
        };
        SyntheticSceneSpec {
            primitives: vec![plane(0.0), plane(gap)],
            noise_sigma: 0.0,
            seed,
        }
    }

    /// A room corner: floor `z = 0` and walls `x = 0`, `y = 0`, each
    /// `size × size`, normals pointing into the room.
    pub fn corner(size: f64, density: f64, seed: u64) -> Self {
        SyntheticSceneSpec {
            primitives: vec![
                Primitive::Plane {
                    origin: [0.0, 0.0, 0.0],
                    edge_u: [size, 0.0, 0.0],
                    edge_v: [0.0, size, 0.0],
                    density,
                },
                Primitive::Plane {
                    origin: [0.0, 0.0, 0.0],
                    edge_u: [0.0, size, 0.0],
                    edge_v: [0.0, 0.0, size],
                    density,
                },
                Primitive::Plane {
                    origin: [0.0, 0.0, 0.0],
                    edge_u: [0.0, 0.0, size],
                    edge_v: [size, 0.0, 0.0],
                    density,
                },
            ],
            noise_sigma: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::Empty("synthetic scene has no primitives"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            let (density, ok_extent) = match p {
                Primitive::Plane {
                    edge_u, edge_v, density, ..
                } => (*density, v(edge_u).cross(&v(edge_v)).norm() > 0.0),
                Primitive::Box {
                    half_extents, density, ..
                } => (*density, half_extents.iter().all(|&h| h > 0.0)),
            };
            if !(density > 0.0) {
                return Err(Error::invalid(format!("primitive {i}: density must be positive")));
            }
            if !ok_extent {
                return Err(Error::invalid(format!("primitive {i}: extents must be positive")));
            }
        }
        Ok(())
    }
}

fn v(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// One rectangular face `origin + s·u + t·v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub normal: Vec3,
    pub density: f64,
}

impl Face {
    fn new(origin: Vec3, u: Vec3, v: Vec3, density: f64) -> Self {
        Face {
            origin,
            u,
            v,
            normal: u.cross(&v).normalize(),
            density,
        }
    }

    /// Ray parameter `t` of the hit `origin + t·dir`, if the ray hits the
    /// face at `t > 0`.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot(&(self.origin - origin)) / denom;
        if t <= 0.0 {
            return None;
        }
        let rel = origin + dir * t - self.origin;
        let s = rel.dot(&self.u) / self.u.norm_squared();
        let r = rel.dot(&self.v) / self.v.norm_squared();
        ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&r)).then_some(t)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub spec: SyntheticSceneSpec,
    /// Faces in label order.
    pub faces: Vec<Face>,
}

impl SyntheticScene {
    pub fn new(spec: SyntheticSceneSpec) -> Result<Self> {
        spec.validate()?;
        let mut faces = Vec::new();
        for p in &spec.primitives {
            match p {
                Primitive::Plane {
                    origin,
                    edge_u,
                    edge_v,
                    density,
                } => faces.push(Face::new(v(origin), v(edge_u), v(edge_v), *density)),
                Primitive::Box {
                    center,
                    half_extents,
                    rotation,
                    density,
                } => {
                    let rot = Rotation3::from_euler_angles(rotation[0], rotation[1], rotation[2]);
                    let c = v(center);
                    let axes = [
                        rot * Vec3::x() * half_extents[0],
                        rot * Vec3::y() * half_extents[1],
                        rot * Vec3::z() * half_extents[2],
                    ];
                    // For each axis a, the +a and -a faces spanned by the other
                    // two axes, wound so the normal points outward.
                    for a in 0..3 {
                        let (b, d) = ((a + 1) % 3, (a + 2) % 3);
                        let (hb, hd) = (axes[b], axes[d]);
                        let plus = c + axes[a] - hb - hd;
                        faces.push(Face::new(plus, hb * 2.0, hd * 2.0, *density));
                        let minus = c - axes[a] - hb - hd;
                        faces.push(Face::new(minus, hd * 2.0, hb * 2.0, *density));
                    }
                }
            }
        }
        Ok(SyntheticScene { spec, faces })
    }

    /// Samples the faces with jittered-grid sampling plus normal-direction
    /// noise. Returns the cloud (with analytic normals, no edges) and the face
    /// label of every point.
    pub fn sample(&self) -> (PointCloud, Vec<u32>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        let noise = (self.spec.noise_sigma > 0.0).then(|| Normal::new(0.0, self.spec.noise_sigma).unwrap());
        let mut cloud = PointCloud::default();
        let mut labels = Vec::new();
        for (label, face) in self.faces.iter().enumerate() {
            let step = face.density.sqrt();
            let nu = ((face.u.norm() * step).ceil() as usize).max(1);
            let nv = ((face.v.norm() * step).ceil() as usize).max(1);
            for a in 0..nu {
                for b in 0..nv {
                    let s = (a as f64 + rng.random::<f64>()) / nu as f64;
                    let t = (b as f64 + rng.random::<f64>()) / nv as f64;
                    let mut p = face.origin + face.u * s + face.v * t;
                    if let Some(n) = &noise {
                        p += face.normal * n.sample(&mut rng);
                    }
                    cloud.positions.push(p);
                    cloud.normals.push(face.normal);
                    labels.push(label as u32);
                }
            }
        }
        (cloud, labels)
    }

    /// Nearest hit along the ray: `(t, face label)`.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, u32)> {
        self.faces
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.intersect(origin, dir).map(|t| (t, i as u32)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }
}

/// Samples a synthetic scene. Deterministic in `spec.seed`.
pub fn generate_scene(spec: &SyntheticSceneSpec) -> Result<(PointCloud, Vec<u32>)> {
    Ok(SyntheticScene::new(spec.clone())?.sample())
}
