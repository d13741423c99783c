//! Posed pinhole views, projection of geometric consistency sets into them,
//! view-pair mining and match-index construction.

mod matches;
mod overlap;
mod project;

pub use matches::{build_match_index, pixel_point_matches, MatchIndex, MatchParams, PixelPair, PixelPointMatch, SetTuple};
pub use overlap::{compute_overlap, mine_pairs, MiningParams, ViewPair};
pub use project::{project_geo_sets, PixelEntry, ViewProjection};

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::geometry::{PointCloud, SyntheticScene, Vec3};
use crate::{Error, Result};

/// Depth-validity threshold in metres.
pub const DEFAULT_DEPTH_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Centered intrinsics with the given horizontal field of view.
    pub fn from_fov(width: u32, height: u32, hfov_radians: f64) -> Self {
        let f = 0.5 * width as f64 / (0.5 * hfov_radians).tan();
        Intrinsics {
            fx: f,
            fy: f,
            cx: 0.5 * (width as f64 - 1.0),
            cy: 0.5 * (height as f64 - 1.0),
            width,
            height,
        }
    }
}

/// Integer pixel coordinate, `u` along the row and `v` down the columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub u: u32,
    pub v: u32,
}

impl Pixel {
    pub fn new(u: u32, v: u32) -> Self {
        Pixel { u, v }
    }

    /// Row-major offset into a `width`-wide grid.
    pub fn index(&self, width: u32) -> usize {
        self.v as usize * width as usize + self.u as usize
    }
}

/// Row-major depth map in metres; `0` marks invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl DepthMap {
    pub fn zeros(width: u32, height: u32) -> Self {
        DepthMap {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn get(&self, u: u32, v: u32) -> f32 {
        self.data[v as usize * self.width as usize + u as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Result of projecting a world point into a view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: u32,
    pub v: u32,
    /// Camera-frame depth in metres.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub view_id: u32,
    pub intrinsics: Intrinsics,
    /// Rigid world-to-camera transform; the camera looks down `+z` with `+y`
    /// pointing down the image.
    pub world_to_camera: Matrix4<f64>,
    pub depth: DepthMap,
}

impl CameraView {
    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0) {
            return Err(Error::invalid(format!("view {}: focal lengths must be positive", self.view_id)));
        }
        if self.depth.width != k.width || self.depth.height != k.height {
            return Err(Error::invalid(format!("view {}: depth size differs from intrinsics", self.view_id)));
        }
        if self.depth.data.len() != k.width as usize * k.height as usize {
            return Err(Error::invalid(format!("view {}: depth buffer has wrong length", self.view_id)));
        }
        if self.depth.data.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::invalid(format!("view {}: negative or NaN depth", self.view_id)));
        }
        let r = self.rotation();
        if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-5 {
            return Err(Error::invalid(format!("view {}: rotation block is not orthonormal", self.view_id)));
        }
        let bottom = self.world_to_camera.row(3);
        if (bottom[0], bottom[1], bottom[2], bottom[3]) != (0.0, 0.0, 0.0, 1.0) {
            return Err(Error::invalid(format!("view {}: last transform row must be 0 0 0 1", self.view_id)));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.world_to_camera.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vec3 {
        self.world_to_camera.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn to_camera(&self, p_world: &Vec3) -> Vec3 {
        self.rotation() * p_world + self.translation()
    }

    pub fn to_world(&self, p_cam: &Vec3) -> Vec3 {
        self.rotation().transpose() * (p_cam - self.translation())
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vec3 {
        self.to_world(&Vec3::zeros())
    }

    /// Camera-frame point at depth `z` behind pixel `(u, v)`.
    pub fn backproject(&self, u: u32, v: u32, z: f64) -> Vec3 {
        let k = &self.intrinsics;
        Vec3::new((u as f64 - k.cx) * z / k.fx, (v as f64 - k.cy) * z / k.fy, z)
    }

    /// Renders the depth of a synthetic scene by casting one ray through
    /// every pixel centre.
    pub fn render(view_id: u32, intrinsics: Intrinsics, world_to_camera: Matrix4<f64>, scene: &SyntheticScene) -> Self {
        let mut view = CameraView {
            view_id,
            intrinsics,
            world_to_camera,
            depth: DepthMap::zeros(intrinsics.width, intrinsics.height),
        };
        let origin = view.center();
        let rot_t = view.rotation().transpose();
        for v in 0..intrinsics.height {
            for u in 0..intrinsics.width {
                // Ray with unit camera-frame z, so the hit parameter is depth.
                let dir = rot_t * view.backproject(u, v, 1.0);
                if let Some((t, _)) = scene.cast(&origin, &dir) {
                    view.depth.data[Pixel::new(u, v).index(intrinsics.width)] = t as f32;
                }
            }
        }
        view
    }
}

/// World-to-camera transform for a camera at `eye` looking at `target`,
/// with `up` mapped towards image up (`−y`).
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Matrix4<f64>> {
    let forward = (target - eye).try_normalize(1e-12).ok_or_else(|| Error::invalid("eye equals target"))?;
    let down = (-up - forward * (-up).dot(&forward))
        .try_normalize(1e-12)
        .ok_or_else(|| Error::invalid("up is parallel to the viewing direction"))?;
    let right = down.cross(&forward);
    let rot = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    let t = -(rot * eye);
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    Ok(m)
}

/// Pinhole projection with nearest-pixel rounding. `None` behind the camera
/// or outside the image.
pub fn project_point(p_world: &Vec3, view: &CameraView) -> Option<Projection> {
    let c = view.to_camera(p_world);
    if c.z <= 0.0 {
        return None;
    }
    let k = &view.intrinsics;
    let u = (k.fx * c.x / c.z + k.cx).round();
    let v = (k.fy * c.y / c.z + k.cy).round();
    if u < 0.0 || v < 0.0 || u >= k.width as f64 || v >= k.height as f64 {
        return None;
    }
    Some(Projection {
        u: u as u32,
        v: v as u32,
        z: c.z,
    })
}

/// True when the stored depth at `(u, v)` is positive and within
/// `threshold` metres of `z`.
pub fn depth_validate(u: u32, v: u32, z: f64, view: &CameraView, threshold: f64) -> bool {
    let d = view.depth.get(u, v) as f64;
    d > 0.0 && (z - d).abs() <= threshold
}

/// Z-buffer splat of the cloud: each pixel keeps the smallest camera depth
/// of the points that project onto it.
pub fn splat_depth(cloud: &PointCloud, view: &CameraView) -> DepthMap {
    let k = &view.intrinsics;
    let mut depth = DepthMap::zeros(k.width, k.height);
    for p in &cloud.positions {
        if let Some(pr) = project_point(p, view) {
            let d = &mut depth.data[Pixel::new(pr.u, pr.v).index(k.width)];
            let z = pr.z as f32;
            if *d == 0.0 || z < *d {
                *d = z;
            }
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn view(depth_fill: f32) -> CameraView {
        let intrinsics = Intrinsics {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        };
        let mut depth = DepthMap::zeros(640, 480);
        depth.data.fill(depth_fill);
        CameraView {
            view_id: 0,
            intrinsics,
            world_to_camera: Matrix4::identity(),
            depth,
        }
    }

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let p = project_point(&Vec3::new(0.0, 0.0, 2.0), &view(2.0)).unwrap();
        assert_eq!((p.u, p.v, p.z), (320, 240, 2.0));
    }

    #[test]
    fn behind_camera_is_none() {
        assert!(project_point(&Vec3::new(0.0, 0.0, -1.0), &view(2.0)).is_none());
        assert!(project_point(&Vec3::new(0.0, 0.0, 0.0), &view(2.0)).is_none());
    }

    #[test]
    fn off_axis_point() {
        let p = project_point(&Vec3::new(1.0, 0.0, 2.0), &view(2.0)).unwrap();
        assert_eq!((p.u, p.v), (570, 240));
        // Far off to the side falls outside the image.
        assert!(project_point(&Vec3::new(5.0, 0.0, 2.0), &view(2.0)).is_none());
    }

    #[test]
    fn depth_validity() {
        let v = view(2.0);
        assert!(depth_validate(10, 10, 2.0, &v, DEFAULT_DEPTH_THRESHOLD));
        assert!(depth_validate(10, 10, 2.04, &v, DEFAULT_DEPTH_THRESHOLD));
        assert!(!depth_validate(10, 10, 2.06, &v, DEFAULT_DEPTH_THRESHOLD));
        assert!(!depth_validate(10, 10, 1.94, &v, DEFAULT_DEPTH_THRESHOLD));
        let hole = view(0.0);
        assert!(!depth_validate(10, 10, 0.0, &hole, DEFAULT_DEPTH_THRESHOLD));
    }

    #[test]
    fn look_at_maps_target_to_principal_axis() {
        let eye = Vec3::new(1.0, 2.0, 3.0);
        let target = Vec3::new(0.5, -1.0, 0.2);
        let m = look_at(eye, target, Vec3::z()).unwrap();
        let mut v = view(1.0);
        v.world_to_camera = m;
        v.validate().unwrap();
        let c = v.to_camera(&target);
        assert!(c.x.abs() < 1e-12 && c.y.abs() < 1e-12 && c.z > 0.0);
        assert!((v.center() - eye).norm() < 1e-12);
        // World up appears towards the top of the image.
        let above = v.to_camera(&(target + Vec3::z() * 0.1));
        assert!(above.y < 0.0);
    }

    #[test]
    fn backproject_inverts_projection() {
        let v = view(1.0);
        let c = v.backproject(100, 50, 2.5);
        let p = project_point(&v.to_world(&c), &v).unwrap();
        assert_eq!((p.u, p.v), (100, 50));
        assert!((p.z - 2.5).abs() < 1e-12);
    }
}
