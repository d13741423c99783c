//! Hand-built scenes with known visibility, and a ray-cast depth oracle.

use geoset::geometry::{PointCloud, Primitive, SyntheticScene, SyntheticSceneSpec, Vec3};
use geoset::projection::{look_at, project_point, CameraView, Intrinsics, DEFAULT_DEPTH_THRESHOLD};

pub const THR: f64 = DEFAULT_DEPTH_THRESHOLD;

pub fn plane(origin: [f64; 3], u: [f64; 3], v: [f64; 3], density: f64) -> Primitive {
    Primitive::Plane {
        origin,
        edge_u: u,
        edge_v: v,
        density,
    }
}

/// Back wall at z = 3 and a smaller board at z = 2 in front of it, both
/// facing cameras near the origin that look down +z.
pub fn occluder_scene(seed: u64) -> SyntheticScene {
    SyntheticScene::new(SyntheticSceneSpec {
        primitives: vec![
            plane([-2.0, -2.0, 3.0], [0.0, 4.0, 0.0], [4.0, 0.0, 0.0], 400.0),
            plane([-0.4, -0.5, 2.0], [0.0, 1.0, 0.0], [0.8, 0.0, 0.0], 900.0),
        ],
        noise_sigma: 0.0,
        seed,
    })
    .unwrap()
}

pub fn frontal_view(id: u32, eye: Vec3, scene: &SyntheticScene) -> CameraView {
    let k = Intrinsics::from_fov(64, 48, 1.2);
    let pose = look_at(eye, eye + Vec3::z(), -Vec3::y()).unwrap();
    CameraView::render(id, k, pose, scene)
}

/// Per-pixel nearest hit of the axis-aligned planes `z = const` bounded by
/// `[x0, x1] × [y0, y1]`, computed directly from the pinhole model.
pub fn zbuffer(view: &CameraView, planes: &[(f64, [f64; 2], [f64; 2])]) -> Vec<f64> {
    let k = view.intrinsics;
    let c = view.center();
    let r_t = view.rotation().transpose();
    let mut out = vec![f64::INFINITY; (k.width * k.height) as usize];
    for v in 0..k.height {
        for u in 0..k.width {
            let d = r_t * Vec3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
            for &(z, xs, ys) in planes {
                let t = (z - c.z) / d.z;
                let hit = c + d * t;
                if t > 0.0 && hit.x >= xs[0] && hit.x <= xs[1] && hit.y >= ys[0] && hit.y <= ys[1] {
                    let cam_z = view.to_camera(&hit).z;
                    let i = (v * k.width + u) as usize;
                    out[i] = out[i].min(cam_z);
                }
            }
        }
    }
    out
}

pub const PLANES: [(f64, [f64; 2], [f64; 2]); 2] = [(3.0, [-2.0, 2.0], [-2.0, 2.0]), (2.0, [-0.4, 0.4], [-0.5, 0.5])];

/// Splits the sampled points of a view into (unoccluded, occluded) using the
/// oracle z-buffer: a point is occluded when its pixel sees a surface more
/// than the threshold nearer than the point.
pub fn classify(cloud: &PointCloud, view: &CameraView, zbuf: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut visible = Vec::new();
    let mut hidden = Vec::new();
    for (i, p) in cloud.positions.iter().enumerate() {
        if let Some(pr) = project_point(p, view) {
            let front = zbuf[(pr.v * view.intrinsics.width + pr.u) as usize];
            if front < pr.z - THR {
                hidden.push(i);
            } else {
                visible.push(i);
            }
        }
    }
    (visible, hidden)
}

pub fn wall() -> SyntheticScene {
    SyntheticScene::new(SyntheticSceneSpec {
        primitives: vec![plane([-50.0, -50.0, 2.0], [0.0, 100.0, 0.0], [100.0, 0.0, 0.0], 1.0)],
        noise_sigma: 0.0,
        seed: 0,
    })
    .unwrap()
}

pub fn wall_view(id: u32, x: f64, k: Intrinsics, scene: &SyntheticScene) -> CameraView {
    let pose = look_at(Vec3::new(x, 0.0, 0.0), Vec3::new(x, 0.0, 2.0), -Vec3::y()).unwrap();
    CameraView::render(id, k, pose, scene)
}
