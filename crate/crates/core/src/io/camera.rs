//! Camera lists as JSON: an array of
//! `{view_id?, fx, fy, cx, cy, width, height, world_to_camera: [16 floats, row-major]}`.

use std::path::Path;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::projection::{CameraView, DepthMap, Intrinsics};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    /// Defaults to the record's position in the list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_id: Option<u32>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub world_to_camera: [f64; 16],
}

impl CameraRecord {
    pub fn from_view(view: &CameraView) -> Self {
        let k = view.intrinsics;
        let mut m = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                m[4 * r + c] = view.world_to_camera[(r, c)];
            }
        }
        CameraRecord {
            view_id: Some(view.view_id),
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            world_to_camera: m,
        }
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        }
    }

    pub fn world_to_camera(&self) -> Matrix4<f64> {
        Matrix4::from_row_slice(&self.world_to_camera)
    }

    /// Builds a validated view; `index` is used when the record has no id.
    pub fn into_view(&self, index: usize, depth: DepthMap) -> Result<CameraView> {
        let view = CameraView {
            view_id: self.view_id.unwrap_or(index as u32),
            intrinsics: self.intrinsics(),
            world_to_camera: self.world_to_camera(),
            depth,
        };
        view.validate()?;
        Ok(view)
    }
}

pub fn read_cameras(path: &Path) -> Result<Vec<CameraRecord>> {
    read_json(path)
}

pub fn write_cameras(path: &Path, views: &[CameraView]) -> Result<()> {
    let records: Vec<CameraRecord> = views.iter().map(CameraRecord::from_view).collect();
    write_json(path, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::projection::look_at;

    #[test]
    fn round_trip_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cameras.json");
        let k = Intrinsics::from_fov(8, 6, 1.2);
        let pose = look_at(Vec3::new(1.0, 2.0, 3.0), Vec3::zeros(), Vec3::z()).unwrap();
        let view = CameraView {
            view_id: 7,
            intrinsics: k,
            world_to_camera: pose,
            depth: DepthMap::zeros(8, 6),
        };
        write_cameras(&path, std::slice::from_ref(&view)).unwrap();
        let records = read_cameras(&path).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].into_view(0, DepthMap::zeros(8, 6)).unwrap(), view);
    }

    #[test]
    fn missing_id_uses_position() {
        let text = br#"[{"fx":1,"fy":1,"cx":0,"cy":0,"width":1,"height":1,
            "world_to_camera":[1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]}]"#;
        let recs: Vec<CameraRecord> = super::super::parse_json(text, Path::new("c.json")).unwrap();
        assert_eq!(recs[0].into_view(3, DepthMap::zeros(1, 1)).unwrap().view_id, 3);
    }

    #[test]
    fn short_matrix_is_a_format_error() {
        let text = br#"[{"fx":1,"fy":1,"cx":0,"cy":0,"width":1,"height":1,"world_to_camera":[1,0]}]"#;
        let err = super::super::parse_json::<Vec<CameraRecord>>(text, Path::new("c.json")).unwrap_err();
        assert_eq!(err.kind(), "format");
        assert!(err.offset().is_some());
    }
}
