use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{intersect_ray, Part, Ray, SceneModel};
use crate::render::{Rig, SensorFrame};

/// Idealized depth-sensor sampling pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudMode {
    /// One ray per sensor along its optical axis.
    SinglePixel,
    /// 16x16 rays spanning each sensor's field of view.
    Grid16,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub sensor_ids: Vec<usize>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Noise-free first-hit points on the object; plane hits are dropped.
pub fn render_pointcloud(scene: &SceneModel, rig: &Rig, mode: CloudMode) -> PointCloud {
    let per_sensor: Vec<Vec<(Vector3<f64>, usize)>> = rig
        .sensors
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let rays: Vec<Ray> = match mode {
                CloudMode::SinglePixel => {
                    vec![Ray::new(s.pose.position, s.pose.optical_axis()).expect("unit axis")]
                }
                CloudMode::Grid16 => {
                    let spec = rig.spec_for(i).clone().with_grid(16, 16);
                    let frame = SensorFrame::new(&spec, &s.pose);
                    (0..frame.len()).map(|k| frame.ray(k)).collect()
                }
            };
            rays.iter()
                .filter_map(|ray| intersect_ray(ray, scene))
                .filter(|hit| hit.part == Part::Object)
                .map(|hit| (hit.point, s.id))
                .collect()
        })
        .collect();
    let (points, sensor_ids) = per_sensor.into_iter().flatten().unzip();
    PointCloud { points, sensor_ids }
}
