use serde::{Deserialize, Serialize};

use super::rays::SensorPose;
use super::spec::SensorSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RigSensor {
    pub id: usize,
    pub pose: SensorPose,
    /// Per-sensor override of the rig-wide spec.
    pub spec: Option<SensorSpec>,
}

/// Ordered set of sensors sharing a spec unless overridden per sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Rig {
    pub sensors: Vec<RigSensor>,
    pub spec: SensorSpec,
}

impl Rig {
    pub fn new(poses: Vec<SensorPose>, spec: SensorSpec) -> Self {
        Self {
            sensors: poses
                .into_iter()
                .enumerate()
                .map(|(id, pose)| RigSensor {
                    id,
                    pose,
                    spec: None,
                })
                .collect(),
            spec,
        }
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn spec_for(&self, i: usize) -> &SensorSpec {
        self.sensors[i].spec.as_ref().unwrap_or(&self.spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::Config("rig has no sensors".into()));
        }
        self.spec.validate()?;
        for s in &self.sensors {
            if let Some(spec) = &s.spec {
                spec.validate()?;
            }
        }
        Ok(())
    }

    /// The first `n` sensors.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            sensors: self.sensors.iter().take(n).cloned().collect(),
            spec: self.spec.clone(),
        }
    }

    /// Replaces the rig-wide spec and drops per-sensor overrides.
    pub fn with_spec(&self, spec: SensorSpec) -> Self {
        Self {
            sensors: self
                .sensors
                .iter()
                .map(|s| RigSensor {
                    spec: None,
                    ..s.clone()
                })
                .collect(),
            spec,
        }
    }

    pub fn map_specs(&self, f: impl Fn(&SensorSpec) -> SensorSpec) -> Self {
        Self {
            sensors: self
                .sensors
                .iter()
                .map(|s| RigSensor {
                    spec: s.spec.as_ref().map(&f),
                    ..s.clone()
                })
                .collect(),
            spec: f(&self.spec),
        }
    }

    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, t: &nalgebra::Vector3<f64>) -> Self {
        Self {
            sensors: self
                .sensors
                .iter()
                .map(|s| RigSensor {
                    pose: s.pose.transformed(r, t),
                    ..s.clone()
                })
                .collect(),
            spec: self.spec.clone(),
        }
    }
}

/// Serialized sensor orientation: either a row-major 3x3 matrix or a unit
/// quaternion `[w, x, y, z]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrientationRepr {
    Matrix { matrix: [[f64; 3]; 3] },
    Quaternion { quaternion: [f64; 4] },
}
