//! File formats: rig JSON, histogram CSV with a JSON sidecar, parameter JSON
//! and loss traces.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::render::rig::OrientationRepr;
use crate::render::{Rig, RigSensor, SensorPose, SensorSpec, TransientHistogram};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct SensorRecord {
    #[serde(default)]
    id: Option<usize>,
    position: [f64; 3],
    orientation: OrientationRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec: Option<SensorSpec>,
}

#[derive(Serialize, Deserialize)]
struct RigRecord {
    #[serde(default)]
    spec: SensorSpec,
    sensors: Vec<SensorRecord>,
}

fn orientation_matrix(repr: &OrientationRepr) -> Result<Matrix3<f64>> {
    match repr {
        OrientationRepr::Matrix { matrix } => Ok(Matrix3::from_fn(|r, c| matrix[r][c])),
        OrientationRepr::Quaternion { quaternion: [w, x, y, z] } => {
            let q = Quaternion::new(*w, *x, *y, *z);
            if !(q.norm() > 1e-12) {
                return Err(Error::InvalidParameter("zero quaternion".into()));
            }
            Ok(UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner())
        }
    }
}

pub fn rig_to_json(rig: &Rig) -> String {
    let record = RigRecord {
        spec: rig.spec.clone(),
        sensors: rig
            .sensors
            .iter()
            .map(|s| SensorRecord {
                id: Some(s.id),
                position: s.pose.position.into(),
                orientation: OrientationRepr::Matrix {
                    matrix: std::array::from_fn(|r| std::array::from_fn(|c| s.pose.orientation[(r, c)])),
                },
                spec: s.spec.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&record).expect("rig serializes");
    text.push('\n');
    text
}

pub fn rig_from_json(text: &str) -> Result<Rig, String> {
    let record: RigRecord = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut sensors = Vec::with_capacity(record.sensors.len());
    for (i, s) in record.sensors.into_iter().enumerate() {
        let orientation = orientation_matrix(&s.orientation).map_err(|e| format!("sensor {i}: {e}"))?;
        let pose = SensorPose::new(Vector3::from(s.position), orientation)
            .map_err(|e| format!("sensor {i}: {e}"))?;
        sensors.push(RigSensor {
            id: s.id.unwrap_or(i),
            pose,
            spec: s.spec,
        });
    }
    let rig = Rig {
        sensors,
        spec: record.spec,
    };
    rig.validate().map_err(|e| e.to_string())?;
    Ok(rig)
}

pub fn write_rig(path: &Path, rig: &Rig) -> Result<()> {
    write_text(path, &rig_to_json(rig))
}

pub fn read_rig(path: &Path) -> Result<Rig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    rig_from_json(&text).map_err(|m| Error::format(path, m))
}

/// Sidecar path for a histogram CSV: `hist.csv` -> `hist.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

#[derive(Serialize, Deserialize)]
struct HistogramSidecar {
    spec: SensorSpec,
    sensor_ids: Vec<usize>,
    bin_width_s: Vec<f64>,
}

pub fn histograms_to_csv(hists: &[TransientHistogram]) -> String {
    let mut out = String::from("sensor_id,bin_index,count\n");
    for h in hists {
        for (i, c) in h.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{:?}\n", h.sensor_id, i, c));
        }
    }
    out
}

/// Writes `hists` as CSV plus a JSON sidecar carrying `spec`.
pub fn write_histograms(path: &Path, hists: &[TransientHistogram], spec: &SensorSpec) -> Result<()> {
    write_text(path, &histograms_to_csv(hists))?;
    let sidecar = HistogramSidecar {
        spec: spec.clone(),
        sensor_ids: hists.iter().map(|h| h.sensor_id).collect(),
        bin_width_s: hists.iter().map(|h| h.bin_width_s).collect(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

/// Reads a histogram CSV. Rows may come in any order; each sensor must cover
/// bins `0..n` without gaps. Bin widths come from the sidecar when present,
/// otherwise from `default_spec`.
pub fn read_histograms(path: &Path, default_spec: &SensorSpec) -> Result<Vec<TransientHistogram>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["sensor_id", "bin_index", "count"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |field: &str| Error::Parse {
            path: path.into(),
            line,
            message: format!("invalid {field}"),
        };
        let sensor: usize = record[0].parse().map_err(|_| parse_err("sensor_id"))?;
        let bin: usize = record[1].parse().map_err(|_| parse_err("bin_index"))?;
        let count: f64 = record[2].parse().map_err(|_| parse_err("count"))?;
        if !count.is_finite() {
            return Err(parse_err("count"));
        }
        rows.push((sensor, bin, count));
    }
    let sidecar: Option<HistogramSidecar> = {
        let p = sidecar_path(path);
        if p.exists() {
            Some(read_json(&p)?)
        } else {
            None
        }
    };
    let mut ids: Vec<usize> = rows.iter().map(|r| r.0).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let mut bins: Vec<(usize, f64)> = rows.iter().filter(|r| r.0 == id).map(|r| (r.1, r.2)).collect();
        bins.sort_by_key(|b| b.0);
        if bins.iter().enumerate().any(|(i, b)| b.0 != i) {
            return Err(Error::format(path, format!("sensor {id}: bins are not contiguous from 0")));
        }
        let bin_width_s = sidecar
            .as_ref()
            .and_then(|s| s.sensor_ids.iter().position(|&x| x == id).map(|k| s.bin_width_s[k]))
            .unwrap_or(default_spec.bin_width_s);
        out.push(TransientHistogram {
            counts: bins.into_iter().map(|b| b.1).collect(),
            bin_width_s,
            sensor_id: id,
        });
    }
    Ok(out)
}

/// Spec stored in a histogram sidecar, if any.
pub fn read_histogram_spec(path: &Path) -> Result<Option<SensorSpec>> {
    let p = sidecar_path(path);
    if !p.exists() {
        return Ok(None);
    }
    let sidecar: HistogramSidecar = read_json(&p)?;
    Ok(Some(sidecar.spec))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.into(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn write_loss_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut out = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{l:?}\n"));
    }
    write_text(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rig() -> Rig {
        let poses = vec![
            SensorPose::look_at(Vector3::new(0.4, 0.0, 0.3), Vector3::zeros()).unwrap(),
            SensorPose::look_at(Vector3::new(-0.2, 0.3, 0.5), Vector3::zeros()).unwrap(),
        ];
        Rig::new(poses, SensorSpec::default())
    }

    #[test]
    fn rig_round_trip() {
        let r = rig();
        let back = rig_from_json(&rig_to_json(&r)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn quaternion_orientation() {
        let text = r#"{"sensors":[{"position":[0,0,1],"orientation":{"quaternion":[0,1,0,0]}}]}"#;
        let rig = rig_from_json(text).unwrap();
        // 180 degrees about x: the optical axis points down.
        assert!((rig.sensors[0].pose.optical_axis() - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn bad_orientation_rejected() {
        let text = r#"{"sensors":[{"position":[0,0,1],"orientation":{"matrix":[[1,0,0],[0,1,0],[0,0,2]]}}]}"#;
        assert!(rig_from_json(text).is_err());
    }

    #[test]
    fn histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let hists = vec![
            TransientHistogram {
                counts: vec![0.0, 1.5, 1e-300, 7.25],
                bin_width_s: 1e-10,
                sensor_id: 0,
            },
            TransientHistogram {
                counts: vec![3.0, 0.1, 0.2, 0.3],
                bin_width_s: 2e-10,
                sensor_id: 4,
            },
        ];
        write_histograms(&path, &hists, &SensorSpec::default()).unwrap();
        let back = read_histograms(&path, &SensorSpec::default()).unwrap();
        assert_eq!(back, hists);
    }

    #[test]
    fn histogram_parse_error_has_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        fs::write(&path, "sensor_id,bin_index,count\n0,0,1\n0,1,abc\n").unwrap();
        match read_histograms(&path, &SensorSpec::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
