use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use crate::error::{Error, Result};
use crate::geometry::Pose6D;
use crate::grad::SceneParams;

fn posed_points(pose: &Pose6D, points: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
    let r = pose.rotation()?;
    let t = pose.t();
    Ok(points.iter().map(|x| r * x + t).collect())
}

/// Mean distance between corresponding model points under the two poses.
pub fn compute_add(pred: &Pose6D, gt: &Pose6D, model_points: &[Vector3<f64>]) -> Result<f64> {
    if model_points.is_empty() {
        return Err(Error::Empty("model points"));
    }
    let a = posed_points(pred, model_points)?;
    let b = posed_points(gt, model_points)?;
    Ok(a.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum::<f64>() / a.len() as f64)
}

/// Mean distance from each predicted model point to the nearest
/// ground-truth model point.
pub fn compute_add_s(pred: &Pose6D, gt: &Pose6D, model_points: &[Vector3<f64>]) -> Result<f64> {
    if model_points.is_empty() {
        return Err(Error::Empty("model points"));
    }
    let a = posed_points(pred, model_points)?;
    let tree = KdTree::new(posed_points(gt, model_points)?);
    Ok(a.iter().map(|p| tree.nearest(p).expect("non-empty").1.sqrt()).sum::<f64>() / a.len() as f64)
}

/// Area under the accuracy-threshold curve on `[0, max_threshold]`, scaled to
/// 0–100, where accuracy(τ) is the fraction of errors ≤ τ. Integrated exactly:
/// each error contributes `max(0, max_threshold − e) / max_threshold`.
pub fn auc(errors: &[f64], max_threshold: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty("error list"));
    }
    if !(max_threshold > 0.0) {
        return Err(Error::InvalidParameter("AUC threshold must be positive".into()));
    }
    let sum: f64 = errors
        .iter()
        .map(|&e| if e.is_nan() { 0.0 } else { (max_threshold - e.max(0.0)).max(0.0) / max_threshold })
        .sum();
    Ok(100.0 * sum / errors.len() as f64)
}

/// Accuracy-threshold curve sampled at `n` evenly spaced thresholds in
/// `[0, max_threshold]`.
pub fn accuracy_curve(errors: &[f64], max_threshold: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let tau = max_threshold * i as f64 / (n.max(2) - 1) as f64;
            let acc = errors.iter().filter(|&&e| e <= tau).count() as f64 / errors.len().max(1) as f64;
            (tau, acc)
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseMetric {
    Add,
    AddS,
}

/// Per-sample errors with summary statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: PoseMetric,
    /// Per-sample ADD or ADD-S (meters); sphere samples report the center
    /// error here.
    pub errors: Vec<f64>,
    pub auc: f64,
    pub median: f64,
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diameter_errors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub center_errors: Vec<f64>,
}

pub const AUC_MAX_THRESHOLD: f64 = 0.10;

impl MetricReport {
    pub fn from_errors(metric: PoseMetric, errors: Vec<f64>) -> Result<Self> {
        Ok(Self {
            metric,
            auc: auc(&errors, AUC_MAX_THRESHOLD)?,
            median: median(&errors),
            mean: errors.iter().sum::<f64>() / errors.len() as f64,
            errors,
            diameter_errors: Vec::new(),
            center_errors: Vec::new(),
        })
    }

    /// Errors for matching prediction/ground-truth pairs of either kind.
    pub fn evaluate(
        pairs: &[(SceneParams, SceneParams)],
        model_points: &[Vector3<f64>],
        metric: PoseMetric,
    ) -> Result<Self> {
        let mut errors = Vec::with_capacity(pairs.len());
        let mut diameter_errors = Vec::new();
        let mut center_errors = Vec::new();
        for (pred, gt) in pairs {
            match (pred, gt) {
                (SceneParams::PosedMesh { .. }, SceneParams::PosedMesh { .. }) => {
                    let (p, g) = (pred.pose().expect("posed"), gt.pose().expect("posed"));
                    errors.push(match metric {
                        PoseMetric::Add => compute_add(&p, &g, model_points)?,
                        PoseMetric::AddS => compute_add_s(&p, &g, model_points)?,
                    });
                }
                (
                    SceneParams::Sphere { center: cp, diameter: dp, .. },
                    SceneParams::Sphere { center: cg, diameter: dg, .. },
                ) => {
                    let ce = (Vector3::from(*cp) - Vector3::from(*cg)).norm();
                    center_errors.push(ce);
                    diameter_errors.push((dp - dg).abs());
                    errors.push(ce);
                }
                _ => return Err(Error::Config("prediction and ground truth differ in kind".into())),
            }
        }
        let mut report = Self::from_errors(metric, errors)?;
        report.diameter_errors = diameter_errors;
        report.center_errors = center_errors;
        Ok(report)
    }
}
