use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{loss_and_grad, LossNorm};
use crate::error::{Error, Result};
use crate::geometry::{intersect_ray, Ray, SceneModel};
use crate::render::engine::{combine, jitter, lift_mesh_vertices, raw_parts, ObjectGeom, PreparedSensor, RayAssign, Timing};
use crate::render::{SensorPose, SensorSpec, TransientHistogram};
use crate::scalar::{Dual, Real};

/// One measurement of a known scene from a known sensor pose.
#[derive(Clone, Debug)]
pub struct CalibCapture {
    pub scene: SceneModel,
    pub pose: SensorPose,
    pub histogram: TransientHistogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibConfig {
    pub steps: usize,
    pub lr_scale: f64,
    pub lr_log_bin_width: f64,
    pub lr_offset: f64,
    pub lr_log_gain: f64,
    /// Fit a global intensity gain (unknown reflectance or emitter power).
    pub fit_gain: bool,
    /// Coarse search, relative to the initial spec: kernel scale factors,
    /// bin-width factors, and offset shifts (bins).
    pub grid_scale: Vec<f64>,
    pub grid_bin_width: Vec<f64>,
    pub grid_offset: Vec<f64>,
    pub final_lr_fraction: f64,
    pub loss_norm: LossNorm,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl Default for CalibConfig {
    fn default() -> Self {
        Self {
            steps: 400,
            lr_scale: 0.01,
            lr_log_bin_width: 0.002,
            lr_offset: 0.02,
            lr_log_gain: 0.01,
            fit_gain: true,
            grid_scale: linspace(0.6, 1.8, 13),
            grid_bin_width: linspace(0.95, 1.05, 5),
            grid_offset: linspace(-8.0, 8.0, 33),
            final_lr_fraction: 0.01,
            loss_norm: LossNorm::L2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibResult {
    pub s_scale: f64,
    pub bin_width_s: f64,
    pub offset_bins: f64,
    pub gain: f64,
    pub residual: f64,
    pub initial_residual: f64,
    /// Fewer than three distinct capture distances: the timing parameters
    /// are not jointly identifiable.
    pub low_confidence: bool,
    pub loss_trace: Vec<f64>,
}

impl CalibResult {
    /// `spec` with the calibrated timing parameters.
    pub fn apply(&self, spec: &SensorSpec) -> SensorSpec {
        SensorSpec {
            jitter_scale: self.s_scale,
            bin_width_s: self.bin_width_s,
            temporal_offset_bins: self.offset_bins,
            ..spec.clone()
        }
    }
}

struct Prepared {
    sensor: PreparedSensor,
    assign: Vec<RayAssign>,
    scene: SceneModel,
}

// Variables: jitter scale, log bin width, offset (bins), log gain.
fn render_capture<T: Real>(p: &Prepared, vars: &[T; 4]) -> Vec<T> {
    let timing = Timing {
        bin_width: vars[1].exp(),
        offset_bins: vars[2],
        jitter_scale: vars[0],
    };
    let verts = lift_mesh_vertices::<T>(&p.scene);
    let geom = p.scene.object().map(|m| ObjectGeom {
        vertices: &verts,
        triangles: m.triangles(),
    });
    let parts = raw_parts(&p.sensor, &p.assign, geom.as_ref(), &timing, true);
    let raw = combine(&parts, T::cst(p.scene.albedo_object()), T::cst(p.scene.albedo_plane()));
    let gain = vars[3].exp();
    jitter(&p.sensor, &raw, &timing, true).into_iter().map(|v| v * gain).collect()
}

fn distinct_distances(captures: &[CalibCapture]) -> usize {
    let mut d: Vec<i64> = captures
        .iter()
        .filter_map(|c| {
            let ray = Ray::new(c.pose.position, c.pose.optical_axis()).ok()?;
            intersect_ray(&ray, &c.scene).map(|h| (h.distance * 1000.0).round() as i64)
        })
        .collect();
    d.sort_unstable();
    d.dedup();
    d.len()
}

/// Recovers the kernel scale, bin width and temporal offset from captures of
/// known scenes, starting from `spec`.
pub fn calibrate_sensor(captures: &[CalibCapture], spec: &SensorSpec, cfg: &CalibConfig) -> Result<CalibResult> {
    if captures.is_empty() {
        return Err(Error::Empty("calibration captures"));
    }
    spec.validate()?;
    let prepared: Vec<Prepared> = captures
        .iter()
        .enumerate()
        .map(|(i, c)| -> Result<Prepared> {
            if c.histogram.n_bins() != spec.n_bins {
                return Err(Error::Config(format!("capture {i}: bin count does not match the spec")));
            }
            let sensor = PreparedSensor::new(spec, &c.pose, c.scene.plane(), i)?;
            let assign = sensor.assign(c.scene.object_bvh());
            Ok(Prepared {
                sensor,
                assign,
                scene: c.scene.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let observed: Vec<TransientHistogram> = captures.iter().map(|c| c.histogram.clone()).collect();

    let eval_f64 = |vars: &[f64; 4]| -> Vec<Vec<f64>> { prepared.par_iter().map(|p| render_capture(p, vars)).collect() };
    let loss_f64 = |values: &[Vec<f64>]| -> f64 {
        let zero = vec![vec![0.0; spec.n_bins * 4]; values.len()];
        loss_and_grad(values, &zero, &observed, 4, cfg.loss_norm, false).0
    };
    // Closed-form gain for fixed timing: least squares over all captures.
    let best_gain = |values: &[Vec<f64>]| -> f64 {
        let (mut rr, mut rh) = (0.0, 0.0);
        for (r, o) in values.iter().zip(&observed) {
            for (a, b) in r.iter().zip(&o.counts) {
                rr += a * a;
                rh += a * b;
            }
        }
        if rr > 0.0 && rh > 0.0 {
            rh / rr
        } else {
            1.0
        }
    };

    let init_vars = [spec.jitter_scale, spec.bin_width_s.ln(), spec.temporal_offset_bins, 0.0];
    let initial_residual = loss_f64(&eval_f64(&init_vars));

    // Coarse grid; the initial spec is always a candidate.
    let mut grid = vec![(initial_residual, init_vars)];
    for &fw in &cfg.grid_bin_width {
        for &fs in &cfg.grid_scale {
            let row: Vec<(f64, [f64; 4])> = cfg
                .grid_offset
                .par_iter()
                .map(|&di| {
                    let mut v = [spec.jitter_scale * fs, (spec.bin_width_s * fw).ln(), spec.temporal_offset_bins + di, 0.0];
                    let mut values = eval_f64(&v);
                    if cfg.fit_gain {
                        let g = best_gain(&values);
                        v[3] = g.ln();
                        values.iter_mut().for_each(|h| h.iter_mut().for_each(|x| *x *= g));
                    }
                    (loss_f64(&values), v)
                })
                .collect();
            grid.extend(row);
        }
    }
    let (_, start) = grid
        .iter()
        .copied()
        .fold((f64::INFINITY, init_vars), |acc, g| if g.0 < acc.0 { g } else { acc });

    let lr = vec![
        cfg.lr_scale,
        cfg.lr_log_bin_width,
        cfg.lr_offset,
        if cfg.fit_gain { cfg.lr_log_gain } else { 0.0 },
    ];
    let mut adam = Adam::new(lr, 0.9, 0.999, 1e-8);
    let mut theta = start.to_vec();
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    let mut best = (f64::INFINITY, start);
    for step in 0..=cfg.steps {
        let vars: [Dual<4>; 4] = std::array::from_fn(|i| Dual::variable(theta[i], i));
        let out: Vec<Vec<Dual<4>>> = prepared.par_iter().map(|p| render_capture(p, &vars)).collect();
        let values: Vec<Vec<f64>> = out.iter().map(|h| h.iter().map(|d| d.v).collect()).collect();
        let jac: Vec<Vec<f64>> = out.iter().map(|h| h.iter().flat_map(|d| d.d).collect()).collect();
        let (loss, grad) = loss_and_grad(&values, &jac, &observed, 4, cfg.loss_norm, false);
        trace.push(loss);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                step,
                message: "non-finite calibration loss".into(),
                trace,
            });
        }
        if loss < best.0 {
            best = (loss, [theta[0], theta[1], theta[2], theta[3]]);
        }
        if step == cfg.steps {
            break;
        }
        let x = step as f64 / cfg.steps as f64;
        let f = cfg.final_lr_fraction;
        adam.step(&mut theta, &grad, f + (1.0 - f) * 0.5 * (1.0 + (std::f64::consts::PI * x).cos()));
        theta[0] = theta[0].max(1e-3);
    }
    let (residual, v) = best;
    Ok(CalibResult {
        s_scale: v[0],
        bin_width_s: v[1].exp(),
        offset_bins: v[2],
        gain: v[3].exp(),
        residual,
        initial_residual,
        low_confidence: distinct_distances(captures) < 3,
        loss_trace: trace,
    })
}
