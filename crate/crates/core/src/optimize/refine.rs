use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::albedo::fit_albedos;
use super::loss::{histogram_loss, loss_and_grad, LossNorm};
use crate::error::{Error, Result};
use crate::grad::{PreparedProblem, SceneParams};
use crate::render::TransientHistogram;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub lr_rot: f64,
    pub lr_trans: f64,
    /// Applied to the logarithm of each albedo.
    pub lr_albedo: f64,
    /// Sphere diameter.
    pub lr_size: f64,
    pub steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub loss_norm: LossNorm,
    /// Compare histograms after dividing each by its total.
    pub normalize: bool,
    /// Cosine-anneal the learning rates to this fraction of their initial
    /// value over the run (1 keeps them constant).
    pub final_lr_fraction: f64,
    /// Before the first step, replace the initial albedos by their
    /// closed-form least-squares fit when that lowers the loss.
    pub fit_initial_albedos: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            lr_rot: 0.01,
            lr_trans: 0.001,
            lr_albedo: 0.01,
            lr_size: 0.001,
            steps: 200,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            loss_norm: LossNorm::L2,
            normalize: false,
            final_lr_fraction: 1.0,
            fit_initial_albedos: true,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let lrs = [self.lr_rot, self.lr_trans, self.lr_albedo, self.lr_size];
        if lrs.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::Config("invalid Adam hyperparameters".into()));
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return Err(Error::Config("final_lr_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }

    fn learning_rates(&self, params: &SceneParams) -> Vec<f64> {
        match params {
            SceneParams::PosedMesh { .. } => [vec![self.lr_rot; 6], vec![self.lr_trans; 3], vec![self.lr_albedo; 2]].concat(),
            SceneParams::Sphere { .. } => [vec![self.lr_trans; 3], vec![self.lr_size], vec![self.lr_albedo; 2]].concat(),
        }
    }

    fn lr_scale(&self, step: usize) -> f64 {
        let f = self.final_lr_fraction;
        let x = step as f64 / self.steps.max(1) as f64;
        f + (1.0 - f) * 0.5 * (1.0 + (std::f64::consts::PI * x).cos())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefineResult {
    /// Parameters at the lowest recorded loss, with the rotation
    /// re-orthonormalized.
    pub params: SceneParams,
    pub loss: f64,
    pub best_step: usize,
    /// Loss at every evaluated iterate: the initialization, then after each
    /// update.
    pub loss_trace: Vec<f64>,
}

const MIN_DIAMETER: f64 = 1e-3;

// Optimization variables: albedos enter as logarithms.
fn to_theta(p: &SceneParams) -> Vec<f64> {
    let mut v = p.to_vec();
    let n = v.len();
    v[n - 2] = v[n - 2].ln();
    v[n - 1] = v[n - 1].ln();
    v
}

fn from_theta(template: &SceneParams, theta: &[f64]) -> SceneParams {
    let mut v = theta.to_vec();
    let n = v.len();
    v[n - 2] = v[n - 2].exp();
    v[n - 1] = v[n - 1].exp();
    if let SceneParams::Sphere { .. } = template {
        v[3] = v[3].max(MIN_DIAMETER);
    }
    template.with_vec(&v)
}

pub(crate) fn check_observed(problem: &PreparedProblem, observed: &[TransientHistogram]) -> Result<()> {
    if observed.len() != problem.n_sensors() {
        return Err(Error::Config(format!(
            "{} observed histograms for a {}-sensor rig",
            observed.len(),
            problem.n_sensors()
        )));
    }
    for (o, s) in observed.iter().zip(&problem.sensors) {
        if o.n_bins() != s.spec.n_bins {
            return Err(Error::Config(format!(
                "sensor {}: {} bins observed, spec has {}",
                s.sensor_id,
                o.n_bins(),
                s.spec.n_bins
            )));
        }
        if o.counts.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(format!("sensor {}: non-finite observed counts", s.sensor_id)));
        }
    }
    Ok(())
}

/// Loss of `params` against `observed` under `cfg`'s norm.
pub fn evaluate_loss(problem: &PreparedProblem, params: &SceneParams, observed: &[TransientHistogram], cfg: &RefineConfig) -> Result<f64> {
    let rendered = problem.render(params)?;
    Ok(histogram_loss(&rendered, observed, cfg.loss_norm, cfg.normalize))
}

/// Adam on `Σ_s ‖render_s(P) − observed_s‖`, returning the best iterate.
pub fn refine(
    problem: &PreparedProblem,
    init: &SceneParams,
    observed: &[TransientHistogram],
    cfg: &RefineConfig,
) -> Result<RefineResult> {
    cfg.validate()?;
    check_observed(problem, observed)?;
    problem.scene.check(init)?;
    init.validate()?;
    let fitted;
    let init = if cfg.fit_initial_albedos && !cfg.normalize {
        let (ro, rp) = fit_albedos(&problem.render_parts(init)?, observed);
        let candidate = init.with_albedos(ro, rp);
        let better = evaluate_loss(problem, &candidate, observed, cfg)? < evaluate_loss(problem, init, observed, cfg)?;
        fitted = if better { candidate } else { init.clone() };
        &fitted
    } else {
        init
    };
    let n = init.n_params();
    let mut theta = to_theta(init);
    let mut adam = Adam::new(cfg.learning_rates(init), cfg.beta1, cfg.beta2, cfg.eps);
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    let mut best: Option<(f64, usize, SceneParams)> = None;
    for step in 0..=cfg.steps {
        let params = from_theta(init, &theta);
        let record = problem.render_with_grad(&params)?;
        let values: Vec<Vec<f64>> = record.values.into_iter().map(|h| h.counts).collect();
        let (loss, mut grad) = loss_and_grad(&values, &record.jacobian, observed, n, cfg.loss_norm, cfg.normalize);
        trace.push(loss);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                step,
                message: format!("non-finite loss or gradient ({loss})"),
                trace,
            });
        }
        if best.as_ref().is_none_or(|b| loss < b.0) {
            best = Some((loss, step, params.clone()));
        }
        if step == cfg.steps {
            break;
        }
        // Chain rule through the log-albedo parameterization.
        let (ro, rp) = params.albedos();
        grad[n - 2] *= ro;
        grad[n - 1] *= rp;
        adam.step(&mut theta, &grad, cfg.lr_scale(step));
    }
    let (loss, best_step, params) = best.expect("at least one evaluation");
    Ok(RefineResult {
        params: params.canonical()?,
        loss,
        best_step,
        loss_trace: trace,
    })
}
