mod common;

use difftof_core::geometry::Plane;
use difftof_core::grad::{PreparedProblem, SceneParams};
use difftof_core::optimize::{
    calibrate_sensor, initialize, refine, sample_candidate, CalibConfig, InitConfig, RefineConfig,
};
use difftof_core::render::SensorSpec;
use difftof_core::Error;
use nalgebra::Vector3;

fn small_spec() -> SensorSpec {
    SensorSpec::default().with_grid(24, 24)
}

#[test]
fn refine_at_ground_truth_is_stable() {
    let spec = small_spec();
    let (scene, gt) = common::posed_scene(11);
    let problem = PreparedProblem::new(scene, &common::rig(11, 6, &spec)).unwrap();
    let observed = problem.render(&gt).unwrap();
    let cfg = RefineConfig {
        steps: 30,
        ..RefineConfig::default()
    };
    let res = refine(&problem, &gt, &observed, &cfg).unwrap();
    assert!(res.loss <= res.loss_trace[0]);
    let (a, b) = (res.params.pose().unwrap(), gt.pose().unwrap());
    assert!((a.t() - b.t()).norm() < 1e-3);
}

#[test]
fn refine_returns_best_iterate_and_orthonormal_rotation() {
    let spec = small_spec();
    let (scene, gt) = common::posed_scene(12);
    let problem = PreparedProblem::new(scene, &common::rig(12, 6, &spec)).unwrap();
    let observed = problem.render(&gt).unwrap();
    let pose = gt.pose().unwrap();
    let init = SceneParams::posed(
        &difftof_core::geometry::Pose6D::from_rt(&pose.rotation().unwrap(), &(pose.t() + Vector3::new(0.01, -0.01, 0.0))),
        1.0,
        1.0,
    );
    let res = refine(&problem, &init, &observed, &RefineConfig { steps: 40, ..Default::default() }).unwrap();
    let min = res.loss_trace.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(res.loss, min);
    assert_eq!(res.loss_trace[res.best_step], min);
    let r = res.params.pose().unwrap().rotation().unwrap();
    assert!((r.transpose() * r - nalgebra::Matrix3::identity()).abs().max() < 1e-12);
    assert!(res.loss < res.loss_trace[0]);
}

#[test]
fn refine_rejects_mismatched_observations() {
    let spec = small_spec();
    let (scene, gt) = common::posed_scene(1);
    let problem = PreparedProblem::new(scene, &common::rig(1, 3, &spec)).unwrap();
    let observed = problem.render(&gt).unwrap();
    let err = refine(&problem, &gt, &observed[..2], &RefineConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn non_finite_loss_reports_divergence_with_trace() {
    let spec = small_spec();
    let (scene, gt) = common::posed_scene(1);
    let problem = PreparedProblem::new(scene, &common::rig(1, 2, &spec)).unwrap();
    let mut observed = problem.render(&gt).unwrap();
    observed[0].counts[3] = 1e308;
    observed[0].counts[4] = 1e308;
    match refine(&problem, &gt, &observed, &RefineConfig { steps: 5, ..Default::default() }) {
        Err(Error::Diverged { trace, .. }) => assert!(!trace.is_empty()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn scaling_observations_is_absorbed_by_albedo() {
    let spec = small_spec();
    let (scene, gt) = common::posed_scene(13);
    let problem = PreparedProblem::new(scene, &common::rig(13, 6, &spec)).unwrap();
    let observed = problem.render(&gt).unwrap();
    let scaled: Vec<_> = observed.iter().map(|h| h.scaled(2.5)).collect();
    let pose = gt.pose().unwrap();
    let init = SceneParams::posed(
        &difftof_core::geometry::Pose6D::from_rt(&pose.rotation().unwrap(), &(pose.t() + Vector3::new(0.005, 0.0, 0.0))),
        1.0,
        1.0,
    );
    let cfg = RefineConfig { steps: 60, ..Default::default() };
    let a = refine(&problem, &init, &observed, &cfg).unwrap().params.pose().unwrap();
    let b = refine(&problem, &init, &scaled, &cfg).unwrap().params.pose().unwrap();
    assert!((a.t() - b.t()).norm() < 1e-3);
}

#[test]
fn sphere_diameter_recovers_from_offset() {
    let spec = small_spec();
    let (scene, gt) = common::sphere_scene(3, 3);
    let SceneParams::Sphere { center, diameter, .. } = gt else { unreachable!() };
    let problem = PreparedProblem::new(scene, &common::rig(3, 12, &spec)).unwrap();
    let observed = problem.render(&gt).unwrap();
    let d0 = diameter + 0.015;
    let init = SceneParams::sphere(Vector3::new(center[0], center[1], d0 / 2.0), d0, 1.0, 1.0);
    let res = refine(&problem, &init, &observed, &RefineConfig::default()).unwrap();
    let SceneParams::Sphere { diameter: d, .. } = res.params else { unreachable!() };
    assert!((d - diameter).abs() < 0.005, "{d} vs {diameter}");
}

#[test]
fn initialize_finds_a_planted_candidate_and_is_deterministic() {
    let spec = small_spec();
    let (scene, _) = common::posed_scene(0);
    let rig = common::rig(0, 6, &spec);
    let cfg = InitConfig {
        n_candidates: 32,
        n_survivors: 2,
        short_refine_steps: 5,
        rank_grid: 12,
        seed: 9,
        ..InitConfig::default()
    };
    let plane = Plane::default();
    let planted = sample_candidate(&scene.template, &plane, &cfg, 17).with_albedos(0.6, 0.8);
    let problem = PreparedProblem::new(scene.clone(), &rig).unwrap();
    let observed = problem.render(&planted).unwrap();
    let refine_cfg = RefineConfig::default();
    let a = initialize(&scene, &rig, &observed, &cfg, &refine_cfg).unwrap();
    let b = initialize(&scene, &rig, &observed, &cfg, &refine_cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.candidate_losses, b.candidate_losses);
    assert_eq!(a.survivors[0], 17);
    let (p, q) = (a.params.pose().unwrap(), planted.pose().unwrap());
    assert!((p.t() - q.t()).norm() < 2e-3, "{:?} vs {:?}", p.t(), q.t());
}

#[test]
fn calibration_is_a_fixed_point() {
    let spec = SensorSpec::default().with_grid(24, 24);
    let captures = common::plane_captures(&spec, &[0.3, 0.5, 0.7]);
    let res = calibrate_sensor(&captures, &spec, &CalibConfig { steps: 20, ..Default::default() }).unwrap();
    assert!((res.s_scale / spec.jitter_scale - 1.0).abs() < 1e-3);
    assert!((res.bin_width_s / spec.bin_width_s - 1.0).abs() < 1e-3);
    assert!(res.offset_bins.abs() < 1e-3);
    assert!(!res.low_confidence);
}

#[test]
fn calibration_recovers_timing() {
    let nominal = SensorSpec::default().with_grid(24, 24);
    let truth = SensorSpec {
        jitter_scale: 1.2,
        temporal_offset_bins: 3.5,
        bin_width_s: nominal.bin_width_s * 1.02,
        ..nominal.clone()
    };
    let captures = common::plane_captures(&truth, &[0.25, 0.4, 0.55, 0.7, 0.85]);
    let res = calibrate_sensor(&captures, &nominal, &CalibConfig::default()).unwrap();
    assert!((res.bin_width_s / truth.bin_width_s - 1.0).abs() < 0.01, "{res:?}");
    assert!((res.offset_bins - 3.5).abs() < 0.1, "{}", res.offset_bins);
    assert!((res.s_scale / 1.2 - 1.0).abs() < 0.05, "{}", res.s_scale);
}

#[test]
fn single_distance_calibration_is_flagged() {
    let spec = SensorSpec::default().with_grid(16, 16);
    let captures = common::plane_captures(&spec, &[0.4]);
    let res = calibrate_sensor(&captures, &spec, &CalibConfig { steps: 5, ..Default::default() }).unwrap();
    assert!(res.low_confidence);
}
