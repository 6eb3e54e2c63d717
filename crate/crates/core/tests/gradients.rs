mod common;

use difftof_core::grad::{default_fd_steps, finite_diff_jacobian, jacobian_discrepancy, PreparedProblem, SceneParams};
use difftof_core::render::{render_rig, SensorSpec};

fn check_against_fd(problem: &PreparedProblem, params: &SceneParams) {
    let record = problem.render_with_grad(params).unwrap();
    let assigns = problem.assignments(params).unwrap();
    let fd = finite_diff_jacobian(
        |p| problem.render_frozen(&params.with_vec(p), &assigns).unwrap().concat(),
        &params.to_vec(),
        &default_fd_steps(params),
    );
    let ad = record.stacked();
    for (i, (abs, rel)) in jacobian_discrepancy(&ad, &fd).into_iter().enumerate() {
        assert!(
            rel < 1e-3 || abs < 1e-8,
            "{}: rel {rel:e} abs {abs:e}",
            record.param_names[i]
        );
    }
}

#[test]
fn posed_mesh_jacobian_matches_finite_differences() {
    let spec = SensorSpec::default().with_grid(32, 32);
    for seed in 0..3 {
        let (scene, params) = common::posed_scene(seed);
        let problem = PreparedProblem::new(scene, &common::rig(seed, 4, &spec)).unwrap();
        check_against_fd(&problem, &params);
    }
}

#[test]
fn sphere_jacobian_matches_finite_differences() {
    let spec = SensorSpec::default().with_grid(32, 32);
    for seed in 0..3 {
        let (scene, params) = common::sphere_scene(seed, 3);
        let problem = PreparedProblem::new(scene, &common::rig(seed, 4, &spec)).unwrap();
        check_against_fd(&problem, &params);
    }
}

#[test]
fn gradient_values_equal_plain_render() {
    let spec = SensorSpec::default().with_grid(24, 24);
    let (scene, params) = common::posed_scene(7);
    let rig = common::rig(7, 3, &spec);
    let problem = PreparedProblem::new(scene.clone(), &rig).unwrap();
    let record = problem.render_with_grad(&params).unwrap();
    let plain = render_rig(&scene.scene_model(&params).unwrap(), &rig).unwrap();
    assert_eq!(record.values, plain);
}

#[test]
fn albedo_derivative_is_the_part_histogram() {
    let spec = SensorSpec::default().with_grid(24, 24);
    let (scene, params) = common::posed_scene(3);
    let problem = PreparedProblem::new(scene, &common::rig(3, 3, &spec)).unwrap();
    let record = problem.render_with_grad(&params).unwrap();
    let parts = problem.render_parts(&params).unwrap();
    let n = params.n_params();
    for s in 0..problem.n_sensors() {
        for b in 0..spec.n_bins {
            let d_obj = record.d(s, b, n - 2);
            let d_plane = record.d(s, b, n - 1);
            assert!((d_obj - parts.object[s][b]).abs() <= 1e-12 * parts.object[s][b].abs().max(1e-300));
            assert!((d_plane - parts.plane[s][b]).abs() <= 1e-12 * parts.plane[s][b].abs().max(1e-300));
        }
    }
}

#[test]
fn occluded_object_has_no_pose_gradient() {
    // Every sensor looks away from the object: only the plane contributes.
    use difftof_core::render::{Rig, SensorPose};
    use nalgebra::Vector3;
    let spec = SensorSpec::default().with_grid(16, 16);
    let pose = SensorPose::look_at(Vector3::new(2.0, 0.0, 0.5), Vector3::new(3.0, 0.0, 0.0)).unwrap();
    let rig = Rig::new(vec![pose], spec);
    let (scene, params) = common::posed_scene(1);
    let record = PreparedProblem::new(scene, &rig).unwrap().render_with_grad(&params).unwrap();
    let n = params.n_params();
    for row in record.stacked() {
        assert!(row[..n - 1].iter().all(|&d| d == 0.0));
    }
    assert!(record.stacked().iter().any(|row| row[n - 1] > 0.0));
}
