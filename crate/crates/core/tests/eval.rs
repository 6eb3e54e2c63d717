use difftof_core::eval::{auc, compute_add, compute_add_s, icp_align_points, sample_surface, IcpConfig, PointCloud};
use difftof_core::geometry::primitives::asymmetric_test_mesh;
use difftof_core::geometry::rotation::axis_angle;
use difftof_core::geometry::Pose6D;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn pose_strategy() -> impl Strategy<Value = Pose6D> {
    (
        prop::array::uniform3(-1.0f64..1.0),
        -3.1f64..3.1,
        prop::array::uniform3(-0.2f64..0.2),
    )
        .prop_filter_map("degenerate axis", |(a, angle, t)| {
            let axis = Vector3::from(a);
            (axis.norm() > 1e-3).then(|| Pose6D::from_rt(&axis_angle(&axis.normalize(), angle), &Vector3::from(t)))
        })
}

fn points_strategy() -> impl Strategy<Value = Vec<Vector3<f64>>> {
    prop::collection::vec(prop::array::uniform3(-0.1f64..0.1).prop_map(Vector3::from), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn add_s_never_exceeds_add(pred in pose_strategy(), gt in pose_strategy(), pts in points_strategy()) {
        let add = compute_add(&pred, &gt, &pts).unwrap();
        let add_s = compute_add_s(&pred, &gt, &pts).unwrap();
        prop_assert!(add_s <= add + 1e-12, "{add_s} > {add}");
        prop_assert!(add_s >= 0.0);
    }

    #[test]
    fn add_is_invariant_to_a_shared_world_motion(
        pred in pose_strategy(),
        gt in pose_strategy(),
        world in pose_strategy(),
        pts in points_strategy(),
    ) {
        let a = compute_add(&pred, &gt, &pts).unwrap();
        let b = compute_add(&world.compose(&pred).unwrap(), &world.compose(&gt).unwrap(), &pts).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        prop_assert!(compute_add(&gt, &gt, &pts).unwrap() < 1e-15);
    }

    #[test]
    fn auc_is_bounded_and_monotone(errs in prop::collection::vec(0.0f64..0.2, 1..40), bump in 0.0f64..0.05) {
        let a = auc(&errs, 0.1).unwrap();
        let worse: Vec<f64> = errs.iter().map(|e| e + bump).collect();
        let b = auc(&worse, 0.1).unwrap();
        prop_assert!((0.0..=100.0).contains(&a));
        prop_assert!(b <= a + 1e-12);
    }
}

#[test]
fn icp_recovers_a_small_misalignment() {
    let mesh = asymmetric_test_mesh();
    let template = sample_surface(&mesh, 4000, 1);
    let r = axis_angle(&Vector3::new(0.3, -0.5, 0.8).normalize(), 1.1);
    let t = Vector3::new(0.04, -0.02, 0.03);
    let gt = Pose6D::from_rt(&r, &t);
    // Every third template point, posed: exact correspondences exist.
    let points: Vec<Vector3<f64>> = template.iter().step_by(3).map(|x| r * x + t).collect();
    let cloud = PointCloud {
        sensor_ids: vec![0; points.len()],
        points,
    };
    let init = Pose6D::from_rt(&(axis_angle(&Vector3::z(), 0.06) * r), &(t + Vector3::new(0.004, -0.003, 0.002)));
    let cfg = IcpConfig {
        tolerance: 1e-12,
        max_iterations: 200,
        ..IcpConfig::default()
    };
    let out = icp_align_points(&cloud, &template, &init, &cfg).unwrap();
    let add = compute_add(&out.pose, &gt, &template).unwrap();
    assert!(add < 1e-6, "ADD after ICP {add}");
    assert!(out.mean_distances.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let rot: Matrix3<f64> = out.pose.rotation().unwrap();
    assert!((rot.transpose() * rot - Matrix3::identity()).norm() < 1e-10);
}
