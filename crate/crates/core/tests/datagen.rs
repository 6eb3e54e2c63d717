use std::f64::consts::PI;

use difftof_core::datagen::{
    generate_dataset, perturb_positions, sample_object_pose, sample_rig, stream_rng, DatagenConfig, RigSampling,
    Workspace,
};
use difftof_core::geometry::primitives::asymmetric_test_mesh;
use difftof_core::geometry::rotation::random_rotation;
use difftof_core::geometry::Plane;
use difftof_core::grad::{ObjectTemplate, ParametricScene, PreparedProblem, SceneParams};
use difftof_core::io;
use difftof_core::render::SensorSpec;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_squared_ok(observed: &[usize], expected: &[f64]) -> (f64, f64) {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let crit = ChiSquared::new((observed.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (stat, crit)
}

#[test]
fn object_positions_are_uniform_over_the_disk() {
    let mesh = asymmetric_test_mesh();
    let ws = Workspace::default();
    let plane = Plane::default();
    let n = 4000;
    let mut sectors = [0usize; 8];
    let mut rings = [0usize; 4];
    for i in 0..n {
        let pose = sample_object_pose(&mesh, &ws, &plane, &mut stream_rng(11, i));
        let t = pose.t();
        let phi = t.y.atan2(t.x).rem_euclid(2.0 * PI);
        sectors[((phi / (2.0 * PI) * 8.0) as usize).min(7)] += 1;
        // Equal-area rings: (r / R)^2 uniform.
        let u = (t.x * t.x + t.y * t.y) / (ws.radius * ws.radius);
        assert!(u <= 1.0 + 1e-12);
        rings[((u * 4.0) as usize).min(3)] += 1;
    }
    let (stat, crit) = chi_squared_ok(&sectors, &[n as f64 / 8.0; 8]);
    assert!(stat < crit, "sector chi2 {stat} >= {crit}: {sectors:?}");
    let (stat, crit) = chi_squared_ok(&rings, &[n as f64 / 4.0; 4]);
    assert!(stat < crit, "ring chi2 {stat} >= {crit}: {rings:?}");
}

#[test]
fn rotations_follow_the_haar_angle_law() {
    // Uniform rotations have angle CDF (θ − sin θ) / π.
    let n = 4000;
    let k = 8;
    let cdf = |t: f64| (t - t.sin()) / PI;
    let edges: Vec<f64> = (0..=k).map(|i| i as f64 * PI / k as f64).collect();
    let expected: Vec<f64> = edges.windows(2).map(|w| n as f64 * (cdf(w[1]) - cdf(w[0]))).collect();
    let mut counts = vec![0usize; k];
    let mut mean = nalgebra::Matrix3::<f64>::zeros();
    for i in 0..n {
        let r = random_rotation(&mut stream_rng(5, i as u64));
        let angle = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        counts[((angle / PI * k as f64) as usize).min(k - 1)] += 1;
        mean += r;
    }
    let (stat, crit) = chi_squared_ok(&counts, &expected);
    assert!(stat < crit, "angle chi2 {stat} >= {crit}: {counts:?}");
    // Each entry has mean 0 and variance 1/3.
    let se = (1.0 / 3.0 / n as f64).sqrt();
    for v in (mean / n as f64).iter() {
        assert!(v.abs() < 5.0 * se, "entry mean {v}");
    }
}

#[test]
fn position_noise_has_the_requested_std() {
    let spec = SensorSpec::default();
    let rig = sample_rig(&RigSampling::default(), &Workspace::default(), &spec, &mut stream_rng(2, 0));
    let sigma = 0.015;
    let mut d = Vec::new();
    for i in 0..400 {
        let p = perturb_positions(&rig, sigma, &mut stream_rng(3, i));
        for (a, b) in rig.sensors.iter().zip(&p.sensors) {
            let delta = b.pose.position - a.pose.position;
            d.extend(delta.iter().copied());
            assert_eq!(a.pose.orientation, b.pose.orientation);
        }
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 5.0 * sigma / n.sqrt(), "mean {mean}");
    assert!((std / sigma - 1.0).abs() < 0.03, "std {std}");
    let same = perturb_positions(&rig, 0.0, &mut stream_rng(3, 0));
    assert_eq!(same.sensors[0].pose.position, rig.sensors[0].pose.position);
}

fn small_config(seed: u64) -> DatagenConfig {
    let mut cfg = DatagenConfig {
        n_samples: 4,
        seed,
        ..DatagenConfig::default()
    };
    cfg.spec.grid_h = 16;
    cfg.spec.grid_w = 16;
    cfg.rig.n_sensors = 4;
    cfg
}

#[test]
fn datasets_are_reproducible_from_the_seed() {
    let template = ObjectTemplate::Mesh(asymmetric_test_mesh());
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = generate_dataset(&template, &small_config(9), None, a.path()).unwrap();
    let mb = generate_dataset(&template, &small_config(9), None, b.path()).unwrap();
    let mc = generate_dataset(&template, &small_config(10), None, c.path()).unwrap();
    assert_eq!(ma.digest, mb.digest);
    assert_ne!(ma.digest, mc.digest);
    for s in &ma.samples {
        let x = std::fs::read(a.path().join(&s.dir).join("hist.csv")).unwrap();
        let y = std::fs::read(b.path().join(&s.dir).join("hist.csv")).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn stored_samples_rerender_exactly() {
    let template = ObjectTemplate::Mesh(asymmetric_test_mesh());
    let cfg = small_config(4);
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(&template, &cfg, None, dir.path()).unwrap();
    for s in &manifest.samples {
        let sd = dir.path().join(&s.dir);
        let file: serde_json::Value = io::read_json(&sd.join("params.json")).unwrap();
        let params: SceneParams = serde_json::from_value(file["params"].clone()).unwrap();
        let rig = io::read_rig(&sd.join("rig_perturbed.json")).unwrap();
        let stored = io::read_histograms(&sd.join("hist.csv"), &cfg.spec).unwrap();
        let scene = ParametricScene::new(template.clone(), Some(cfg.plane.clone()));
        let fresh = PreparedProblem::new(scene, &rig).unwrap().render(&params).unwrap();
        assert_eq!(stored.len(), fresh.len());
        for (h, f) in stored.iter().zip(&fresh) {
            for (x, y) in h.counts.iter().zip(&f.counts) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
            }
        }
        // Labels use the nominal rig, which differs from the rendered one.
        let nominal = io::read_rig(&sd.join("rig.json")).unwrap();
        assert_ne!(nominal.sensors[0].pose.position, rig.sensors[0].pose.position);
    }
}
