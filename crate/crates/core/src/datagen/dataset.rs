use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{perturb_positions, sample_object_pose, sample_rig, sample_sphere, RigSampling, Workspace};
use super::stream_rng;
use crate::error::{Error, Result};
use crate::geometry::{Plane, TriangleMesh};
use crate::grad::{ObjectTemplate, ParametricScene, PreparedProblem, SceneParams};
use crate::io;
use crate::render::{Rig, SensorSpec, TransientHistogram};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectKind {
    /// Posed copies of the supplied mesh template.
    Mesh,
    /// Spheres resting on the plane, diameter log-uniform in the range.
    Sphere {
        diameter_range: (f64, f64),
        tessellation_level: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatagenConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub object: ObjectKind,
    pub workspace: Workspace,
    pub plane: Plane,
    pub rig: RigSampling,
    pub spec: SensorSpec,
    /// Standard deviation of the per-sample sensor-position noise (meters).
    pub position_noise_std: f64,
    pub albedo_range: (f64, f64),
    /// Replace expected counts with Poisson draws.
    pub poisson_noise: bool,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        Self {
            n_samples: 10,
            seed: 0,
            object: ObjectKind::Mesh,
            workspace: Workspace::default(),
            plane: Plane::default(),
            rig: RigSampling::default(),
            spec: SensorSpec::default(),
            position_noise_std: 0.015,
            albedo_range: (0.3, 1.0),
            poisson_noise: false,
        }
    }
}

impl DatagenConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.albedo_range;
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("invalid albedo range ({lo}, {hi})")));
        }
        if !(self.position_noise_std >= 0.0) {
            return Err(Error::Config("position_noise_std must be non-negative".into()));
        }
        if let ObjectKind::Sphere { diameter_range: (a, b), .. } = self.object {
            if !(a > 0.0 && a <= b) {
                return Err(Error::Config(format!("invalid diameter range ({a}, {b})")));
            }
        }
        if !(self.rig.min_range > 0.0 && self.rig.min_range <= self.rig.max_range && self.rig.n_sensors > 0) {
            return Err(Error::Config("invalid rig sampling ranges".into()));
        }
        self.spec.validate()
    }

    pub fn template(&self, mesh: Option<&TriangleMesh>) -> Result<ObjectTemplate> {
        match (&self.object, mesh) {
            (ObjectKind::Mesh, Some(m)) => Ok(ObjectTemplate::Mesh(m.clone())),
            (ObjectKind::Mesh, None) => Err(Error::Config("mesh datasets need a template mesh".into())),
            (ObjectKind::Sphere { tessellation_level, .. }, _) => ObjectTemplate::sphere(*tessellation_level),
        }
    }
}

/// One generated sample. Histograms are rendered from `perturbed_rig`; the
/// sample is labeled with `nominal_rig`.
#[derive(Clone, Debug)]
pub struct DatasetSample {
    pub index: usize,
    pub seed: u64,
    pub params: SceneParams,
    pub nominal_rig: Rig,
    pub perturbed_rig: Rig,
    pub histograms: Vec<TransientHistogram>,
}

/// Generates sample `index` from its own RNG stream. `fixed_rig` replaces
/// the per-sample rig draw.
pub fn generate_sample(
    template: &ObjectTemplate,
    cfg: &DatagenConfig,
    index: usize,
    fixed_rig: Option<&Rig>,
) -> Result<DatasetSample> {
    let mut rng = stream_rng(cfg.seed, index as u64);
    let (lo, hi) = cfg.albedo_range;
    let params = match (&cfg.object, template) {
        (ObjectKind::Mesh, ObjectTemplate::Mesh(mesh)) => {
            let pose = sample_object_pose(mesh, &cfg.workspace, &cfg.plane, &mut rng);
            let a = rng.random_range(lo..=hi);
            let b = rng.random_range(lo..=hi);
            SceneParams::posed(&pose, a, b)
        }
        (ObjectKind::Sphere { diameter_range, .. }, ObjectTemplate::Sphere(_)) => {
            let (c, d) = sample_sphere(&cfg.workspace, &cfg.plane, *diameter_range, &mut rng);
            let a = rng.random_range(lo..=hi);
            let b = rng.random_range(lo..=hi);
            SceneParams::sphere(c, d, a, b)
        }
        _ => return Err(Error::Config("object kind does not match template".into())),
    };
    let nominal_rig = match fixed_rig {
        Some(r) => r.clone(),
        None => sample_rig(&cfg.rig, &cfg.workspace, &cfg.spec, &mut rng),
    };
    let perturbed_rig = perturb_positions(&nominal_rig, cfg.position_noise_std, &mut rng);
    let scene = ParametricScene::new(template.clone(), Some(cfg.plane.clone()));
    let mut histograms = PreparedProblem::new(scene, &perturbed_rig)?.render(&params)?;
    if cfg.poisson_noise {
        histograms = histograms.iter().map(|h| h.sample_poisson(&mut rng)).collect();
    }
    Ok(DatasetSample {
        index,
        seed: cfg.seed,
        params,
        nominal_rig,
        perturbed_rig,
        histograms,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleEntry {
    pub index: usize,
    pub dir: String,
    /// SHA-256 over the sample's files, in a fixed order.
    pub digest: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: DatagenConfig,
    pub template_hash: String,
    pub samples: Vec<SampleEntry>,
    /// SHA-256 over all sample digests.
    pub digest: String,
}

#[derive(Serialize)]
struct SampleParamsFile<'a> {
    index: usize,
    seed: u64,
    params: &'a SceneParams,
}

fn template_hash(template: &ObjectTemplate) -> String {
    match template {
        ObjectTemplate::Mesh(m) => io::sha256_hex(m.to_obj().as_bytes()),
        ObjectTemplate::Sphere(s) => io::sha256_hex(format!("unit-sphere:{}", s.triangles.len()).as_bytes()),
    }
}

/// Writes one directory per sample plus `manifest.json` under `out_dir`.
/// Output is independent of the rayon thread count.
pub fn generate_dataset(
    template: &ObjectTemplate,
    cfg: &DatagenConfig,
    fixed_rig: Option<&Rig>,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entries: Vec<SampleEntry> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|index| {
            let sample = generate_sample(template, cfg, index, fixed_rig)?;
            let dir_name = format!("sample_{index:06}");
            let dir = out_dir.join(&dir_name);
            let params = serde_json::to_string_pretty(&SampleParamsFile {
                index,
                seed: cfg.seed,
                params: &sample.params,
            })
            .expect("params serialize")
                + "\n";
            let rig = io::rig_to_json(&sample.nominal_rig);
            let rig_perturbed = io::rig_to_json(&sample.perturbed_rig);
            let hist = io::histograms_to_csv(&sample.histograms);
            io::write_text(&dir.join("params.json"), &params)?;
            io::write_text(&dir.join("rig.json"), &rig)?;
            io::write_text(&dir.join("rig_perturbed.json"), &rig_perturbed)?;
            io::write_histograms(&dir.join("hist.csv"), &sample.histograms, &cfg.spec)?;
            let digest = io::sha256_hex([params, rig, rig_perturbed, hist].concat().as_bytes());
            Ok(SampleEntry {
                index,
                dir: dir_name,
                digest,
            })
        })
        .collect::<Result<_>>()?;
    let digest = io::sha256_hex(entries.iter().map(|e| e.digest.as_str()).collect::<String>().as_bytes());
    let manifest = DatasetManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        template_hash: template_hash(template),
        samples: entries,
        digest,
    };
    io::write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
