use std::path::{Path, PathBuf};

use difftof_core::datagen::{generate_dataset, DatagenConfig};
use difftof_core::eval::{accuracy_curve, median, MetricReport, PoseMetric, AUC_MAX_THRESHOLD};
use difftof_core::experiments::{
    ablation_study, baseline_study, end_to_end_study, gradient_check_study, pose_refinement_study,
    sphere_study, viewsweep as run_viewsweep, AblationConfig, BaselineConfig, EndToEndConfig, GradCheckConfig,
    PoseStudyConfig, SphereStudyConfig, Variant, ViewSweepConfig,
};
use difftof_core::geometry::primitives::asymmetric_test_mesh;
use difftof_core::geometry::{Plane, SceneModel, TriangleMesh};
use difftof_core::grad::{ObjectTemplate, ParametricScene, PreparedProblem, SceneParams};
use difftof_core::io::{read_histograms, read_json, read_rig, write_histograms, write_json, write_loss_trace, write_text};
use difftof_core::optimize::{
    calibrate_sensor, initialize as run_initialize, refine as run_refine, CalibCapture, CalibConfig, InitConfig,
    RefineConfig,
};
use difftof_core::render::{Rig, TransientHistogram};
use difftof_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{load, write_manifest};
use crate::error::{CliError, CliResult};
use crate::{Common, ExperimentKind, MeshArgs, MetricArg};

fn setup_jobs(common: &Common) -> CliResult<()> {
    if let Some(n) = common.jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Config from file and `--set`, with `--seed` written to `seed_path`.
fn load_config<T>(common: &Common, seed_path: Option<&str>, extra: Vec<(String, String)>) -> CliResult<T>
where
    T: Serialize + serde::de::DeserializeOwned + Default,
{
    setup_jobs(common)?;
    let mut overrides = extra;
    overrides.extend(common.overrides.iter().cloned());
    if let (Some(seed), Some(path)) = (common.seed, seed_path) {
        overrides.push((path.to_string(), seed.to_string()));
    }
    load(common.config.as_deref(), &overrides)
}

fn load_mesh(args: &MeshArgs) -> CliResult<TriangleMesh> {
    match &args.mesh {
        Some(p) => Ok(TriangleMesh::load_obj(p, args.mesh_scale)?),
        None => Ok(asymmetric_test_mesh().scaled(args.mesh_scale)),
    }
}

/// Accepts a bare parameter object, an object with a `params` field (as
/// written by `refine`, `initialize` and `datagen`), or an array of either.
fn read_params_list(path: &Path) -> CliResult<Vec<SceneParams>> {
    let value: Value = read_json(path)?;
    let items = match value {
        Value::Array(items) => items,
        v => vec![v],
    };
    items
        .into_iter()
        .map(|v| {
            let v = match v {
                Value::Object(mut m) if m.contains_key("params") => m.remove("params").expect("checked"),
                v => v,
            };
            serde_json::from_value(v).map_err(|e| CliError::io(path, format!("scene parameters: {e}")))
        })
        .collect()
}

fn read_params(path: &Path) -> CliResult<SceneParams> {
    let mut list = read_params_list(path)?;
    if list.len() != 1 {
        return Err(CliError::io(path, "expected exactly one set of scene parameters"));
    }
    Ok(list.remove(0))
}

/// Histograms reordered to match the rig's sensor ids.
fn read_observed(path: &Path, rig: &Rig) -> CliResult<Vec<TransientHistogram>> {
    let hists = read_histograms(path, &rig.spec)?;
    rig.sensors
        .iter()
        .map(|s| {
            hists
                .iter()
                .find(|h| h.sensor_id == s.id)
                .cloned()
                .ok_or_else(|| CliError::io(path, format!("no histogram for sensor {}", s.id)))
        })
        .collect()
}

fn template_for(params_kind: &SceneParams, mesh: &MeshArgs, level: u32) -> CliResult<ObjectTemplate> {
    match params_kind {
        SceneParams::PosedMesh { .. } => Ok(ObjectTemplate::Mesh(load_mesh(mesh)?)),
        SceneParams::Sphere { .. } => Ok(ObjectTemplate::sphere(level)?),
    }
}

fn create_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Supporting plane; `null` renders the object alone.
    pub plane: Option<Plane>,
    pub sphere_tessellation_level: u32,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            plane: Some(Plane::default()),
            sphere_tessellation_level: 4,
        }
    }
}

pub fn render(common: &Common, mesh: &MeshArgs, params_path: &Path, rig_path: &Path) -> CliResult<()> {
    let cfg: SceneConfig = load_config(common, None, vec![])?;
    let params = read_params(params_path)?;
    let rig = read_rig(rig_path)?;
    let template = template_for(&params, mesh, cfg.sphere_tessellation_level)?;
    let problem = PreparedProblem::new(ParametricScene::new(template, cfg.plane.clone()), &rig)?;
    let hists = problem.render(&params)?;
    create_out(&common.out)?;
    let hist_path = common.out.join("hist.csv");
    write_histograms(&hist_path, &hists, &rig.spec)?;
    write_json(&common.out.join("params.json"), &params)?;
    write_manifest(&common.out, "render", common.seed.unwrap_or(0), &cfg, &[hist_path])
}

pub fn datagen(common: &Common, mesh: &MeshArgs, rig_path: Option<&Path>, n_samples: Option<usize>) -> CliResult<()> {
    let extra = n_samples.map(|n| ("n_samples".to_string(), n.to_string())).into_iter().collect();
    let cfg: DatagenConfig = load_config(common, Some("seed"), extra)?;
    let rig = rig_path.map(read_rig).transpose()?;
    let template_mesh = if cfg.template(None).is_err() { Some(load_mesh(mesh)?) } else { None };
    let template = cfg.template(template_mesh.as_ref())?;
    let manifest = generate_dataset(&template, &cfg, rig.as_ref(), &common.out)?;
    println!("{} samples, digest {}", manifest.samples.len(), manifest.digest);
    write_manifest(&common.out, "datagen", cfg.seed, &cfg, &[common.out.join("manifest.json")])
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InitializeConfig {
    pub scene: SceneConfig,
    pub init: InitConfig,
    pub refine: RefineConfig,
}

#[derive(Serialize)]
struct InitOutput<'a> {
    params: &'a SceneParams,
    loss: f64,
    chosen: usize,
    survivors: &'a [usize],
}

pub fn initialize(common: &Common, mesh: &MeshArgs, sphere: bool, rig_path: &Path, hist_path: &Path) -> CliResult<()> {
    let cfg: InitializeConfig = load_config(common, Some("init.seed"), vec![])?;
    let rig = read_rig(rig_path)?;
    let observed = read_observed(hist_path, &rig)?;
    let template = if sphere {
        ObjectTemplate::sphere(cfg.scene.sphere_tessellation_level)?
    } else {
        ObjectTemplate::Mesh(load_mesh(mesh)?)
    };
    let scene = ParametricScene::new(template, cfg.scene.plane.clone());
    let res = run_initialize(&scene, &rig, &observed, &cfg.init, &cfg.refine)?;
    create_out(&common.out)?;
    let params_path = common.out.join("init.json");
    write_json(
        &params_path,
        &InitOutput {
            params: &res.params,
            loss: res.loss,
            chosen: res.chosen,
            survivors: &res.survivors,
        },
    )?;
    let losses_path = common.out.join("candidate_losses.csv");
    write_text(
        &losses_path,
        &csv_table("candidate,loss", res.candidate_losses.iter().enumerate().map(|(i, l)| format!("{i},{l:?}"))),
    )?;
    write_manifest(&common.out, "initialize", cfg.init.seed, &cfg, &[params_path, losses_path])
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineCmdConfig {
    pub scene: SceneConfig,
    pub refine: RefineConfig,
}

#[derive(Serialize)]
struct RefineOutput<'a> {
    params: &'a SceneParams,
    loss: f64,
    best_step: usize,
}

pub fn refine(
    common: &Common,
    mesh: &MeshArgs,
    rig_path: &Path,
    hist_path: &Path,
    init_path: &Path,
    steps: Option<usize>,
) -> CliResult<()> {
    let extra = steps.map(|n| ("refine.steps".to_string(), n.to_string())).into_iter().collect();
    let cfg: RefineCmdConfig = load_config(common, None, extra)?;
    let rig = read_rig(rig_path)?;
    let observed = read_observed(hist_path, &rig)?;
    let init = read_params(init_path)?;
    let template = template_for(&init, mesh, cfg.scene.sphere_tessellation_level)?;
    let problem = PreparedProblem::new(ParametricScene::new(template, cfg.scene.plane.clone()), &rig)?;
    create_out(&common.out)?;
    let trace_path = common.out.join("loss_trace.csv");
    let res = match run_refine(&problem, &init, &observed, &cfg.refine) {
        Ok(r) => r,
        Err(e @ Error::Diverged { .. }) => {
            if let Error::Diverged { trace, .. } = &e {
                write_loss_trace(&trace_path, trace)?;
            }
            return Err(CliError::diverged(&e, &trace_path));
        }
        Err(e) => return Err(e.into()),
    };
    write_loss_trace(&trace_path, &res.loss_trace)?;
    let params_path = common.out.join("params.json");
    write_json(
        &params_path,
        &RefineOutput {
            params: &res.params,
            loss: res.loss,
            best_step: res.best_step,
        },
    )?;
    write_manifest(&common.out, "refine", common.seed.unwrap_or(0), &cfg, &[params_path, trace_path])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrateConfig {
    pub plane: Plane,
    /// Albedo assumed for the plane; with a fitted gain only its product
    /// with the emitter power matters.
    pub albedo_plane: f64,
    pub calib: CalibConfig,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            plane: Plane::default(),
            albedo_plane: 1.0,
            calib: CalibConfig::default(),
        }
    }
}

pub fn calibrate(common: &Common, rig_path: &Path, hist_path: &Path) -> CliResult<()> {
    let cfg: CalibrateConfig = load_config(common, None, vec![])?;
    let rig = read_rig(rig_path)?;
    let observed = read_observed(hist_path, &rig)?;
    let scene = SceneModel::new(None, Some(cfg.plane.clone()), 0.0, cfg.albedo_plane)?;
    let captures: Vec<CalibCapture> = rig
        .sensors
        .iter()
        .zip(observed)
        .map(|(s, histogram)| CalibCapture {
            scene: scene.clone(),
            pose: s.pose,
            histogram,
        })
        .collect();
    let res = calibrate_sensor(&captures, &rig.spec, &cfg.calib)?;
    if res.low_confidence {
        log::warn!("fewer than three distinct capture distances; timing parameters are poorly constrained");
    }
    create_out(&common.out)?;
    let result_path = common.out.join("calibration.json");
    write_json(
        &result_path,
        &serde_json::json!({ "result": &res, "spec": res.apply(&rig.spec) }),
    )?;
    let trace_path = common.out.join("loss_trace.csv");
    write_loss_trace(&trace_path, &res.loss_trace)?;
    write_manifest(&common.out, "calibrate", common.seed.unwrap_or(0), &cfg, &[result_path, trace_path])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Model points used by ADD/ADD-S (mesh vertices plus area samples).
    pub model_points: usize,
    pub curve_points: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            model_points: 2048,
            curve_points: 101,
        }
    }
}

pub fn eval(common: &Common, mesh: &MeshArgs, pred: &Path, gt: &Path, metric: MetricArg) -> CliResult<()> {
    let cfg: EvalConfig = load_config(common, None, vec![])?;
    let preds = read_params_list(pred)?;
    let gts = read_params_list(gt)?;
    if preds.len() != gts.len() {
        return Err(CliError::config(format!(
            "{} predictions but {} ground-truth entries",
            preds.len(),
            gts.len()
        )));
    }
    let needs_mesh = gts.iter().any(|g| matches!(g, SceneParams::PosedMesh { .. }));
    let points = if needs_mesh { load_mesh(mesh)?.model_points(cfg.model_points) } else { Vec::new() };
    let metric = match metric {
        MetricArg::Add => PoseMetric::Add,
        MetricArg::AddS => PoseMetric::AddS,
    };
    let pairs: Vec<_> = preds.into_iter().zip(gts).collect();
    let report = MetricReport::evaluate(&pairs, &points, metric)?;
    create_out(&common.out)?;
    let metrics_path = common.out.join("metrics.csv");
    let rows = report.errors.iter().enumerate().map(|(i, e)| {
        match (report.diameter_errors.get(i), report.center_errors.get(i)) {
            (Some(d), Some(c)) => format!("{i},{e:?},{d:?},{c:?}"),
            _ => format!("{i},{e:?},,"),
        }
    });
    write_text(&metrics_path, &csv_table("index,error,diameter_error,center_error", rows))?;
    let curve_path = common.out.join("accuracy_curve.csv");
    let curve = accuracy_curve(&report.errors, AUC_MAX_THRESHOLD, cfg.curve_points);
    write_text(&curve_path, &csv_table("threshold,accuracy", curve.iter().map(|(t, a)| format!("{t:?},{a:?}"))))?;
    let summary_path = common.out.join("summary.json");
    write_json(&summary_path, &report)?;
    println!("auc {:.2} median {:.5} m", report.auc, report.median);
    write_manifest(&common.out, "eval", 0, &cfg, &[metrics_path, curve_path, summary_path])
}

pub fn baseline(common: &Common, mesh: &MeshArgs) -> CliResult<()> {
    let cfg: BaselineConfig = load_config(common, Some("setup.seed"), vec![])?;
    let rows = baseline_study(&load_mesh(mesh)?, &cfg)?;
    create_out(&common.out)?;
    let path = common.out.join("baseline.csv");
    write_text(
        &path,
        &csv_table(
            "scene,points_single_pixel,points_grid16,add_single_pixel,add_grid16",
            rows.iter().map(|r| {
                format!(
                    "{},{},{},{:?},{:?}",
                    r.index, r.points_single_pixel, r.points_grid16, r.add_single_pixel, r.add_grid16
                )
            }),
        ),
    )?;
    let single: Vec<f64> = rows.iter().map(|r| r.add_single_pixel).collect();
    let grid: Vec<f64> = rows.iter().map(|r| r.add_grid16).collect();
    println!("median ADD single-pixel {:.5} m, grid16 {:.5} m", median(&single), median(&grid));
    write_manifest(&common.out, "baseline", cfg.setup.seed, &cfg, &[path])
}

pub fn gradcheck(common: &Common, mesh: &MeshArgs, tolerance: Option<f64>) -> CliResult<()> {
    let cfg: GradCheckConfig = load_config(common, Some("setup.seed"), vec![])?;
    let rows = gradient_check_study(&load_mesh(mesh)?, &cfg)?;
    create_out(&common.out)?;
    let path = common.out.join("gradcheck.csv");
    write_text(
        &path,
        &csv_table(
            "scene,param,abs_error,rel_error",
            rows.iter().map(|r| format!("{},{},{:?},{:?}", r.scene, r.param, r.abs_error, r.rel_error)),
        ),
    )?;
    write_manifest(&common.out, "gradcheck", cfg.setup.seed, &cfg, &[path])?;
    let worst = rows.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error));
    match worst {
        Some(w) => println!("max relative error {:.3e} ({} {}), abs {:.3e}", w.rel_error, w.scene, w.param, w.abs_error),
        None => println!("no parameters checked"),
    }
    if let (Some(tol), Some(w)) = (tolerance, worst) {
        if w.rel_error > tol {
            return Err(CliError::numerical(format!("relative error {:.3e} exceeds {tol:e}", w.rel_error)));
        }
    }
    Ok(())
}

pub fn viewsweep(common: &Common, mesh: &MeshArgs, budgets: Option<Vec<usize>>, n_scenes: Option<usize>) -> CliResult<()> {
    let mut extra = Vec::new();
    if let Some(b) = budgets {
        extra.push(("budgets".to_string(), serde_json::to_string(&b).expect("serialize")));
    }
    if let Some(n) = n_scenes {
        extra.push(("n_scenes".to_string(), n.to_string()));
    }
    let cfg: ViewSweepConfig = load_config(common, Some("setup.seed"), extra)?;
    let rows = run_viewsweep(&load_mesh(mesh)?, &cfg)?;
    create_out(&common.out)?;
    let detail = common.out.join("viewsweep_scenes.csv");
    write_text(
        &detail,
        &csv_table(
            "budget,scene,add",
            rows.iter()
                .flat_map(|r| r.adds.iter().enumerate().map(move |(k, a)| format!("{},{k},{a:?}", r.budget))),
        ),
    )?;
    let summary = common.out.join("viewsweep.csv");
    write_text(
        &summary,
        &csv_table("budget,median_add", rows.iter().map(|r| format!("{},{:?}", r.budget, r.median_add))),
    )?;
    for r in &rows {
        println!("{:>4} pixels: median ADD {:.5} m", r.budget, r.median_add);
    }
    write_manifest(&common.out, "viewsweep", cfg.setup.seed, &cfg, &[summary, detail])
}

pub fn ablate(common: &Common, mesh: &MeshArgs, variants: &[String], n_scenes: Option<usize>) -> CliResult<()> {
    let mut extra = Vec::new();
    if !variants.is_empty() {
        let parsed: Vec<Variant> = variants
            .iter()
            .map(|v| Variant::parse(v).ok_or_else(|| CliError::config(format!("unknown variant `{v}`"))))
            .collect::<CliResult<_>>()?;
        extra.push(("variants".to_string(), serde_json::to_string(&parsed).expect("serialize")));
    }
    if let Some(n) = n_scenes {
        extra.push(("n_scenes".to_string(), n.to_string()));
    }
    let cfg: AblationConfig = load_config(common, Some("setup.seed"), extra)?;
    let rows = ablation_study(&load_mesh(mesh)?, &cfg)?;
    create_out(&common.out)?;
    let path = common.out.join("ablation.csv");
    write_text(
        &path,
        &csv_table(
            "variant,relative_l1,median_add,auc",
            rows.iter()
                .map(|r| format!("{},{:?},{:?},{:?}", r.variant.name(), r.relative_l1, r.median_add, r.auc)),
        ),
    )?;
    for r in &rows {
        println!(
            "{:<13} relative L1 {:.4}  median ADD {:.5} m  AUC {:.2}",
            r.variant.name(),
            r.relative_l1,
            r.median_add,
            r.auc
        );
    }
    write_manifest(&common.out, "ablate", cfg.setup.seed, &cfg, &[path])
}

fn write_trials<T: Serialize>(out: &Path, trials: &[T]) -> CliResult<PathBuf> {
    let path = out.join("trials.json");
    write_json(&path, trials)?;
    Ok(path)
}

pub fn experiment(common: &Common, mesh: &MeshArgs, kind: ExperimentKind) -> CliResult<()> {
    create_out(&common.out)?;
    match kind {
        ExperimentKind::Pose | ExperimentKind::EndToEnd => {
            let m = load_mesh(mesh)?;
            let (trials, seed, name, config) = if matches!(kind, ExperimentKind::Pose) {
                let cfg: PoseStudyConfig = load_config(common, Some("setup.seed"), vec![])?;
                (pose_refinement_study(&m, &cfg)?, cfg.setup.seed, "experiment-pose", serde_json::to_value(&cfg))
            } else {
                let cfg: EndToEndConfig = load_config(common, Some("setup.seed"), vec![])?;
                (end_to_end_study(&m, &cfg)?, cfg.setup.seed, "experiment-end-to-end", serde_json::to_value(&cfg))
            };
            let config = config.expect("config serializes");
            let table = common.out.join("trials.csv");
            write_text(
                &table,
                &csv_table(
                    "trial,init_add,final_add,final_add_s,initial_loss,final_loss",
                    trials.iter().map(|t| {
                        format!(
                            "{},{:?},{:?},{:?},{:?},{:?}",
                            t.index, t.init_add, t.final_add, t.final_add_s, t.initial_loss, t.final_loss
                        )
                    }),
                ),
            )?;
            let json = write_trials(&common.out, &trials)?;
            let adds: Vec<f64> = trials.iter().map(|t| t.final_add).collect();
            let report = MetricReport::from_errors(PoseMetric::Add, adds)?;
            println!("median ADD {:.5} m, AUC {:.2}", report.median, report.auc);
            write_manifest(&common.out, name, seed, &config, &[table, json])
        }
        ExperimentKind::Sphere => {
            let cfg: SphereStudyConfig = load_config(common, Some("setup.seed"), vec![])?;
            let trials = sphere_study(&cfg)?;
            let table = common.out.join("trials.csv");
            write_text(
                &table,
                &csv_table(
                    "trial,diameter_error,center_error,final_loss",
                    trials
                        .iter()
                        .map(|t| format!("{},{:?},{:?},{:?}", t.index, t.diameter_error, t.center_error, t.final_loss)),
                ),
            )?;
            let json = write_trials(&common.out, &trials)?;
            let d: Vec<f64> = trials.iter().map(|t| t.diameter_error).collect();
            let c: Vec<f64> = trials.iter().map(|t| t.center_error).collect();
            println!(
                "mean diameter error {:.5} m, mean center error {:.5} m",
                d.iter().sum::<f64>() / d.len().max(1) as f64,
                c.iter().sum::<f64>() / c.len().max(1) as f64
            );
            write_manifest(&common.out, "experiment-sphere", cfg.setup.seed, &cfg, &[table, json])
        }
    }
}
