//! `difftof`: render, recover and evaluate scenes seen by diffuse
//! single-pixel time-of-flight sensors.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "difftof", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON config file; missing fields take their defaults.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Config override `key.path=value`, applied after the file (repeatable).
    #[arg(long = "set", value_parser = config::parse_override)]
    pub overrides: Vec<(String, String)>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, short, env = "DIFFTOF_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    pub out: PathBuf,
}

/// Object template selection.
#[derive(Args, Clone, Debug)]
pub struct MeshArgs {
    /// Wavefront OBJ template; the built-in asymmetric test block is used
    /// when omitted.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Uniform scale applied on load (0.001 for millimeter files).
    #[arg(long, default_value_t = 1.0)]
    pub mesh_scale: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricArg {
    Add,
    AddS,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExperimentKind {
    Pose,
    EndToEnd,
    Sphere,
}

#[derive(Subcommand)]
enum Command {
    /// Render the histograms a rig observes for one scene.
    Render {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Scene parameters JSON.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        rig: PathBuf,
    },
    /// Generate a synthetic dataset.
    Datagen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Use this rig for every sample instead of sampling one each.
        #[arg(long)]
        rig: Option<PathBuf>,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Multi-start initialization from observed histograms.
    Initialize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Recover a sphere (center and diameter) instead of a mesh pose.
        #[arg(long)]
        sphere: bool,
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        hist: PathBuf,
    },
    /// Gradient-based refinement from an initial guess.
    Refine {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        hist: PathBuf,
        /// Initial scene parameters JSON.
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Fit timing parameters of one sensor to captures of the bare plane.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// One pose per capture; the spec in the file is the starting point.
        #[arg(long)]
        rig: PathBuf,
        /// One histogram per rig entry, matched by sensor id.
        #[arg(long)]
        hist: PathBuf,
    },
    /// Pose or sphere metrics of predictions against ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Predicted parameters: one object or an array.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value = "add")]
        metric: MetricArg,
    },
    /// Point-cloud + ICP baselines.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
    },
    /// Forward-mode Jacobians against finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Exit with status 3 when any relative error exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Pose accuracy as a function of the number of pixels.
    Viewsweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Comma-separated pixel budgets.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<usize>>,
        #[arg(long)]
        n_scenes: Option<usize>,
    },
    /// Sensor-model ablations.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Variant to run (repeatable): full, delta-kernel, bin-size, fov.
        #[arg(long = "variant")]
        variants: Vec<String>,
        #[arg(long)]
        n_scenes: Option<usize>,
    },
    /// Seeded synthetic studies: perturbed-pose refinement, end-to-end
    /// recovery, or sphere recovery.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, value_enum)]
        kind: ExperimentKind,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render { common, mesh, params, rig } => commands::render(&common, &mesh, &params, &rig),
        Command::Datagen { common, mesh, rig, n_samples } => commands::datagen(&common, &mesh, rig.as_deref(), n_samples),
        Command::Initialize { common, mesh, sphere, rig, hist } => commands::initialize(&common, &mesh, sphere, &rig, &hist),
        Command::Refine { common, mesh, rig, hist, init, steps } => commands::refine(&common, &mesh, &rig, &hist, &init, steps),
        Command::Calibrate { common, rig, hist } => commands::calibrate(&common, &rig, &hist),
        Command::Eval { common, mesh, pred, gt, metric } => commands::eval(&common, &mesh, &pred, &gt, metric),
        Command::Baseline { common, mesh } => commands::baseline(&common, &mesh),
        Command::Gradcheck { common, mesh, tolerance } => commands::gradcheck(&common, &mesh, tolerance),
        Command::Viewsweep { common, mesh, budgets, n_scenes } => commands::viewsweep(&common, &mesh, budgets, n_scenes),
        Command::Ablate { common, mesh, variants, n_scenes } => commands::ablate(&common, &mesh, &variants, n_scenes),
        Command::Experiment { common, mesh, kind } => commands::experiment(&common, &mesh, kind),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
