//! Synthetic scenes, rigs and datasets: objects dropped onto the plane at
//! random poses within the workspace, rigs aimed at the workspace center, and
//! per-sample sensor-position noise with randomized albedos.

mod dataset;
mod sampling;

pub use dataset::{generate_dataset, generate_sample, DatagenConfig, DatasetManifest, DatasetSample, ObjectKind};
pub use sampling::{
    drop_to_plane, perturb_positions, sample_object_pose, sample_rig, sample_sphere, RigSampling, Workspace,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG stream for item `index` under a master seed.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
