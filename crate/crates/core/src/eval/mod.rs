//! Pose metrics and the idealized point-cloud + ICP baseline.

mod icp;
mod kdtree;
mod metrics;
mod pointcloud;

pub use icp::{icp_align, icp_align_points, rigid_fit, sample_surface, IcpConfig, IcpResult};
pub use kdtree::KdTree;
pub use metrics::{accuracy_curve, auc, compute_add, compute_add_s, median, MetricReport, PoseMetric, AUC_MAX_THRESHOLD};
pub use pointcloud::{render_pointcloud, CloudMode, PointCloud};
