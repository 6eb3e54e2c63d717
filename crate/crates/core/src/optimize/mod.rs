//! Analysis-by-synthesis: Adam refinement of scene parameters, multi-start
//! initialization and sensor timing calibration.

mod adam;
mod albedo;
mod calibrate;
mod init;
mod loss;
mod refine;

pub use adam::Adam;
pub use calibrate::{calibrate_sensor, CalibCapture, CalibConfig, CalibResult};
pub use albedo::{fit_albedos, MIN_FITTED_ALBEDO};
pub use init::{initialize, sample_candidate, InitConfig, InitResult};
pub use loss::{histogram_loss, LossNorm};
pub use refine::{evaluate_loss, refine, RefineConfig, RefineResult};
