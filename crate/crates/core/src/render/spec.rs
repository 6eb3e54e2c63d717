use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One-way depth spanned by a single histogram bin (meters).
pub const DEFAULT_BIN_DEPTH_M: f64 = 0.014;

/// Default sigmoid sharpness expressed as `k * Δt`.
pub const DEFAULT_SOFT_BIN_K_DT: f64 = 20.0;

/// Fitted datasheet constants of the laser intensity map.
pub const DEFAULT_INTENSITY_K: [f64; 3] = [0.88, -3.16, 250.51];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntensityModel {
    /// `K1 exp(-K2 (wx² + wy²) - K3 (wx⁴ + wy⁴))`.
    #[default]
    Datasheet,
    /// Constant `K1` over the whole field of view.
    Constant,
}

/// Physical and calibration parameters of one diffuse single-pixel sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorSpec {
    /// Full field-of-view angle of the square ray grid, degrees.
    pub fov_deg: f64,
    pub grid_h: usize,
    pub grid_w: usize,
    pub n_bins: usize,
    pub bin_width_s: f64,
    /// Δi, in bins (fractional allowed).
    pub temporal_offset_bins: f64,
    pub n_emit: f64,
    pub intensity_k: [f64; 3],
    pub intensity_model: IntensityModel,
    /// Sigmoid sharpness of the soft binning, 1/s.
    pub soft_bin_k: f64,
    /// Reference pulse histogram at its native resolution (unnormalized).
    pub jitter_reference: Vec<f64>,
    /// Time-axis resampling factor applied to `jitter_reference`.
    pub jitter_scale: f64,
    pub speed_of_light: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        let bin_width_s = 2.0 * DEFAULT_BIN_DEPTH_M / SPEED_OF_LIGHT;
        Self {
            fov_deg: 32.0,
            grid_h: 64,
            grid_w: 64,
            n_bins: 128,
            bin_width_s,
            temporal_offset_bins: 0.0,
            n_emit: 1e6,
            intensity_k: DEFAULT_INTENSITY_K,
            intensity_model: IntensityModel::Datasheet,
            soft_bin_k: DEFAULT_SOFT_BIN_K_DT / bin_width_s,
            jitter_reference: default_reference_pulse(),
            jitter_scale: 1.0,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

impl SensorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return bad(format!("fov_deg must be in (0, 180), got {}", self.fov_deg));
        }
        if self.grid_h < 2 || self.grid_w < 2 {
            return bad(format!(
                "ray grid must be at least 2x2, got {}x{}",
                self.grid_h, self.grid_w
            ));
        }
        if self.n_bins < 1 {
            return bad("n_bins must be at least 1".into());
        }
        if !(self.bin_width_s > 0.0) {
            return bad(format!("bin_width_s must be positive, got {}", self.bin_width_s));
        }
        if !(self.n_emit > 0.0) {
            return bad(format!("n_emit must be positive, got {}", self.n_emit));
        }
        if !(self.soft_bin_k > 0.0) {
            return bad(format!("soft_bin_k must be positive, got {}", self.soft_bin_k));
        }
        if !self.temporal_offset_bins.is_finite() {
            return bad("temporal_offset_bins must be finite".into());
        }
        if !(self.speed_of_light > 0.0) {
            return bad("speed_of_light must be positive".into());
        }
        if !(self.jitter_scale > 0.0) {
            return bad(format!("jitter_scale must be positive, got {}", self.jitter_scale));
        }
        if self.jitter_reference.is_empty()
            || self.jitter_reference.iter().any(|&x| !(x >= 0.0) || !x.is_finite())
            || self.jitter_reference.iter().sum::<f64>() <= 0.0
        {
            return bad("jitter_reference must be non-empty, non-negative, with positive mass".into());
        }
        Ok(())
    }

    /// The jitter kernel actually convolved: the reference resampled by
    /// `jitter_scale` and normalized to unit sum.
    pub fn jitter_kernel(&self) -> Result<Vec<f64>> {
        super::jitter::resample_kernel(&self.jitter_reference, self.jitter_scale)
    }

    pub fn half_fov_tan(&self) -> f64 {
        (self.fov_deg.to_radians() / 2.0).tan()
    }

    /// Bin width expressed as a one-way depth, meters.
    pub fn bin_depth_m(&self) -> f64 {
        self.bin_width_s * self.speed_of_light / 2.0
    }

    /// Sigmoid sharpness as the dimensionless product `k * Δt`.
    pub fn soft_bin_k_dt(&self) -> f64 {
        self.soft_bin_k * self.bin_width_s
    }

    pub fn with_soft_bin_k_dt(mut self, k_dt: f64) -> Self {
        self.soft_bin_k = k_dt / self.bin_width_s;
        self
    }

    pub fn with_grid(mut self, h: usize, w: usize) -> Self {
        self.grid_h = h;
        self.grid_w = w;
        self
    }

    /// Unit delta kernel: convolution becomes a pure shift by Δi.
    pub fn with_delta_kernel(mut self) -> Self {
        self.jitter_reference = vec![1.0];
        self.jitter_scale = 1.0;
        self
    }
}

/// Synthetic stand-in for a sensor's reference histogram: a fast Gaussian
/// rise peaking at sample 2 followed by an exponential tail.
pub fn default_reference_pulse() -> Vec<f64> {
    (0..12)
        .map(|j| {
            let x = j as f64 - 2.0;
            let g = (-0.5 * (x / 0.9).powi(2)).exp();
            if x <= 0.0 {
                g
            } else {
                0.75 * g + 0.25 * (-x / 2.0).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let s = SensorSpec::default();
        s.validate().unwrap();
        assert!((s.bin_depth_m() - 0.014).abs() < 1e-15);
        assert!((s.soft_bin_k_dt() - 20.0).abs() < 1e-9);
        let k = s.jitter_kernel().unwrap();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_rejected() {
        for f in [
            |s: &mut SensorSpec| s.fov_deg = 180.0,
            |s: &mut SensorSpec| s.grid_h = 1,
            |s: &mut SensorSpec| s.n_bins = 0,
            |s: &mut SensorSpec| s.bin_width_s = 0.0,
            |s: &mut SensorSpec| s.n_emit = -1.0,
            |s: &mut SensorSpec| s.jitter_reference = vec![1.0, -0.5],
        ] {
            let mut s = SensorSpec::default();
            f(&mut s);
            assert!(s.validate().is_err());
        }
    }

    #[test]
    fn spec_json_fills_missing_fields_with_defaults() {
        let s: SensorSpec = serde_json::from_str(r#"{"fov_deg": 20.0}"#).unwrap();
        assert_eq!(s.fov_deg, 20.0);
        assert_eq!(s.n_bins, 128);
    }
}
