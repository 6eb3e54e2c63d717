//! Jitter-kernel convolution with a fractional temporal offset, and
//! time-axis resampling of the reference pulse.

use super::histogram::TransientHistogram;
use super::spec::SensorSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `h[i] = Σ_j N[i + Δi - j] s[j]`, out-of-range `N` taken as zero. A
/// fractional `Δi` interpolates linearly between the two integer shifts.
pub(crate) fn convolve_shift<T: Real>(raw: &[T], kernel: &[T], offset: T) -> Vec<T> {
    let n = raw.len() as i64;
    let base = offset.value().floor();
    let frac = offset - T::cst(base);
    let base = base as i64;
    let conv_at = |m: i64| -> T {
        let mut acc = T::zero();
        for (j, s) in kernel.iter().enumerate() {
            let idx = m - j as i64;
            if (0..n).contains(&idx) {
                acc += raw[idx as usize] * *s;
            }
        }
        acc
    };
    let one = T::cst(1.0);
    let mut out = Vec::with_capacity(raw.len());
    let mut lo = conv_at(base);
    for i in 0..n {
        let hi = conv_at(i + base + 1);
        out.push(lo * (one - frac) + hi * frac);
        lo = hi;
    }
    out
}

/// Applies the spec's jitter kernel and temporal offset to a raw histogram.
pub fn convolve_jitter(raw: &TransientHistogram, spec: &SensorSpec) -> Result<TransientHistogram> {
    let kernel = spec.jitter_kernel()?;
    Ok(convolve_with(raw, &kernel, spec.temporal_offset_bins))
}

pub fn convolve_with(raw: &TransientHistogram, kernel: &[f64], offset_bins: f64) -> TransientHistogram {
    TransientHistogram {
        counts: convolve_shift(&raw.counts, kernel, offset_bins),
        bin_width_s: raw.bin_width_s,
        sensor_id: raw.sensor_id,
    }
}

/// Linear-interpolation resampling of the kernel time axis by `scale`
/// (`s[j] = r(j / scale)`), renormalized to unit sum.
pub(crate) fn resample_kernel_generic<T: Real>(reference: &[f64], scale: T) -> Vec<T> {
    let last = reference.len() - 1;
    let sv = scale.value();
    let len = (last as f64 * sv).floor() as usize + 1;
    let mut out = Vec::with_capacity(len);
    let mut total = T::zero();
    for j in 0..len {
        let x = T::cst(j as f64) / scale;
        let xv = x.value();
        let idx = (xv.floor() as usize).min(last);
        let v = if idx >= last {
            T::cst(reference[last])
        } else {
            let f = x - T::cst(idx as f64);
            T::cst(reference[idx]) * (T::cst(1.0) - f) + T::cst(reference[idx + 1]) * f
        };
        total += v;
        out.push(v);
    }
    out.into_iter().map(|v| v / total).collect()
}

pub fn resample_kernel(reference: &[f64], scale: f64) -> Result<Vec<f64>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kernel resampling factor must be positive, got {scale}"
        )));
    }
    if reference.is_empty() || reference.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter(
            "reference kernel must be non-empty and non-negative".into(),
        ));
    }
    if reference.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter("reference kernel has no mass".into()));
    }
    Ok(resample_kernel_generic(reference, scale))
}

/// A unit delta placed at the peak of `kernel`.
pub fn delta_at_peak(kernel: &[f64]) -> Vec<f64> {
    let peak = kernel
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut out = vec![0.0; peak + 1];
    out[peak] = 1.0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(raw: &[f64], kernel: &[f64], shift: i64) -> Vec<f64> {
        let n = raw.len() as i64;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, s) in kernel.iter().enumerate() {
                    let k = i + shift - j as i64;
                    if k >= 0 && k < n {
                        acc += raw[k as usize] * s;
                    }
                }
                acc
            })
            .collect()
    }

    fn hist(counts: Vec<f64>) -> TransientHistogram {
        TransientHistogram {
            counts,
            bin_width_s: 1e-10,
            sensor_id: 0,
        }
    }

    #[test]
    fn delta_kernel_zero_offset_is_identity() {
        let raw: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let out = convolve_with(&hist(raw.clone()), &[1.0], 0.0);
        assert_eq!(out.counts, raw);
    }

    #[test]
    fn mass_is_preserved_for_interior_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut raw = vec![0.0; 64];
        for v in raw.iter_mut().skip(20).take(10) {
            *v = rng.random_range(0.0..5.0);
        }
        let mut kernel: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|x| *x /= s);
        for offset in [0.0, 2.0, -3.0, 1.37, -2.6] {
            let out = convolve_with(&hist(raw.clone()), &kernel, offset);
            let a: f64 = out.counts.iter().sum();
            let b: f64 = raw.iter().sum();
            assert!((a - b).abs() < 1e-9, "offset {offset}: {a} vs {b}");
        }
    }

    #[test]
    fn matches_naive_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..10.0)).collect();
            let kernel: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..1.0)).collect();
            let shift = rng.random_range(-6..6);
            let out = convolve_with(&hist(raw.clone()), &kernel, shift as f64);
            let oracle = naive(&raw, &kernel, shift);
            for (a, b) in out.counts.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
            // Fractional offset: linear blend of the neighbouring integer shifts.
            let out = convolve_with(&hist(raw.clone()), &kernel, shift as f64 + 0.25);
            let next = naive(&raw, &kernel, shift + 1);
            for ((a, b), c) in out.counts.iter().zip(&oracle).zip(&next) {
                assert!((a - (0.75 * b + 0.25 * c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positive_offset_moves_peak_to_lower_index() {
        let mut raw = vec![0.0; 32];
        raw[10] = 1.0;
        let out = convolve_with(&hist(raw), &[1.0], 3.0);
        assert_eq!(out.counts[7], 1.0);
    }

    #[test]
    fn unit_scale_only_renormalizes() {
        let r = vec![1.0, 3.0, 2.0, 0.5];
        let k = resample_kernel(&r, 1.0).unwrap();
        for (a, b) in k.iter().zip(&r) {
            assert!((a - b / 6.5).abs() < 1e-15);
        }
    }

    #[test]
    fn scale_two_preserves_symmetry() {
        let r = vec![0.1, 0.5, 1.0, 0.5, 0.1];
        let k = resample_kernel(&r, 2.0).unwrap();
        assert_eq!(k.len(), 9);
        for j in 0..k.len() {
            assert!((k[j] - k[k.len() - 1 - j]).abs() < 1e-15);
        }
    }

    #[test]
    fn fractional_scale_matches_dense_upsample_then_decimate() {
        // 1.37 = 137 / 100: upsample by 137, keep every 100th sample.
        let r = crate::render::spec::default_reference_pulse();
        let up = 137usize;
        let dense: Vec<f64> = (0..=(r.len() - 1) * up)
            .map(|q| {
                let i = q / up;
                let f = (q % up) as f64 / up as f64;
                if i + 1 < r.len() {
                    r[i] * (1.0 - f) + r[i + 1] * f
                } else {
                    r[i]
                }
            })
            .collect();
        let picked: Vec<f64> = dense.iter().step_by(100).copied().collect();
        let total: f64 = picked.iter().sum();
        let k = resample_kernel(&r, 1.37).unwrap();
        assert_eq!(k.len(), picked.len());
        for (a, b) in k.iter().zip(&picked) {
            assert!((a - b / total).abs() < 1e-6);
        }
    }

    #[test]
    fn resampling_is_differentiable_in_scale() {
        let r = crate::render::spec::default_reference_pulse();
        let s = 1.23;
        let k = resample_kernel_generic(&r, Dual::<1>::variable(s, 0));
        let h = 1e-6;
        let (kp, km) = (resample_kernel(&r, s + h).unwrap(), resample_kernel(&r, s - h).unwrap());
        for j in 0..k.len().min(kp.len()).min(km.len()) {
            let fd = (kp[j] - km[j]) / (2.0 * h);
            assert!((k[j].d[0] - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn non_positive_scale_rejected() {
        assert!(resample_kernel(&[1.0], 0.0).is_err());
        assert!(resample_kernel(&[1.0], -1.0).is_err());
    }
}
