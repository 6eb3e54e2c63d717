use crate::scalar::{sigmoid, Real};

/// Sigmoid arguments beyond this magnitude contribute below f64 resolution.
const SIGMOID_CUTOFF: f64 = 40.0;

/// Soft box weight of arrival time `t` in bin `i`:
/// `σ(k (t - iΔt)) - σ(k (t - (i + 1)Δt))`.
pub fn soft_bin_weight(t: f64, i: usize, bin_width_s: f64, k: f64) -> f64 {
    let lo = sigmoid(k * (t - i as f64 * bin_width_s));
    let hi = sigmoid(k * (t - (i + 1) as f64 * bin_width_s));
    lo - hi
}

/// Number of bins on either side of the arrival bin that can receive a
/// non-negligible soft weight.
#[inline]
pub(crate) fn window_half_width(k_dt: f64) -> i64 {
    (SIGMOID_CUTOFF / k_dt).ceil() as i64 + 1
}

/// Adds `weight * W(tau, t_i)` to every bin within the sigmoid window.
#[inline]
pub(crate) fn accumulate_soft<T: Real>(hist: &mut [T], weight: T, tau: T, dt: T, k: f64) {
    let n = hist.len() as i64;
    let dtv = dt.value();
    let pos = tau.value() / dtv;
    if !pos.is_finite() {
        return;
    }
    let m = window_half_width(k * dtv);
    let center = pos.floor() as i64;
    let lo = (center - m).max(0);
    let hi = (center + m).min(n - 1);
    if hi < lo {
        return;
    }
    let boundary = |j: i64| sigmoid((tau - dt.scale(j as f64)).scale(k));
    let mut prev = boundary(lo);
    for i in lo..=hi {
        let next = boundary(i + 1);
        hist[i as usize] += weight * (prev - next);
        prev = next;
    }
}
