use crate::grad::PartHistograms;
use crate::render::TransientHistogram;

/// Smallest albedo returned by the closed-form fit (albedos are optimized in
/// log space).
pub const MIN_FITTED_ALBEDO: f64 = 1e-3;

/// Non-negative least squares for `(ρ_obj, ρ_plane)` minimizing
/// `Σ_s ‖ρ_obj O_s + ρ_plane P_s − h_s‖²`.
pub fn fit_albedos(parts: &PartHistograms, observed: &[TransientHistogram]) -> (f64, f64) {
    let (mut oo, mut op, mut pp, mut oh, mut ph) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((o, p), h) in parts.object.iter().zip(&parts.plane).zip(observed) {
        for ((a, b), c) in o.iter().zip(p).zip(&h.counts) {
            oo += a * a;
            op += a * b;
            pp += b * b;
            oh += a * c;
            ph += b * c;
        }
    }
    let clamp = |x: f64| if x.is_finite() { x.max(MIN_FITTED_ALBEDO) } else { 1.0 };
    let det = oo * pp - op * op;
    if det > 1e-12 * oo * pp {
        let ro = (oh * pp - ph * op) / det;
        let rp = (ph * oo - oh * op) / det;
        if ro >= 0.0 && rp >= 0.0 {
            return (clamp(ro), clamp(rp));
        }
    }
    // Boundary solutions: one albedo at its floor, the other in closed form.
    let ro_only = if oo > 0.0 { (oh / oo).max(0.0) } else { 0.0 };
    let rp_only = if pp > 0.0 { (ph / pp).max(0.0) } else { 0.0 };
    let cost = |ro: f64, rp: f64| ro * ro * oo + 2.0 * ro * rp * op + rp * rp * pp - 2.0 * (ro * oh + rp * ph);
    if cost(ro_only, 0.0) <= cost(0.0, rp_only) {
        (clamp(ro_only), MIN_FITTED_ALBEDO)
    } else {
        (MIN_FITTED_ALBEDO, clamp(rp_only))
    }
}
