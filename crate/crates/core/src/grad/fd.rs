/// Central differences `(f(p + δ e_i) - f(p - δ e_i)) / 2δ` per coordinate.
pub fn finite_diff_gradient(f: impl Fn(&[f64]) -> f64, p: &[f64], step: f64) -> Vec<f64> {
    finite_diff_gradient_steps(f, p, &vec![step; p.len()])
}

pub fn finite_diff_gradient_steps(f: impl Fn(&[f64]) -> f64, p: &[f64], steps: &[f64]) -> Vec<f64> {
    assert_eq!(p.len(), steps.len());
    let mut x = p.to_vec();
    (0..p.len())
        .map(|i| {
            let h = steps[i];
            assert!(h > 0.0, "finite-difference step must be positive");
            x[i] = p[i] + h;
            let fp = f(&x);
            x[i] = p[i] - h;
            let fm = f(&x);
            x[i] = p[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a vector function; `out[k][i] = ∂f_k/∂p_i`.
pub fn finite_diff_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, p: &[f64], steps: &[f64]) -> Vec<Vec<f64>> {
    assert_eq!(p.len(), steps.len());
    let mut x = p.to_vec();
    let mut cols = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let h = steps[i];
        x[i] = p[i] + h;
        let fp = f(&x);
        x[i] = p[i] - h;
        let fm = f(&x);
        x[i] = p[i];
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let m = cols.first().map_or(0, |c| c.len());
    (0..m).map(|k| cols.iter().map(|c| c[k]).collect()).collect()
}

/// Per-parameter discrepancy between two Jacobians (`[output][param]`):
/// `(max absolute error, max error relative to the column's largest entry)`.
pub fn jacobian_discrepancy(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = a.first().map_or(0, |r| r.len());
    (0..n)
        .map(|p| {
            let mut abs = 0.0f64;
            let mut scale = 0.0f64;
            for (ra, rb) in a.iter().zip(b) {
                abs = abs.max((ra[p] - rb[p]).abs());
                scale = scale.max(ra[p].abs()).max(rb[p].abs());
            }
            let rel = if scale > 0.0 { abs / scale } else { 0.0 };
            (abs, rel)
        })
        .collect()
}
