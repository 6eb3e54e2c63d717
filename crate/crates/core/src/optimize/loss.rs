use serde::{Deserialize, Serialize};

use crate::render::TransientHistogram;

/// Per-sensor norm in the reconstruction loss `Σ_s ‖render_s − observed_s‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossNorm {
    L1,
    #[default]
    L2,
}

fn normalized(h: &[f64]) -> Vec<f64> {
    let s: f64 = h.iter().sum();
    if s > 0.0 {
        h.iter().map(|x| x / s).collect()
    } else {
        h.to_vec()
    }
}

fn sensor_loss(r: &[f64], o: &[f64], norm: LossNorm) -> f64 {
    let d = r.iter().zip(o).map(|(a, b)| a - b);
    match norm {
        LossNorm::L1 => d.map(f64::abs).sum(),
        LossNorm::L2 => d.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Reconstruction loss between rendered and observed histograms. With
/// `normalize`, each histogram is divided by its total first.
pub fn histogram_loss(rendered: &[TransientHistogram], observed: &[TransientHistogram], norm: LossNorm, normalize: bool) -> f64 {
    rendered
        .iter()
        .zip(observed)
        .map(|(r, o)| {
            if normalize {
                sensor_loss(&normalized(&r.counts), &normalized(&o.counts), norm)
            } else {
                sensor_loss(&r.counts, &o.counts, norm)
            }
        })
        .sum()
}

/// Loss and its gradient given rendered values and per-sensor Jacobians
/// (`[bin][param]`, row-major with `n` params).
pub(crate) fn loss_and_grad(
    values: &[Vec<f64>],
    jacobians: &[Vec<f64>],
    observed: &[TransientHistogram],
    n: usize,
    norm: LossNorm,
    normalize: bool,
) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    for ((r, j), o) in values.iter().zip(jacobians).zip(observed) {
        let (r, j, o) = if normalize {
            let s: f64 = r.iter().sum();
            if s > 0.0 {
                // d(r/s) = (dr - (r/s) ds) / s
                let q: Vec<f64> = r.iter().map(|x| x / s).collect();
                let mut ds = vec![0.0; n];
                for row in j.chunks(n) {
                    for (a, b) in ds.iter_mut().zip(row) {
                        *a += b;
                    }
                }
                let jq: Vec<f64> = j
                    .chunks(n)
                    .zip(&q)
                    .flat_map(|(row, &qb)| row.iter().zip(&ds).map(move |(d, dsum)| (d - qb * dsum) / s))
                    .collect();
                (q, jq, normalized(&o.counts))
            } else {
                (r.clone(), j.clone(), normalized(&o.counts))
            }
        } else {
            (r.clone(), j.clone(), o.counts.clone())
        };
        let diff: Vec<f64> = r.iter().zip(&o).map(|(a, b)| a - b).collect();
        let l = sensor_loss(&r, &o, norm);
        loss += l;
        let coef: Vec<f64> = match norm {
            LossNorm::L1 => diff.iter().map(|&d| if d == 0.0 { 0.0 } else { d.signum() }).collect(),
            LossNorm::L2 => {
                if l > 0.0 {
                    diff.iter().map(|d| d / l).collect()
                } else {
                    vec![0.0; diff.len()]
                }
            }
        };
        for (row, c) in j.chunks(n).zip(&coef) {
            if *c != 0.0 {
                for (g, d) in grad.iter_mut().zip(row) {
                    *g += c * d;
                }
            }
        }
    }
    (loss, grad)
}
