use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Expected photon counts per time bin for one sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransientHistogram {
    pub counts: Vec<f64>,
    pub bin_width_s: f64,
    pub sensor_id: usize,
}

impl TransientHistogram {
    pub fn zeros(n_bins: usize, bin_width_s: f64, sensor_id: usize) -> Self {
        Self {
            counts: vec![0.0; n_bins],
            bin_width_s,
            sensor_id,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn argmax(&self) -> usize {
        self.counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            counts: self.counts.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Poisson-distributed photon counts with these expected values.
    pub fn sample_poisson<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let counts = self
            .counts
            .iter()
            .map(|&lambda| {
                if lambda > 0.0 {
                    Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(lambda)
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            counts,
            ..self.clone()
        }
    }
}
