/// Adam with a per-coordinate learning rate.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: Vec<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: Vec<f64>, beta1: f64, beta2: f64, eps: f64) -> Self {
        let n = lr.len();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One update of `x` in place given the gradient `g`, with all learning
    /// rates multiplied by `lr_scale`.
    pub fn step(&mut self, x: &mut [f64], g: &[f64], lr_scale: f64) {
        assert_eq!(x.len(), self.lr.len());
        assert_eq!(g.len(), self.lr.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            x[i] -= lr_scale * self.lr[i] * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
