use serde::{Deserialize, Serialize};

use super::params::ParamStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, store: &ParamStore) -> Self {
        let zeros = || store.iter().map(|p| vec![0.0; p.value.numel()]).collect();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, first: zeros(), second: zeros() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first, &self.second)
    }

    /// One bias-corrected Adam update of every parameter.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Vec<f64>]) {
        assert_eq!(grads.len(), store.len(), "one gradient per parameter");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((param, g), m), v) in store.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
            assert_eq!(g.len(), param.value.numel(), "gradient shape for {}", param.name);
            for (((p, &gi), mi), vi) in param.value.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let update = self.lr * (*mi / c1) / ((*vi / c2).sqrt() + self.eps);
                *p -= update;
            }
        }
    }
}
