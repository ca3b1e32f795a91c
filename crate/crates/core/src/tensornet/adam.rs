use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use super::Parameter;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for an ordered list of parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One bias-corrected Adam update; gradients are zeroed afterwards.
    /// The parameter list must keep the same order and shapes between calls.
    pub fn step(&mut self, params: &mut [&mut Parameter]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| ArrayD::zeros(p.value.raw_dim())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            if m.shape() != p.value.shape() {
                return Err(Error::Shape(format!(
                    "moment shape {:?} vs parameter {} {:?}",
                    m.shape(),
                    p.name,
                    p.shape()
                )));
            }
            let Parameter { value, grad, .. } = &mut **p;
            Zip::from(value)
                .and(&mut *grad)
                .and(m)
                .and(v)
                .for_each(|theta, g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * *g;
                    *v = beta2 * *v + (1.0 - beta2) * *g * *g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *theta -= lr * m_hat / (v_hat.sqrt() + eps);
                    *g = 0.0;
                });
        }
        Ok(())
    }
}
