//! First-order optimizers used for physics-informed training.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Adam,
    AdaBelief,
    /// Limited-memory BFGS with backtracking line search; deterministic and
    /// effective as a polish stage on small, ill-conditioned problems where
    /// diagonal first-order methods stall.
    Lbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        OptimizerConfig {
            algorithm: Algorithm::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs,
            seed,
        }
    }

    pub fn adabelief(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        OptimizerConfig {
            algorithm: Algorithm::AdaBelief,
            ..Self::adam(learning_rate, epochs, seed)
        }
    }

    pub fn lbfgs(epochs: usize) -> Self {
        OptimizerConfig {
            algorithm: Algorithm::Lbfgs,
            ..Self::adam(1.0, epochs, 0)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate > 0.0) {
            return Err(format!("learning rate must be positive: {}", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0 < b && b < 1.0) {
                return Err(format!("{name} must lie in (0, 1): {b}"));
            }
        }
        Ok(())
    }
}

pub struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        OptimizerState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn step(&mut self, config: &OptimizerConfig, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let t = self.step as i32;
        let b1 = config.beta1;
        let b2 = config.beta2;
        let bias1 = 1.0 - b1.powi(t);
        let bias2 = 1.0 - b2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = match config.algorithm {
                Algorithm::Adam => b2 * self.v[i] + (1.0 - b2) * g * g,
                Algorithm::AdaBelief => {
                    let diff = g - self.m[i];
                    b2 * self.v[i] + (1.0 - b2) * diff * diff + config.epsilon
                }
            };
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}

/// Two-loop-recursion L-BFGS history. The training loop owns the line
/// search (it needs loss evaluations); this struct only produces descent
/// directions and absorbs curvature pairs.
pub struct LbfgsState {
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>)>,
    capacity: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LbfgsState {
    pub fn new(capacity: usize) -> Self {
        LbfgsState {
            pairs: Default::default(),
            capacity,
        }
    }

    /// Descent direction −H·g from the stored curvature pairs.
    pub fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y) in self.pairs.iter().rev() {
            let rho = 1.0 / dot(y, s);
            let alpha = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= alpha * yi;
            }
            alphas.push((alpha, rho));
        }
        if let Some((s, y)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y), (alpha, rho)) in self.pairs.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (alpha - beta) * si;
            }
        }
        for qi in q.iter_mut() {
            *qi = -*qi;
        }
        q
    }

    /// Stores the pair (s = Δparams, y = Δgrad); skipped when curvature is
    /// too small to keep the inverse-Hessian estimate positive definite.
    pub fn update(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if dot(&s, &y) > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if self.pairs.len() == self.capacity {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Both optimizers must drive a convex quadratic to a tiny gradient norm.
    #[test]
    fn quadratic_convergence() {
        for algorithm in [Algorithm::Adam, Algorithm::AdaBelief] {
            let mut config = OptimizerConfig::adam(0.05, 0, 0);
            config.algorithm = algorithm;
            let mut params = vec![3.0, -2.0, 0.5];
            let scales = [1.0, 4.0, 0.25];
            let mut state = OptimizerState::new(3);
            let mut gnorm = f64::INFINITY;
            for _ in 0..20000 {
                let grad: Vec<f64> = params
                    .iter()
                    .zip(&scales)
                    .map(|(&p, &s)| 2.0 * s * p)
                    .collect();
                gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if gnorm < 1e-9 {
                    break;
                }
                state.step(&config, &mut params, &grad);
            }
            assert!(gnorm < 1e-8, "{algorithm:?} stalled at |g| = {gnorm}");
        }
    }
}
