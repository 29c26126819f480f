//! The ADAM update rule with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::float::{powi, sqrt};
use crate::params::Params;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!("{self:?}")))
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state: one first/second moment buffer per parameter group.
///
/// `step` minimizes: parameters move against the supplied gradient.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, group_lens: &[usize]) -> Self {
        Self {
            config,
            first: group_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second: group_lens.iter().map(|&n| vec![0.0; n]).collect(),
            steps: 0,
        }
    }

    pub fn for_params(config: AdamConfig, params: &Params) -> Self {
        Self::new(config, &params.group_lens())
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        check_len("adam parameter groups", self.first.len(), params.len())?;
        check_len("adam gradient groups", self.first.len(), grads.len())?;
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            check_len("adam parameter group", m.len(), p.len())?;
            check_len("adam gradient group", m.len(), g.len())?;
        }

        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.steps as i32;
        let bias1 = 1.0 - powi(beta1, t);
        let bias2 = 1.0 - powi(beta2, t);

        for (group, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first[group];
            let v = &mut self.second[group];
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= learning_rate * m_hat / (sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }

    pub fn step_params(&mut self, params: &mut Params, grads: &Params) -> Result<()> {
        let g = grads.groups();
        self.step(&mut params.groups_mut(), &g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate_times_sign() {
        let config = AdamConfig::with_learning_rate(0.1);
        let mut adam = Adam::new(config, &[3]);
        let mut p = vec![1.0, 1.0, 1.0];
        adam.step(&mut [&mut p], &[&[0.3, -2.0, 1e-2]]).unwrap();
        for (got, sign) in p.iter().zip([1.0, -1.0, 1.0]) {
            let step = 1.0 - got;
            assert!((step - 0.1 * sign).abs() < 1e-6, "{step}");
        }
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut adam = Adam::new(AdamConfig::with_learning_rate(0.5), &[2]);
        let mut p = vec![0.25, -3.0];
        for _ in 0..10 {
            adam.step(&mut [&mut p], &[&[0.0, 0.0]]).unwrap();
        }
        assert_eq!(p, [0.25, -3.0]);
        assert_eq!(adam.steps(), 10);
    }

    #[test]
    fn two_scalar_steps_match_hand_rolled_recurrence() {
        // Independent evaluation of the scalar recurrence with g = 1 twice.
        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8f64, 0.1f64);
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1);
            v = b2 * v + (1.0 - b2);
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((x - -0.2 / (1.0 + 1e-8)).abs() < 1e-15);

        let mut adam = Adam::new(AdamConfig::with_learning_rate(lr), &[1]);
        let mut p = vec![0.0];
        adam.step(&mut [&mut p], &[&[1.0]]).unwrap();
        adam.step(&mut [&mut p], &[&[1.0]]).unwrap();
        assert!((p[0] - x).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut adam = Adam::new(AdamConfig::default(), &[2]);
        let mut p = vec![0.0; 3];
        assert!(adam.step(&mut [&mut p], &[&[0.0; 3]]).is_err());
        assert_eq!(adam.steps(), 0);
    }
}
