//! Adam with bias correction, one instance per parameter group.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_step_size(step_size: f64) -> Self {
        AdamConfig {
            step_size,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidArgument("adam step size must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0 < b && b < 1.0) {
                return Err(Error::InvalidArgument(format!("adam {name} must be in (0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamOptimizer {
    config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamOptimizer {
    pub fn new(len: usize, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(AdamOptimizer {
            config,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// One update: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grad.len() != self.first_moment.len() {
            return Err(Error::Shape(format!(
                "adam moments sized {} but got params {} / grad {}",
                self.first_moment.len(),
                params.len(),
                grad.len()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c = &self.config;
        let m_corr = 1.0 - c.beta1.powi(t);
        let v_corr = 1.0 - c.beta2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            self.first_moment[i] = c.beta1 * self.first_moment[i] + (1.0 - c.beta1) * g;
            self.second_moment[i] = c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.first_moment[i] / m_corr;
            let v_hat = self.second_moment[i] / v_corr;
            params[i] -= c.step_size * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook Adam written independently of the implementation above.
    struct ReferenceAdam {
        lr: f64,
        b1: f64,
        b2: f64,
        eps: f64,
        m: f64,
        v: f64,
        t: u32,
    }

    impl ReferenceAdam {
        fn update(&mut self, theta: f64, g: f64) -> f64 {
            self.t += 1;
            self.m = self.b1 * self.m + (1.0 - self.b1) * g;
            self.v = self.b2 * self.v + (1.0 - self.b2) * g * g;
            let m_hat = self.m / (1.0 - self.b1.powi(self.t as i32));
            let v_hat = self.v / (1.0 - self.b2.powi(self.t as i32));
            theta - self.lr * m_hat / (v_hat.sqrt() + self.eps)
        }
    }

    #[test]
    fn matches_reference_trajectory_on_scalar_quadratic() {
        // Loss (theta - 3)^2, gradient 2 (theta - 3).
        let mut opt = AdamOptimizer::new(1, AdamConfig::with_step_size(0.05)).unwrap();
        let mut reference = ReferenceAdam {
            lr: 0.05,
            b1: 0.9,
            b2: 0.999,
            eps: 1e-8,
            m: 0.0,
            v: 0.0,
            t: 0,
        };
        let mut theta = [0.0_f64];
        let mut theta_ref = 0.0_f64;
        for _ in 0..500 {
            let g = 2.0 * (theta[0] - 3.0);
            opt.step(&mut theta, &[g]).unwrap();
            let g_ref = 2.0 * (theta_ref - 3.0);
            theta_ref = reference.update(theta_ref, g_ref);
            assert!((theta[0] - theta_ref).abs() < 1e-12, "{} vs {}", theta[0], theta_ref);
        }
        assert!((theta[0] - 3.0).abs() < 0.5);
    }

    #[test]
    fn step_counter_increments() {
        let mut opt = AdamOptimizer::new(2, AdamConfig::default()).unwrap();
        let mut p = [0.0, 0.0];
        assert_eq!(opt.step_count(), 0);
        opt.step(&mut p, &[1.0, -1.0]).unwrap();
        opt.step(&mut p, &[1.0, -1.0]).unwrap();
        assert_eq!(opt.step_count(), 2);
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(AdamOptimizer::new(1, AdamConfig::with_step_size(0.0)).is_err());
        let bad_beta = AdamConfig {
            beta1: 1.0,
            ..Default::default()
        };
        assert!(AdamOptimizer::new(1, bad_beta).is_err());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut opt = AdamOptimizer::new(2, AdamConfig::default()).unwrap();
        let mut p = [0.0];
        assert!(opt.step(&mut p, &[1.0]).is_err());
    }
}
