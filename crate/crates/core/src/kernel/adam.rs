use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::invalid("Adam betas must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// One parameter group handed to [`AdamState::step`].
pub struct GroupUpdate<'a> {
    pub name: &'a str,
    pub params: &'a mut [f64],
    pub grads: &'a [f64],
}

/// Adam moments for a fixed list of parameter groups, sharing one step counter.
///
/// Entries whose gradient is exactly zero are left untouched (moments and
/// parameter), so embedding rows that a batch never reads do not drift.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, group_sizes: &[usize]) -> Result<Self> {
        config.validate()?;
        Ok(AdamState {
            config,
            step_count: 0,
            first_moment: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    /// Applies one bias-corrected update to every group.
    ///
    /// Shapes and gradient finiteness are checked for all groups before any
    /// parameter is modified.
    pub fn step(&mut self, groups: &mut [GroupUpdate<'_>]) -> Result<()> {
        if groups.len() != self.first_moment.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} parameter groups, got {}",
                self.first_moment.len(),
                groups.len()
            )));
        }
        for (g, m) in groups.iter().zip(&self.first_moment) {
            if g.params.len() != m.len() || g.grads.len() != m.len() {
                return Err(Error::shape(format!(
                    "parameter group {}: optimizer state has {} entries, params {}, grads {}",
                    g.name,
                    m.len(),
                    g.params.len(),
                    g.grads.len()
                )));
            }
            if let Some(pos) = g.grads.iter().position(|v| !v.is_finite()) {
                return Err(Error::numeric(
                    format!("gradient of parameter group {}", g.name),
                    format!("entry {pos} is {}", g.grads[pos]),
                ));
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        for ((g, m), v) in groups
            .iter_mut()
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            for i in 0..m.len() {
                let grad = g.grads[i];
                if grad == 0.0 {
                    continue;
                }
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad;
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad * grad;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                g.params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Single-group convenience wrapper around [`AdamState::step`].
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    state.step(&mut [GroupUpdate {
        name: "params",
        params,
        grads,
    }])
}
