use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 32,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Classical momentum: `v <- mu v - lr g`, then `p <- p + v`.
pub fn sgd_step(net: &mut Network, cfg: &TrainConfig) {
    for ((p, g), v) in net
        .params
        .iter_mut()
        .zip(&net.grads)
        .zip(net.velocity.iter_mut())
    {
        for ((p, g), v) in p.iter_mut().zip(g).zip(v.iter_mut()) {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *p += *v;
        }
    }
}
