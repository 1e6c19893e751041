use mrisr_nn::{AdamConfig, DiscriminatorConfig, GeneratorConfig};
use serde::{Deserialize, Serialize};

use crate::degradation::DegradationConfig;
use crate::error::{Error, Result};

/// Undersampling factor with the ACS fraction used alongside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acceleration {
    #[serde(rename = "R")]
    pub r: f64,
    pub acs_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    /// Weight initialization.
    pub init: u64,
    /// Epoch shuffling.
    pub data: u64,
    /// Degradation and mask draws inside training steps.
    pub augment: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            init: 1,
            data: 2,
            augment: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the cycle term in the generator objective.
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// One entry is drawn uniformly per forward-operator application.
    pub accelerations: Vec<Acceleration>,
    pub degradation: DegradationConfig,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub seeds: Seeds,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.001,
            epochs: 20,
            batch_size: 1,
            adam: AdamConfig::default(),
            accelerations: vec![
                Acceleration {
                    r: 3.0,
                    acs_fraction: 0.06,
                },
                Acceleration {
                    r: 4.0,
                    acs_fraction: 0.11,
                },
            ],
            degradation: DegradationConfig::default(),
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig::default(),
            seeds: Seeds::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda {} must be positive", self.lambda)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.accelerations.is_empty() {
            return Err(Error::config("at least one acceleration is required"));
        }
        for a in &self.accelerations {
            if !(a.r >= 1.0 && a.r.is_finite()) || !(0.0..1.0).contains(&a.acs_fraction) {
                return Err(Error::config(format!(
                    "acceleration R={} with ACS fraction {} is invalid",
                    a.r, a.acs_fraction
                )));
            }
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::config(format!("learning rate {} is invalid", self.adam.lr)));
        }
        self.degradation.validate()?;
        self.generator.validate()?;
        self.discriminator.validate()?;
        Ok(())
    }

    /// Largest acceleration seen in training; inference must not exceed it.
    pub fn max_acceleration(&self) -> f64 {
        self.accelerations.iter().map(|a| a.r).fold(1.0, f64::max)
    }
}
