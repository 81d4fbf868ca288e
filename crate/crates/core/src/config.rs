//! Run configuration read from TOML. Every section and field is optional;
//! missing values take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EncoderConfig;
use crate::hand_model::{generate_mini_hand, load_model, HandModel, HandSide, ModelError, MANO_JOINT_COUNT, MANO_VERTEX_COUNT};
use crate::metrics::MetricOptions;
use crate::objectives::LossWeights;
use crate::refiner::RefineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("model file {path}: {source}")]
    Model { path: String, source: ModelError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSettings {
    /// Frames per synthesized sequence.
    pub length: usize,
    pub fps: f64,
}

impl Default for SequenceSettings {
    fn default() -> Self {
        Self { length: 10, fps: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// Right-hand model file; the mini-hand is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<PathBuf>,
    /// Left-hand model file; the mirror of the right model when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<PathBuf>,
    pub mini_hand_seed: u64,
    /// Expected vertex count of model files.
    pub vertex_count: usize,
    /// Expected joint count of model files.
    pub joint_count: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            right: None,
            left: None,
            mini_hand_seed: 0,
            vertex_count: MANO_VERTEX_COUNT,
            joint_count: MANO_JOINT_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub loss: LossWeights,
    pub refine: RefineConfig,
    pub metrics: MetricOptions,
    pub sequence: SequenceSettings,
    pub model: ModelSettings,
    pub encoder: EncoderConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file; relative model paths are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let mut config = Self::from_toml(&std::fs::read_to_string(path)?, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.model.right, &mut config.model.left].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.refine_config().validate().map_err(ConfigError::Invalid)?;
        if !(self.sequence.fps.is_finite() && self.sequence.fps > 0.0) {
            return Err(ConfigError::Invalid(format!("sequence.fps must be positive, got {}", self.sequence.fps)));
        }
        if self.sequence.length < 1 {
            return Err(ConfigError::Invalid("sequence.length must be at least 1".into()));
        }
        if !(self.metrics.pck_max_mm > 0.0) || self.metrics.pck_steps < 2 {
            return Err(ConfigError::Invalid(
                "metrics.pck_max_mm must be positive and metrics.pck_steps at least 2".into(),
            ));
        }
        let e = &self.encoder;
        if e.heads == 0 || !e.dims[0].is_multiple_of(e.heads) || !e.dims[1].is_multiple_of(e.heads) {
            return Err(ConfigError::Invalid(format!(
                "encoder.heads = {} must divide the block widths {:?}",
                e.heads,
                &e.dims[..2]
            )));
        }
        Ok(())
    }

    /// Refinement settings carrying this config's loss weights.
    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            weights: self.loss,
            ..self.refine
        }
    }

    /// The right and left hand models named by the config.
    pub fn load_models(&self) -> Result<(HandModel, HandModel), ConfigError> {
        let load = |path: &PathBuf| -> Result<HandModel, ConfigError> {
            let model = load_model(path).map_err(|source| ConfigError::Model {
                path: path.display().to_string(),
                source,
            })?;
            let (v, j) = (model.num_vertices(), model.num_joints());
            if v != self.model.vertex_count || j != self.model.joint_count {
                return Err(ConfigError::Invalid(format!(
                    "model file {} has {v} vertices and {j} joints, the config expects {} and {}",
                    path.display(),
                    self.model.vertex_count,
                    self.model.joint_count
                )));
            }
            Ok(model)
        };
        let right = match &self.model.right {
            Some(p) => load(p)?,
            None => generate_mini_hand(self.model.mini_hand_seed),
        };
        let left = match &self.model.left {
            Some(p) => load(p)?,
            None => right.mirrored(),
        };
        if right.side != HandSide::Right || left.side != HandSide::Left {
            return Err(ConfigError::Invalid("model.right must be a right hand and model.left a left hand".into()));
        }
        Ok((right, left))
    }
}
