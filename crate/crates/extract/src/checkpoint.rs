use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ExtractError;
use crate::model::{JointModel, ModelConfig, Params};
use crate::scalar::Scalar;
use crate::train::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Model configuration, every parameter tensor and the training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<S> {
    pub version: u32,
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub params: Params<S>,
}

impl<S: Scalar> Checkpoint<S> {
    pub fn new(model: &JointModel<S>, train: TrainConfig) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            seed: train.seed,
            model: model.config,
            train,
            params: model.params.clone(),
        }
    }

    pub fn into_model(self) -> Result<JointModel<S>, ExtractError> {
        self.model.validate()?;
        let d = self.model.encoder.d;
        let p = &self.params;
        let ok = p.embeddings.dim() == (self.model.encoder.hash_buckets, d)
            && p.w.nrows() == d
            && p.w_rel.nrows() == 2 * d
            && p.w.ncols() == p.b.len()
            && p.w_rel.ncols() == p.b_rel.len()
            && p.trans.dim() == (p.b.len(), p.b.len());
        if !ok {
            return Err(ExtractError::Checkpoint(
                "parameter shapes do not match the stored config".into(),
            ));
        }
        Ok(JointModel {
            config: self.model,
            params: self.params,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ExtractError> {
        let c: Checkpoint<S> =
            serde_json::from_str(text).map_err(|e| ExtractError::Checkpoint(e.to_string()))?;
        if c.version != CHECKPOINT_VERSION {
            return Err(ExtractError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                c.version
            )));
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExtractError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExtractError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
