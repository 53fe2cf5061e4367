//! Pipeline configuration, read from TOML. Relative paths resolve against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use msem_active::{StopCondition, Strategy};
use msem_evolution::Window;
use msem_extract::{ModelConfig, TrainConfig};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GatewayError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub classifier: Option<PathBuf>,
    pub external: Option<PathBuf>,
    /// JSON Lines knowledge-graph records used for fusion lookups.
    pub kg: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    /// Gold tag annotations; documents listed here bypass the extractor.
    pub annotations: Option<PathBuf>,
    /// Training samples for the extractor when no checkpoint is given.
    pub training: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Active-learning pool state (JSON Lines).
    pub pool: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlSettings {
    pub strategy: Strategy,
    pub batch: usize,
    pub stop: StopCondition,
    pub warm_start: bool,
}

impl Default for AlSettings {
    fn default() -> Self {
        AlSettings { strategy: Strategy::Ltp, batch: 50, stop: StopCondition::default(), warm_start: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSettings {
    pub snapshots: Vec<NaiveDate>,
    pub theta: f64,
    pub key_nodes: usize,
    pub window: Window,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        let d = msem_evolution::EvolutionConfig::default();
        EvolutionSettings { snapshots: Vec::new(), theta: d.theta, key_nodes: d.key_nodes, window: d.window }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub al: AlSettings,
    pub evolution: EvolutionSettings,
    /// Optional HTTP endpoint for knowledge-graph lookups; takes precedence
    /// over `paths.kg`.
    pub kg_endpoint: Option<String>,
    pub kg_timeout_ms: u64,
    /// Clusters requested for unmatched events.
    pub clusters: usize,
    pub port: u16,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            al: AlSettings::default(),
            evolution: EvolutionSettings::default(),
            kg_endpoint: None,
            kg_timeout_ms: 2000,
            clusters: msem_construct::cluster::DEFAULT_K,
            port: 8080,
            seed: 0,
        }
    }
}

/// Seed streams derived from the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Encoder = 1,
    Training = 2,
    Communities = 3,
    Clustering = 4,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = crate::error::read(path)?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| GatewayError::Config(e.to_string()))?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [
            &mut p.corpus,
            &mut p.triples,
            &mut p.classifier,
            &mut p.external,
            &mut p.kg,
            &mut p.rules,
            &mut p.annotations,
            &mut p.training,
            &mut p.checkpoint,
            &mut p.pool,
        ] {
            if let Some(path) = slot.as_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }

    /// Input paths must exist; the pool file may be created later.
    pub fn validate(&self) -> Result<(), GatewayError> {
        let p = &self.paths;
        let inputs: [(&'static str, &Option<PathBuf>); 9] = [
            ("corpus", &p.corpus),
            ("triples", &p.triples),
            ("classifier", &p.classifier),
            ("external", &p.external),
            ("kg", &p.kg),
            ("rules", &p.rules),
            ("annotations", &p.annotations),
            ("training", &p.training),
            ("checkpoint", &p.checkpoint),
        ];
        for (role, path) in inputs {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(GatewayError::MissingPath { role, path: path.clone() });
                }
            }
        }
        if self.paths.triples.is_some() != self.paths.classifier.is_some() {
            return Err(GatewayError::Config("triples and classifier must be given together".into()));
        }
        msem_evolution::build_snapshots(&msem_core::Model::new(), &self.evolution.snapshots)
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        self.model.validate().map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn seed_for(&self, stream: SeedStream) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng.next_u64()
    }

    /// Model configuration with the encoder seed drawn from the root seed.
    pub fn model_config(&self) -> ModelConfig {
        let mut m = self.model;
        m.encoder.seed = self.seed_for(SeedStream::Encoder);
        m
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed_for(SeedStream::Training), ..self.train }
    }

    pub fn loop_config(&self) -> msem_active::LoopConfig {
        msem_active::LoopConfig {
            strategy: self.al.strategy,
            batch_size: self.al.batch,
            model: self.model_config(),
            train: self.train_config(),
            stop: self.al.stop,
            warm_start: self.al.warm_start,
        }
    }

    pub fn evolution_config(&self) -> msem_evolution::EvolutionConfig {
        msem_evolution::EvolutionConfig {
            theta: self.evolution.theta,
            key_nodes: self.evolution.key_nodes,
            seed: self.seed_for(SeedStream::Communities),
            window: self.evolution.window,
        }
    }
}
