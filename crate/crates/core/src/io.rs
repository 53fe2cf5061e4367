use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entity::Entity;
use crate::error::CoreError;
use crate::event::Event;
use crate::model::Model;
use crate::relation::{EvolutionaryRelation, StructuralRelation};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ExportRef<'a> {
    version: u32,
    entities: &'a [Entity],
    events: &'a [Event],
    structural: &'a [StructuralRelation],
    evolutionary: &'a [EvolutionaryRelation],
}

#[derive(Deserialize)]
struct ExportOwned {
    version: u32,
    entities: Vec<Entity>,
    events: Vec<Event>,
    structural: Vec<StructuralRelation>,
    evolutionary: Vec<EvolutionaryRelation>,
}

impl Model {
    pub fn to_json(&self) -> String {
        let export = ExportRef {
            version: FORMAT_VERSION,
            entities: self.entities(),
            events: self.events(),
            structural: self.structural(),
            evolutionary: self.evolutionary(),
        };
        let mut out = serde_json::to_string_pretty(&export).expect("model serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Model, CoreError> {
        #[derive(Deserialize)]
        struct VersionOnly {
            version: u32,
        }
        let version: VersionOnly =
            serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        if version.version != FORMAT_VERSION {
            return Err(CoreError::Version(version.version));
        }
        let parsed: ExportOwned = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        debug_assert_eq!(parsed.version, FORMAT_VERSION);
        Model::from_parts(
            parsed.entities,
            parsed.events,
            parsed.structural,
            parsed.evolutionary,
        )
    }

    pub fn export_model(&self, path: impl AsRef<Path>) -> Result<(), CoreError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn import_model(path: impl AsRef<Path>) -> Result<Model, CoreError> {
        let text = fs::read_to_string(path)?;
        Model::from_json(&text)
    }
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn parse_error(text: &str, err: &serde_json::Error) -> CoreError {
    let line = err.line().max(1);
    let offset = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum::<usize>()
        + err.column().saturating_sub(1);
    CoreError::Parse {
        offset: offset.min(text.len()),
        message: err.to_string(),
    }
}
