use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use msem_extract::TrainingSample;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ActiveError;

/// Sentence pair awaiting annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPair {
    pub x1: Vec<String>,
    pub x2: Vec<String>,
}

impl From<&TrainingSample> for RawPair {
    fn from(s: &TrainingSample) -> Self {
        RawPair {
            x1: s.x1.clone(),
            x2: s.x2.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Labeled,
    Unlabeled,
}

#[derive(Serialize, Deserialize)]
struct Line {
    id: u64,
    status: Status,
    sample: Value,
}

/// Labeled and unlabeled samples keyed by id; an id lives in at most one side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pool {
    labeled: BTreeMap<u64, TrainingSample>,
    unlabeled: BTreeMap<u64, RawPair>,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_free(&self, id: u64) -> Result<(), ActiveError> {
        if self.labeled.contains_key(&id) || self.unlabeled.contains_key(&id) {
            return Err(ActiveError::DuplicateId(id));
        }
        Ok(())
    }

    pub fn insert_labeled(&mut self, id: u64, sample: TrainingSample) -> Result<(), ActiveError> {
        self.check_free(id)?;
        self.labeled.insert(id, sample);
        Ok(())
    }

    pub fn insert_unlabeled(&mut self, id: u64, pair: RawPair) -> Result<(), ActiveError> {
        self.check_free(id)?;
        self.unlabeled.insert(id, pair);
        Ok(())
    }

    pub fn labeled(&self) -> &BTreeMap<u64, TrainingSample> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeMap<u64, RawPair> {
        &self.unlabeled
    }

    pub fn total(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.unlabeled.is_empty()
    }

    /// Moves every `(id, sample)` from the unlabeled side to the labeled
    /// side; all ids are checked first so a bad id changes nothing.
    pub fn label_all(&mut self, labels: Vec<(u64, TrainingSample)>) -> Result<(), ActiveError> {
        let mut seen = std::collections::BTreeSet::new();
        for (id, _) in &labels {
            if !self.unlabeled.contains_key(id) {
                return Err(ActiveError::NotInPool(*id));
            }
            if !seen.insert(*id) {
                return Err(ActiveError::DuplicateId(*id));
            }
        }
        for (id, s) in labels {
            self.unlabeled.remove(&id);
            self.labeled.insert(id, s);
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), ActiveError> {
        let mut lines: Vec<Line> = self
            .labeled
            .iter()
            .map(|(&id, s)| Line {
                id,
                status: Status::Labeled,
                sample: serde_json::to_value(s).expect("sample serializes"),
            })
            .chain(self.unlabeled.iter().map(|(&id, p)| Line {
                id,
                status: Status::Unlabeled,
                sample: serde_json::to_value(p).expect("pair serializes"),
            }))
            .collect();
        lines.sort_by_key(|l| l.id);
        for l in lines {
            writeln!(w, "{}", serde_json::to_string(&l).expect("line serializes"))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, ActiveError> {
        let mut pool = Pool::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| ActiveError::PoolState { line: i + 1, message };
            let l: Line = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            match l.status {
                Status::Labeled => {
                    let mut s: TrainingSample =
                        serde_json::from_value(l.sample).map_err(|e| bad(e.to_string()))?;
                    s.normalize().map_err(|e| bad(e.to_string()))?;
                    pool.insert_labeled(l.id, s)
                }
                Status::Unlabeled => {
                    let p: RawPair = serde_json::from_value(l.sample).map_err(|e| bad(e.to_string()))?;
                    pool.insert_unlabeled(l.id, p)
                }
            }
            .map_err(|e| bad(e.to_string()))?;
        }
        Ok(pool)
    }
}
