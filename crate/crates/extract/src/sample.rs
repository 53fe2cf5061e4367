use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ExtractError;
use crate::model::{ModelConfig, PreparedPair, PreparedSentence};
use crate::relation::RelationLabel;
use crate::tags::Tag;

/// One annotated sentence pair. Trailing `[PAD]` tags (and their tokens) are
/// accepted on input and dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub c: RelationLabel,
    pub x1: Vec<String>,
    pub x2: Vec<String>,
    pub y1: Vec<Tag>,
    pub y2: Vec<Tag>,
}

fn strip_padding(x: &mut Vec<String>, y: &mut Vec<Tag>) {
    while y.last() == Some(&Tag::Pad) {
        y.pop();
        if x.len() > y.len() {
            x.truncate(y.len());
        }
    }
}

impl TrainingSample {
    pub fn new(
        c: RelationLabel,
        x1: Vec<String>,
        y1: Vec<Tag>,
        x2: Vec<String>,
        y2: Vec<Tag>,
    ) -> Result<Self, ExtractError> {
        let mut s = TrainingSample { c, x1, x2, y1, y2 };
        s.normalize()?;
        Ok(s)
    }

    pub fn normalize(&mut self) -> Result<(), ExtractError> {
        strip_padding(&mut self.x1, &mut self.y1);
        strip_padding(&mut self.x2, &mut self.y2);
        for (x, y) in [(&self.x1, &self.y1), (&self.x2, &self.y2)] {
            if x.len() != y.len() {
                return Err(ExtractError::LengthMismatch {
                    tags: y.len(),
                    positions: x.len(),
                });
            }
            if let Some((i, t)) = y.iter().enumerate().find(|(_, t)| t.is_special()) {
                return Err(ExtractError::DisallowedTag {
                    position: i,
                    tag: t.index(),
                });
            }
        }
        if self.x1.is_empty() {
            return Err(ExtractError::EmptyPair);
        }
        Ok(())
    }

    pub fn prepare(&self, config: &ModelConfig) -> Result<PreparedPair, ExtractError> {
        Ok(PreparedPair {
            first: PreparedSentence::with_gold(&self.x1, &self.y1, config)?,
            second: PreparedSentence::with_gold(&self.x2, &self.y2, config)?,
            relation: Some(self.c),
        })
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TrainingSample>, ExtractError> {
    read_jsonl(text.as_bytes())
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<TrainingSample>, ExtractError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| ExtractError::Sample {
            line: i + 1,
            message,
        };
        let mut s: TrainingSample = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        s.normalize().map_err(|e| bad(e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<TrainingSample>, ExtractError> {
    let f = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(f))
}

pub fn write_jsonl<W: Write>(mut w: W, samples: &[TrainingSample]) -> Result<(), ExtractError> {
    for s in samples {
        let line = serde_json::to_string(s).map_err(|e| ExtractError::Sample {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_documented_shape_and_strips_padding() {
        let text = r#"{"c":"Sequential","x1":["A","launches","P"],"x2":["B","buys","A","[PAD]"],"y1":["B-Actor","B-Action","B-Object"],"y2":["B-Actor","B-Action","B-Recipient","[PAD]"]}"#;
        let s = parse_jsonl(text).unwrap();
        assert_eq!(s[0].c, RelationLabel::Sequential);
        assert_eq!(s[0].x2.len(), 3);
        assert_eq!(s[0].y2.len(), 3);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &s).unwrap();
        assert_eq!(parse_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap(), s);
    }

    #[test]
    fn reports_line_of_bad_sample() {
        let text = "\n{\"c\":\"SingleSentence\",\"x1\":[\"a\"],\"x2\":[],\"y1\":[\"O\"],\"y2\":[]}\n{\"c\":\"Nope\",\"x1\":[],\"x2\":[],\"y1\":[],\"y2\":[]}\n";
        match parse_jsonl(text) {
            Err(ExtractError::Sample { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let mismatch = r#"{"c":"Unrelated","x1":["a","b"],"x2":[],"y1":["O"],"y2":[]}"#;
        assert!(parse_jsonl(mismatch).is_err());
    }
}
