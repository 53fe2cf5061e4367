use std::io::Write;

use msem_core::Component;
use serde::{Deserialize, Serialize};

use crate::error::ExtractError;

/// One line of the diagnostics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// An orphan `I-X` was promoted to `B-X` while decoding.
    Repair {
        doc: String,
        sentence: usize,
        position: usize,
        component: Component,
    },
    /// The gold relation probability hit the floor during training.
    Clamp { epoch: usize, sample: usize },
    /// A decoded sentence had no Action span, so no event was formed.
    NoAction { doc: String, sentence: usize },
    /// A predicted sequential link contradicted the event dates and was dropped.
    LinkDropped { doc: String, reason: String },
    /// A title was cut to fit the sequence length.
    Truncated { doc: String, sentence: usize, kept: usize, total: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsLog {
    pub entries: Vec<Diagnostic>,
}

impl DiagnosticsLog {
    pub fn push(&mut self, d: Diagnostic) {
        self.entries.push(d);
    }

    pub fn extend(&mut self, ds: impl IntoIterator<Item = Diagnostic>) {
        self.entries.extend(ds);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), ExtractError> {
        for d in &self.entries {
            let line = serde_json::to_string(d).expect("diagnostics serialize");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_lines_are_tagged() {
        let mut log = DiagnosticsLog::default();
        log.push(Diagnostic::Repair {
            doc: "d1".into(),
            sentence: 0,
            position: 2,
            component: Component::Actor,
        });
        log.push(Diagnostic::Clamp { epoch: 1, sample: 4 });
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with(r#"{"kind":"repair""#));
        let back: Diagnostic = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, log.entries[1]);
    }
}
