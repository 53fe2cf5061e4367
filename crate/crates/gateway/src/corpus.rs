//! News-title corpus in JSON Lines.

use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub id: String,
    pub title: String,
    #[serde(deserialize_with = "date_or_datetime")]
    pub published_at: NaiveDate,
    #[serde(default)]
    pub source: String,
}

/// Accepts `YYYY-MM-DD` or an RFC 3339 timestamp (its calendar date is kept).
fn date_or_datetime<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
    let s = String::deserialize(d)?;
    s.parse::<NaiveDate>()
        .or_else(|_| DateTime::parse_from_rfc3339(&s).map(|t| t.date_naive()))
        .map_err(|_| serde::de::Error::custom(format!("unparseable date `{s}`")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDoc {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub docs: Vec<CorpusDoc>,
    pub skipped: Vec<SkippedDoc>,
}

/// Parses every line; malformed lines, blank titles and repeated ids are
/// skipped and counted.
pub fn parse_corpus(text: &str) -> Corpus {
    let mut corpus = Corpus::default();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let skip = |reason: String| SkippedDoc { line: i + 1, reason };
        match serde_json::from_str::<CorpusDoc>(line) {
            Ok(d) if d.title.trim().is_empty() => corpus.skipped.push(skip("empty title".into())),
            Ok(d) if !ids.insert(d.id.clone()) => corpus.skipped.push(skip(format!("duplicate id {}", d.id))),
            Ok(d) => corpus.docs.push(d),
            Err(e) => corpus.skipped.push(skip(e.to_string())),
        }
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_and_counts_bad_lines() {
        let text = concat!(
            "{\"id\":\"a\",\"title\":\"Acme launches X.\",\"published_at\":\"2020-01-02\",\"source\":\"s\"}\n",
            "not json\n",
            "\n",
            "{\"id\":\"a\",\"title\":\"again\",\"published_at\":\"2020-01-02\"}\n",
            "{\"id\":\"b\",\"title\":\"t\",\"published_at\":\"yesterday\"}\n",
            "{\"id\":\"c\",\"title\":\"t\",\"published_at\":\"2020-03-04T10:00:00+08:00\"}\n",
            "{\"id\":\"d\",\"title\":\"  \",\"published_at\":\"2020-01-02\"}\n",
        );
        let c = parse_corpus(text);
        assert_eq!(c.docs.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(c.docs[1].published_at, NaiveDate::from_ymd_opt(2020, 3, 4).unwrap());
        assert_eq!(c.skipped.iter().map(|s| s.line).collect::<Vec<_>>(), [2, 4, 5, 7]);
    }
}
