//! Annotation cost between a pre-annotation and its corrected version.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use msem_extract::tags::decode_spans;
use msem_extract::{RelationLabel, Tag};
use serde::{Deserialize, Serialize};

/// Reserved span for the sample-level relation triple.
pub const RELATION_SPAN: i64 = -1;

/// `<start, end, tag>` over the token positions of `x1 ++ x2` (0-based,
/// inclusive). The relation label is stored as `<-1, -1, label>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagTriple {
    pub start: i64,
    pub end: i64,
    pub tag: String,
}

impl TagTriple {
    pub fn span(start: usize, end: usize, tag: impl Into<String>) -> Self {
        TagTriple {
            start: start as i64,
            end: end as i64,
            tag: tag.into(),
        }
    }

    pub fn relation(label: RelationLabel) -> Self {
        TagTriple {
            start: RELATION_SPAN,
            end: RELATION_SPAN,
            tag: label.to_string(),
        }
    }
}

pub type TripleSet = BTreeSet<TagTriple>;

/// Triples of one labelled pair: component spans of both sentences plus the
/// relation triple.
pub fn triples(y1: &[Tag], y2: &[Tag], relation: RelationLabel) -> TripleSet {
    let mut out = TripleSet::new();
    for (offset, tags) in [(0, y1), (y1.len(), y2)] {
        for s in decode_spans(tags).0 {
            out.insert(TagTriple::span(offset + s.start, offset + s.end, s.component.as_str()));
        }
    }
    out.insert(TagTriple::relation(relation));
    out
}

/// `|Tp ∪ Tr| - |Tp ∩ Tr|`.
pub fn annotation_cost(predicted: &TripleSet, corrected: &TripleSet) -> usize {
    predicted.symmetric_difference(corrected).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub iteration: usize,
    pub mean_cost: f64,
    pub mean_tr_len: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
}

impl CostReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,mean_cost,mean_tr_len\n");
        for r in &self.rows {
            writeln!(s, "{},{},{}", r.iteration, r.mean_cost, r.mean_tr_len).expect("string write");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[(i64, i64, &str)]) -> TripleSet {
        items
            .iter()
            .map(|&(start, end, tag)| TagTriple { start, end, tag: tag.into() })
            .collect()
    }

    #[test]
    fn documented_cases() {
        let a = set(&[(1, 2, "Actor")]);
        let b = set(&[(1, 2, "Actor"), (3, 4, "Action")]);
        assert_eq!(annotation_cost(&a, &a), 0);
        assert_eq!(annotation_cost(&a, &b), 1);
        assert_eq!(annotation_cost(&b, &a), 1);
    }

    #[test]
    fn relation_sentinel_never_collides_with_spans() {
        let y1: Vec<Tag> = vec!["O".parse().unwrap(), "B-Actor".parse().unwrap()];
        let t = triples(&y1, &[], RelationLabel::SingleSentence);
        assert!(t.contains(&TagTriple::span(1, 1, "Actor")));
        assert!(t.contains(&TagTriple { start: -1, end: -1, tag: "SingleSentence".into() }));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn second_sentence_offsets_follow_the_first() {
        let y: Vec<Tag> = ["B-Actor", "B-Action"].iter().map(|t| t.parse().unwrap()).collect();
        let t = triples(&y, &y, RelationLabel::Sequential);
        assert!(t.contains(&TagTriple::span(2, 2, "Actor")));
        assert!(t.contains(&TagTriple::span(3, 3, "Action")));
    }

    #[test]
    fn csv_shape() {
        let r = CostReport {
            rows: vec![CostRow { iteration: 1, mean_cost: 2.5, mean_tr_len: 6.0 }],
        };
        assert_eq!(r.to_csv(), "iteration,mean_cost,mean_tr_len\n1,2.5,6\n");
    }
}
