//! BIO tag scheme over the six event components, plus the three special
//! sequence markers.

use std::fmt;
use std::str::FromStr;

use msem_core::Component;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ExtractError;

/// Number of tags: O, B-/I- for six components, CLS, SEP, PAD.
pub const NUM_TAGS: usize = 16;

/// Penalty on transitions that can never occur in a well-formed sequence.
pub const IMPOSSIBLE: f64 = -10000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    O,
    Begin(Component),
    Inside(Component),
    Cls,
    Sep,
    Pad,
}

impl Tag {
    pub fn index(self) -> usize {
        match self {
            Tag::O => 0,
            Tag::Begin(c) => 1 + 2 * component_rank(c),
            Tag::Inside(c) => 2 + 2 * component_rank(c),
            Tag::Cls => 13,
            Tag::Sep => 14,
            Tag::Pad => 15,
        }
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        Some(match i {
            0 => Tag::O,
            1..=12 => {
                let c = Component::ALL[(i - 1) / 2];
                if i % 2 == 1 {
                    Tag::Begin(c)
                } else {
                    Tag::Inside(c)
                }
            }
            13 => Tag::Cls,
            14 => Tag::Sep,
            15 => Tag::Pad,
            _ => return None,
        })
    }

    pub fn all() -> impl Iterator<Item = Tag> {
        (0..NUM_TAGS).map(|i| Tag::from_index(i).expect("in range"))
    }

    pub fn is_special(self) -> bool {
        matches!(self, Tag::Cls | Tag::Sep | Tag::Pad)
    }

    pub fn component(self) -> Option<Component> {
        match self {
            Tag::Begin(c) | Tag::Inside(c) => Some(c),
            _ => None,
        }
    }

    /// Whether `self -> next` can occur in a well-formed tagged sentence
    /// wrapped as `[CLS] tokens [SEP]`.
    pub fn may_precede(self, next: Tag) -> bool {
        match (self, next) {
            (Tag::Pad, _) | (_, Tag::Pad) => false,
            (Tag::Sep, _) | (_, Tag::Cls) => false,
            (Tag::Cls, Tag::Sep) => true,
            (_, Tag::Inside(c)) => matches!(self, Tag::Begin(p) | Tag::Inside(p) if p == c),
            _ => true,
        }
    }
}

fn component_rank(c: Component) -> usize {
    Component::ALL
        .iter()
        .position(|&x| x == c)
        .expect("component listed")
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::Begin(c) => write!(f, "B-{c}"),
            Tag::Inside(c) => write!(f, "I-{c}"),
            Tag::Cls => f.write_str("[CLS]"),
            Tag::Sep => f.write_str("[SEP]"),
            Tag::Pad => f.write_str("[PAD]"),
        }
    }
}

impl FromStr for Tag {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExtractError::InvalidTag(s.to_string());
        match s.trim_matches(|c| c == '[' || c == ']') {
            "O" => Ok(Tag::O),
            "CLS" => Ok(Tag::Cls),
            "SEP" => Ok(Tag::Sep),
            "PAD" => Ok(Tag::Pad),
            other => {
                let (prefix, comp) = other.split_once('-').ok_or_else(bad)?;
                let comp: Component = comp.parse().map_err(|_| bad())?;
                match prefix {
                    "B" => Ok(Tag::Begin(comp)),
                    "I" => Ok(Tag::Inside(comp)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Token span `[start, end]` (inclusive) labelled with one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub component: Component,
    pub start: usize,
    pub end: usize,
}

/// An `I-X` that did not continue an `X` span and was promoted to `B-X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repair {
    pub position: usize,
    pub component: Component,
}

pub fn is_well_formed(tags: &[Tag]) -> bool {
    let mut prev = Tag::O;
    for &t in tags {
        if t.is_special() {
            return false;
        }
        if let Tag::Inside(c) = t {
            if !matches!(prev, Tag::Begin(p) | Tag::Inside(p) if p == c) {
                return false;
            }
        }
        prev = t;
    }
    true
}

/// Reads component spans off a tag sequence, repairing orphan `I-X` tags by
/// promoting them to span openers.
pub fn decode_spans(tags: &[Tag]) -> (Vec<Span>, Vec<Repair>) {
    let mut spans = Vec::new();
    let mut repairs = Vec::new();
    let mut open: Option<Span> = None;
    for (i, &t) in tags.iter().enumerate() {
        match t {
            Tag::Begin(c) => {
                spans.extend(open.take());
                open = Some(Span {
                    component: c,
                    start: i,
                    end: i,
                });
            }
            Tag::Inside(c) => match open.as_mut() {
                Some(s) if s.component == c => s.end = i,
                _ => {
                    spans.extend(open.take());
                    repairs.push(Repair {
                        position: i,
                        component: c,
                    });
                    open = Some(Span {
                        component: c,
                        start: i,
                        end: i,
                    });
                }
            },
            _ => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    (spans, repairs)
}

/// Inverse of [`decode_spans`] for non-overlapping spans.
pub fn encode_spans(len: usize, spans: &[Span]) -> Vec<Tag> {
    let mut tags = vec![Tag::O; len];
    for s in spans {
        for (i, t) in tags.iter_mut().enumerate().take(s.end + 1).skip(s.start) {
            *t = if i == s.start {
                Tag::Begin(s.component)
            } else {
                Tag::Inside(s.component)
            };
        }
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_tags_round_trip() {
        for (i, t) in Tag::all().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(t.to_string().parse::<Tag>().unwrap(), t);
        }
        assert_eq!(Tag::all().count(), NUM_TAGS);
        assert_eq!("B-Actor".parse::<Tag>().unwrap(), Tag::Begin(Component::Actor));
        assert_eq!("CLS".parse::<Tag>().unwrap(), Tag::Cls);
        assert!("B-Nope".parse::<Tag>().is_err());
    }

    #[test]
    fn bio_transitions() {
        let ba = Tag::Begin(Component::Actor);
        let ia = Tag::Inside(Component::Actor);
        let ix = Tag::Inside(Component::Action);
        assert!(ba.may_precede(ia));
        assert!(!ba.may_precede(ix));
        assert!(!Tag::O.may_precede(ia));
        assert!(!Tag::Cls.may_precede(ia));
        assert!(Tag::Cls.may_precede(ba));
        assert!(ia.may_precede(Tag::Sep));
        assert!(!Tag::Sep.may_precede(Tag::O));
        assert!(!Tag::O.may_precede(Tag::Pad));
    }

    #[test]
    fn orphan_inside_is_promoted() {
        let tags: Vec<Tag> = ["O", "I-Actor", "I-Actor", "B-Action"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert!(!is_well_formed(&tags));
        let (spans, repairs) = decode_spans(&tags);
        assert_eq!(
            spans,
            vec![
                Span { component: Component::Actor, start: 1, end: 2 },
                Span { component: Component::Action, start: 3, end: 3 },
            ]
        );
        assert_eq!(repairs, vec![Repair { position: 1, component: Component::Actor }]);
    }

    #[test]
    fn spans_round_trip() {
        let spans = vec![
            Span { component: Component::Actor, start: 0, end: 1 },
            Span { component: Component::Object, start: 3, end: 5 },
        ];
        let tags = encode_spans(6, &spans);
        assert!(is_well_formed(&tags));
        assert_eq!(decode_spans(&tags).0, spans);
    }
}
