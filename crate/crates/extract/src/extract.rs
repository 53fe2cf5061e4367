//! Title pairs to event drafts and the sequential link between them.

use std::sync::LazyLock;

use chrono::NaiveDate;
use msem_core::{Component, CoreError, EventDraft, EventId, Model};
use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::diagnostics::Diagnostic;
use crate::encoder::tokenize_with_offsets;
use crate::error::ExtractError;
use crate::model::{JointModel, PairPrediction};
use crate::relation::RelationLabel;
use crate::scalar::Scalar;
use crate::tags::{decode_spans, Span, Tag};

/// Splits a title into sentences and pairs them up in reading order:
/// `(s1, s2), (s3, s4), ...`; an odd last sentence is paired with a blank.
pub fn pair_sentences(title: &str) -> Vec<(String, Option<String>)> {
    let sentences: Vec<String> = title
        .unicode_sentences()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    sentences
        .chunks(2)
        .map(|c| (c[0].clone(), c.get(1).cloned()))
        .collect()
}

/// One decoded sentence: its tokens, tags and component spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedSentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
    pub spans: Vec<Span>,
    #[serde(skip)]
    offsets: Vec<(usize, usize)>,
}

impl DecodedSentence {
    /// Source text of every span of `component`, joined by a space.
    pub fn component_text(&self, component: Component) -> Option<String> {
        let parts: Vec<&str> = self
            .spans
            .iter()
            .filter(|s| s.component == component)
            .map(|s| &self.text[self.offsets[s.start].0..self.offsets[s.end].1])
            .collect();
        (!parts.is_empty()).then(|| parts.join(" "))
    }
}

/// Everything extracted from one sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc: String,
    pub relation: RelationLabel,
    pub sentences: Vec<DecodedSentence>,
    pub drafts: Vec<EventDraft>,
    /// `(earlier, later)` indices into `drafts`.
    pub link: Option<(usize, usize)>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TitlePair<'a> {
    pub doc: &'a str,
    pub first: &'a str,
    pub second: Option<&'a str>,
    pub published: Option<NaiveDate>,
}

fn decode_sentence(
    text: &str,
    tags: &[Tag],
    doc: &str,
    index: usize,
    diagnostics: &mut Vec<Diagnostic>,
) -> DecodedSentence {
    let offsets = tokenize_with_offsets(text);
    let kept = tags.len();
    if kept < offsets.len() {
        diagnostics.push(Diagnostic::Truncated {
            doc: doc.to_string(),
            sentence: index,
            kept,
            total: offsets.len(),
        });
    }
    let offsets: Vec<(usize, usize)> = offsets.into_iter().take(kept).collect();
    let (spans, repairs) = decode_spans(tags);
    diagnostics.extend(repairs.into_iter().map(|r| Diagnostic::Repair {
        doc: doc.to_string(),
        sentence: index,
        position: r.position,
        component: r.component,
    }));
    DecodedSentence {
        text: text.to_string(),
        tokens: offsets.iter().map(|&(a, b)| text[a..b].to_string()).collect(),
        tags: tags.to_vec(),
        spans,
        offsets,
    }
}

fn join(parts: impl IntoIterator<Item = Option<String>>) -> Option<String> {
    let v: Vec<String> = parts.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.join(" "))
}

fn draft_from(
    sentences: &[&DecodedSentence],
    doc: &str,
    title: &str,
    published: Option<NaiveDate>,
) -> Option<EventDraft> {
    let text = |c| join(sentences.iter().map(|s| s.component_text(c)));
    let action = text(Component::Action)?;
    let time_text = text(Component::Time);
    Some(EventDraft {
        actor: text(Component::Actor),
        action,
        recipient: text(Component::Recipient),
        object: text(Component::Object),
        attribute: text(Component::Attribute),
        time: time_text.as_deref().and_then(parse_time),
        time_text,
        published_at: published,
        source_doc: doc.to_string(),
        title: Some(title.to_string()),
    })
}

/// Turns a model prediction for `input` into event drafts.
pub fn assemble<S: Scalar>(input: &TitlePair<'_>, pred: &PairPrediction<S>) -> Extraction {
    assemble_tags(input, &pred.first.tags, &pred.second.tags, pred.relation_label())
}

/// Event drafts from explicit tag sequences (for example gold annotations)
/// over the tokens of `input`.
pub fn assemble_tags(
    input: &TitlePair<'_>,
    first_tags: &[Tag],
    second_tags: &[Tag],
    relation: RelationLabel,
) -> Extraction {
    let mut diagnostics = Vec::new();
    let first = decode_sentence(input.first, first_tags, input.doc, 0, &mut diagnostics);
    let second = input
        .second
        .map(|t| decode_sentence(t, second_tags, input.doc, 1, &mut diagnostics));
    let relation = match (relation, &second) {
        // a blank side can only be a single-sentence sample
        (_, None) => RelationLabel::SingleSentence,
        (r, Some(_)) => r,
    };
    let title = match input.second {
        Some(s) => format!("{} {}", input.first, s),
        None => input.first.to_string(),
    };
    let mut drafts = Vec::new();
    let mut per_sentence = |s: &DecodedSentence, i: usize, drafts: &mut Vec<EventDraft>| {
        match draft_from(&[s], input.doc, &title, input.published) {
            Some(d) => drafts.push(d),
            None => diagnostics.push(Diagnostic::NoAction {
                doc: input.doc.to_string(),
                sentence: i,
            }),
        }
    };
    let mut link = None;
    match (relation, &second) {
        (RelationLabel::JointEvent, Some(s2)) => {
            match draft_from(&[&first, s2], input.doc, &title, input.published) {
                Some(d) => drafts.push(d),
                None => diagnostics.push(Diagnostic::NoAction {
                    doc: input.doc.to_string(),
                    sentence: 0,
                }),
            }
        }
        (RelationLabel::SingleSentence, _) => per_sentence(&first, 0, &mut drafts),
        (r, Some(s2)) => {
            per_sentence(&first, 0, &mut drafts);
            let had_first = drafts.len() == 1;
            per_sentence(s2, 1, &mut drafts);
            if drafts.len() == 2 && had_first {
                link = match r {
                    RelationLabel::Sequential => Some((0, 1)),
                    RelationLabel::ReverseSequential => Some((1, 0)),
                    _ => None,
                };
            }
        }
        (_, None) => unreachable!("blank second sentence forces SingleSentence"),
    }
    Extraction {
        doc: input.doc.to_string(),
        relation,
        sentences: std::iter::once(first).chain(second).collect(),
        drafts,
        link,
        diagnostics,
    }
}

pub fn extract<S: Scalar>(
    model: &JointModel<S>,
    input: &TitlePair<'_>,
) -> Result<Extraction, ExtractError> {
    if input.first.trim().is_empty() {
        return Err(ExtractError::EmptyTitle);
    }
    let second = input.second.filter(|s| !s.trim().is_empty());
    let input = TitlePair { second, ..input.clone() };
    let t1: Vec<String> = crate::encoder::tokenize(input.first);
    let t2: Vec<String> = second.map(crate::encoder::tokenize).unwrap_or_default();
    let pred = model.predict_tokens(&t1, &t2)?;
    Ok(assemble(&input, &pred))
}

/// Extracts every sentence pair of a title.
pub fn extract_title<S: Scalar>(
    model: &JointModel<S>,
    doc: &str,
    title: &str,
    published: Option<NaiveDate>,
) -> Result<Vec<Extraction>, ExtractError> {
    let pairs = pair_sentences(title);
    if pairs.is_empty() {
        return Err(ExtractError::EmptyTitle);
    }
    pairs
        .iter()
        .map(|(a, b)| {
            extract(
                model,
                &TitlePair {
                    doc,
                    first: a,
                    second: b.as_deref(),
                    published,
                },
            )
        })
        .collect()
}

/// Records the drafts of `ext` and its link. A link contradicting the event
/// dates is dropped and reported rather than failing the whole extraction.
pub fn record(model: &mut Model, ext: &Extraction) -> Result<(Vec<EventId>, Vec<Diagnostic>), CoreError> {
    let ids = ext
        .drafts
        .iter()
        .map(|d| model.record_event(d.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut diagnostics = Vec::new();
    if let Some((a, b)) = ext.link {
        match model.add_sequential(ids[a], ids[b]) {
            Ok(_) => {}
            Err(e @ (CoreError::TemporalOrder { .. } | CoreError::SelfLoop(_))) => {
                diagnostics.push(Diagnostic::LinkDropped {
                    doc: ext.doc.clone(),
                    reason: e.to_string(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((ids, diagnostics))
}

static ISO_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\d{4})[-/.](\d{1,2})[-/.](\d{1,2})").unwrap());
static CJK_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\d{4})年(?:(\d{1,2})月)?(?:(\d{1,2})日)?").unwrap());
static MONTH_YEAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)[a-z]*\.?\s+(?:(\d{1,2}),?\s+)?(\d{4})\b").unwrap()
});
static YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(1[89]\d{2}|2\d{3})\b").unwrap());

/// Absolute dates found in a time mention. Month-only and year-only mentions
/// resolve to the first day of the period; relative expressions return
/// `None` so the caller falls back to the publication date.
pub fn parse_time(text: &str) -> Option<NaiveDate> {
    let num = |m: Option<regex::Match<'_>>| m.and_then(|m| m.as_str().parse::<u32>().ok());
    if let Some(c) = ISO_DATE.captures(text) {
        return NaiveDate::from_ymd_opt(num(c.get(1))? as i32, num(c.get(2))?, num(c.get(3))?);
    }
    if let Some(c) = CJK_DATE.captures(text) {
        return NaiveDate::from_ymd_opt(
            num(c.get(1))? as i32,
            num(c.get(2)).unwrap_or(1),
            num(c.get(3)).unwrap_or(1),
        );
    }
    if let Some(c) = MONTH_YEAR.captures(text) {
        const MONTHS: [&str; 12] = [
            "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
        ];
        let m = MONTHS.iter().position(|&m| m == c[1].to_lowercase())? as u32 + 1;
        return NaiveDate::from_ymd_opt(num(c.get(3))? as i32, m, num(c.get(2)).unwrap_or(1));
    }
    if let Some(c) = YEAR.captures(text) {
        return NaiveDate::from_ymd_opt(num(c.get(1))? as i32, 1, 1);
    }
    None
}
