use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::entity::EntityId;
use crate::error::CoreError;
use crate::text::normalize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evt:{}", self.0)
    }
}

/// The six components of an event sextuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    Actor,
    Action,
    Recipient,
    Object,
    Attribute,
    Time,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Actor,
        Component::Action,
        Component::Recipient,
        Component::Object,
        Component::Attribute,
        Component::Time,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Actor => "Actor",
            Component::Action => "Action",
            Component::Recipient => "Recipient",
            Component::Object => "Object",
            Component::Attribute => "Attribute",
            Component::Time => "Time",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CoreError::InvalidComponent(s.to_string()))
    }
}

/// A component mention, optionally linked to an entity after fusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub text: String,
    pub entity: Option<EntityId>,
}

impl Mention {
    pub fn new(text: impl Into<String>) -> Self {
        Mention {
            text: text.into(),
            entity: None,
        }
    }
}

/// Input to [`crate::Model::record_event`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDraft {
    pub actor: Option<String>,
    pub action: String,
    pub recipient: Option<String>,
    pub object: Option<String>,
    pub attribute: Option<String>,
    /// Raw time text as extracted, kept for provenance.
    pub time_text: Option<String>,
    pub time: Option<NaiveDate>,
    pub published_at: Option<NaiveDate>,
    pub source_doc: String,
    pub title: Option<String>,
}

impl EventDraft {
    pub fn new(source_doc: impl Into<String>, action: impl Into<String>) -> Self {
        EventDraft {
            action: action.into(),
            source_doc: source_doc.into(),
            ..Default::default()
        }
    }

    pub fn actor(mut self, text: impl Into<String>) -> Self {
        self.actor = Some(text.into());
        self
    }

    pub fn recipient(mut self, text: impl Into<String>) -> Self {
        self.recipient = Some(text.into());
        self
    }

    pub fn object(mut self, text: impl Into<String>) -> Self {
        self.object = Some(text.into());
        self
    }

    pub fn attribute(mut self, text: impl Into<String>) -> Self {
        self.attribute = Some(text.into());
        self
    }

    pub fn at(mut self, time: NaiveDate) -> Self {
        self.time = Some(time);
        self
    }

    pub fn published(mut self, date: NaiveDate) -> Self {
        self.published_at = Some(date);
        self
    }

    pub fn title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    /// Duplicate-detection key: source document plus normalized component texts.
    pub fn identity_key(&self) -> String {
        let norm = |o: &Option<String>| o.as_deref().map(normalize).unwrap_or_default();
        [
            self.source_doc.clone(),
            norm(&self.actor),
            normalize(&self.action),
            norm(&self.recipient),
            norm(&self.object),
            norm(&self.attribute),
            norm(&self.time_text),
        ]
        .join("\u{1f}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub actor: Option<Mention>,
    pub action: String,
    pub recipient: Option<Mention>,
    pub object: Option<Mention>,
    pub attribute: Option<String>,
    #[serde(default)]
    pub time_text: Option<String>,
    pub time: NaiveDate,
    /// True when `time` fell back to the document's publication date.
    #[serde(default)]
    pub time_from_publication: bool,
    #[serde(rename = "doc")]
    pub source_doc: String,
    #[serde(default)]
    pub title: Option<String>,
}

impl Event {
    pub fn mention(&self, component: Component) -> Option<&Mention> {
        match component {
            Component::Actor => self.actor.as_ref(),
            Component::Recipient => self.recipient.as_ref(),
            Component::Object => self.object.as_ref(),
            _ => None,
        }
    }

    pub fn mention_mut(&mut self, component: Component) -> Option<&mut Mention> {
        match component {
            Component::Actor => self.actor.as_mut(),
            Component::Recipient => self.recipient.as_mut(),
            Component::Object => self.object.as_mut(),
            _ => None,
        }
    }

    /// Text of a component if present. Time renders as its ISO date.
    pub fn component_text(&self, component: Component) -> Option<String> {
        match component {
            Component::Actor | Component::Recipient | Component::Object => {
                self.mention(component).map(|m| m.text.clone())
            }
            Component::Action => Some(self.action.clone()),
            Component::Attribute => self.attribute.clone(),
            Component::Time => Some(self.time.to_string()),
        }
    }

    pub fn has_component(&self, component: Component) -> bool {
        match component {
            Component::Action | Component::Time => true,
            Component::Attribute => self.attribute.is_some(),
            _ => self.mention(component).is_some(),
        }
    }
}
