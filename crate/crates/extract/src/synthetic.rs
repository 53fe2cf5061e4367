//! Template generator for planted-label sentence pairs.
//!
//! Every sentence is assembled from component fillers whose tags are known,
//! and the pair relation is planted with a cue word: `then` opens the later
//! sentence of a sequential pair, `meanwhile` opens an unrelated second
//! sentence, and a joint event continues with `to` plus a verb phrase.
//! Reverse-sequential pairs are sequential pairs with the sentences swapped.

use msem_core::Component;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::relation::RelationLabel;
use crate::sample::TrainingSample;
use crate::tags::Tag;

const COMPANIES: &[&str] = &[
    "Acme",
    "Globex",
    "Initech",
    "Hooli",
    "Umbrella Corp",
    "Stark Industries",
    "Wayne Enterprises",
    "Cyberdyne",
    "Tyrell",
    "Soylent Group",
    "Aperture",
    "Vandelay",
];

const PRODUCT_ACTIONS: &[&str] = &["launches", "releases", "unveils", "shuts down", "upgrades"];
const PARTNER_ACTIONS: &[&str] = &["acquires", "invests in", "partners with", "sues"];

const PRODUCTS: &[&str] = &[
    "PayService",
    "CloudDrive",
    "smart speaker",
    "MapKit",
    "ride sharing app",
    "video platform",
    "BikeShare",
    "web browser",
];

const ATTRIBUTES: &[&str] = &["new", "premium", "free", "upgraded"];

const TIMES: &[&str] = &["in 2019", "in March 2020", "on Monday", "last week", "in 2021"];

struct Builder {
    tokens: Vec<String>,
    tags: Vec<Tag>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            tags: Vec::new(),
        }
    }

    fn push(&mut self, text: &str, component: Option<Component>) {
        for (i, w) in text.split_whitespace().enumerate() {
            self.tokens.push(w.to_string());
            self.tags.push(match component {
                None => Tag::O,
                Some(c) if i == 0 => Tag::Begin(c),
                Some(c) => Tag::Inside(c),
            });
        }
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty list")
}

/// `actor action [attribute] object|recipient [time]`, optionally led by a cue.
fn sentence<R: Rng>(rng: &mut R, cue: Option<&str>, actor: &str) -> Builder {
    let mut b = Builder::new();
    if let Some(c) = cue {
        b.push(c, None);
    }
    b.push(actor, Some(Component::Actor));
    if rng.random_bool(0.5) {
        b.push(pick(rng, PRODUCT_ACTIONS), Some(Component::Action));
        if rng.random_bool(0.4) {
            b.push(pick(rng, ATTRIBUTES), Some(Component::Attribute));
        }
        b.push(pick(rng, PRODUCTS), Some(Component::Object));
    } else {
        b.push(pick(rng, PARTNER_ACTIONS), Some(Component::Action));
        let other = loop {
            let o = pick(rng, COMPANIES);
            if o != actor {
                break o;
            }
        };
        b.push(other, Some(Component::Recipient));
    }
    if rng.random_bool(0.4) {
        b.push(pick(rng, TIMES), Some(Component::Time));
    }
    b
}

fn continuation<R: Rng>(rng: &mut R) -> Builder {
    let mut b = Builder::new();
    b.push("to", None);
    let verb = ["launch", "build", "expand"].choose(rng).expect("non-empty");
    b.push(verb, Some(Component::Action));
    b.push(pick(rng, PRODUCTS), Some(Component::Object));
    if rng.random_bool(0.3) {
        b.push(pick(rng, TIMES), Some(Component::Time));
    }
    b
}

fn sample(c: RelationLabel, a: Builder, b: Builder) -> TrainingSample {
    TrainingSample::new(c, a.tokens, a.tags, b.tokens, b.tags).expect("generated samples are valid")
}

/// `n` samples cycling through the five relation labels.
pub fn generate(n: usize, seed: u64) -> Vec<TrainingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = RelationLabel::ALL[i % RelationLabel::ALL.len()];
            let a1 = pick(&mut rng, COMPANIES);
            let a2 = pick(&mut rng, COMPANIES);
            match label {
                RelationLabel::Sequential | RelationLabel::ReverseSequential => {
                    let first = sentence(&mut rng, None, a1);
                    let second = sentence(&mut rng, Some("then"), a2);
                    if label == RelationLabel::Sequential {
                        sample(label, first, second)
                    } else {
                        sample(label, second, first)
                    }
                }
                RelationLabel::Unrelated => {
                    let first = sentence(&mut rng, None, a1);
                    let second = sentence(&mut rng, Some("meanwhile"), a2);
                    sample(label, first, second)
                }
                RelationLabel::SingleSentence => {
                    sample(label, sentence(&mut rng, None, a1), Builder::new())
                }
                RelationLabel::JointEvent => {
                    let first = sentence(&mut rng, None, a1);
                    sample(label, first, continuation(&mut rng))
                }
            }
        })
        .collect()
}
