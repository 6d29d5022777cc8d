//! Story grammar: primitives, surface text, and the ground-truth world model.

mod primitive;
pub mod vocab;
mod world;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use primitive::{
    join_names, parse_sentence, split_sentences, Entity, EntityKind, PreferenceVerb, Primitive,
};
pub use vocab::{default_lexicon, Lexicon};
pub use world::WorldState;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "tomi-false-belief")]
    TomiFalseBelief,
    #[serde(rename = "tomi-true-belief")]
    TomiTrueBelief,
    #[serde(rename = "d1")]
    D1,
    #[serde(rename = "d2")]
    D2,
    #[serde(rename = "d3")]
    D3,
    #[serde(rename = "faux-pas-external")]
    FauxPasExternal,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::TomiFalseBelief => "tomi-false-belief",
            Family::TomiTrueBelief => "tomi-true-belief",
            Family::D1 => "d1",
            Family::D2 => "d2",
            Family::D3 => "d3",
            Family::FauxPasExternal => "faux-pas-external",
        }
    }

    /// Reporting group: both ToMi variants collapse into "tomi".
    pub fn group(self) -> &'static str {
        match self {
            Family::TomiFalseBelief | Family::TomiTrueBelief => "tomi",
            Family::D1 => "d1",
            Family::D2 => "d2",
            Family::D3 => "d3",
            Family::FauxPasExternal => "faux-pas",
        }
    }

    pub fn is_tomi(self) -> bool {
        matches!(self, Family::TomiFalseBelief | Family::TomiTrueBelief)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tomi-false-belief" => Family::TomiFalseBelief,
            "tomi-true-belief" => Family::TomiTrueBelief,
            "d1" => Family::D1,
            "d2" => Family::D2,
            "d3" => Family::D3,
            "faux-pas-external" | "faux-pas" => Family::FauxPasExternal,
            other => return Err(Error::Config(format!("unknown story family {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoryMeta {
    pub seed: u64,
    pub family: Family,
    /// Container → room.
    pub room_of: BTreeMap<String, String>,
}

/// A validated, chronologically well-formed sequence of primitives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Story {
    id: String,
    primitives: Vec<Primitive>,
    meta: StoryMeta,
}

impl Story {
    /// Builds a story, placing every container in a room: an explicit
    /// "The {container} is in the {room}." wins anywhere in the story;
    /// otherwise a container belongs to the room where it is first used.
    pub fn new(id: impl Into<String>, family: Family, seed: u64, primitives: Vec<Primitive>) -> Result<Self> {
        let room_of = infer_room_of(&primitives)?;
        Self::with_room_of(id, family, seed, primitives, room_of)
    }

    /// Builds a story with a caller-supplied container→room map.
    pub fn with_room_of(
        id: impl Into<String>,
        family: Family,
        seed: u64,
        primitives: Vec<Primitive>,
        room_of: BTreeMap<String, String>,
    ) -> Result<Self> {
        let story = Story { id: id.into(), primitives, meta: StoryMeta { seed, family, room_of } };
        story.validate()?;
        Ok(story)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn meta(&self) -> &StoryMeta {
        &self.meta
    }

    pub fn family(&self) -> Family {
        self.meta.family
    }

    pub fn sentences(&self) -> Vec<String> {
        self.primitives.iter().map(Primitive::render).collect()
    }

    pub fn text(&self) -> String {
        self.sentences().join(" ")
    }

    /// Characters in order of first mention.
    pub fn characters(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for p in &self.primitives {
            for c in p.characters() {
                if !seen.iter().any(|s| s == c) {
                    seen.push(c.to_string());
                }
            }
        }
        seen
    }

    /// Containers in order of first mention.
    pub fn containers(&self) -> Vec<String> {
        self.entities_of(EntityKind::Container)
    }

    pub fn entities_of(&self, kind: EntityKind) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for e in self.primitives.iter().flat_map(Primitive::entities) {
            if e.kind == kind && !seen.contains(&e.name) {
                seen.push(e.name);
            }
        }
        seen
    }

    /// The single intent sentence: (holders, item).
    pub fn intent(&self) -> Option<(&[String], &str)> {
        self.primitives.iter().find_map(|p| match p {
            Primitive::Intent { characters, item } => Some((characters.as_slice(), item.as_str())),
            _ => None,
        })
    }

    pub fn initial_world(&self) -> WorldState {
        WorldState::new(self.characters(), self.meta.room_of.clone())
    }

    /// World state after every step (index i = after primitive i).
    pub fn replay(&self) -> Result<Vec<WorldState>> {
        let mut state = self.initial_world();
        let mut out = Vec::with_capacity(self.primitives.len());
        for (i, p) in self.primitives.iter().enumerate() {
            state = state.apply(p).map_err(|e| match e {
                Error::IllegalTransition(msg) => {
                    Error::IllegalTransition(format!("step {i} ({}): {msg}", p.render()))
                }
                other => other,
            })?;
            out.push(state.clone());
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidStory(format!("{}: {msg}", self.id)));
        let mut kinds: HashMap<String, EntityKind> = HashMap::new();
        for p in &self.primitives {
            for e in p.entities() {
                if !Entity::is_valid_name(&e.name) {
                    return invalid(format!("bad entity name {:?}", e.name));
                }
                match kinds.get(e.name.as_str()) {
                    Some(k) if *k != e.kind => {
                        return invalid(format!("{} used both as {k} and {}", e.name, e.kind));
                    }
                    _ => {}
                }
                kinds.insert(e.name, e.kind);
            }
            if let Primitive::Intent { characters, .. } = p {
                let mut distinct = characters.clone();
                distinct.sort();
                distinct.dedup();
                if characters.is_empty() || characters.len() > 3 || distinct.len() != characters.len() {
                    return invalid("an intent names one to three distinct characters".into());
                }
            }
        }
        for (container, room) in &self.meta.room_of {
            if kinds.get(container.as_str()).is_some_and(|k| *k != EntityKind::Container)
                || kinds.get(room.as_str()).is_some_and(|k| *k != EntityKind::Room)
            {
                return invalid(format!("room map entry {container} -> {room} has wrong kinds"));
            }
        }
        let intents = self.primitives.iter().filter(|p| matches!(p, Primitive::Intent { .. })).count();
        if intents != 1 {
            return invalid(format!("expected exactly one intent sentence, found {intents}"));
        }
        if self.meta.family == Family::D2 && self.intent().map(|(c, _)| c.len()) != Some(3) {
            return invalid("d2 intent must list three characters".into());
        }
        for p in &self.primitives {
            if let Primitive::ContainerIn { container, room } = p {
                if self.meta.room_of.get(container) != Some(room) {
                    return invalid(format!("the {container} is placed in two rooms"));
                }
            }
        }
        self.replay()?;
        Ok(())
    }

    pub fn to_record(&self) -> StoryRecord {
        StoryRecord {
            id: self.id.clone(),
            family: self.meta.family,
            seed: self.meta.seed,
            sentences: self.sentences(),
            primitives: self.primitives.clone(),
        }
    }

    /// Rebuilds a story from its record; the stored sentences must equal
    /// the rendering of the stored primitives exactly.
    pub fn from_record(record: StoryRecord) -> Result<Self> {
        let rendered: Vec<String> = record.primitives.iter().map(Primitive::render).collect();
        if rendered != record.sentences {
            return Err(Error::Record(format!(
                "story {}: sentences do not match primitives",
                record.id
            )));
        }
        Story::new(record.id, record.family, record.seed, record.primitives)
    }

    /// Parses surface sentences into a story. Words missing from the lexicon
    /// are classified from unambiguous sentences before "is in" sentences
    /// are resolved.
    pub fn parse(
        id: impl Into<String>,
        family: Family,
        sentences: &[String],
        lexicon: &Lexicon,
    ) -> Result<Self> {
        Story::new(id, family, 0, parse_primitives(sentences, lexicon)?)
    }
}

/// Parses sentences without assembling a story (no intent required).
pub fn parse_primitives(sentences: &[String], lexicon: &Lexicon) -> Result<Vec<Primitive>> {
    let lexicon = learn_kinds(sentences, lexicon);
    sentences.iter().map(|s| parse_sentence(s, &lexicon)).collect()
}

fn learn_kinds(sentences: &[String], base: &Lexicon) -> Lexicon {
    let mut lex = base.clone();
    let probe = Lexicon::empty();
    for s in sentences {
        // Sentences that do not need the lexicon parse against an empty one.
        if let Ok(p) = parse_sentence(s, &probe) {
            if matches!(p, Primitive::ItemAt { .. } | Primitive::ContainerIn { .. }) {
                continue;
            }
            for e in p.entities() {
                if lex.kind_of(&e.name).is_none() {
                    lex.insert(e.name, e.kind);
                }
            }
        }
    }
    lex
}

fn infer_room_of(primitives: &[Primitive]) -> Result<BTreeMap<String, String>> {
    let mut explicit: BTreeMap<String, String> = BTreeMap::new();
    for p in primitives {
        if let Primitive::ContainerIn { container, room } = p {
            if let Some(prev) = explicit.insert(container.clone(), room.clone()) {
                if &prev != room {
                    return Err(Error::InvalidStory(format!(
                        "the {container} is placed in both the {prev} and the {room}"
                    )));
                }
            }
        }
    }
    let mut room_of = explicit.clone();
    let mut scene: Option<&str> = None;
    let mut char_room: HashMap<&str, &str> = HashMap::new();
    let unplaced = |c: &str| Error::InvalidStory(format!("cannot tell which room the {c} is in"));
    for p in primitives {
        match p {
            Primitive::Enter { character, room } | Primitive::Present { character, room } => {
                char_room.insert(character, room);
                scene = Some(room);
            }
            Primitive::Exit { character, .. } => {
                char_room.remove(character.as_str());
            }
            Primitive::ItemAt { container, .. } if !room_of.contains_key(container) => {
                let room = scene.ok_or_else(|| unplaced(container))?;
                room_of.insert(container.clone(), room.to_string());
            }
            Primitive::MoveItem { character, container, .. } if !room_of.contains_key(container) => {
                let room = char_room
                    .get(character.as_str())
                    .copied()
                    .or(scene)
                    .ok_or_else(|| unplaced(container))?;
                room_of.insert(container.clone(), room.to_string());
            }
            _ => {}
        }
    }
    Ok(room_of)
}

/// Line-delimited story serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryRecord {
    pub id: String,
    pub family: Family,
    pub seed: u64,
    pub sentences: Vec<String>,
    pub primitives: Vec<Primitive>,
}
