use std::fmt;

use serde::{Deserialize, Serialize};

use super::vocab::Lexicon;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Character,
    Item,
    Container,
    Room,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Character => "character",
            EntityKind::Item => "item",
            EntityKind::Container => "container",
            EntityKind::Room => "room",
        })
    }
}

/// A named participant of a story.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub kind: EntityKind,
}

impl Entity {
    pub fn new(name: impl Into<String>, kind: EntityKind) -> Self {
        Self { name: name.into(), kind }
    }

    /// Non-empty and free of sentence punctuation.
    pub fn is_valid_name(name: &str) -> bool {
        !name.trim().is_empty()
            && name.trim() == name
            && !name.chars().any(|c| matches!(c, '.' | ',' | '?' | '!' | ';' | ':' | '"'))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceVerb {
    Likes,
    Dislikes,
    Loves,
    Hates,
}

impl PreferenceVerb {
    pub const ALL: [PreferenceVerb; 4] = [
        PreferenceVerb::Likes,
        PreferenceVerb::Dislikes,
        PreferenceVerb::Loves,
        PreferenceVerb::Hates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceVerb::Likes => "likes",
            PreferenceVerb::Dislikes => "dislikes",
            PreferenceVerb::Loves => "loves",
            PreferenceVerb::Hates => "hates",
        }
    }
}

/// One typed story event.
///
/// `Present` covers the "{C} is in the {R}." opening used by some external
/// story sets; it places a character like `Enter` does.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Enter { character: String, room: String },
    Exit { character: String, room: String },
    Present { character: String, room: String },
    MoveItem { character: String, item: String, container: String },
    ItemAt { item: String, container: String },
    ContainerIn { container: String, room: String },
    Preference { character: String, item: String, verb: PreferenceVerb },
    Intent { characters: Vec<String>, item: String },
}

impl Primitive {
    /// Events that establish where an item is.
    pub fn is_location_bearing(&self) -> bool {
        matches!(self, Primitive::MoveItem { .. } | Primitive::ItemAt { .. })
    }

    /// Every entity mentioned, in surface order, with the kind its slot demands.
    pub fn entities(&self) -> Vec<Entity> {
        use EntityKind::*;
        match self {
            Primitive::Enter { character, room }
            | Primitive::Exit { character, room }
            | Primitive::Present { character, room } => {
                vec![Entity::new(character, Character), Entity::new(room, Room)]
            }
            Primitive::MoveItem { character, item, container } => vec![
                Entity::new(character, Character),
                Entity::new(item, Item),
                Entity::new(container, Container),
            ],
            Primitive::ItemAt { item, container } => {
                vec![Entity::new(item, Item), Entity::new(container, Container)]
            }
            Primitive::ContainerIn { container, room } => {
                vec![Entity::new(container, Container), Entity::new(room, Room)]
            }
            Primitive::Preference { character, item, .. } => {
                vec![Entity::new(character, Character), Entity::new(item, Item)]
            }
            Primitive::Intent { characters, item } => characters
                .iter()
                .map(|c| Entity::new(c, Character))
                .chain(std::iter::once(Entity::new(item, Item)))
                .collect(),
        }
    }

    /// Characters named in the sentence, in surface order.
    pub fn characters(&self) -> Vec<&str> {
        match self {
            Primitive::Enter { character, .. }
            | Primitive::Exit { character, .. }
            | Primitive::Present { character, .. }
            | Primitive::MoveItem { character, .. }
            | Primitive::Preference { character, .. } => vec![character.as_str()],
            Primitive::Intent { characters, .. } => characters.iter().map(String::as_str).collect(),
            Primitive::ItemAt { .. } | Primitive::ContainerIn { .. } => Vec::new(),
        }
    }

    /// The templatic surface sentence.
    pub fn render(&self) -> String {
        match self {
            Primitive::Enter { character, room } => format!("{character} entered the {room}."),
            Primitive::Exit { character, room } => format!("{character} exited the {room}."),
            Primitive::Present { character, room } => format!("{character} is in the {room}."),
            Primitive::MoveItem { character, item, container } => {
                format!("{character} moved the {item} to the {container}.")
            }
            Primitive::ItemAt { item, container } => format!("The {item} is in the {container}."),
            Primitive::ContainerIn { container, room } => {
                format!("The {container} is in the {room}.")
            }
            Primitive::Preference { character, item, verb } => {
                format!("{character} {} the {item}.", verb.as_str())
            }
            Primitive::Intent { characters, item } => match characters.as_slice() {
                [one] => format!("{one} plans to use the {item} soon."),
                _ => format!("{} plan to use the {item} soon.", join_names(characters)),
            },
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// "A", "A and B", "A, B, and C".
pub fn join_names<S: AsRef<str>>(names: &[S]) -> String {
    match names {
        [] => String::new(),
        [one] => one.as_ref().to_string(),
        [a, b] => format!("{} and {}", a.as_ref(), b.as_ref()),
        [init @ .., last] => {
            let head: Vec<&str> = init.iter().map(AsRef::as_ref).collect();
            format!("{}, and {}", head.join(", "), last.as_ref())
        }
    }
}

fn split_names(list: &str) -> Vec<String> {
    let mut names = Vec::new();
    if let Some((head, last)) = list.rsplit_once(", and ") {
        names.extend(head.split(", ").map(str::to_string));
        names.push(last.to_string());
    } else if let Some((a, b)) = list.split_once(" and ") {
        names.push(a.to_string());
        names.push(b.to_string());
    } else {
        names.push(list.to_string());
    }
    names
}

/// Parses one sentence of the story grammar.
///
/// "The X is in the Y." is ambiguous between an item placement and a
/// container placement; the lexicon decides.
pub fn parse_sentence(text: &str, lexicon: &Lexicon) -> Result<Primitive> {
    let unrecognized = || Error::UnrecognizedSentence(text.to_string());
    let body = text.trim().strip_suffix('.').ok_or_else(unrecognized)?;
    let valid = |names: &[&str]| names.iter().all(|n| Entity::is_valid_name(n));

    if let Some(rest) = body.strip_suffix(" soon") {
        for marker in [" plan to use the ", " plans to use the "] {
            if let Some((who, item)) = rest.split_once(marker) {
                let characters = split_names(who);
                let mut refs: Vec<&str> = characters.iter().map(String::as_str).collect();
                refs.push(item);
                if !valid(&refs) || (characters.len() == 1) != (marker == " plans to use the ") {
                    return Err(unrecognized());
                }
                return Ok(Primitive::Intent { characters, item: item.to_string() });
            }
        }
    }
    if let Some((character, rest)) = body.split_once(" moved the ") {
        let (item, container) = rest.split_once(" to the ").ok_or_else(unrecognized)?;
        if !valid(&[character, item, container]) {
            return Err(unrecognized());
        }
        return Ok(Primitive::MoveItem {
            character: character.to_string(),
            item: item.to_string(),
            container: container.to_string(),
        });
    }
    for (marker, make) in [
        (" entered the ", enter as fn(&str, &str) -> Primitive),
        (" exited the ", exit),
    ] {
        if let Some((character, room)) = body.split_once(marker) {
            if !valid(&[character, room]) {
                return Err(unrecognized());
            }
            return Ok(make(character, room));
        }
    }
    if let Some((subject, place)) = body.split_once(" is in the ") {
        if !valid(&[subject, place]) {
            return Err(unrecognized());
        }
        return match subject.strip_prefix("The ") {
            None => Ok(Primitive::Present {
                character: subject.to_string(),
                room: place.to_string(),
            }),
            Some(thing) => resolve_placement(thing, place, lexicon).ok_or_else(unrecognized),
        };
    }
    for verb in PreferenceVerb::ALL {
        let marker = format!(" {} the ", verb.as_str());
        if let Some((character, item)) = body.split_once(marker.as_str()) {
            if !valid(&[character, item]) {
                return Err(unrecognized());
            }
            return Ok(Primitive::Preference {
                character: character.to_string(),
                item: item.to_string(),
                verb,
            });
        }
    }
    Err(unrecognized())
}

fn enter(character: &str, room: &str) -> Primitive {
    Primitive::Enter { character: character.to_string(), room: room.to_string() }
}

fn exit(character: &str, room: &str) -> Primitive {
    Primitive::Exit { character: character.to_string(), room: room.to_string() }
}

fn resolve_placement(thing: &str, place: &str, lexicon: &Lexicon) -> Option<Primitive> {
    use EntityKind::*;
    let container_in = || Primitive::ContainerIn {
        container: thing.to_string(),
        room: place.to_string(),
    };
    let item_at = || Primitive::ItemAt { item: thing.to_string(), container: place.to_string() };
    match (lexicon.kind_of(thing), lexicon.kind_of(place)) {
        (Some(Container), None | Some(Room)) | (None, Some(Room)) => Some(container_in()),
        (Some(Item), None | Some(Container)) | (None, Some(Container)) => Some(item_at()),
        _ => None,
    }
}

/// Splits running story text into trimmed, period-terminated sentences.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if c == '.' && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let sentence = current.split_whitespace().collect::<Vec<_>>().join(" ");
            if !sentence.is_empty() {
                out.push(sentence);
            }
            current.clear();
        }
    }
    let tail = current.split_whitespace().collect::<Vec<_>>().join(" ");
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}
