use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::Primitive;
use crate::error::{Error, Result};

/// Ground-truth world: where every introduced item is and which room each
/// character currently occupies (`None` when absent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    item_loc: BTreeMap<String, String>,
    char_room: BTreeMap<String, Option<String>>,
    room_of: Arc<BTreeMap<String, String>>,
}

impl WorldState {
    /// Empty world over a fixed character roster and container→room map.
    pub fn new<I, S>(characters: I, room_of: BTreeMap<String, String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            item_loc: BTreeMap::new(),
            char_room: characters.into_iter().map(|c| (c.into(), None)).collect(),
            room_of: Arc::new(room_of),
        }
    }

    pub fn item_loc(&self) -> &BTreeMap<String, String> {
        &self.item_loc
    }

    pub fn char_room(&self) -> &BTreeMap<String, Option<String>> {
        &self.char_room
    }

    pub fn room_of(&self, container: &str) -> Option<&str> {
        self.room_of.get(container).map(String::as_str)
    }

    pub fn location_of(&self, item: &str) -> Option<&str> {
        self.item_loc.get(item).map(String::as_str)
    }

    pub fn room_of_character(&self, character: &str) -> Option<&str> {
        self.char_room.get(character).and_then(|r| r.as_deref())
    }

    fn occupants<'a>(&'a self, room: &'a str) -> impl Iterator<Item = &'a String> + 'a {
        self.char_room
            .iter()
            .filter(move |(_, r)| r.as_deref() == Some(room))
            .map(|(c, _)| c)
    }

    fn container_room(&self, container: &str) -> Result<&str> {
        self.room_of(container)
            .ok_or_else(|| Error::IllegalTransition(format!("the {container} is not placed in any room")))
    }

    /// Deterministic transition function.
    pub fn apply(&self, p: &Primitive) -> Result<WorldState> {
        let mut next = self.clone();
        match p {
            Primitive::Enter { character, room } | Primitive::Present { character, room } => {
                next.char_room.insert(character.clone(), Some(room.clone()));
            }
            Primitive::Exit { character, room } => {
                if self.room_of_character(character) != Some(room.as_str()) {
                    return Err(Error::IllegalTransition(format!(
                        "{character} exits the {room} without being in it"
                    )));
                }
                next.char_room.insert(character.clone(), None);
            }
            Primitive::ItemAt { item, container } => {
                if self.item_loc.contains_key(item) {
                    return Err(Error::IllegalTransition(format!(
                        "the {item} is introduced twice"
                    )));
                }
                self.container_room(container)?;
                next.item_loc.insert(item.clone(), container.clone());
            }
            Primitive::MoveItem { character, item, container } => {
                let source = self.location_of(item).ok_or_else(|| {
                    Error::IllegalTransition(format!("the {item} is moved before being introduced"))
                })?;
                let room = self.container_room(source)?;
                if self.room_of_character(character) != Some(room) {
                    return Err(Error::IllegalTransition(format!(
                        "{character} moves the {item} without being in the {room}"
                    )));
                }
                if self.container_room(container)? != room {
                    return Err(Error::IllegalTransition(format!(
                        "the {container} is not in the {room}"
                    )));
                }
                next.item_loc.insert(item.clone(), container.clone());
            }
            Primitive::ContainerIn { .. } | Primitive::Preference { .. } | Primitive::Intent { .. } => {}
        }
        Ok(next)
    }

    /// Characters who observe `p` when it happens in this state.
    pub fn witnesses(&self, p: &Primitive) -> BTreeSet<String> {
        match p {
            Primitive::MoveItem { container, .. } | Primitive::ItemAt { container, .. } => {
                match self.room_of(container) {
                    Some(room) => self.occupants(room).cloned().collect(),
                    None => BTreeSet::new(),
                }
            }
            Primitive::Enter { character, room }
            | Primitive::Exit { character, room }
            | Primitive::Present { character, room } => self
                .occupants(room)
                .cloned()
                .chain(std::iter::once(character.clone()))
                .collect(),
            Primitive::ContainerIn { .. } | Primitive::Preference { .. } | Primitive::Intent { .. } => {
                self.char_room.keys().cloned().collect()
            }
        }
    }
}
