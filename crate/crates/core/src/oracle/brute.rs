//! Independent gold computation used to cross-check the incremental oracle.
//!
//! Nothing here shares state with `WorldState` or `simulate_beliefs`: every
//! question ("where is X at step k?", "is C in room R at step k?") is answered
//! by rescanning the primitive prefix from the start.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::story::{Primitive, Story};

fn room_of_character_before(prims: &[Primitive], step: usize, who: &str) -> Option<String> {
    let mut room = None;
    for p in &prims[..step] {
        match p {
            Primitive::Enter { character, room: r } | Primitive::Present { character, room: r }
                if character == who =>
            {
                room = Some(r.clone());
            }
            Primitive::Exit { character, .. } if character == who => room = None,
            _ => {}
        }
    }
    room
}

fn container_of_before(prims: &[Primitive], step: usize, item: &str) -> Option<String> {
    prims[..step].iter().rev().find_map(|p| match p {
        Primitive::ItemAt { item: i, container } | Primitive::MoveItem { item: i, container, .. }
            if i == item =>
        {
            Some(container.clone())
        }
        _ => None,
    })
}

fn believed_container(story: &Story, who: &str, item: &str) -> Option<String> {
    let prims = story.primitives();
    let mut belief = None;
    for (k, p) in prims.iter().enumerate() {
        let (moved, container) = match p {
            Primitive::ItemAt { item, container } | Primitive::MoveItem { item, container, .. } => {
                (item, container)
            }
            _ => continue,
        };
        if moved != item {
            continue;
        }
        let Some(event_room) = story.meta().room_of.get(container) else { continue };
        if room_of_character_before(prims, k, who).as_ref() == Some(event_room) {
            belief = Some(container.clone());
        }
    }
    belief
}

/// Same contract as [`super::gold_t4d_answer`], computed by brute force.
pub fn brute_force_gold(story: &Story) -> Result<BTreeSet<String>> {
    let prims = story.primitives();
    let (holders, item) = prims
        .iter()
        .find_map(|p| match p {
            Primitive::Intent { characters, item } => Some((characters, item)),
            _ => None,
        })
        .ok_or_else(|| Error::NoIntent(story.id().to_string()))?;
    let actual = container_of_before(prims, prims.len(), item).ok_or_else(|| {
        Error::InvalidStory(format!("{}: the {item} is never placed", story.id()))
    })?;
    Ok(holders
        .iter()
        .filter(|c| believed_container(story, c, item).as_deref() != Some(actual.as_str()))
        .cloned()
        .collect())
}
