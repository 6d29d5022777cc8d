//! Symbolic belief tracking and gold answers.
//!
//! A character's belief about an item changes only when the character
//! witnesses a location-bearing event (an item being placed or moved).
//! Entering a room does not refresh beliefs about what is in it.

mod brute;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::story::{Primitive, Story, WorldState};

pub use brute::brute_force_gold;

/// character → (item → believed container). Missing entries are unknown.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BeliefState {
    beliefs: BTreeMap<String, BTreeMap<String, String>>,
}

impl BeliefState {
    pub fn belief(&self, character: &str, item: &str) -> Option<&str> {
        self.beliefs.get(character)?.get(item).map(String::as_str)
    }

    pub fn of(&self, character: &str) -> Option<&BTreeMap<String, String>> {
        self.beliefs.get(character)
    }

    fn observe(&mut self, character: &str, item: &str, container: &str) {
        self.beliefs
            .entry(character.to_string())
            .or_default()
            .insert(item.to_string(), container.to_string());
    }
}

/// World and beliefs after one primitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefStep {
    pub world: WorldState,
    pub beliefs: BeliefState,
}

/// Incremental replay of world state and per-character beliefs.
pub fn simulate_beliefs(story: &Story) -> Result<Vec<BeliefStep>> {
    let mut world = story.initial_world();
    let mut beliefs = BeliefState::default();
    let mut steps = Vec::with_capacity(story.primitives().len());
    for p in story.primitives() {
        let witnesses = world.witnesses(p);
        let next = world.apply(p)?;
        match p {
            Primitive::ItemAt { item, container } | Primitive::MoveItem { item, container, .. } => {
                for c in &witnesses {
                    beliefs.observe(c, item, container);
                }
            }
            Primitive::Enter { character, room } | Primitive::Present { character, room } => {
                warn_on_stale_reentry(story, &next, &beliefs, character, room);
            }
            _ => {}
        }
        world = next;
        steps.push(BeliefStep { world: world.clone(), beliefs: beliefs.clone() });
    }
    Ok(steps)
}

fn warn_on_stale_reentry(story: &Story, world: &WorldState, beliefs: &BeliefState, who: &str, room: &str) {
    let Some(held) = beliefs.of(who) else { return };
    for (item, believed) in held {
        let actual = world.location_of(item);
        if actual != Some(believed.as_str())
            && (world.room_of(believed) == Some(room) || actual.and_then(|a| world.room_of(a)) == Some(room))
        {
            log::warn!(
                "story {}: {who} re-enters the {room} holding a stale belief about the {item}; \
                 beliefs are not refreshed on entry",
                story.id()
            );
        }
    }
}

/// Final beliefs and world after replaying the whole story.
pub fn final_state(story: &Story) -> Result<(WorldState, BeliefState)> {
    let steps = simulate_beliefs(story)?;
    Ok(match steps.into_iter().last() {
        Some(step) => (step.world, step.beliefs),
        None => (story.initial_world(), BeliefState::default()),
    })
}

/// The three character roles of a converted story.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAssignment {
    /// Intent holders whose final belief differs from the item's location.
    pub false_believers: BTreeSet<String>,
    /// Actor of the last move of the target item.
    pub mover: Option<String>,
    /// Characters who neither move anything nor hold the intent.
    pub distractors: BTreeSet<String>,
    pub intent_holders: Vec<String>,
    pub target_item: String,
}

pub fn extract_roles(story: &Story) -> Result<RoleAssignment> {
    let (holders, item) = story.intent().ok_or_else(|| Error::NoIntent(story.id().to_string()))?;
    let (world, beliefs) = final_state(story)?;
    let actual = world.location_of(item).ok_or_else(|| {
        Error::InvalidStory(format!("{}: the {item} is never placed", story.id()))
    })?;
    let false_believers = holders
        .iter()
        .filter(|c| beliefs.belief(c, item) != Some(actual))
        .cloned()
        .collect();
    let mut movers = BTreeSet::new();
    let mut mover = None;
    for p in story.primitives() {
        if let Primitive::MoveItem { character, item: moved, .. } = p {
            movers.insert(character.clone());
            if moved == item {
                mover = Some(character.clone());
            }
        }
    }
    let distractors = story
        .characters()
        .into_iter()
        .filter(|c| !movers.contains(c) && !holders.contains(c))
        .collect();
    Ok(RoleAssignment {
        false_believers,
        mover,
        distractors,
        intent_holders: holders.to_vec(),
        target_item: item.to_string(),
    })
}

/// Where `who` will look for the story's target item.
pub fn gold_tomi_answer(story: &Story, who: &str) -> Result<String> {
    let (_, item) = story.intent().ok_or_else(|| Error::NoIntent(story.id().to_string()))?;
    let (_, beliefs) = final_state(story)?;
    beliefs
        .belief(who, item)
        .map(str::to_string)
        .ok_or_else(|| Error::UnknownBelief { character: who.to_string(), item: item.to_string() })
}

/// Intent holders who would benefit from location information; empty means
/// "None of the above".
pub fn gold_t4d_answer(story: &Story) -> Result<BTreeSet<String>> {
    Ok(extract_roles(story)?.false_believers)
}
