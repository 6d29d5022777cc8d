//! Fixed entity vocabulary used by the generators and as the default parsing lexicon.

use std::collections::HashMap;

use super::EntityKind;

pub const CHARACTERS: &[&str] = &[
    "Owen", "Nathan", "Sally", "Anne", "Chloe", "Avery", "Aiden", "Sophia", "Jayden", "Logan",
    "Lucas", "Elizabeth", "Ava", "Jacob", "Emma", "Alexander", "Mia", "Isla", "William",
    "Jackson", "Noah", "Oliver", "Amelia", "Charlotte", "Ethan", "Harper", "Mason", "Evelyn",
    "Liam", "Hannah",
];

pub const ITEMS: &[&str] = &[
    "suit", "marble", "undershirt", "stockings", "cabbage", "spinach", "grapefruit", "pear",
    "slippers", "carrot", "plum", "strawberry", "eggplant", "onion", "chocolate", "apple",
    "banana", "lettuce", "peach", "potato", "tomato", "cucumber", "pineapple", "lime", "hat",
    "scarf", "belt", "gloves", "sweater", "jacket", "boots", "tangerine", "watermelon", "celery",
    "corn", "asparagus", "beans",
];

pub const CONTAINERS: &[&str] = &[
    "cupboard", "basket", "crate", "suitcase", "pantry", "box", "bathtub", "envelope", "bucket",
    "container", "drawer", "bottle", "cabinet", "treasure chest", "trunk", "tub",
];

pub const ROOMS: &[&str] = &[
    "lounge", "dining room", "sunroom", "front yard", "back yard", "bathroom", "cellar", "study",
    "playroom", "porch", "patio", "kitchen", "office", "garage", "hallway", "laundry", "attic",
    "workshop", "closet", "basement", "garden", "staircase",
];

/// Rooms reserved for spurious foresight; never used by the story generators.
pub const NOISE_ROOMS: &[&str] = &["bedroom", "guest room", "living room", "nursery"];

/// Maps known entity names to their kind. Parsing consults it to tell
/// "The {item} is in the {container}." apart from "The {container} is in the {room}.".
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    kinds: HashMap<String, EntityKind>,
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, kind: EntityKind) {
        self.kinds.insert(name.into(), kind);
    }

    pub fn kind_of(&self, name: &str) -> Option<EntityKind> {
        self.kinds.get(name).copied()
    }
}

/// The lexicon built from the shipped vocabulary.
pub fn default_lexicon() -> &'static Lexicon {
    static LEXICON: std::sync::OnceLock<Lexicon> = std::sync::OnceLock::new();
    LEXICON.get_or_init(|| {
        let mut lex = Lexicon::empty();
        for (words, kind) in [
            (CHARACTERS, EntityKind::Character),
            (ITEMS, EntityKind::Item),
            (CONTAINERS, EntityKind::Container),
            (ROOMS, EntityKind::Room),
            (NOISE_ROOMS, EntityKind::Room),
        ] {
            for w in words {
                lex.insert(*w, kind);
            }
        }
        lex
    })
}
