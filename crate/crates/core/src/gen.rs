//! Seeded story generators.
//!
//! Every story is a pure function of `(config, index)`: its RNG is seeded
//! from the config seed mixed with the index, so any index range can be
//! generated independently and in any order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::story::vocab::{CHARACTERS, CONTAINERS, ITEMS, ROOMS};
use crate::story::{Family, PreferenceVerb, Primitive, Story};

/// Largest number of characters in a ToMi-style story (one option per
/// character plus "None of the above" must fit in A–E).
const MAX_TOMI_CHARACTERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenFamily {
    Tomi,
    D1,
    D2,
    D3,
}

impl GenFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            GenFamily::Tomi => "tomi",
            GenFamily::D1 => "d1",
            GenFamily::D2 => "d2",
            GenFamily::D3 => "d3",
        }
    }
}

impl fmt::Display for GenFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tomi" => Ok(GenFamily::Tomi),
            "d1" => Ok(GenFamily::D1),
            "d2" => Ok(GenFamily::D2),
            "d3" => Ok(GenFamily::D3),
            other => Err(Error::Config(format!("unknown generator family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    pub family: GenFamily,
    /// Each story draws 0..=this many distractor characters.
    pub distractor_characters: usize,
    /// Each story draws 0..=this many preference sentences.
    pub distractor_preferences: usize,
    /// Fraction of ToMi stories in which the observer witnesses the move.
    pub true_belief_ratio: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 500,
            family: GenFamily::Tomi,
            distractor_characters: 1,
            distractor_preferences: 3,
            true_belief_ratio: 0.0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Config("count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.true_belief_ratio) {
            return Err(Error::Config(format!(
                "true_belief_ratio {} is outside [0, 1]",
                self.true_belief_ratio
            )));
        }
        if self.distractor_characters > 2 {
            return Err(Error::Config("distractor_characters must be 0..=2".into()));
        }
        if self.distractor_preferences > 3 {
            return Err(Error::Config("distractor_preferences must be 0..=3".into()));
        }
        Ok(())
    }
}

/// Per-story seed derived from the corpus seed and the story index.
pub fn story_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64 ^ 0x5441_4434_0000_0000))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

// Platform-independent sampling helpers (u32 draws only).
pub(crate) struct Dice(ChaCha8Rng);

impl Dice {
    pub(crate) fn new(seed: u64) -> Self {
        Dice(ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0 && n <= u32::MAX as usize);
        self.0.gen_range(0..n as u32) as usize
    }

    /// Uniform in lo..=hi.
    fn between(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    fn chance(&mut self, p: f64) -> bool {
        // 53 random bits, identical on every platform.
        let x = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        x < p
    }

    pub(crate) fn coin(&mut self) -> bool {
        self.below(2) == 1
    }

    pub(crate) fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }

    /// `k` distinct elements in random order.
    pub(crate) fn sample<T: Clone>(&mut self, xs: &[T], k: usize) -> Vec<T> {
        let mut pool: Vec<T> = xs.to_vec();
        for i in 0..k {
            let j = i + self.below(pool.len() - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

fn s(x: &str) -> String {
    x.to_string()
}

fn enter(c: &str, r: &str) -> Primitive {
    Primitive::Enter { character: s(c), room: s(r) }
}

fn exit(c: &str, r: &str) -> Primitive {
    Primitive::Exit { character: s(c), room: s(r) }
}

fn move_item(c: &str, i: &str, d: &str) -> Primitive {
    Primitive::MoveItem { character: s(c), item: s(i), container: s(d) }
}

fn item_at(i: &str, d: &str) -> Primitive {
    Primitive::ItemAt { item: s(i), container: s(d) }
}

fn container_in(d: &str, r: &str) -> Primitive {
    Primitive::ContainerIn { container: s(d), room: s(r) }
}

fn intent(cs: &[&str], i: &str) -> Primitive {
    Primitive::Intent { characters: cs.iter().map(|c| s(c)).collect(), item: s(i) }
}

/// Generates `config.count` stories for any family.
pub fn generate(config: &GenConfig) -> Result<Vec<Story>> {
    config.validate()?;
    (0..config.count).map(|i| generate_one(config, i)).collect()
}

/// The story at `index` of the corpus described by `config`.
pub fn generate_one(config: &GenConfig, index: usize) -> Result<Story> {
    let seed = story_seed(config.seed, index);
    let id = format!("{}-{}-{index:05}", config.family, config.seed);
    match config.family {
        GenFamily::Tomi => tomi_story(config, id, seed),
        GenFamily::D1 => generate_d1_with_id(id, seed),
        GenFamily::D2 => generate_d2_with_id(id, seed),
        GenFamily::D3 => generate_d3_with_id(id, seed),
    }
}

/// ToMi-style false/true-belief stories.
pub fn generate_tomi(config: &GenConfig) -> Result<Vec<Story>> {
    if config.family != GenFamily::Tomi {
        return Err(Error::Config(format!("generate_tomi called with family {}", config.family)));
    }
    generate(config)
}

fn position_of(v: &[Primitive], pred: impl Fn(&Primitive) -> bool) -> usize {
    v.iter().position(pred).expect("core skeleton element present")
}

fn tomi_story(config: &GenConfig, id: String, seed: u64) -> Result<Story> {
    let mut dice = Dice::new(seed);
    let true_belief = dice.chance(config.true_belief_ratio);
    let n_distractors = dice.between(0, config.distractor_characters);
    let n_prefs = dice.between(0, config.distractor_preferences);

    let names = dice.sample(CHARACTERS, MAX_TOMI_CHARACTERS + 3);
    let (mover, observer) = (names[0], names[1]);
    let distractors: Vec<&str> = names[2..2 + n_distractors].to_vec();
    let mut spare = names[2 + n_distractors..].iter().copied();
    let rooms = dice.sample(ROOMS, 2 + n_distractors);
    let room = rooms[0];
    let items = dice.sample(ITEMS, 1 + n_prefs);
    let item = items[0];
    let containers = dice.sample(CONTAINERS, 2);
    let (old, new) = (containers[0], containers[1]);

    let mut v = Vec::new();
    if dice.coin() {
        v.extend([enter(mover, room), enter(observer, room)]);
    } else {
        v.extend([enter(observer, room), enter(mover, room)]);
    }
    v.push(item_at(item, old));
    if true_belief {
        v.push(move_item(mover, item, new));
        let observer_leaves = dice.coin();
        let mover_leaves = dice.coin();
        let mut tail = Vec::new();
        if observer_leaves {
            tail.push(exit(observer, room));
        }
        if mover_leaves {
            tail.push(exit(mover, room));
        }
        if tail.len() == 2 && dice.coin() {
            tail.swap(0, 1);
        }
        v.extend(tail);
        if observer_leaves && dice.coin() {
            v.push(enter(observer, rooms[1]));
        }
    } else {
        v.push(exit(observer, room));
        v.push(move_item(mover, item, new));
        if dice.coin() {
            v.push(exit(mover, room));
        }
        if dice.coin() {
            v.push(enter(observer, rooms[1]));
        }
    }
    v.push(intent(&[mover, observer], item));

    // Distractor characters, inserted so the last arrival before the item
    // placement is always into the main room.
    for (k, d) in distractors.iter().enumerate() {
        let at = position_of(&v, |p| matches!(p, Primitive::ItemAt { .. }));
        let last = v.len() - 1; // the intent stays last
        if dice.coin() {
            // Co-present at the placement, leaves before the story ends.
            let enter_at = dice.below(at + 1);
            v.insert(enter_at, enter(d, room));
            let exit_at = dice.between(at + 2, last + 1);
            v.insert(exit_at, exit(d, room));
        } else {
            let elsewhere = rooms[2 + k];
            let slots: Vec<usize> = std::iter::once(0).chain(at + 1..=last).collect();
            let enter_at = *dice.pick(&slots);
            v.insert(enter_at, enter(d, elsewhere));
            if dice.coin() {
                let exit_at = dice.between(enter_at + 1, v.len() - 1);
                v.insert(exit_at, exit(d, elsewhere));
            }
        }
    }

    // Preference sentences; about half introduce a character who appears nowhere else.
    let mut present: Vec<&str> = vec![mover, observer];
    present.extend(&distractors);
    let mut total = present.len();
    for pref_item in &items[1..] {
        let who = if total < MAX_TOMI_CHARACTERS && dice.coin() {
            total += 1;
            spare.next().expect("enough spare names")
        } else {
            *dice.pick(&present)
        };
        let verb = *dice.pick(&PreferenceVerb::ALL);
        let at = dice.below(v.len()); // never after the intent
        v.insert(at, Primitive::Preference { character: s(who), item: s(pref_item), verb });
    }

    let family = if true_belief { Family::TomiTrueBelief } else { Family::TomiFalseBelief };
    Story::new(id, family, seed, v)
}

/// Two rooms, two items, each with its own false-belief episode.
pub fn generate_d1(seed: u64) -> Story {
    generate_d1_with_id(format!("d1-{seed}"), seed).expect("d1 skeleton is well-formed")
}

/// Three characters; the item is moved twice, leaving two stale believers.
pub fn generate_d2(seed: u64) -> Story {
    generate_d2_with_id(format!("d2-{seed}"), seed).expect("d2 skeleton is well-formed")
}

/// One item moved through four containers by two characters.
pub fn generate_d3(seed: u64) -> Story {
    generate_d3_with_id(format!("d3-{seed}"), seed).expect("d3 skeleton is well-formed")
}

fn generate_d1_with_id(id: String, seed: u64) -> Result<Story> {
    let mut dice = Dice::new(seed);
    let names = dice.sample(CHARACTERS, 2);
    let (a, b) = (names[0], names[1]);
    let rooms = dice.sample(ROOMS, 2);
    let items = dice.sample(ITEMS, 2);
    let c = dice.sample(CONTAINERS, 4);
    let (r1, r2) = (rooms[0], rooms[1]);
    let mut v = vec![
        enter(a, r1),
        enter(b, r1),
        item_at(items[0], c[0]),
        container_in(c[0], r1),
        exit(b, r1),
        move_item(a, items[0], c[1]),
        container_in(c[1], r1),
        exit(a, r1),
    ];
    if dice.coin() {
        v.extend([enter(b, r2), enter(a, r2)]);
    } else {
        v.extend([enter(a, r2), enter(b, r2)]);
    }
    v.extend([
        item_at(items[1], c[2]),
        container_in(c[2], r2),
        exit(a, r2),
        move_item(b, items[1], c[3]),
        container_in(c[3], r2),
        exit(b, r2),
    ]);
    let target = items[dice.below(2)];
    v.push(intent(&[a, b], target));
    Story::new(id, Family::D1, seed, v)
}

fn generate_d2_with_id(id: String, seed: u64) -> Result<Story> {
    let mut dice = Dice::new(seed);
    let names = dice.sample(CHARACTERS, 3);
    // first mover, early leaver, final mover
    let (a, b, c) = (names[0], names[1], names[2]);
    let room = *dice.pick(ROOMS);
    let item = *dice.pick(ITEMS);
    let k = dice.sample(CONTAINERS, 3);
    let order = dice.sample(&[a, b, c], 3);
    let mut v: Vec<Primitive> = order.iter().map(|x| enter(x, room)).collect();
    v.extend([
        item_at(item, k[0]),
        container_in(k[0], room),
        exit(b, room),
        move_item(a, item, k[1]),
        container_in(k[1], room),
        exit(a, room),
        move_item(c, item, k[2]),
        container_in(k[2], room),
        exit(c, room),
        intent(&[order[0], order[1], order[2]], item),
    ]);
    Story::new(id, Family::D2, seed, v)
}

fn generate_d3_with_id(id: String, seed: u64) -> Result<Story> {
    let mut dice = Dice::new(seed);
    let names = dice.sample(CHARACTERS, 2);
    let (a, b) = (names[0], names[1]);
    let room = *dice.pick(ROOMS);
    let item = *dice.pick(ITEMS);
    let k = dice.sample(CONTAINERS, 4);
    let opening = if dice.coin() {
        Primitive::Present { character: s(a), room: s(room) }
    } else {
        enter(a, room)
    };
    let v = vec![
        opening,
        item_at(item, k[0]),
        container_in(k[0], room),
        move_item(a, item, k[1]),
        container_in(k[1], room),
        enter(b, room),
        exit(a, room),
        move_item(b, item, k[2]),
        container_in(k[2], room),
        move_item(b, item, k[3]),
        container_in(k[3], room),
        intent(&[a, b], item),
    ];
    Story::new(id, Family::D3, seed, v)
}
