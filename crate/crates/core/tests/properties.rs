use std::collections::BTreeSet;

use proptest::prelude::*;

use t4d_core::convert::{
    augment_with_hint, convert_to_t4d, convert_with_order, make_tomi_instance, strip_hints, HintKind,
    OptionOrder, TomHintScope,
};
use t4d_core::gen::{generate_one, GenConfig, GenFamily};
use t4d_core::oracle::{brute_force_gold, extract_roles, gold_t4d_answer, gold_tomi_answer};
use t4d_core::story::{default_lexicon, join_names, parse_sentence, Family, Primitive, Story};

const FAMILIES: [GenFamily; 4] = [GenFamily::Tomi, GenFamily::D1, GenFamily::D2, GenFamily::D3];

fn story(family: GenFamily, seed: u64, index: usize, true_belief_ratio: f64) -> Story {
    let config = GenConfig { seed, family, true_belief_ratio, ..GenConfig::default() };
    generate_one(&config, index).unwrap()
}

fn any_story() -> impl Strategy<Value = Story> {
    (0..4usize, any::<u64>(), 0..10_000usize, prop_oneof![Just(0.0), Just(0.5), Just(1.0)])
        .prop_map(|(f, seed, index, ratio)| story(FAMILIES[f], seed, index, ratio))
}

/// Rooms and characters a primitive touches.
fn footprint(s: &Story, p: &Primitive) -> (BTreeSet<String>, BTreeSet<String>, BTreeSet<String>) {
    let room_of = |c: &str| s.meta().room_of.get(c).cloned().unwrap_or_default();
    let set = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
    match p {
        Primitive::Enter { character, room } | Primitive::Exit { character, room } | Primitive::Present { character, room } => {
            (set(&[room]), set(&[character]), BTreeSet::new())
        }
        Primitive::MoveItem { character, item, container } => {
            let source = s.primitives().iter().find_map(|q| match q {
                Primitive::ItemAt { item: i, container } if i == item => Some(container.clone()),
                _ => None,
            });
            let mut rooms = set(&[&room_of(container)]);
            rooms.extend(source.map(|c| room_of(&c)));
            (rooms, set(&[character]), set(&[item]))
        }
        Primitive::ItemAt { item, container } => (set(&[&room_of(container)]), BTreeSet::new(), set(&[item])),
        Primitive::ContainerIn { room, .. } => (set(&[room]), BTreeSet::new(), BTreeSet::new()),
        Primitive::Preference { character, item, .. } => (BTreeSet::new(), set(&[character]), set(&[item])),
        Primitive::Intent { characters, item } => {
            (BTreeSet::new(), characters.iter().cloned().collect(), set(&[item]))
        }
    }
}

#[test]
fn oracle_equivalence_over_all_families() {
    let mut checked = 0;
    for family in FAMILIES {
        for index in 0..300 {
            for ratio in [0.0, 0.5] {
                let s = story(family, 17, index, ratio);
                assert_eq!(gold_t4d_answer(&s).unwrap(), brute_force_gold(&s).unwrap(), "{}", s.id());
                checked += 1;
            }
        }
    }
    assert!(checked >= 1000);
}

#[test]
fn round_trip_on_a_corpus() {
    let lex = default_lexicon();
    for family in FAMILIES {
        for index in 0..250 {
            let s = story(family, 3, index, 0.3);
            for p in s.primitives() {
                assert_eq!(&parse_sentence(&p.render(), lex).unwrap(), p);
            }
        }
    }
}

#[test]
fn tomi_belief_counts() {
    for index in 0..300 {
        let fb = story(GenFamily::Tomi, 5, index, 0.0);
        assert_eq!(fb.family(), Family::TomiFalseBelief);
        assert_eq!(gold_t4d_answer(&fb).unwrap().len(), 1);
        let tb = story(GenFamily::Tomi, 5, index, 1.0);
        assert_eq!(tb.family(), Family::TomiTrueBelief);
        assert!(gold_t4d_answer(&tb).unwrap().is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_render_identity(s in any_story()) {
        for p in s.primitives() {
            prop_assert_eq!(&parse_sentence(&p.render(), default_lexicon()).unwrap(), p);
        }
    }

    #[test]
    fn record_round_trip(s in any_story()) {
        let line = serde_json::to_string(&s.to_record()).unwrap();
        let back = Story::from_record(serde_json::from_str(&line).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn replay_is_deterministic(s in any_story()) {
        prop_assert_eq!(s.replay().unwrap(), s.replay().unwrap());
    }

    #[test]
    fn generation_is_pure(f in 0..4usize, seed in any::<u64>(), index in 0..10_000usize) {
        let a = story(FAMILIES[f], seed, index, 0.5);
        let b = story(FAMILIES[f], seed, index, 0.5);
        prop_assert_eq!(serde_json::to_string(&a.to_record()).unwrap(), serde_json::to_string(&b.to_record()).unwrap());
    }

    #[test]
    fn oracle_equivalence(s in any_story()) {
        prop_assert_eq!(gold_t4d_answer(&s).unwrap(), brute_force_gold(&s).unwrap());
    }

    #[test]
    fn witnesses_are_present(s in any_story()) {
        let mut world = s.initial_world();
        for p in s.primitives() {
            if let Primitive::MoveItem { container, .. } = p {
                let room = world.room_of(container).unwrap().to_string();
                for w in world.witnesses(p) {
                    prop_assert_eq!(world.room_of_character(&w), Some(room.as_str()));
                }
            }
            world = world.apply(p).unwrap();
        }
    }

    #[test]
    fn tomi_and_t4d_gold_agree(s in any_story()) {
        let (world, _) = t4d_core::oracle::final_state(&s).unwrap();
        let roles = extract_roles(&s).unwrap();
        let actual = world.location_of(&roles.target_item).unwrap().to_string();
        let gold = gold_t4d_answer(&s).unwrap();
        prop_assert!(gold.iter().all(|c| roles.intent_holders.contains(c)));
        for c in &roles.intent_holders {
            let stale = gold_tomi_answer(&s, c).map(|b| b != actual).unwrap_or(true);
            prop_assert_eq!(gold.contains(c), stale);
        }
        if s.family().is_tomi() {
            prop_assert!(roles.mover.as_ref().is_some_and(|m| roles.intent_holders.contains(m)));
        }
    }

    #[test]
    fn preferences_are_irrelevant(s in any_story()) {
        let kept: Vec<Primitive> = s
            .primitives()
            .iter()
            .filter(|p| !matches!(p, Primitive::Preference { .. }))
            .cloned()
            .collect();
        let stripped = Story::with_room_of(s.id(), s.family(), 0, kept, s.meta().room_of.clone()).unwrap();
        prop_assert_eq!(gold_t4d_answer(&stripped).unwrap(), gold_t4d_answer(&s).unwrap());
    }

    #[test]
    fn disjoint_neighbours_commute(s in any_story(), pick in any::<prop::sample::Index>()) {
        let prims = s.primitives();
        let swappable: Vec<usize> = (0..prims.len() - 1)
            .filter(|&i| {
                let (ra, ca, ia) = footprint(&s, &prims[i]);
                let (rb, cb, ib) = footprint(&s, &prims[i + 1]);
                ra.is_disjoint(&rb) && ca.is_disjoint(&cb) && ia.is_disjoint(&ib)
            })
            .collect();
        prop_assume!(!swappable.is_empty());
        let i = swappable[pick.index(swappable.len())];
        let mut swapped = prims.to_vec();
        swapped.swap(i, i + 1);
        let t = Story::with_room_of(s.id(), s.family(), 0, swapped, s.meta().room_of.clone()).unwrap();
        prop_assert_eq!(gold_t4d_answer(&t).unwrap(), gold_t4d_answer(&s).unwrap());
    }

    #[test]
    fn gold_sound_under_any_order(s in any_story(), seed in any::<u64>()) {
        let gold = gold_t4d_answer(&s).unwrap();
        let order = s.characters();
        let expected = if gold.is_empty() {
            "None of the above".to_string()
        } else {
            join_names(&order.iter().filter(|c| gold.contains(*c)).collect::<Vec<_>>())
        };
        for policy in [OptionOrder::FirstMention, OptionOrder::Shuffled(seed)] {
            let inst = convert_with_order(&s, &policy).unwrap();
            prop_assert_eq!(inst.gold_text(), expected.as_str());
            let extra = usize::from(s.family() == Family::D2);
            prop_assert_eq!(inst.options.len(), order.len() + 1 + extra);
        }
        prop_assert_eq!(convert_to_t4d(&s).unwrap(), convert_to_t4d(&s).unwrap());
    }

    #[test]
    fn hints_are_neutral(s in any_story(), scope_all in any::<bool>()) {
        let scope = if scope_all { TomHintScope::All } else { TomHintScope::FalseBeliever };
        let base = convert_to_t4d(&s).unwrap();
        let mut inst = base.clone();
        for kind in HintKind::ALL {
            let next = augment_with_hint(&inst, &s, kind, scope).unwrap();
            prop_assert_eq!(&next.options, &base.options);
            prop_assert_eq!(&next.gold, &base.gold);
            let added = &next.hints.last().unwrap().added;
            prop_assert!(!added.is_empty());
            let text = format!("{} {}", next.observation_text(), next.question);
            prop_assert!(added.iter().all(|a| text.contains(a.as_str())));
            inst = next;
        }
        prop_assert_eq!(strip_hints(&inst), base);
    }

    #[test]
    fn tomi_instances_have_two_options(s in any_story()) {
        prop_assume!(s.family().is_tomi());
        let t = make_tomi_instance(&s).unwrap();
        prop_assert_eq!(t.options.len(), 2);
        prop_assert_ne!(&t.options[0].text, &t.options[1].text);
    }
}
