//! Story → action-choice instance conversion.

mod fauxpas;
mod hints;
mod ingest;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::Dice;
use crate::oracle::{self, extract_roles};
use crate::story::{join_names, Family, Primitive, Story};

pub use fauxpas::{convert_faux_pas, load_faux_pas, FauxPasEntry, FauxPasManifest, FAUX_PAS_QUESTION};
pub use hints::{augment_with_hint, strip_hints, HintKind, TomHintScope, CSA_ASSUMPTION, QD_HINT};
pub use ingest::{convert_item, ingest_raw_tomi, split_item, ItemParts};

pub const T4D_QUESTION: &str =
    "Based on the above information, who among the individuals would most benefit from receiving helpful information?";

pub const NONE_OF_THE_ABOVE: &str = "None of the above";

pub const LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub text: String,
}

/// Sentences a hint added, so it can be stripped again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedHint {
    pub kind: HintKind,
    pub added: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct T4DInstance {
    pub id: String,
    pub family: Family,
    pub observations: Vec<String>,
    pub question: String,
    pub options: Vec<AnswerOption>,
    pub gold: String,
    #[serde(default)]
    pub hints: Vec<AppliedHint>,
}

impl T4DInstance {
    pub fn observation_text(&self) -> String {
        self.observations.join(" ")
    }

    pub fn option(&self, label: &str) -> Option<&AnswerOption> {
        self.options.iter().find(|o| o.label == label)
    }

    pub fn gold_text(&self) -> &str {
        self.option(&self.gold).map(|o| o.text.as_str()).unwrap_or_default()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.options.iter().map(|o| o.label.as_str()).collect()
    }

    pub fn hint_kinds(&self) -> Vec<HintKind> {
        self.hints.iter().map(|h| h.kind).collect()
    }
}

/// Inference-question instance: where will a character look for the item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToMiInstance {
    pub id: String,
    pub family: Family,
    pub observations: Vec<String>,
    pub question: String,
    pub options: Vec<AnswerOption>,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum OptionOrder {
    /// Characters in order of first mention.
    #[default]
    FirstMention,
    /// Seeded permutation of the character options; "None of the above" stays last.
    Shuffled(u64),
    /// Exactly this order of option texts (an externally supplied list).
    Explicit(Vec<String>),
}

pub(crate) fn labelled<I: IntoIterator<Item = String>>(texts: I) -> Result<Vec<AnswerOption>> {
    let texts: Vec<String> = texts.into_iter().collect();
    if texts.len() > LABELS.len() {
        return Err(Error::TooManyOptions(texts.len()));
    }
    Ok(texts
        .into_iter()
        .zip(LABELS)
        .map(|(text, label)| AnswerOption { label: label.to_string(), text })
        .collect())
}

fn id_mix(id: &str) -> u64 {
    // FNV-1a; only used to decorrelate per-instance shuffles.
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Compound option of a d2 story: the intent holders other than the final
/// mover, joined with " and ".
fn compound_option(story: &Story) -> Result<Option<String>> {
    if story.family() != Family::D2 {
        return Ok(None);
    }
    let roles = extract_roles(story)?;
    let pair: Vec<&String> = story
        .characters()
        .iter()
        .filter_map(|c| roles.intent_holders.iter().find(|h| *h == c))
        .filter(|c| Some(*c) != roles.mover.as_ref())
        .collect();
    Ok(match pair.as_slice() {
        [a, b] => Some(format!("{a} and {b}")),
        _ => None,
    })
}

/// Text of the option that answers the instance.
fn gold_text(story: &Story, gold: &BTreeSet<String>) -> String {
    let ordered: Vec<String> = story.characters().into_iter().filter(|c| gold.contains(c)).collect();
    match ordered.len() {
        0 => NONE_OF_THE_ABOVE.to_string(),
        _ => join_names(&ordered),
    }
}

pub fn convert_to_t4d(story: &Story) -> Result<T4DInstance> {
    convert_with_order(story, &OptionOrder::FirstMention)
}

/// Converts a story whose intent sentence is already present.
pub fn convert_with_order(story: &Story, order: &OptionOrder) -> Result<T4DInstance> {
    let gold = oracle::gold_t4d_answer(story)?;
    let mut texts = story.characters();
    if let Some(pair) = compound_option(story)? {
        texts.push(pair);
    }
    match order {
        OptionOrder::FirstMention => {}
        OptionOrder::Shuffled(seed) => {
            let mut dice = Dice::new(seed ^ id_mix(story.id()));
            texts = dice.sample(&texts, texts.len());
        }
        OptionOrder::Explicit(wanted) => {
            let wanted: Vec<String> =
                wanted.iter().filter(|t| t.as_str() != NONE_OF_THE_ABOVE).cloned().collect();
            let mut a = wanted.clone();
            let mut b = texts.clone();
            a.sort();
            b.sort();
            if a != b {
                return Err(Error::Record(format!(
                    "{}: supplied options {wanted:?} differ from the story's {texts:?}",
                    story.id()
                )));
            }
            texts = wanted;
        }
    }
    texts.push(NONE_OF_THE_ABOVE.to_string());
    let options = labelled(texts)?;
    let answer = gold_text(story, &gold);
    let gold = options
        .iter()
        .find(|o| o.text == answer)
        .map(|o| o.label.clone())
        .ok_or(Error::GoldNotRepresentable(answer))?;
    Ok(T4DInstance {
        id: story.id().to_string(),
        family: story.family(),
        observations: story.sentences(),
        question: T4D_QUESTION.to_string(),
        options,
        gold,
        hints: Vec::new(),
    })
}

/// "Where will {C} look for the {I}?" with the stale and the actual container.
pub fn make_tomi_instance(story: &Story) -> Result<ToMiInstance> {
    let roles = extract_roles(story)?;
    let item = roles.target_item.clone();
    let order = story.characters();
    let who = order
        .iter()
        .find(|c| roles.false_believers.contains(*c))
        .or_else(|| {
            roles.intent_holders.iter().find(|h| Some(*h) != roles.mover.as_ref())
        })
        .or_else(|| roles.intent_holders.first())
        .cloned()
        .ok_or_else(|| Error::NoIntent(story.id().to_string()))?;
    let believed = oracle::gold_tomi_answer(story, &who)?;
    let history: Vec<&str> = story
        .primitives()
        .iter()
        .filter_map(|p| match p {
            Primitive::ItemAt { item: i, container } | Primitive::MoveItem { item: i, container, .. }
                if *i == item =>
            {
                Some(container.as_str())
            }
            _ => None,
        })
        .collect();
    let actual = *history.last().expect("target item is placed");
    let other = if believed != actual {
        believed.clone()
    } else {
        history
            .iter()
            .rev()
            .find(|c| **c != actual)
            .map(|c| c.to_string())
            .ok_or_else(|| Error::InvalidStory(format!("{}: the {item} never moves", story.id())))?
    };
    let options = labelled([other, actual.to_string()])?;
    let gold = options.iter().find(|o| o.text == believed).expect("belief is an option").label.clone();
    Ok(ToMiInstance {
        id: story.id().to_string(),
        family: story.family(),
        observations: story.sentences(),
        question: format!("Where will {who} look for the {item}?"),
        options,
        gold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::story::{default_lexicon, split_sentences};

    pub(crate) fn story(text: &str, family: Family) -> Story {
        Story::parse("t", family, &split_sentences(text), default_lexicon()).unwrap()
    }

    pub(crate) const OWEN_NATHAN: &str = "Owen entered the lounge. Nathan entered the lounge. The suit is in the cupboard. \
        Owen exited the lounge. Nathan moved the suit to the basket. Nathan exited the lounge. \
        Owen and Nathan plan to use the suit soon.";

    fn texts(inst: &T4DInstance) -> Vec<String> {
        inst.options.iter().map(|o| format!("{}. {}", o.label, o.text)).collect()
    }

    #[test]
    fn owen_nathan_instance() {
        let inst = convert_to_t4d(&story(OWEN_NATHAN, Family::TomiFalseBelief)).unwrap();
        assert_eq!(texts(&inst), ["A. Owen", "B. Nathan", "C. None of the above"]);
        assert_eq!(inst.gold, "A");
        assert_eq!(inst.question, T4D_QUESTION);
        assert!(inst.hints.is_empty());
    }

    #[test]
    fn carrot_instance() {
        let s = story(
            "Jacob entered the bathroom. Emma entered the bathroom. The carrot is in the basket. \
             Aiden entered the back yard. Emma exited the bathroom. Jacob moved the carrot to the pantry. \
             Jacob and Emma plan to use the carrot soon.",
            Family::TomiFalseBelief,
        );
        let inst = convert_to_t4d(&s).unwrap();
        assert_eq!(texts(&inst), ["A. Jacob", "B. Emma", "C. Aiden", "D. None of the above"]);
        assert_eq!(inst.gold, "B");
    }

    #[test]
    fn tomi_instances() {
        let t = make_tomi_instance(&story(OWEN_NATHAN, Family::TomiFalseBelief)).unwrap();
        assert_eq!(t.question, "Where will Owen look for the suit?");
        assert_eq!(t.options[0].text, "cupboard");
        assert_eq!(t.options[1].text, "basket");
        assert_eq!(t.gold, "A");
        let tb = story(
            "Owen entered the lounge. Nathan entered the lounge. The suit is in the cupboard. \
             Nathan moved the suit to the basket. Owen exited the lounge. \
             Nathan and Owen plan to use the suit soon.",
            Family::TomiTrueBelief,
        );
        let t = make_tomi_instance(&tb).unwrap();
        assert_eq!(t.question, "Where will Owen look for the suit?");
        assert_eq!(t.options[t.labels_index(&t.gold)].text, "basket");
    }

    impl ToMiInstance {
        fn labels_index(&self, label: &str) -> usize {
            self.options.iter().position(|o| o.label == label).unwrap()
        }
    }

    #[test]
    fn shuffled_order_keeps_gold_sound() {
        let s = story(OWEN_NATHAN, Family::TomiFalseBelief);
        for seed in 0..20 {
            let inst = convert_with_order(&s, &OptionOrder::Shuffled(seed)).unwrap();
            assert_eq!(inst.gold_text(), "Owen");
            assert_eq!(inst.options.last().unwrap().text, NONE_OF_THE_ABOVE);
        }
    }

    #[test]
    fn explicit_order_must_match_characters() {
        let s = story(OWEN_NATHAN, Family::TomiFalseBelief);
        let inst =
            convert_with_order(&s, &OptionOrder::Explicit(vec!["Nathan".into(), "Owen".into()])).unwrap();
        assert_eq!(texts(&inst), ["A. Nathan", "B. Owen", "C. None of the above"]);
        assert_eq!(inst.gold, "B");
        let bad = convert_with_order(&s, &OptionOrder::Explicit(vec!["Nathan".into()]));
        assert!(matches!(bad, Err(Error::Record(_))));
    }

    #[test]
    fn instance_record_round_trip() {
        let inst = convert_to_t4d(&story(OWEN_NATHAN, Family::TomiFalseBelief)).unwrap();
        let line = serde_json::to_string(&inst).unwrap();
        assert!(line.contains("\"family\":\"tomi-false-belief\""));
        let back: T4DInstance = serde_json::from_str(&line).unwrap();
        assert_eq!(back, inst);
    }
}
