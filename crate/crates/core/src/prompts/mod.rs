//! Prompt builders for every strategy, and response parsers.

mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::convert::{AnswerOption, T4DInstance, NONE_OF_THE_ABOVE};
use crate::error::{Error, Result};
use crate::gen::Dice;
use crate::story::vocab::NOISE_ROOMS;

pub use parse::{
    extract_final_answer, parse_far_structure, CharacterForesight, Challenge, FarStructure, ParseMethod,
    ParsedAnswer,
};

pub const PREAMBLE: &str =
    "You are a clever and helpful AI assistant. Your goal is to help human users around you.";
pub const OBSERVATIONS_INTRO: &str = "One day you have the following observations that follow chronological order:";
pub const COT_INSTRUCTION: &str = "Answer the following multiple-choice question by reasoning step-by-step.";
pub const TOT_INSTRUCTION: [&str; 6] = [
    "Imagine three different experts are answering this question.",
    "All experts will write down 1 step of their thinking,",
    "then share it with the group.",
    "Then all experts will go on to the next step, etc.",
    "If any expert realises they're wrong at any point then they leave.",
    "The question is...",
];
pub const SELF_ASK_INSTRUCTION: &str = "I will answer by first coming up and answering useful follow up questions and then reason slowly by considering all the follow up questions and answers, and finally come up with a final answer.";
pub const FORMAT_HEADER: &str = "Format answer as follows:";
pub const FAR_FORESEE: &str =
    "I will first think about likely future events and identify potential challenges that each individual might be facing.";
pub const FAR_REFLECT: &str =
    "Then I will reflect on whether I can help them with the challenges if I provide them with information now.";
pub const FAR_DECIDE: &str = "Finally, I will choose a final answer based on the reasoning.";
pub const CAN_HELP_KEY: &str = "Can I help with it now by providing information?";
pub const ANSWER_CUE: &str = "Answer:";

/// Activities used for spurious foresight; none involves an item or container.
const NOISE_ACTIVITIES: [&str; 3] = ["sleep", "cook", "read"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// No reasoning scaffold.
    Base,
    CoT,
    ToT,
    SelfAsk,
    FaR,
    FaRNoForesee,
    FaRNoReflect,
    FaRNoisyForesee,
    FewShot { k: usize },
}

impl Strategy {
    pub const DEFAULT_FEW_SHOT_K: usize = 3;

    pub fn name(self) -> String {
        match self {
            Strategy::Base => "base".into(),
            Strategy::CoT => "cot".into(),
            Strategy::ToT => "tot".into(),
            Strategy::SelfAsk => "selfask".into(),
            Strategy::FaR => "far".into(),
            Strategy::FaRNoForesee => "far-noforesee".into(),
            Strategy::FaRNoReflect => "far-noreflect".into(),
            Strategy::FaRNoisyForesee => "far-noisyforesee".into(),
            Strategy::FewShot { k } if k == Self::DEFAULT_FEW_SHOT_K => "fewshot".into(),
            Strategy::FewShot { k } => format!("fewshot:{k}"),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "base" => Strategy::Base,
            "cot" => Strategy::CoT,
            "tot" => Strategy::ToT,
            "selfask" | "self-ask" => Strategy::SelfAsk,
            "far" => Strategy::FaR,
            "far-noforesee" => Strategy::FaRNoForesee,
            "far-noreflect" => Strategy::FaRNoReflect,
            "far-noisyforesee" => Strategy::FaRNoisyForesee,
            "fewshot" | "few-shot" => Strategy::FewShot { k: Self::DEFAULT_FEW_SHOT_K },
            other => {
                let k = other
                    .strip_prefix("fewshot:")
                    .or_else(|| other.strip_prefix("few-shot:"))
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Error::UnknownStrategy(s.to_string()))?;
                Strategy::FewShot { k }
            }
        })
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub strategy: Strategy,
    pub instance_id: String,
    pub text: String,
    pub expected_answer_labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarAblation {
    NoForesee,
    NoReflect,
}

/// "End your answer with ..." for an instance with `n` options.
pub fn closing_instruction(n: usize) -> String {
    let alternatives = if n > 4 { "B or C or D or E" } else { "B or C or D" };
    format!("End your answer with 'Thus, the final answer is A (or {alternatives})'")
}

pub fn question_line(inst: &T4DInstance) -> String {
    let opts: Vec<String> = inst.options.iter().map(|o| format!("{}. {}", o.label, o.text)).collect();
    format!("{} Answer from the following options: {}.", inst.question, opts.join(" "))
}

pub fn answer_sentence(label: &str) -> String {
    format!("Thus, the final answer is {label}.")
}

fn story_block(inst: &T4DInstance) -> Vec<String> {
    vec![PREAMBLE.into(), OBSERVATIONS_INTRO.into(), inst.observation_text()]
}

fn finish(inst: &T4DInstance, strategy: Strategy, mut paragraphs: Vec<String>) -> PromptSpec {
    paragraphs.push(closing_instruction(inst.options.len()));
    paragraphs.push(ANSWER_CUE.into());
    PromptSpec {
        strategy,
        instance_id: inst.id.clone(),
        text: paragraphs.join("\n\n"),
        expected_answer_labels: inst.options.iter().map(|o| o.label.clone()).collect(),
    }
}

/// Options naming a single character (not "None of the above", not a
/// compound "X and Y" of two other options).
fn character_options(inst: &T4DInstance) -> Vec<&AnswerOption> {
    let texts: Vec<&str> = inst.options.iter().map(|o| o.text.as_str()).collect();
    inst.options
        .iter()
        .filter(|o| o.text != NONE_OF_THE_ABOVE)
        .filter(|o| {
            !o.text
                .split_once(" and ")
                .is_some_and(|(a, b)| texts.contains(&a) && texts.contains(&b))
        })
        .collect()
}

struct FarShape<'a> {
    foresee: bool,
    reflect: bool,
    /// Pre-filled "likely future actions" values, by option label.
    prefill: &'a [(String, String)],
}

fn far_paragraphs(inst: &T4DInstance, shape: &FarShape) -> Vec<String> {
    let mut intro = Vec::new();
    if shape.foresee {
        intro.push(FAR_FORESEE);
    }
    if shape.reflect {
        intro.push(FAR_REFLECT);
    }
    intro.push(FAR_DECIDE);

    let mut blocks = Vec::new();
    for opt in character_options(inst) {
        let mut lines = Vec::new();
        if shape.foresee {
            let key = format!("\"Character {}'s likely future actions\":", opt.label);
            match shape.prefill.iter().find(|(l, _)| *l == opt.label) {
                Some((_, value)) => lines.push(format!("  {key} \"{value}\"")),
                None => lines.push(format!("  {key}")),
            }
        }
        for n in 1..=3 {
            if shape.foresee {
                lines.push(format!("  \"Potential challenge {n}\":"));
            }
            if shape.reflect {
                lines.push(format!("  \"{CAN_HELP_KEY}\":"));
            }
        }
        if !lines.is_empty() {
            blocks.push(lines.join("\n"));
        }
    }
    blocks.push("  \"final reasoning considering all steps above\":\n  \"final answer\":".into());
    let format_block = format!("{{\n{}\n}}", blocks.join("\n\n"));

    let mut out = story_block(inst);
    out.push(question_line(inst));
    out.push(intro.join(" "));
    out.push(FORMAT_HEADER.into());
    out.push(format_block);
    out.push(ANSWER_CUE.into());
    out
}

fn far_prompt(inst: &T4DInstance, strategy: Strategy, shape: &FarShape) -> PromptSpec {
    finish(inst, strategy, far_paragraphs(inst, shape))
}

/// Builds the prompt for any strategy except noisy foresight (which needs a
/// seed) and few-shot (which needs exemplars).
pub fn build_prompt(inst: &T4DInstance, strategy: Strategy) -> Result<PromptSpec> {
    let paragraphs = match strategy {
        Strategy::Base => {
            let mut p = story_block(inst);
            p.push(question_line(inst));
            p
        }
        Strategy::CoT => {
            let mut p = story_block(inst);
            p.push(COT_INSTRUCTION.into());
            p.push(question_line(inst));
            p
        }
        Strategy::ToT => {
            let mut p = story_block(inst);
            p.extend(TOT_INSTRUCTION.iter().map(|s| s.to_string()));
            p.push(question_line(inst));
            p
        }
        Strategy::SelfAsk => {
            let mut p = story_block(inst);
            p.push(question_line(inst));
            p.push(SELF_ASK_INSTRUCTION.into());
            p.push(FORMAT_HEADER.into());
            p.push("Are follow up questions needed here: Yes.".into());
            for _ in 0..3 {
                p.push("Follow up:".into());
                p.push("Intermediate answer:".into());
            }
            p.push("Let's reason to get a final answer by considering all above follow up questions and answers:".into());
            p.push("So the final answer is:".into());
            p
        }
        Strategy::FaR => return Ok(far_prompt(inst, strategy, &FarShape { foresee: true, reflect: true, prefill: &[] })),
        Strategy::FaRNoForesee => return Ok(build_far_ablation(inst, FarAblation::NoForesee)),
        Strategy::FaRNoReflect => return Ok(build_far_ablation(inst, FarAblation::NoReflect)),
        Strategy::FaRNoisyForesee | Strategy::FewShot { .. } => {
            return Err(Error::UnknownStrategy(format!(
                "{strategy} is built with a dedicated function"
            )))
        }
    };
    Ok(finish(inst, strategy, paragraphs))
}

pub fn build_far_ablation(inst: &T4DInstance, variant: FarAblation) -> PromptSpec {
    let (shape, strategy) = match variant {
        FarAblation::NoForesee => {
            (FarShape { foresee: false, reflect: true, prefill: &[] }, Strategy::FaRNoForesee)
        }
        FarAblation::NoReflect => {
            (FarShape { foresee: true, reflect: false, prefill: &[] }, Strategy::FaRNoReflect)
        }
    };
    far_prompt(inst, strategy, &shape)
}

/// FaR scaffold with both foresee and reflect parts removed.
pub fn build_far_skeleton(inst: &T4DInstance) -> PromptSpec {
    far_prompt(inst, Strategy::FaR, &FarShape { foresee: false, reflect: false, prefill: &[] })
}

/// Spurious predictions, one per character option, keyed by option label.
pub fn noisy_predictions(inst: &T4DInstance, seed: u64) -> Vec<(String, String)> {
    let text = inst.observation_text();
    let rooms: Vec<&str> = NOISE_ROOMS.iter().copied().filter(|r| !text.contains(r)).collect();
    let mut dice = Dice::new(seed);
    character_options(inst)
        .into_iter()
        .enumerate()
        .map(|(k, opt)| {
            let prediction = if rooms.is_empty() {
                format!("{} will leave the house.", opt.text)
            } else {
                // The first character always gets the bedtime-style prediction.
                let activity = if k == 0 { 0 } else { dice.below(NOISE_ACTIVITIES.len() + 1) };
                let room = dice.pick(&rooms);
                match NOISE_ACTIVITIES.get(activity) {
                    Some(a) => format!("{} will enter the {room} to {a}.", opt.text),
                    None => format!("{} will leave the house.", opt.text),
                }
            };
            (opt.label.clone(), prediction)
        })
        .collect()
}

/// FaR prompt whose future-action slots are pre-filled with predictions the
/// observations do not support.
pub fn inject_noisy_foresight(inst: &T4DInstance, seed: u64) -> PromptSpec {
    let prefill = noisy_predictions(inst, seed);
    far_prompt(inst, Strategy::FaRNoisyForesee, &FarShape { foresee: true, reflect: true, prefill: &prefill })
}

/// Solved exemplars for few-shot prompting, checked to be disjoint from the
/// evaluation set.
#[derive(Debug, Clone)]
pub struct ExemplarPool {
    exemplars: Vec<T4DInstance>,
}

impl ExemplarPool {
    pub fn new<'a, I>(exemplars: Vec<T4DInstance>, eval_ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let ids: BTreeSet<&str> = exemplars.iter().map(|e| e.id.as_str()).collect();
        for id in eval_ids {
            if ids.contains(id) {
                return Err(Error::ExemplarOverlap(id.to_string()));
            }
        }
        Ok(Self { exemplars })
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }
}

fn exemplar_text(ex: &T4DInstance) -> String {
    [
        OBSERVATIONS_INTRO.to_string(),
        ex.observation_text(),
        question_line(ex),
        format!("{ANSWER_CUE} {}", answer_sentence(&ex.gold)),
    ]
    .join("\n\n")
}

/// Prepends the first `k` exemplars of the pool to the base prompt.
pub fn build_few_shot(inst: &T4DInstance, k: usize, pool: &ExemplarPool) -> Result<PromptSpec> {
    if k == 0 {
        return Err(Error::Config("few-shot k must be at least 1".into()));
    }
    if pool.exemplars.iter().any(|e| e.id == inst.id) {
        return Err(Error::ExemplarOverlap(inst.id.clone()));
    }
    if pool.len() < k {
        return Err(Error::Config(format!("few-shot needs {k} exemplars, pool has {}", pool.len())));
    }
    let mut p = vec![PREAMBLE.to_string()];
    p.extend(pool.exemplars[..k].iter().map(exemplar_text));
    p.push(OBSERVATIONS_INTRO.into());
    p.push(inst.observation_text());
    p.push(question_line(inst));
    Ok(finish(inst, Strategy::FewShot { k }, p))
}

/// Dispatches every strategy. `seed` feeds noisy foresight; `pool` is needed
/// for few-shot only.
pub fn render(inst: &T4DInstance, strategy: Strategy, seed: u64, pool: Option<&ExemplarPool>) -> Result<PromptSpec> {
    match strategy {
        Strategy::FaRNoisyForesee => Ok(inject_noisy_foresight(inst, seed)),
        Strategy::FewShot { k } => {
            let pool = pool.ok_or_else(|| Error::Config("few-shot needs an exemplar pool".into()))?;
            build_few_shot(inst, k, pool)
        }
        other => build_prompt(inst, other),
    }
}
