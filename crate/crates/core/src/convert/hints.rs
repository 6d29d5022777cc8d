//! Oracle hint augmentations: question decomposition, theory-of-mind
//! inference, and explicit common-sense assumptions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AppliedHint, T4DInstance};
use crate::error::{Error, Result};
use crate::oracle::{extract_roles, final_state};
use crate::story::{Family, Story};

pub const QD_HINT: &str = "HINT: this information is about an item's location.";
pub const CSA_ASSUMPTION: &str = "Characters do not leave room unless explicitly stated.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HintKind {
    QD,
    ToM,
    CSA,
}

impl HintKind {
    pub const ALL: [HintKind; 3] = [HintKind::QD, HintKind::ToM, HintKind::CSA];

    pub fn as_str(self) -> &'static str {
        match self {
            HintKind::QD => "QD",
            HintKind::ToM => "ToM",
            HintKind::CSA => "CSA",
        }
    }
}

impl fmt::Display for HintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HintKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qd" => Ok(HintKind::QD),
            "tom" => Ok(HintKind::ToM),
            "csa" => Ok(HintKind::CSA),
            other => Err(Error::Config(format!("unknown hint {other:?}"))),
        }
    }
}

/// Which intent holders get a "will look for" line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomHintScope {
    #[default]
    FalseBeliever,
    All,
}

impl FromStr for TomHintScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "false-believer" => Ok(TomHintScope::FalseBeliever),
            "all" => Ok(TomHintScope::All),
            other => Err(Error::Config(format!("unknown ToM hint scope {other:?}"))),
        }
    }
}

fn tom_sentences(story: &Story, scope: TomHintScope) -> Result<Vec<String>> {
    let roles = extract_roles(story)?;
    let (_, beliefs) = final_state(story)?;
    let item = &roles.target_item;
    let mut who: Vec<&String> = match scope {
        TomHintScope::FalseBeliever => roles
            .intent_holders
            .iter()
            .filter(|c| roles.false_believers.contains(*c))
            .collect(),
        TomHintScope::All => roles.intent_holders.iter().collect(),
    };
    // Nobody is misinformed: state everyone's (correct) belief instead.
    if who.is_empty() {
        who = roles.intent_holders.iter().collect();
    }
    Ok(who
        .into_iter()
        .filter_map(|c| {
            beliefs
                .belief(c, item)
                .map(|container| format!("{c} will look for the {item} in the {container}."))
        })
        .collect())
}

fn csa_sentences(story: &Story) -> Vec<String> {
    let room_of = &story.meta().room_of;
    let containers = story.containers();
    let mut rooms: Vec<&String> = Vec::new();
    for c in &containers {
        if let Some(r) = room_of.get(c) {
            if !rooms.contains(&r) {
                rooms.push(r);
            }
        }
    }
    let mut out: Vec<String> = rooms
        .into_iter()
        .map(|room| {
            let here: Vec<String> = containers
                .iter()
                .filter(|c| room_of.get(*c) == Some(room))
                .map(|c| format!("the {c}"))
                .collect();
            let verb = if here.len() == 1 { "is" } else { "are" };
            let mut list = crate::story::join_names(&here);
            list.replace_range(..1, "T");
            format!("{list} {verb} in the {room}.")
        })
        .collect();
    out.push(CSA_ASSUMPTION.to_string());
    out
}

/// Appends a hint to an instance. Options and gold are never touched.
pub fn augment_with_hint(
    inst: &T4DInstance,
    story: &Story,
    kind: HintKind,
    scope: TomHintScope,
) -> Result<T4DInstance> {
    if inst.hints.iter().any(|h| h.kind == kind) {
        return Err(Error::DuplicateHint(kind.to_string()));
    }
    if inst.family == Family::FauxPasExternal || story.id() != inst.id {
        return Err(Error::HintUnavailable(kind.to_string()));
    }
    let mut out = inst.clone();
    let added = match kind {
        HintKind::QD => {
            out.question = format!("{} {QD_HINT}", out.question);
            vec![QD_HINT.to_string()]
        }
        HintKind::ToM => tom_sentences(story, scope)?,
        HintKind::CSA => csa_sentences(story),
    };
    if kind != HintKind::QD {
        out.observations.extend(added.iter().cloned());
    }
    out.hints.push(AppliedHint { kind, added });
    Ok(out)
}

/// Removes every applied hint, recovering the un-augmented instance.
pub fn strip_hints(inst: &T4DInstance) -> T4DInstance {
    let mut out = inst.clone();
    for hint in inst.hints.iter().rev() {
        match hint.kind {
            HintKind::QD => {
                for a in &hint.added {
                    if let Some(q) = out.question.strip_suffix(&format!(" {a}")) {
                        out.question = q.to_string();
                    }
                }
            }
            HintKind::ToM | HintKind::CSA => {
                for a in hint.added.iter().rev() {
                    if let Some(pos) = out.observations.iter().rposition(|o| o == a) {
                        out.observations.remove(pos);
                    }
                }
            }
        }
    }
    out.hints.clear();
    out
}
