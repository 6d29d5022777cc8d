//! Ingestion of externally written items: story text followed by an
//! optional question and an "Answer from the following options:" line.

use regex::Regex;
use std::sync::OnceLock;

use super::{convert_with_order, OptionOrder, T4DInstance, T4D_QUESTION};
use crate::error::{Error, Result};
use crate::oracle;
use crate::story::{parse_primitives, split_sentences, Family, Lexicon, Primitive, Story};

const OPTIONS_MARKER: &str = "Answer from the following options:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemParts {
    pub story: String,
    pub question: Option<String>,
    /// Option texts in the order given, including "None of the above".
    pub options: Option<Vec<String>>,
}

fn option_label_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|\s)([A-E])\.\s+").unwrap())
}

fn parse_options(line: &str) -> Result<Vec<String>> {
    let marks: Vec<(usize, usize, &str)> = option_label_re()
        .captures_iter(line)
        .map(|c| {
            let whole = c.get(0).unwrap();
            (whole.start(), whole.end(), c.get(1).unwrap().as_str())
        })
        .collect();
    let mut out = Vec::new();
    for (k, (_, end, label)) in marks.iter().enumerate() {
        if *label != super::LABELS[k] {
            return Err(Error::Record(format!("option labels out of order in {line:?}")));
        }
        let stop = marks.get(k + 1).map_or(line.len(), |m| m.0);
        let text = line[*end..stop].trim().trim_end_matches('.').trim();
        out.push(text.to_string());
    }
    if out.is_empty() {
        return Err(Error::Record(format!("no options in {line:?}")));
    }
    Ok(out)
}

/// Splits an item into story text, question and option list.
pub fn split_item(text: &str) -> Result<ItemParts> {
    let (body, options) = match text.find(OPTIONS_MARKER) {
        Some(at) => (&text[..at], Some(parse_options(&text[at + OPTIONS_MARKER.len()..])?)),
        None => (text, None),
    };
    let body = body.trim_end();
    let (story, question) = match body.strip_suffix('?') {
        Some(_) => {
            let start = body[..body.len() - 1]
                .rfind(['.', '!', '?', '\n', '…'])
                .map_or(0, |i| i + body[i..].chars().next().unwrap().len_utf8());
            (&body[..start], Some(body[start..].trim().to_string()))
        }
        None => (body, None),
    };
    Ok(ItemParts { story: story.trim().to_string(), question, options })
}

/// Converts an item written in the story grammar, keeping the option order
/// it lists (if any).
pub fn convert_item(id: &str, family: Family, text: &str, lexicon: &Lexicon) -> Result<T4DInstance> {
    if family == Family::FauxPasExternal {
        return Err(Error::Config("free-text items go through convert_faux_pas".into()));
    }
    let parts = split_item(text)?;
    if let Some(q) = &parts.question {
        if q != T4D_QUESTION {
            return Err(Error::Record(format!("{id}: unexpected question {q:?}")));
        }
    }
    let story = Story::parse(id, family, &split_sentences(&parts.story), lexicon)?;
    let order = parts.options.map_or(OptionOrder::FirstMention, OptionOrder::Explicit);
    convert_with_order(&story, &order)
}

fn where_will_look(question: &str) -> Option<(&str, &str)> {
    let rest = question.trim().strip_prefix("Where will ")?.strip_suffix('?')?;
    rest.split_once(" look for the ")
}

/// Builds a story from a plain inference-question item ("Where will X look
/// for the Y?") by appending the intent sentence: X together with the last
/// mover of Y, in order of first mention.
pub fn ingest_raw_tomi(id: &str, sentences: &[String], question: &str, lexicon: &Lexicon) -> Result<Story> {
    let (who, item) = where_will_look(question)
        .ok_or_else(|| Error::Record(format!("{id}: not an inference question: {question:?}")))?;
    let mut primitives = parse_primitives(sentences, lexicon)?;
    let mover = primitives.iter().rev().find_map(|p| match p {
        Primitive::MoveItem { character, item: i, .. } if i == item => Some(character.clone()),
        _ => None,
    });
    let probe_intent = Primitive::Intent { characters: vec![who.to_string()], item: item.to_string() };
    let mut probe = primitives.clone();
    probe.push(probe_intent);
    let probe = Story::new(id, Family::TomiFalseBelief, 0, probe)?;
    let family = if oracle::gold_t4d_answer(&probe)?.is_empty() {
        Family::TomiTrueBelief
    } else {
        Family::TomiFalseBelief
    };
    let holders: Vec<String> = probe
        .characters()
        .into_iter()
        .filter(|c| c == who || Some(c) == mover.as_ref())
        .collect();
    primitives.push(Primitive::Intent { characters: holders, item: item.to_string() });
    Story::new(id, family, 0, primitives)
}
