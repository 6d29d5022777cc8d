//! Answer extraction and FaR response parsing.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::convert::AnswerOption;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseMethod {
    CanonicalPattern,
    FallbackLastLabel,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    /// `None` means unparseable.
    pub label: Option<String>,
    pub method: ParseMethod,
}

impl ParsedAnswer {
    pub fn unparseable() -> Self {
        ParsedAnswer { label: None, method: ParseMethod::None }
    }

    pub fn is_unparseable(&self) -> bool {
        self.label.is_none()
    }
}

fn canonical_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i:the\s+final\s+answer\s+is)[\s*:"'“”‘’(\[]*([A-E])\b([*"'“”’)\]]*)"#).unwrap()
    })
}

fn alternatives_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*\(\s*or\b").unwrap())
}

/// Label chosen by a model response.
///
/// The last "the final answer is L" wins (case-insensitive phrase, upper-case
/// label, emphasis and quotes tolerated). A label followed by "(or" is the
/// instruction itself and is skipped. Without a canonical sentence the last
/// "L. <option text>" counts, ignoring any verbatim copy of the option list.
pub fn extract_final_answer(text: &str, options: &[AnswerOption]) -> ParsedAnswer {
    let valid = |l: &str| options.iter().any(|o| o.label == l);
    let canonical = canonical_re()
        .captures_iter(text)
        .filter(|c| valid(&c[1]))
        .filter(|c| !alternatives_re().is_match(&text[c.get(0).unwrap().end()..]))
        .last();
    if let Some(c) = canonical {
        return ParsedAnswer { label: Some(c[1].to_string()), method: ParseMethod::CanonicalPattern };
    }
    // An echoed option list is not a choice.
    let listing: Vec<String> = options.iter().map(|o| format!("{}. {}", o.label, o.text)).collect();
    let text = &text.replace(&listing.join(" "), "");
    let mut best: Option<(usize, &str)> = None;
    for o in options {
        let pattern = format!(r"(?:^|[^A-Za-z0-9]){}\.\s*{}\b", regex::escape(&o.label), regex::escape(&o.text));
        let Ok(re) = Regex::new(&pattern) else { continue };
        if let Some(m) = re.find_iter(text).last() {
            if best.is_none_or(|(at, _)| m.start() > at) {
                best = Some((m.start(), o.label.as_str()));
            }
        }
    }
    match best {
        Some((_, label)) => ParsedAnswer { label: Some(label.to_string()), method: ParseMethod::FallbackLastLabel },
        None => ParsedAnswer::unparseable(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Challenge {
    pub challenge: String,
    pub can_help: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CharacterForesight {
    pub future_actions: String,
    pub challenges: Vec<Challenge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FarStructure {
    pub characters: BTreeMap<String, CharacterForesight>,
    pub final_reasoning: String,
    pub final_answer: Option<String>,
}

enum Slot {
    Nothing,
    Future(String),
    Challenge(String),
    CanHelp(String),
    Reasoning,
    Answer,
}

fn key_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?i)^[\s\-*"'{,]*(?:(.+?)'s\s+likely\s+future\s+actions|(potential\s+challenge\s*\d*)|(can\s+i\s+help[^"':]*)|(final\s+reasoning[^"':]*)|(final\s+answer))["'*\s]*:(.*)$"#,
        )
        .unwrap()
    })
}

fn clean(value: &str) -> String {
    value
        .trim()
        .trim_end_matches(',')
        .trim()
        .trim_matches(|c| c == '"' || c == '\'' || c == '*')
        .trim()
        .to_string()
}

fn append(target: &mut String, more: &str) {
    let more = clean(more);
    if more.is_empty() {
        return;
    }
    if !target.is_empty() {
        target.push(' ');
    }
    target.push_str(&more);
}

/// Best-effort key/value recovery from a FaR-style response. Missing keys
/// are simply absent; a response with no keys becomes the final reasoning.
pub fn parse_far_structure(text: &str) -> FarStructure {
    let mut out = FarStructure::default();
    let mut slot = Slot::Nothing;
    let mut current: Option<String> = None;
    let mut answer = String::new();
    let mut saw_key = false;

    for line in text.lines() {
        let Some(c) = key_re().captures(line) else {
            let trimmed = line.trim();
            if trimmed == "{" {
                continue;
            }
            if trimmed == "}" {
                slot = Slot::Nothing;
                continue;
            }
            match &slot {
                Slot::Future(name) => append(&mut out.characters.get_mut(name).unwrap().future_actions, line),
                Slot::Challenge(name) => {
                    let ch = out.characters.get_mut(name).unwrap().challenges.last_mut().unwrap();
                    append(&mut ch.challenge, line);
                }
                Slot::CanHelp(name) => {
                    let ch = out.characters.get_mut(name).unwrap().challenges.last_mut().unwrap();
                    append(ch.can_help.get_or_insert_with(String::new), line);
                }
                Slot::Reasoning => append(&mut out.final_reasoning, line),
                Slot::Answer => append(&mut answer, line),
                Slot::Nothing => {}
            }
            continue;
        };
        saw_key = true;
        let value = c.get(6).map_or("", |m| m.as_str());
        if let Some(name) = c.get(1) {
            let name = clean(name.as_str());
            let entry = out.characters.entry(name.clone()).or_default();
            append(&mut entry.future_actions, value);
            current = Some(name.clone());
            slot = Slot::Future(name);
        } else if c.get(2).is_some() || c.get(3).is_some() {
            let Some(name) = current.clone() else {
                slot = Slot::Nothing;
                continue;
            };
            let entry = out.characters.get_mut(&name).unwrap();
            if c.get(2).is_some() {
                entry.challenges.push(Challenge { challenge: clean(value), can_help: None });
                slot = Slot::Challenge(name);
            } else {
                if entry.challenges.last().is_none_or(|ch| ch.can_help.is_some()) {
                    entry.challenges.push(Challenge::default());
                }
                entry.challenges.last_mut().unwrap().can_help = Some(clean(value));
                slot = Slot::CanHelp(name);
            }
        } else if c.get(4).is_some() {
            append(&mut out.final_reasoning, value);
            slot = Slot::Reasoning;
        } else {
            append(&mut answer, value);
            slot = Slot::Answer;
        }
    }
    if !saw_key {
        out.final_reasoning = text.to_string();
    }
    if !answer.is_empty() {
        out.final_answer = Some(answer);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Vec<AnswerOption> {
        ["Jacob", "Emma", "Aiden", "None of the above"]
            .iter()
            .zip(["A", "B", "C", "D"])
            .map(|(t, l)| AnswerOption { label: l.into(), text: t.to_string() })
            .collect()
    }

    #[test]
    fn canonical_sentence() {
        let a = extract_final_answer("blah. Thus, the final answer is B.", &opts());
        assert_eq!(a.label.as_deref(), Some("B"));
        assert_eq!(a.method, ParseMethod::CanonicalPattern);
        let a = extract_final_answer("The final answer is A. Wait. **Thus, the final answer is: \"C\"**", &opts());
        assert_eq!(a.label.as_deref(), Some("C"));
    }

    #[test]
    fn instruction_does_not_self_match() {
        let a = extract_final_answer("End your answer with 'Thus, the final answer is A (or B or C or D)'", &opts());
        assert!(a.is_unparseable());
    }

    #[test]
    fn fallback_and_unparseable() {
        let a = extract_final_answer("Emma is lost... so I choose C. Aiden", &opts());
        assert_eq!(a.label.as_deref(), Some("C"));
        assert_eq!(a.method, ParseMethod::FallbackLastLabel);
        assert!(extract_final_answer("", &opts()).is_unparseable());
        let echo = "Options: A. Jacob B. Emma C. Aiden D. None of the above. Hmm.";
        assert!(extract_final_answer(echo, &opts()).is_unparseable());
        // "E" is not an option here.
        assert!(extract_final_answer("the final answer is E", &opts()).is_unparseable());
        // A name starting with an option letter is not a label.
        assert!(extract_final_answer("the final answer is Avery", &opts()).is_unparseable());
    }

    #[test]
    fn far_structure() {
        let text = r#"{
  "Character A's likely future actions": "Jacob will use the carrot.",
  "Potential challenge 1": "none",
  "Can I help with it now by providing information?": "no",
  "Character B's likely future actions": "Emma will look in the basket.",
  "Potential challenge 1": "the carrot is not there",
  "Can I help with it now by providing information?": "yes, tell her",
  "final reasoning considering all steps above": "Emma misses the move.",
  "final answer": "B"
}
Thus, the final answer is B."#;
        let s = parse_far_structure(text);
        assert_eq!(s.characters.len(), 2);
        let b = &s.characters["Character B"];
        assert_eq!(b.future_actions, "Emma will look in the basket.");
        assert_eq!(b.challenges[0].can_help.as_deref(), Some("yes, tell her"));
        assert!(s.final_reasoning.starts_with("Emma misses the move."));
        assert_eq!(s.final_answer.as_deref(), Some("B"));
        let free = parse_far_structure("I think Emma.");
        assert!(free.characters.is_empty());
        assert_eq!(free.final_reasoning, "I think Emma.");
    }
}
