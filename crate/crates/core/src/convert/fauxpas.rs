//! Free-text social stories that cannot be simulated; the character list and
//! gold answer come from a manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{labelled, split_item, T4DInstance, NONE_OF_THE_ABOVE};
use crate::error::{Error, Result};
use crate::story::Family;

pub const FAUX_PAS_QUESTION: &str =
    "Based on the above information, who would you like to help by providing emotional support?";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FauxPasEntry {
    /// Story file, relative to the manifest.
    pub file: String,
    pub characters: Vec<String>,
    /// Character name or "None of the above".
    pub gold: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FauxPasManifest {
    #[serde(default, rename = "story")]
    pub stories: Vec<FauxPasEntry>,
}

/// Wraps a story verbatim. Options are the listed characters plus
/// "None of the above".
pub fn convert_faux_pas(id: &str, text: &str, characters: &[String], gold: Option<&str>) -> Result<T4DInstance> {
    let gold = gold.ok_or_else(|| Error::MissingGold(id.to_string()))?;
    let mut texts: Vec<String> = characters.to_vec();
    texts.push(NONE_OF_THE_ABOVE.to_string());
    let options = labelled(texts)?;
    let gold = options
        .iter()
        .find(|o| o.text == gold)
        .map(|o| o.label.clone())
        .ok_or_else(|| Error::GoldNotRepresentable(gold.to_string()))?;
    Ok(T4DInstance {
        id: id.to_string(),
        family: Family::FauxPasExternal,
        observations: vec![text.trim().to_string()],
        question: FAUX_PAS_QUESTION.to_string(),
        options,
        gold,
        hints: Vec::new(),
    })
}

/// Loads every story a manifest lists. Ids are the file stems. A question
/// and option list at the end of a file are dropped; the manifest decides.
pub fn load_faux_pas(manifest: &FauxPasManifest, base: &Path) -> Result<Vec<T4DInstance>> {
    manifest
        .stories
        .iter()
        .map(|e| {
            let path = base.join(&e.file);
            let text = fs::read_to_string(&path)
                .map_err(|err| Error::Record(format!("{}: {err}", path.display())))?;
            let id = Path::new(&e.file)
                .file_stem()
                .map_or_else(|| e.file.clone(), |s| s.to_string_lossy().into_owned());
            let story = split_item(&text)?.story;
            convert_faux_pas(&format!("faux-pas-{id}"), &story, &e.characters, e.gold.as_deref())
        })
        .collect()
}
