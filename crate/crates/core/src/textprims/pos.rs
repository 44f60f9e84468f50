use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::is_stopword;

pub const TAGGER_VERSION: &str = "lexicon-suffix-v1";

static LEXICON_RAW: &str = include_str!("../../data/pos_lexicon.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl PosTag {
    fn parse(s: &str) -> Option<PosTag> {
        match s.trim() {
            "noun" => Some(PosTag::Noun),
            "verb" => Some(PosTag::Verb),
            "adjective" => Some(PosTag::Adjective),
            "adverb" => Some(PosTag::Adverb),
            "other" => Some(PosTag::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: String,
    pub tag: PosTag,
}

/// Token → tag table read from `token<TAB>tag` lines.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, PosTag>,
}

impl PosLexicon {
    pub fn parse(text: &str) -> PosLexicon {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let (tok, tag) = l.split_once('\t')?;
                Some((tok.trim().to_lowercase(), PosTag::parse(tag)?))
            })
            .collect();
        PosLexicon { entries }
    }

    pub fn bundled() -> &'static PosLexicon {
        static LEX: OnceLock<PosLexicon> = OnceLock::new();
        LEX.get_or_init(|| PosLexicon::parse(LEXICON_RAW))
    }

    pub fn get(&self, token: &str) -> Option<PosTag> {
        self.entries.get(token).copied()
    }

    pub fn tag(&self, token: &str) -> PosTag {
        if is_stopword(token) {
            return PosTag::Other;
        }
        if let Some(tag) = self.get(token) {
            return tag;
        }
        if token.len() > 3 && token.ends_with("ly") {
            PosTag::Adverb
        } else if (token.len() > 4 && token.ends_with("ing")) || (token.len() > 3 && token.ends_with("ed")) {
            PosTag::Verb
        } else if ["ous", "ful", "ive"].iter().any(|s| token.len() > 4 && token.ends_with(s)) {
            PosTag::Adjective
        } else {
            PosTag::Noun
        }
    }
}

/// Tags with the bundled lexicon.
pub fn pos_tag(tokens: &[String]) -> Vec<TaggedToken> {
    let lex = PosLexicon::bundled();
    tokens
        .iter()
        .map(|t| TaggedToken {
            token: t.clone(),
            tag: lex.tag(t),
        })
        .collect()
}
