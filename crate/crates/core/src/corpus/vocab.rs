use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Sentence;
use crate::error::{Error, Result};

pub const UNK_WORD: usize = 0;
pub const ROOT_WORD: usize = 1;
pub const EOS_WORD: usize = 2;

pub const ROOT_POS: usize = 0;
pub const EOS_POS: usize = 1;
pub const UNK_POS: usize = 2;

/// Dense, stable word and POS ids with reserved slots for ROOT, the end
/// marker, and unknowns. Ids are assigned in first-occurrence order so a
/// vocabulary built from the same corpus is always identical.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    pos: Vec<String>,
    #[serde(skip)]
    word_index: HashMap<String, usize>,
    #[serde(skip)]
    pos_index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_sentences(sentences: &[Sentence]) -> Self {
        let mut v = Vocabulary {
            words: vec!["<unk>".into(), "<root>".into(), "<eos>".into()],
            pos: vec!["<root-pos>".into(), "<eos-pos>".into(), "<unk-pos>".into()],
            word_index: HashMap::new(),
            pos_index: HashMap::new(),
        };
        v.rebuild_indices();
        for s in sentences {
            for t in s.tokens() {
                if !v.word_index.contains_key(&t.form) {
                    v.word_index.insert(t.form.clone(), v.words.len());
                    v.words.push(t.form.clone());
                }
                if !v.pos_index.contains_key(&t.pos) {
                    v.pos_index.insert(t.pos.clone(), v.pos.len());
                    v.pos.push(t.pos.clone());
                }
            }
        }
        v
    }

    /// Must be called after deserialization to restore the lookup maps.
    pub fn rebuild_indices(&mut self) {
        self.word_index = self
            .words
            .iter()
            .enumerate()
            .skip(3)
            .map(|(i, w)| (w.clone(), i))
            .collect();
        self.pos_index = self
            .pos
            .iter()
            .enumerate()
            .skip(3)
            .map(|(i, p)| (p.clone(), i))
            .collect();
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_pos(&self) -> usize {
        self.pos.len()
    }

    pub fn word_id(&self, form: &str) -> usize {
        self.word_index.get(form).copied().unwrap_or(UNK_WORD)
    }

    pub fn word_id_exact(&self, form: &str) -> Option<usize> {
        self.word_index.get(form).copied()
    }

    pub fn pos_id(&self, pos: &str) -> usize {
        self.pos_index.get(pos).copied().unwrap_or(UNK_POS)
    }

    /// Ids for positions 0..=n+1 (ROOT, tokens, end marker).
    pub fn numericalize(&self, sentence: &Sentence) -> SentenceIds {
        let n = sentence.len();
        let mut word_ids = Vec::with_capacity(n + 2);
        let mut pos_ids = Vec::with_capacity(n + 2);
        word_ids.push(ROOT_WORD);
        pos_ids.push(ROOT_POS);
        for t in sentence.tokens() {
            word_ids.push(self.word_id(&t.form));
            pos_ids.push(self.pos_id(&t.pos));
        }
        word_ids.push(EOS_WORD);
        pos_ids.push(EOS_POS);
        SentenceIds { word_ids, pos_ids }
    }

    pub fn validate(&self) -> Result<()> {
        if self.words.len() < 3 || self.pos.len() < 3 {
            return Err(Error::invalid_input("vocabulary is missing reserved entries"));
        }
        Ok(())
    }
}

/// Numericalized sentence covering ROOT (position 0) through the end
/// marker (position n+1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceIds {
    pub word_ids: Vec<usize>,
    pub pos_ids: Vec<usize>,
}

impl SentenceIds {
    /// Real token count n (positions are n + 2).
    pub fn n(&self) -> usize {
        self.word_ids.len() - 2
    }
}
