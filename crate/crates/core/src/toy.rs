//! Synthetic projective treebank with deterministic head rules keyed on
//! POS: determiners and adjectives attach to their noun, subject and
//! object nouns to the verb, prepositions to the verb with their noun
//! attached under them, and the final period to the verb.

use rand::Rng;

use crate::corpus::{Sentence, Token};
use crate::neural::{streams, substream};

const NOUNS: &[&str] = &[
    "cat", "dog", "bird", "fish", "tree", "house", "river", "stone", "cloud", "road", "child",
    "book", "door", "lamp", "boat",
];
const VERBS: &[&str] = &[
    "sees", "finds", "follows", "paints", "moves", "lifts", "holds", "watches", "carries", "greets",
];
const ADJS: &[&str] = &[
    "big", "small", "red", "blue", "old", "new", "quiet", "bright", "heavy", "soft",
];
const DETS: &[&str] = &["the", "a", "this"];
const PREPS: &[&str] = &["under", "over", "near", "behind", "beside"];

struct Draft {
    forms: Vec<&'static str>,
    pos: Vec<&'static str>,
    // head rule resolved once positions are final
    heads: Vec<usize>,
}

impl Draft {
    fn push(&mut self, form: &'static str, pos: &'static str, head: usize) -> usize {
        self.forms.push(form);
        self.pos.push(pos);
        self.heads.push(head);
        self.forms.len()
    }
}

/// Noun phrase `[DT] JJ* NN`; everything attaches to the noun, the noun
/// to `head`. Returns the noun position.
fn push_np<R: Rng>(draft: &mut Draft, rng: &mut R, head: usize, max_adjs: usize, det_required: bool) -> usize {
    let det = det_required || rng.random_range(0..10) < 8;
    let n_adjs = rng.random_range(0..=max_adjs);
    let noun_pos = draft.forms.len() + usize::from(det) + n_adjs + 1;
    if det {
        draft.push(DETS[rng.random_range(0..DETS.len())], "DT", noun_pos);
    }
    for _ in 0..n_adjs {
        draft.push(ADJS[rng.random_range(0..ADJS.len())], "JJ", noun_pos);
    }
    draft.push(NOUNS[rng.random_range(0..NOUNS.len())], "NN", head);
    noun_pos
}

/// Generates `count` sentences with lengths in 5..=15.
pub fn generate(count: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = substream(seed, streams::DATA);
    (0..count)
        .map(|_| {
            let mut draft = Draft { forms: Vec::new(), pos: Vec::new(), heads: Vec::new() };
            // subject verb object [PP] . — the subject noun gets a
            // placeholder head, patched once the verb position is known
            let subj_noun = push_np(&mut draft, &mut rng, 0, 2, true);
            let verb_pos = draft.forms.len() + 1;
            draft.heads[subj_noun - 1] = verb_pos;
            let v = draft.push(VERBS[rng.random_range(0..VERBS.len())], "VB", 0);
            debug_assert_eq!(v, verb_pos);
            push_np(&mut draft, &mut rng, verb_pos, 2, false);
            if rng.random_range(0..10) < 5 && draft.forms.len() + 6 <= 14 {
                let p = draft.push(PREPS[rng.random_range(0..PREPS.len())], "IN", verb_pos);
                push_np(&mut draft, &mut rng, p, 1, false);
            }
            draft.push(".", ".", verb_pos);
            let tokens = draft
                .forms
                .iter()
                .zip(&draft.pos)
                .zip(&draft.heads)
                .map(|((f, p), &h)| Token::new(*f, *p, Some(h)).expect("valid token"))
                .collect();
            Sentence::new(tokens).expect("non-empty sentence")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::is_projective;

    #[test]
    fn sentences_are_projective_and_sized() {
        let sents = generate(300, 11);
        assert_eq!(sents.len(), 300);
        for s in &sents {
            assert!(s.len() >= 5 && s.len() <= 15, "length {}", s.len());
            let tree = s.gold_tree().unwrap();
            assert!(is_projective(&tree));
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(generate(50, 3), generate(50, 3));
        assert_ne!(generate(50, 3), generate(50, 4));
    }

    #[test]
    fn exactly_one_root_and_period_attaches_to_it() {
        for s in generate(100, 9) {
            let tree = s.gold_tree().unwrap();
            let roots: Vec<usize> = (1..=s.len()).filter(|&m| tree.head(m) == 0).collect();
            assert_eq!(roots.len(), 1);
            assert_eq!(s.token(roots[0]).pos, "VB");
            assert_eq!(tree.head(s.len()), roots[0]);
            assert_eq!(s.token(s.len()).pos, ".");
        }
    }
}
