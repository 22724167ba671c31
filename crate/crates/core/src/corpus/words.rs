use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::font::renderable;
use crate::table::{is_diacritic, Language};
use crate::Error;

/// Maximal runs of alphabetic characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty())
}

/// A word usable for `lang`: renderable, at least one of `lang`'s
/// diacritics, and no diacritic from outside `lang`'s row.
pub fn is_pure_word(word: &str, lang: Language) -> bool {
    let mut has_own = false;
    for ch in word.chars() {
        if !renderable(ch) {
            return false;
        }
        if is_diacritic(ch) {
            if !lang.has_diacritic(ch) {
                return false;
            }
            has_own = true;
        }
    }
    has_own
}

/// Samples `n` qualifying word occurrences from `corpus_text` without
/// replacement, deterministically for a given `seed`.
pub fn select_words(
    corpus_text: &str,
    lang: Language,
    n: usize,
    seed: u64,
) -> Result<Vec<String>, Error> {
    if corpus_text.trim().is_empty() {
        return Err(Error::Input("corpus text is empty".to_string()));
    }
    let mut pool: Vec<&str> = tokenize(corpus_text)
        .filter(|w| is_pure_word(w, lang))
        .collect();
    if pool.len() < n {
        return Err(Error::InsufficientWords {
            language: lang,
            wanted: n,
            found: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = pool.partial_shuffle(&mut rng, n);
    Ok(chosen.iter().map(|w| w.to_string()).collect())
}
