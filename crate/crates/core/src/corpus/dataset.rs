//! Whole-dataset generation: annotated word images for detector training
//! and language-labelled test images for end-to-end evaluation.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::font::renderable;
use super::render::{
    line_width, render_test_image, render_word, test_max_lines, AnnotatedImage, RenderStyle,
    TEST_LINE_MAX_WIDTH,
};
use super::words::{select_words, tokenize};
use crate::table::{is_diacritic, Language};
use crate::Error;

/// Renders `n` qualifying words of `lang`, each with a freshly drawn style.
pub fn word_images(text: &str, lang: Language, n: usize, seed: u64) -> Result<Vec<AnnotatedImage>, Error> {
    let words = select_words(text, lang, n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5745_4f52_4453);
    words
        .iter()
        .map(|w| {
            let style = RenderStyle::random(&mut rng);
            let mut img = render_word(w, &style)?;
            img.language = Some(lang);
            Ok(img)
        })
        .collect()
}

/// Running text of `lang` usable on a test image: renderable words with no
/// diacritic outside the language's row.
fn test_tokens(text: &str, lang: Language) -> Vec<&str> {
    tokenize(text)
        .filter(|w| {
            w.chars()
                .all(|c| renderable(c) && (!is_diacritic(c) || lang.has_diacritic(c)))
        })
        .collect()
}

/// Packs consecutive words starting at a random position into up to
/// `max_lines` lines that fit the test canvas. Returns `None` when the
/// passage holds no diacritic.
fn draw_passage(
    tokens: &[&str],
    style: &RenderStyle,
    max_lines: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<String>>, Error> {
    let mut pos = rng.gen_range(0..tokens.len());
    let mut lines: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut used = 0;
    // each line is laid out with its own spacing jitter
    let line_style = |i: usize| RenderStyle {
        seed: style.seed.wrapping_add(i as u64),
        ..*style
    };
    while used < tokens.len() {
        let word = tokens[pos];
        pos = (pos + 1) % tokens.len();
        used += 1;
        let candidate = if current.is_empty() {
            String::from(word)
        } else {
            alloc::format!("{current} {word}")
        };
        if line_width(&candidate, &line_style(lines.len()))? <= TEST_LINE_MAX_WIDTH {
            current = candidate;
            continue;
        }
        if current.is_empty() {
            // a single word wider than the canvas is skipped
            continue;
        }
        lines.push(core::mem::take(&mut current));
        if lines.len() == max_lines {
            break;
        }
        if line_width(word, &line_style(lines.len()))? <= TEST_LINE_MAX_WIDTH {
            current = String::from(word);
        }
    }
    if !current.is_empty() && lines.len() < max_lines {
        lines.push(current);
    }
    let marked = lines.iter().any(|l| l.chars().any(is_diacritic));
    Ok(if marked { Some(lines) } else { None })
}

/// Renders `n` test images of `lang`, each holding a random passage of the
/// language's text on between one and the maximal number of lines.
pub fn test_images(text: &str, lang: Language, n: usize, seed: u64) -> Result<Vec<AnnotatedImage>, Error> {
    let tokens = test_tokens(text, lang);
    if !tokens.iter().any(|w| w.chars().any(is_diacritic)) {
        return Err(Error::InsufficientWords {
            language: lang,
            wanted: n,
            found: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n);
    let budget = n.saturating_mul(100).max(100);
    let mut attempts = 0;
    while images.len() < n {
        if attempts == budget {
            return Err(Error::InsufficientWords {
                language: lang,
                wanted: n,
                found: images.len(),
            });
        }
        attempts += 1;
        let style = RenderStyle::random(&mut rng);
        let max_lines = rng.gen_range(1..=test_max_lines(style.scale));
        if let Some(lines) = draw_passage(&tokens, &style, max_lines, &mut rng)? {
            let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
            images.push(render_test_image(&refs, lang, &style)?);
        }
    }
    Ok(images)
}
