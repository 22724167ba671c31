//! Everyday text shipped with the crate, one file per language.

use std::path::Path;

use diaclid_core::Language;

use crate::Error;

/// Bundled running text of `lang`.
pub fn corpus_text(lang: Language) -> &'static str {
    match lang {
        Language::Spanish => include_str!("../data/corpus/spanish.txt"),
        Language::German => include_str!("../data/corpus/german.txt"),
        Language::French => include_str!("../data/corpus/french.txt"),
        Language::Italian => include_str!("../data/corpus/italian.txt"),
        Language::Romanian => include_str!("../data/corpus/romanian.txt"),
        Language::Finnish => include_str!("../data/corpus/finnish.txt"),
        Language::Hungarian => include_str!("../data/corpus/hungarian.txt"),
        Language::Estonian => include_str!("../data/corpus/estonian.txt"),
        Language::Danish => include_str!("../data/corpus/danish.txt"),
        Language::Dutch => include_str!("../data/corpus/dutch.txt"),
        Language::Swedish => include_str!("../data/corpus/swedish.txt"),
        Language::Portuguese => include_str!("../data/corpus/portuguese.txt"),
        Language::Czech => include_str!("../data/corpus/czech.txt"),
    }
}

/// All bundled texts in language order.
pub fn corpus_texts() -> Vec<(Language, String)> {
    Language::ALL.iter().map(|&l| (l, corpus_text(l).to_owned())).collect()
}

/// File name of a language's text inside a corpus directory.
pub fn text_file_name(lang: Language) -> String {
    format!("{}.txt", lang.name().to_lowercase())
}

/// Reads `<dir>/<language>.txt` for all 13 languages.
pub fn read_text_dir(dir: &Path) -> Result<Vec<(Language, String)>, Error> {
    if !dir.is_dir() {
        return Err(Error::Data(format!("{}: not a directory", dir.display())));
    }
    Language::ALL
        .iter()
        .map(|&lang| {
            let path = dir.join(text_file_name(lang));
            let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
            Ok((lang, text))
        })
        .collect()
}

/// Text of one language: from `dir` when given, else bundled.
pub fn language_text(dir: Option<&Path>, lang: Language) -> Result<String, Error> {
    match dir {
        Some(d) => {
            let path = d.join(text_file_name(lang));
            std::fs::read_to_string(&path).map_err(Error::io(&path))
        }
        None => Ok(corpus_text(lang).to_owned()),
    }
}
