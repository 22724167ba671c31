//! The 13 target languages and their diacritic inventories.
//!
//! Every diacritic gets a stable global index in `[0, 85)`: the rows below
//! are walked in order (Spanish first, Czech last) and a character takes the
//! next index the first time it is seen.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub const LANGUAGE_COUNT: usize = 13;
pub const DIACRITIC_COUNT: usize = 85;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    Spanish,
    German,
    French,
    Italian,
    Romanian,
    Finnish,
    Hungarian,
    Estonian,
    Danish,
    Dutch,
    Swedish,
    Portuguese,
    Czech,
}

impl Language {
    pub const ALL: [Language; LANGUAGE_COUNT] = [
        Language::Spanish,
        Language::German,
        Language::French,
        Language::Italian,
        Language::Romanian,
        Language::Finnish,
        Language::Hungarian,
        Language::Estonian,
        Language::Danish,
        Language::Dutch,
        Language::Swedish,
        Language::Portuguese,
        Language::Czech,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Language> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::Spanish => "Spanish",
            Language::German => "German",
            Language::French => "French",
            Language::Italian => "Italian",
            Language::Romanian => "Romanian",
            Language::Finnish => "Finnish",
            Language::Hungarian => "Hungarian",
            Language::Estonian => "Estonian",
            Language::Danish => "Danish",
            Language::Dutch => "Dutch",
            Language::Swedish => "Swedish",
            Language::Portuguese => "Portuguese",
            Language::Czech => "Czech",
        }
    }

    /// The language's diacritic row, in table order.
    pub fn diacritics(self) -> &'static [char] {
        ROWS[self.id()]
    }

    pub fn has_diacritic(self, ch: char) -> bool {
        self.diacritics().contains(&ch)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown language {0:?}")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownLanguage(s.into()))
    }
}

const ROWS: [&[char]; LANGUAGE_COUNT] = [
    &['Á', 'á', 'Ñ', 'ñ'],
    &['Ä', 'ä', 'Ö', 'ö', 'Ü', 'ü', 'ß'],
    &[
        'À', 'à', 'Â', 'â', 'É', 'é', 'È', 'è', 'Ê', 'ê', 'Ë', 'ë', 'Î', 'î', 'Ï', 'ï', 'Ô', 'ô',
        'Œ', 'œ', 'Û', 'û', 'ç',
    ],
    &['À', 'à', 'Ì', 'ì', 'Ò', 'ò', 'Ù', 'ù'],
    // cedilla forms, as tabulated
    &['Â', 'â', 'Ă', 'ă', 'Ş', 'ş', 'Ţ', 'ţ'],
    &['Ä', 'ä', 'Ö', 'ö'],
    &[
        'Á', 'á', 'É', 'é', 'Í', 'í', 'Ó', 'ó', 'Ö', 'ö', 'Ő', 'ő', 'Ü', 'ü', 'Ű', 'ű',
    ],
    &['Ä', 'ä', 'Õ', 'õ', 'Ö', 'ö', 'Š', 'š'],
    &['Å', 'å', 'Æ', 'æ', 'Ø', 'ø'],
    &['Ë', 'ë', 'Ï', 'ï'],
    &['Ä', 'ä', 'Å', 'å', 'Ö', 'ö'],
    &['Á', 'á', 'Ã', 'ã', 'Ê', 'ê', 'Ô', 'ô', 'Õ', 'õ', 'ç'],
    &[
        'Á', 'á', 'É', 'é', 'Ě', 'ě', 'Í', 'í', 'Ó', 'ó', 'Ú', 'ú', 'ů', 'Ý', 'ý', 'Č', 'č', 'Ď',
        'ď', 'Ň', 'ň', 'Ř', 'ř', 'Š', 'š', 'Ť', 'ť', 'Ž', 'ž',
    ],
];

/// All diacritics ordered by global index (row-order union, first
/// occurrence wins).
pub const CANONICAL: [char; DIACRITIC_COUNT] = [
    // Spanish
    'Á', 'á', 'Ñ', 'ñ', //
    // German
    'Ä', 'ä', 'Ö', 'ö', 'Ü', 'ü', 'ß', //
    // French
    'À', 'à', 'Â', 'â', 'É', 'é', 'È', 'è', 'Ê', 'ê', 'Ë', 'ë', 'Î', 'î', 'Ï', 'ï', 'Ô', 'ô', 'Œ',
    'œ', 'Û', 'û', 'ç', //
    // Italian
    'Ì', 'ì', 'Ò', 'ò', 'Ù', 'ù', //
    // Romanian
    'Ă', 'ă', 'Ş', 'ş', 'Ţ', 'ţ', //
    // Hungarian
    'Í', 'í', 'Ó', 'ó', 'Ő', 'ő', 'Ű', 'ű', //
    // Estonian
    'Õ', 'õ', 'Š', 'š', //
    // Danish
    'Å', 'å', 'Æ', 'æ', 'Ø', 'ø', //
    // Portuguese
    'Ã', 'ã', //
    // Czech
    'Ě', 'ě', 'Ú', 'ú', 'ů', 'Ý', 'ý', 'Č', 'č', 'Ď', 'ď', 'Ň', 'ň', 'Ř', 'ř', 'Ť', 'ť', 'Ž', 'ž',
];

/// Global class index of `ch`, or `None` for anything outside the table.
pub fn canonical_index(ch: char) -> Option<usize> {
    // The table is small; a scan beats building a map in no_std.
    CANONICAL.iter().position(|&c| c == ch)
}

/// Inverse of [`canonical_index`].
pub fn diacritic_at(index: usize) -> Option<char> {
    CANONICAL.get(index).copied()
}

pub fn is_diacritic(ch: char) -> bool {
    canonical_index(ch).is_some()
}

/// Set of languages as a 13-bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct LanguageSet(u16);

impl LanguageSet {
    pub const EMPTY: LanguageSet = LanguageSet(0);

    pub fn insert(&mut self, lang: Language) {
        self.0 |= 1 << lang.id();
    }

    pub fn contains(self, lang: Language) -> bool {
        self.0 & (1 << lang.id()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Language> {
        Language::ALL.into_iter().filter(move |&l| self.contains(l))
    }
}

impl FromIterator<Language> for LanguageSet {
    fn from_iter<I: IntoIterator<Item = Language>>(iter: I) -> Self {
        let mut s = LanguageSet::EMPTY;
        for l in iter {
            s.insert(l);
        }
        s
    }
}

/// Languages whose row contains `ch`.
pub fn languages_of(ch: char) -> LanguageSet {
    Language::ALL
        .into_iter()
        .filter(|l| l.has_diacritic(ch))
        .collect()
}

/// Diacritics of `lang` that no other language uses, in row order.
pub fn unique_diacritics(lang: Language) -> Vec<char> {
    lang.diacritics()
        .iter()
        .copied()
        .filter(|&c| languages_of(c).len() == 1)
        .collect()
}

/// Audit dump: `index,codepoint,languages` with `;`-separated names.
pub fn to_csv() -> String {
    let mut out = String::from("index,codepoint,languages\n");
    for (i, &c) in CANONICAL.iter().enumerate() {
        let names: Vec<&str> = languages_of(c).iter().map(Language::name).collect();
        out.push_str(&alloc::format!("{i},{c},{}\n", names.join(";")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn canonical_order_is_row_union() {
        let mut union: Vec<char> = Vec::new();
        for row in ROWS {
            for &c in row {
                if !union.contains(&c) {
                    union.push(c);
                }
            }
        }
        assert_eq!(union.len(), DIACRITIC_COUNT);
        assert_eq!(union, CANONICAL.to_vec());
    }

    #[test]
    fn index_examples() {
        assert_eq!(canonical_index('Á'), Some(0));
        assert_eq!(canonical_index('a'), None);
        assert_eq!(canonical_index('ž'), Some(84));
        for i in 0..DIACRITIC_COUNT {
            assert_eq!(canonical_index(diacritic_at(i).unwrap()), Some(i));
        }
    }

    #[test]
    fn languages_of_examples() {
        assert_eq!(languages_of('ß').iter().collect::<Vec<_>>(), vec![Language::German]);
        let o: Vec<_> = languages_of('ö').iter().collect();
        assert_eq!(
            o,
            vec![
                Language::German,
                Language::Finnish,
                Language::Hungarian,
                Language::Estonian,
                Language::Swedish
            ]
        );
        assert!(languages_of('x').is_empty());
        assert!(CANONICAL.iter().all(|&c| !languages_of(c).is_empty()));
    }

    #[test]
    fn unique_examples() {
        assert_eq!(unique_diacritics(Language::Spanish), vec!['Ñ', 'ñ']);
        assert_eq!(unique_diacritics(Language::German), vec!['ß']);
        assert!(unique_diacritics(Language::Finnish).is_empty());
        let empty: Vec<Language> = Language::ALL
            .into_iter()
            .filter(|&l| unique_diacritics(l).is_empty())
            .collect();
        assert_eq!(
            empty,
            vec![Language::Finnish, Language::Estonian, Language::Dutch, Language::Swedish]
        );
    }

    #[test]
    fn language_names_parse() {
        for l in Language::ALL {
            assert_eq!(l.name().parse::<Language>().unwrap(), l);
            assert_eq!(Language::from_id(l.id()), Some(l));
        }
        assert_eq!("french".parse::<Language>().unwrap(), Language::French);
        assert!("Klingon".parse::<Language>().is_err());
    }

    #[test]
    fn csv_has_a_row_per_diacritic() {
        let csv = to_csv();
        assert_eq!(csv.lines().count(), DIACRITIC_COUNT + 1);
        assert!(csv.contains("10,ß,German\n"));
    }
}
