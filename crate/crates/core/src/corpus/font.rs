//! Embedded bitmap glyphs.
//!
//! Every glyph lives in a 13-row cell: rows 0..4 hold marks above capitals
//! and lowercase letters, capitals span rows 4..=10, the lowercase x-height
//! rows 6..=10, and descenders/cedillas rows 11..=12. Accented letters are
//! composed from a base glyph and a mark when the atlas is built.

use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const CELL_HEIGHT: usize = 13;
const BASE_TOP: usize = 4;

/// A monochrome glyph: bit `x` of `rows[y]` is ink at column `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Glyph {
    pub width: u8,
    pub rows: [u32; CELL_HEIGHT],
}

impl Glyph {
    pub fn ink(&self, x: usize, y: usize) -> bool {
        y < CELL_HEIGHT && x < 32 && self.rows[y] >> x & 1 == 1
    }

    pub fn is_blank(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FontVariant {
    Regular,
    Bold,
    Italic,
}

impl FontVariant {
    pub const ALL: [FontVariant; 3] = [FontVariant::Regular, FontVariant::Bold, FontVariant::Italic];
}

/// Codepoint → glyph map for one font variant.
#[derive(Clone, Debug)]
pub struct GlyphAtlas {
    variant: FontVariant,
    glyphs: BTreeMap<char, Glyph>,
}

impl GlyphAtlas {
    pub fn new(variant: FontVariant) -> Self {
        let mut glyphs = BTreeMap::new();
        for &(ch, art) in BASE_GLYPHS {
            glyphs.insert(ch, parse(art, BASE_TOP));
        }
        for &(ch, base, mark) in COMPOSED {
            glyphs.insert(ch, compose(base, mark));
        }
        for g in glyphs.values_mut() {
            *g = match variant {
                FontVariant::Regular => *g,
                FontVariant::Bold => embolden(g),
                FontVariant::Italic => slant(g),
            };
        }
        GlyphAtlas { variant, glyphs }
    }

    pub fn variant(&self) -> FontVariant {
        self.variant
    }

    pub fn get(&self, ch: char) -> Option<&Glyph> {
        self.glyphs.get(&ch)
    }

    pub fn contains(&self, ch: char) -> bool {
        self.glyphs.contains_key(&ch)
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.glyphs.keys().copied()
    }
}

/// Whether every variant can render `ch`.
pub fn renderable(ch: char) -> bool {
    ch.is_ascii_alphanumeric()
        || BASE_GLYPHS.iter().any(|&(c, _)| c == ch)
        || COMPOSED.iter().any(|&(c, _, _)| c == ch)
}

fn parse(art: &[&str], top: usize) -> Glyph {
    let mut rows = [0u32; CELL_HEIGHT];
    let mut width = 0;
    for (i, line) in art.iter().enumerate() {
        width = width.max(line.len());
        for (x, b) in line.bytes().enumerate() {
            if b == b'#' {
                rows[top + i] |= 1 << x;
            }
        }
    }
    Glyph {
        width: width as u8,
        rows,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mark {
    Acute,
    Grave,
    Circumflex,
    Diaeresis,
    Tilde,
    Ring,
    Caron,
    Breve,
    DoubleAcute,
    Cedilla,
    /// Caron written as a raised comma to the right of an ascender.
    Apostrophe,
}

impl Mark {
    fn art(self) -> &'static [&'static str] {
        match self {
            Mark::Acute => &["..##", ".##."],
            Mark::Grave => &["##..", ".##."],
            Mark::Circumflex => &[".##.", "#..#"],
            Mark::Diaeresis => &["#.#"],
            Mark::Tilde => &[".##.#", "#.##."],
            Mark::Ring => &[".##.", "#..#", ".##."],
            Mark::Caron => &["#...#", ".#.#."],
            Mark::Breve => &["#..#", ".##."],
            Mark::DoubleAcute => &[".#.#", "#.#."],
            Mark::Cedilla => &[".#.", "##."],
            Mark::Apostrophe => &["#", "#"],
        }
    }
}

fn compose(base: char, mark: Mark) -> Glyph {
    let art = BASE_GLYPHS
        .iter()
        .find(|&&(c, _)| c == base)
        .map(|&(_, a)| a)
        .expect("composed glyph refers to a base glyph");
    let mut g = parse(art, BASE_TOP);
    let m = parse(mark.art(), 0);
    let mark_rows = mark.art().len();
    let upper = base.is_uppercase();
    if mark == Mark::Apostrophe {
        let x = g.width as usize + 1;
        for y in BASE_TOP..BASE_TOP + 2 {
            g.rows[y] |= 1 << x;
        }
        g.width += 2;
        return g;
    }
    let top = match mark {
        Mark::Cedilla => 11,
        // marks end one row above the letter body, with a blank row between
        _ if upper => 3 - mark_rows,
        _ => 5 - mark_rows,
    };
    let (bw, mw) = (g.width as usize, m.width as usize);
    let (base_shift, mark_shift) = if mw > bw {
        ((mw - bw) / 2, 0)
    } else {
        (0, (bw - mw).div_ceil(2))
    };
    let mut rows = [0u32; CELL_HEIGHT];
    for y in 0..CELL_HEIGHT {
        rows[y] = g.rows[y] << base_shift;
    }
    for y in 0..mark_rows {
        rows[top + y] |= m.rows[y] << mark_shift;
    }
    g.rows = rows;
    g.width = bw.max(mw) as u8;
    g
}

fn embolden(g: &Glyph) -> Glyph {
    let mut out = *g;
    for r in out.rows.iter_mut() {
        *r |= *r << 1;
    }
    out.width += 1;
    out
}

fn slant(g: &Glyph) -> Glyph {
    let mut out = *g;
    for (y, r) in out.rows.iter_mut().enumerate() {
        *r <<= (CELL_HEIGHT - 1 - y) / 4;
    }
    out.width += 3;
    out
}

use Mark::*;

#[rustfmt::skip]
const COMPOSED: &[(char, char, Mark)] = &[
    ('Á', 'A', Acute), ('á', 'a', Acute), ('À', 'A', Grave), ('à', 'a', Grave),
    ('Â', 'A', Circumflex), ('â', 'a', Circumflex), ('Ä', 'A', Diaeresis), ('ä', 'a', Diaeresis),
    ('Ã', 'A', Tilde), ('ã', 'a', Tilde), ('Å', 'A', Ring), ('å', 'a', Ring),
    ('Ă', 'A', Breve), ('ă', 'a', Breve),
    ('Ç', 'C', Cedilla), ('ç', 'c', Cedilla), ('Č', 'C', Caron), ('č', 'c', Caron),
    ('Ď', 'D', Caron), ('ď', 'd', Apostrophe),
    ('É', 'E', Acute), ('é', 'e', Acute), ('È', 'E', Grave), ('è', 'e', Grave),
    ('Ê', 'E', Circumflex), ('ê', 'e', Circumflex), ('Ë', 'E', Diaeresis), ('ë', 'e', Diaeresis),
    ('Ě', 'E', Caron), ('ě', 'e', Caron),
    ('Í', 'I', Acute), ('í', 'ı', Acute), ('Ì', 'I', Grave), ('ì', 'ı', Grave),
    ('Î', 'I', Circumflex), ('î', 'ı', Circumflex), ('Ï', 'I', Diaeresis), ('ï', 'ı', Diaeresis),
    ('Ñ', 'N', Tilde), ('ñ', 'n', Tilde), ('Ň', 'N', Caron), ('ň', 'n', Caron),
    ('Ó', 'O', Acute), ('ó', 'o', Acute), ('Ò', 'O', Grave), ('ò', 'o', Grave),
    ('Ô', 'O', Circumflex), ('ô', 'o', Circumflex), ('Ö', 'O', Diaeresis), ('ö', 'o', Diaeresis),
    ('Õ', 'O', Tilde), ('õ', 'o', Tilde), ('Ő', 'O', DoubleAcute), ('ő', 'o', DoubleAcute),
    ('Ř', 'R', Caron), ('ř', 'r', Caron),
    ('Ş', 'S', Cedilla), ('ş', 's', Cedilla), ('Š', 'S', Caron), ('š', 's', Caron),
    ('Ţ', 'T', Cedilla), ('ţ', 't', Cedilla), ('Ť', 'T', Caron), ('ť', 't', Apostrophe),
    ('Ú', 'U', Acute), ('ú', 'u', Acute), ('Ù', 'U', Grave), ('ù', 'u', Grave),
    ('Û', 'U', Circumflex), ('û', 'u', Circumflex), ('Ü', 'U', Diaeresis), ('ü', 'u', Diaeresis),
    ('Ű', 'U', DoubleAcute), ('ű', 'u', DoubleAcute), ('Ů', 'U', Ring), ('ů', 'u', Ring),
    ('Ý', 'Y', Acute), ('ý', 'y', Acute),
    ('Ž', 'Z', Caron), ('ž', 'z', Caron),
];

// Rows 4..=12 of the cell.
#[rustfmt::skip]
const BASE_GLYPHS: &[(char, &[&str])] = &[
    ('A', &[".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', &["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', &[".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('D', &["####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."]),
    ('E', &["#####", "#....", "#....", "####.", "#....", "#....", "#####"]),
    ('F', &["#####", "#....", "#....", "####.", "#....", "#....", "#...."]),
    ('G', &[".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"]),
    ('H', &["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('I', &["###", ".#.", ".#.", ".#.", ".#.", ".#.", "###"]),
    ('J', &["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('K', &["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"]),
    ('L', &["#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', &["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"]),
    ('N', &["#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"]),
    ('O', &[".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('P', &["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('Q', &[".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"]),
    ('R', &["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"]),
    ('S', &[".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
    ('T', &["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', &["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('V', &["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('W', &["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."]),
    ('X', &["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"]),
    ('Y', &["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."]),
    ('Z', &["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"]),
    ('a', &[".....", ".....", ".###.", "....#", ".####", "#...#", ".####"]),
    ('b', &["#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."]),
    ('c', &[".....", ".....", ".###.", "#....", "#....", "#...#", ".###."]),
    ('d', &["....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"]),
    ('e', &[".....", ".....", ".###.", "#...#", "#####", "#....", ".###."]),
    ('f', &["..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."]),
    ('g', &[".....", ".....", ".####", "#...#", "#...#", ".####", "....#", "....#", ".###."]),
    ('h', &["#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"]),
    ('i', &[".#.", "...", "##.", ".#.", ".#.", ".#.", "###"]),
    ('ı', &["...", "...", "##.", ".#.", ".#.", ".#.", "###"]),
    ('j', &["...#", "....", "..##", "...#", "...#", "...#", "...#", "#..#", ".##."]),
    ('k', &["#...", "#...", "#..#", "#.#.", "##..", "#.#.", "#..#"]),
    ('l', &["##.", ".#.", ".#.", ".#.", ".#.", ".#.", "###"]),
    ('m', &[".....", ".....", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#.#.#"]),
    ('n', &[".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"]),
    ('o', &[".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."]),
    ('p', &[".....", ".....", "####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('q', &[".....", ".....", ".####", "#...#", "#...#", ".####", "....#", "....#", "....#"]),
    ('r', &[".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."]),
    ('s', &[".....", ".....", ".###.", "#....", ".###.", "....#", "####."]),
    ('t', &[".#..", ".#..", "###.", ".#..", ".#..", ".#.#", "..#."]),
    ('u', &[".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"]),
    ('v', &[".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('w', &[".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."]),
    ('x', &[".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"]),
    ('y', &[".....", ".....", "#...#", "#...#", "#...#", ".####", "....#", "....#", ".###."]),
    ('z', &[".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"]),
    ('0', &[".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."]),
    ('1', &["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('2', &[".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"]),
    ('3', &["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."]),
    ('4', &["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."]),
    ('5', &["#####", "#....", "####.", "....#", "....#", "#...#", ".###."]),
    ('6', &["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."]),
    ('7', &["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."]),
    ('8', &[".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."]),
    ('9', &[".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."]),
    ('ß', &[".##..", "#..#.", "#.#..", "#.##.", "#...#", "#...#", "#.##.", "#...."]),
    ('Æ', &["..#####", ".#.#...", "#..#...", "#######", "#..#...", "#..#...", "#..####"]),
    ('æ', &[".......", ".......", ".##.##.", "...#..#", ".######", "#..#...", ".##.###"]),
    ('Œ', &[".######", "#..#...", "#..#...", "#..####", "#..#...", "#..#...", ".######"]),
    ('œ', &[".......", ".......", ".##.##.", "#..#..#", "#..####", "#..#...", ".##.###"]),
    ('Ø', &[".###.#", "#..##.", "#.#.#.", "#.#.#.", "#.#.#.", ".##..#", "#.###."]),
    ('ø', &["......", "....#.", ".###..", "#..##.", "#.#.#.", "##..#.", ".###..", "#....."]),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::CANONICAL;

    #[test]
    fn every_variant_covers_letters_digits_and_diacritics() {
        for v in FontVariant::ALL {
            let atlas = GlyphAtlas::new(v);
            for ch in ('a'..='z').chain('A'..='Z').chain('0'..='9').chain(CANONICAL) {
                let g = atlas.get(ch).unwrap_or_else(|| panic!("{v:?} lacks {ch}"));
                assert!(!g.is_blank());
                assert!(g.width as usize <= 16);
                assert!(renderable(ch));
            }
        }
    }

    #[test]
    fn accented_glyphs_differ_from_their_base() {
        let atlas = GlyphAtlas::new(FontVariant::Regular);
        for &(ch, base, _) in COMPOSED {
            assert_ne!(atlas.get(ch), atlas.get(base), "{ch}");
        }
        // every diacritic glyph is distinct from every other
        for (i, a) in CANONICAL.iter().enumerate() {
            for b in &CANONICAL[i + 1..] {
                assert_ne!(atlas.get(*a), atlas.get(*b), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn variants_are_distinct() {
        let r = GlyphAtlas::new(FontVariant::Regular);
        let b = GlyphAtlas::new(FontVariant::Bold);
        let i = GlyphAtlas::new(FontVariant::Italic);
        assert_ne!(r.get('ä'), b.get('ä'));
        assert_ne!(r.get('ä'), i.get('ä'));
    }
}
