use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::font::{FontVariant, GlyphAtlas, CELL_HEIGHT};
use super::raster::{nearest_preimage, Raster, Rgb};
use crate::table::{canonical_index, Language};
use crate::Error;

/// Height of every word image fed to the detector.
pub const WORD_HEIGHT: usize = 16;
/// Side length of the square end-to-end test images.
pub const TEST_IMAGE_SIZE: usize = 150;
const TEST_MARGIN: usize = 4;

/// Axis-aligned box in pixel units plus its diacritic class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxAnnotation {
    pub cx: f32,
    pub cy: f32,
    pub w: f32,
    pub h: f32,
    pub class: usize,
}

impl BoxAnnotation {
    /// Box covering the inclusive pixel range `[x0, x1] × [y0, y1]`.
    pub fn from_pixels(x0: usize, y0: usize, x1: usize, y1: usize, class: usize) -> Self {
        BoxAnnotation {
            cx: (x0 + x1 + 1) as f32 / 2.0,
            cy: (y0 + y1 + 1) as f32 / 2.0,
            w: (x1 - x0 + 1) as f32,
            h: (y1 - y0 + 1) as f32,
            class,
        }
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.w > 0.0
            && self.h > 0.0
            && self.cx - self.w / 2.0 >= 0.0
            && self.cy - self.h / 2.0 >= 0.0
            && self.cx + self.w / 2.0 <= width as f32
            && self.cy + self.h / 2.0 <= height as f32
    }
}

/// A rendered raster with its diacritic boxes and, for test images, the
/// language of the text.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedImage {
    pub raster: Raster,
    pub boxes: Vec<BoxAnnotation>,
    pub language: Option<Language>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub font: FontVariant,
    /// Integer nearest-neighbour magnification applied to the glyph cell.
    pub scale: usize,
    pub fg: Rgb,
    pub bg: Rgb,
    /// Base gap between glyphs in unscaled pixels.
    pub spacing: usize,
    /// Drives per-gap spacing jitter.
    pub seed: u64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            font: FontVariant::Regular,
            scale: 1,
            fg: [0, 0, 0],
            bg: [255, 255, 255],
            spacing: 1,
            seed: 0,
        }
    }
}

impl RenderStyle {
    /// Draws font, size, colours and spacing. Text is always darker than
    /// the background.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let font = FontVariant::ALL[rng.gen_range(0..FontVariant::ALL.len())];
        let scale = rng.gen_range(1..=2);
        let bg = [
            rng.gen_range(175..=255),
            rng.gen_range(175..=255),
            rng.gen_range(175..=255),
        ];
        let fg = [
            rng.gen_range(0..=80),
            rng.gen_range(0..=80),
            rng.gen_range(0..=80),
        ];
        RenderStyle {
            font,
            scale,
            fg,
            bg,
            spacing: rng.gen_range(1..=2),
            seed: rng.gen(),
        }
    }
}

/// Where a diacritic glyph's ink ended up (inclusive pixel bounds).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlyphPlacement {
    pub ch: char,
    pub class: usize,
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

/// Binary ink canvas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InkMask {
    pub width: usize,
    pub height: usize,
    pub ink: Vec<bool>,
}

impl InkMask {
    pub fn new(width: usize, height: usize) -> Self {
        InkMask {
            width,
            height,
            ink: vec![false; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.width + x]
    }

    /// Inclusive bounding box of all ink, if any.
    pub fn extent(&self) -> Option<(usize, usize, usize, usize)> {
        let mut ext: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.at(x, y) {
                    ext = Some(match ext {
                        None => (x, y, x, y),
                        Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                    });
                }
            }
        }
        ext
    }
}

/// Lays out one line of text at the style's scale. Spaces advance by three
/// cell columns.
pub fn layout_line(
    text: &str,
    atlas: &GlyphAtlas,
    style: &RenderStyle,
) -> Result<(InkMask, Vec<GlyphPlacement>), Error> {
    let s = style.scale.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(style.seed);
    let mut items = Vec::new();
    let mut width = 0usize;
    let mut first = true;
    for ch in text.chars() {
        if ch == ' ' {
            width += 3 * s;
            continue;
        }
        let glyph = atlas.get(ch).ok_or(Error::UnknownGlyph(ch))?;
        if !first {
            width += (style.spacing + rng.gen_range(0..=1)) * s;
        }
        first = false;
        items.push((ch, *glyph, width));
        width += glyph.width as usize * s;
    }
    let mut mask = InkMask::new(width, CELL_HEIGHT * s);
    let mut placements = Vec::new();
    for (ch, glyph, x) in items {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for gy in 0..CELL_HEIGHT {
            for gx in 0..glyph.width as usize {
                if !glyph.ink(gx, gy) {
                    continue;
                }
                for dy in 0..s {
                    for dx in 0..s {
                        let (px, py) = (x + gx * s + dx, gy * s + dy);
                        mask.ink[py * width + px] = true;
                        bounds = Some(match bounds {
                            None => (px, py, px, py),
                            Some((a, b, c, d)) => (a.min(px), b.min(py), c.max(px), d.max(py)),
                        });
                    }
                }
            }
        }
        if let (Some(class), Some((x0, y0, x1, y1))) = (canonical_index(ch), bounds) {
            placements.push(GlyphPlacement {
                ch,
                class,
                x0,
                y0,
                x1,
                y1,
            });
        }
    }
    Ok((mask, placements))
}

fn colorize(mask: &InkMask, style: &RenderStyle) -> Raster {
    let mut r = Raster::filled(mask.width, mask.height, style.bg);
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.at(x, y) {
                r.put(x, y, style.fg);
            }
        }
    }
    r
}

/// Renders a single word: the ink extent is cropped and scaled (nearest
/// neighbour, aspect preserved) to a height of [`WORD_HEIGHT`]. One box per
/// diacritic occurrence, tightly around base letter plus mark.
pub fn render_word(word: &str, style: &RenderStyle) -> Result<AnnotatedImage, Error> {
    render_word_with_log(word, style).map(|(img, _)| img)
}

/// [`render_word`] plus the pre-scaling glyph placements.
pub fn render_word_with_log(
    word: &str,
    style: &RenderStyle,
) -> Result<(AnnotatedImage, Vec<GlyphPlacement>), Error> {
    if word.trim().is_empty() {
        return Err(Error::Input("cannot render an empty word".to_string()));
    }
    let atlas = GlyphAtlas::new(style.font);
    let (mask, placements) = layout_line(word, &atlas, style)?;
    let (x0, y0, x1, y1) = mask
        .extent()
        .ok_or_else(|| Error::Input("word produced no ink".to_string()))?;
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    let out_w = (cw * WORD_HEIGHT + ch / 2) / ch;
    let out_w = out_w.max(1);
    let mut scaled = InkMask::new(out_w, WORD_HEIGHT);
    for y in 0..WORD_HEIGHT {
        let sy = y0 + y * ch / WORD_HEIGHT;
        for x in 0..out_w {
            let sx = x0 + x * cw / out_w;
            scaled.ink[y * out_w + x] = mask.at(sx, sy);
        }
    }
    let boxes = placements
        .iter()
        .map(|p| {
            let (bx0, bx1) = nearest_preimage(p.x0 - x0, p.x1 - x0, cw, out_w);
            let (by0, by1) = nearest_preimage(p.y0 - y0, p.y1 - y0, ch, WORD_HEIGHT);
            BoxAnnotation::from_pixels(bx0, by0, bx1, by1, p.class)
        })
        .collect();
    Ok((
        AnnotatedImage {
            raster: colorize(&scaled, style),
            boxes,
            language: None,
        },
        placements,
    ))
}

/// Line rectangles `(x, y, w, h)` of the cells a test image was laid out in.
pub type LineCells = Vec<(usize, usize, usize, usize)>;

/// Renders left-aligned lines with fixed leading onto a
/// [`TEST_IMAGE_SIZE`]² canvas.
pub fn render_test_image(
    lines: &[&str],
    lang: Language,
    style: &RenderStyle,
) -> Result<AnnotatedImage, Error> {
    render_test_image_with_layout(lines, lang, style).map(|(img, _)| img)
}

pub fn render_test_image_with_layout(
    lines: &[&str],
    lang: Language,
    style: &RenderStyle,
) -> Result<(AnnotatedImage, LineCells), Error> {
    let s = style.scale.max(1);
    let atlas = GlyphAtlas::new(style.font);
    let pitch = test_line_pitch(s);
    let mut canvas = InkMask::new(TEST_IMAGE_SIZE, TEST_IMAGE_SIZE);
    let mut boxes = Vec::new();
    let mut cells = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let mut line_style = *style;
        line_style.seed = style.seed.wrapping_add(i as u64);
        let (mask, placements) = layout_line(line, &atlas, &line_style)?;
        let top = TEST_MARGIN + i * pitch;
        if mask.width + 2 * TEST_MARGIN > TEST_IMAGE_SIZE
            || top + mask.height + TEST_MARGIN > TEST_IMAGE_SIZE
        {
            return Err(Error::Overflow(alloc::format!(
                "line {i} ({line:?}) does not fit in {TEST_IMAGE_SIZE}x{TEST_IMAGE_SIZE}"
            )));
        }
        for y in 0..mask.height {
            for x in 0..mask.width {
                if mask.at(x, y) {
                    canvas.ink[(top + y) * TEST_IMAGE_SIZE + TEST_MARGIN + x] = true;
                }
            }
        }
        for p in placements {
            boxes.push(BoxAnnotation::from_pixels(
                p.x0 + TEST_MARGIN,
                p.y0 + top,
                p.x1 + TEST_MARGIN,
                p.y1 + top,
                p.class,
            ));
        }
        cells.push((TEST_MARGIN, top, mask.width, mask.height));
    }
    if boxes.is_empty() {
        return Err(Error::Input("test image text contains no diacritic".to_string()));
    }
    Ok((
        AnnotatedImage {
            raster: colorize(&canvas, style),
            boxes,
            language: Some(lang),
        },
        cells,
    ))
}

/// Vertical distance between consecutive test-image lines.
pub fn test_line_pitch(scale: usize) -> usize {
    CELL_HEIGHT * scale + 3 * scale + 2
}

/// Width in pixels a line would occupy at `style` (before any fitting).
pub fn line_width(text: &str, style: &RenderStyle) -> Result<usize, Error> {
    let atlas = GlyphAtlas::new(style.font);
    layout_line(text, &atlas, style).map(|(m, _)| m.width)
}

/// Widest line that fits a test image.
pub const TEST_LINE_MAX_WIDTH: usize = TEST_IMAGE_SIZE - 2 * TEST_MARGIN;

/// Lines that fit a test image at `scale`.
pub fn test_max_lines(scale: usize) -> usize {
    let pitch = test_line_pitch(scale);
    let usable = TEST_IMAGE_SIZE - 2 * TEST_MARGIN;
    // last line needs only its cell height
    (usable - CELL_HEIGHT * scale) / pitch + 1
}
