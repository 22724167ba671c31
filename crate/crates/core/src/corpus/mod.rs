//! Synthetic corpus generation: glyph atlas, word and test-image rendering,
//! corpus word selection.

mod dataset;
pub mod font;
mod raster;
mod render;
mod words;

pub use dataset::{test_images, word_images};
pub use font::{FontVariant, Glyph, GlyphAtlas};
pub use raster::{Raster, Rgb};
pub use render::{
    layout_line, line_width, render_test_image, render_test_image_with_layout, render_word,
    render_word_with_log, test_line_pitch, test_max_lines, AnnotatedImage, BoxAnnotation,
    GlyphPlacement, InkMask, LineCells, RenderStyle, TEST_IMAGE_SIZE, TEST_LINE_MAX_WIDTH,
    WORD_HEIGHT,
};
pub use words::{is_pure_word, select_words, tokenize};
