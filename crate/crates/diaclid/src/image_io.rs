//! Raster IO: PNG (8-bit) and binary PPM (P6), chosen by file extension.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use diaclid_core::corpus::Raster;

use crate::Error;

fn image_err(path: &Path, msg: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

fn is_ppm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"))
}

/// Reads a PNG or PPM file into an RGB raster.
pub fn read_image(path: &Path) -> Result<Raster, Error> {
    let file = File::open(path).map_err(Error::io(path))?;
    if is_ppm(path) {
        let mut bytes = Vec::new();
        BufReader::new(file).read_to_end(&mut bytes).map_err(Error::io(path))?;
        decode_ppm(&bytes).map_err(|m| image_err(path, m))
    } else {
        decode_png(BufReader::new(file)).map_err(|m| image_err(path, m))
    }
}

/// Writes `raster` as PNG, or as PPM when the extension is `.ppm`.
pub fn write_image(path: &Path, raster: &Raster) -> Result<(), Error> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::new(file);
    if is_ppm(path) {
        write!(out, "P6\n{} {}\n255\n", raster.width(), raster.height()).map_err(Error::io(path))?;
        out.write_all(raster.as_raw()).map_err(Error::io(path))?;
    } else {
        let mut enc = png::Encoder::new(&mut out, raster.width() as u32, raster.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| image_err(path, e))?;
        w.write_image_data(raster.as_raw()).map_err(|e| image_err(path, e))?;
        w.finish().map_err(|e| image_err(path, e))?;
    }
    out.flush().map_err(Error::io(path))
}

fn decode_png(reader: impl Read) -> Result<Raster, String> {
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (w, h) = (info.width as usize, info.height as usize);
    let px = &buf[..info.buffer_size()];
    let rgb: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => px.to_vec(),
        png::ColorType::Rgba => px.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => px.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => px.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        other => return Err(format!("unsupported PNG colour type {other:?}")),
    };
    Raster::from_raw(w, h, rgb).ok_or_else(|| "PNG pixel data does not match its size".to_string())
}

fn decode_ppm(bytes: &[u8]) -> Result<Raster, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PPM header".into());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?);
    }
    if fields[0] != "P6" {
        return Err(format!("unsupported PPM magic {:?}", fields[0]));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad PPM header field {s:?}"));
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(format!("unsupported PPM maxval {max}"));
    }
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    if data.len() < w * h * 3 {
        return Err("truncated PPM pixel data".into());
    }
    Raster::from_raw(w, h, data[..w * h * 3].to_vec()).ok_or_else(|| "bad PPM size".into())
}
