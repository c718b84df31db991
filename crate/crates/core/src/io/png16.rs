//! PNG previews: written as 16-bit, read from 8- or 16-bit files.

use std::io::{BufRead, Seek, Write};

use crate::error::{Error, Result};
use crate::image::Image;

fn format_err(e: impl std::fmt::Display) -> Error {
    Error::Format { what: "PNG", detail: e.to_string() }
}

/// Writes gray or RGB samples clamped to `[0, 1]` and scaled by 65535.
pub fn write_png<W: Write>(out: W, image: &Image) -> Result<()> {
    let (w, h, c) = image.dims();
    let mut enc = ::png::Encoder::new(out, w as u32, h as u32);
    enc.set_color(if c == 1 { ::png::ColorType::Grayscale } else { ::png::ColorType::Rgb });
    enc.set_depth(::png::BitDepth::Sixteen);
    let mut writer = enc.write_header().map_err(format_err)?;
    let mut bytes = Vec::with_capacity(w * h * c * 2);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let q = (image.get(x, y, ch).clamp(0.0, 1.0) * 65535.0).round() as u16;
                bytes.extend_from_slice(&q.to_be_bytes());
            }
        }
    }
    writer.write_image_data(&bytes).map_err(format_err)?;
    writer.finish().map_err(format_err)?;
    Ok(())
}

/// Decodes to linear floats: 16-bit samples over 65535, 8-bit over 255.
/// Alpha channels are dropped and palettes expanded.
pub fn read_png<R: BufRead + Seek>(input: R) -> Result<Image> {
    let mut dec = ::png::Decoder::new(input);
    dec.set_transformations(::png::Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(format_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| format_err("image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(format_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (color_channels, stride) = match info.color_type {
        ::png::ColorType::Grayscale => (1, 1),
        ::png::ColorType::GrayscaleAlpha => (1, 2),
        ::png::ColorType::Rgb => (3, 3),
        ::png::ColorType::Rgba => (3, 4),
        ::png::ColorType::Indexed => return Err(format_err("palette was not expanded")),
    };
    let sixteen = info.bit_depth == ::png::BitDepth::Sixteen;
    let bytes_per = if sixteen { 2 } else { 1 };
    let mut data = vec![0.0; w * h * color_channels];
    for y in 0..h {
        let line = &buf[y * info.line_size..];
        for x in 0..w {
            for c in 0..color_channels {
                let o = (x * stride + c) * bytes_per;
                let v = if sixteen {
                    u16::from_be_bytes([line[o], line[o + 1]]) as f64 / 65535.0
                } else {
                    line[o] as f64 / 255.0
                };
                data[c * w * h + y * w + x] = v;
            }
        }
    }
    Image::from_vec(w, h, color_channels, data)
}
