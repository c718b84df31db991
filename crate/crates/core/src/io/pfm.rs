//! Portable float maps (`Pf` grayscale, `PF` RGB).
//!
//! Rows are stored bottom to top; a negative scale marks little-endian
//! samples. Files are written little-endian with scale `-1.0`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::image::Image;

pub fn write_pfm<W: Write>(mut out: W, image: &Image) -> Result<()> {
    let (w, h, c) = image.dims();
    let magic = if c == 1 { "Pf" } else { "PF" };
    write!(out, "{magic}\n{w} {h}\n-1.0\n")?;
    let mut buf = Vec::with_capacity(w * h * c * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            for ch in 0..c {
                buf.extend_from_slice(&(image.get(x, y, ch) as f32).to_le_bytes());
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_pfm<R: BufRead>(mut input: R) -> Result<Image> {
    let bad = |detail: String| Error::Format { what: "PFM", detail };
    let magic = next_token(&mut input)?;
    let channels = match magic.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(bad(format!("unknown magic {other:?}"))),
    };
    let parse = |t: String, name: &str| t.parse::<f64>().map_err(|_| bad(format!("bad {name} {t:?}")));
    let w = parse(next_token(&mut input)?, "width")?;
    let h = parse(next_token(&mut input)?, "height")?;
    let scale = parse(next_token(&mut input)?, "scale")?;
    if w < 1.0 || h < 1.0 || w.fract() != 0.0 || h.fract() != 0.0 || scale == 0.0 || !scale.is_finite() {
        return Err(bad(format!("bad header {w} x {h}, scale {scale}")));
    }
    let (w, h) = (w as usize, h as usize);
    let little = scale < 0.0;
    let mut raw = vec![0u8; w * h * channels * 4];
    input.read_exact(&mut raw).map_err(|e| bad(format!("truncated pixel data: {e}")))?;

    let mut data = vec![0.0; w * h * channels];
    for (i, bytes) in raw.chunks_exact(4).enumerate() {
        let b = [bytes[0], bytes[1], bytes[2], bytes[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) } as f64;
        let ch = i % channels;
        let x = (i / channels) % w;
        let y = h - 1 - i / (channels * w);
        data[ch * w * h + y * w + x] = v;
    }
    Image::from_vec(w, h, channels, data).map_err(|e| bad(e.to_string()))
}

/// Reads one whitespace-delimited header token, consuming exactly one
/// trailing whitespace byte.
fn next_token<R: BufRead>(input: &mut R) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            return Err(Error::Format { what: "PFM", detail: "unexpected end of header".into() });
        }
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(byte[0]);
        if token.len() > 64 {
            return Err(Error::Format { what: "PFM", detail: "header token too long".into() });
        }
    }
    Ok(String::from_utf8_lossy(&token).into_owned())
}
