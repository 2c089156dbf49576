//! Binary Netpbm images: PGM (`P5`, one channel) and PPM (`P6`, three
//! channels), 8-bit or 16-bit big-endian samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let magic = [
        *bytes.first().ok_or_else(|| Error::Format("empty file".into()))?,
        *bytes.get(1).ok_or_else(|| Error::Format("truncated magic".into()))?,
    ];
    if &magic != b"P5" && &magic != b"P6" {
        return Err(Error::Format(format!(
            "unsupported magic {:?}, expected P5 or P6",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in &mut fields {
        // whitespace and comments up to the next token
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while !matches!(bytes.get(pos), None | Some(b'\n') | Some(b'\r')) {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!("malformed header at byte {start}")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header value out of range".into()))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing whitespace after maxval".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("invalid dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    Ok(Header {
        magic,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: pos + 1,
    })
}

/// Decodes an in-memory P5/P6 image into `[0, 1]` samples.
pub fn decode(bytes: &[u8]) -> Result<Tensor<f32>> {
    let h = parse_header(bytes)?;
    let channels = if &h.magic == b"P5" { 1 } else { 3 };
    let sample_bytes = if h.maxval > 255 { 2 } else { 1 };
    let n = channels * h.width * h.height;
    let raster = &bytes[h.data_start..];
    if raster.len() < n * sample_bytes {
        return Err(Error::Format(format!(
            "truncated payload: {} bytes, expected {}",
            raster.len(),
            n * sample_bytes
        )));
    }
    let max = h.maxval as f32;
    let sample = |i: usize| -> u32 {
        if sample_bytes == 2 {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as u32
        } else {
            raster[i] as u32
        }
    };
    let mut out = Tensor::zeros(channels, h.height, h.width);
    let plane = h.width * h.height;
    for p in 0..plane {
        for c in 0..channels {
            out.data_mut()[c * plane + p] = sample(p * channels + c).min(h.maxval) as f32 / max;
        }
    }
    Ok(out)
}

/// Encodes a 1- or 3-channel tensor. Values are clamped to `[0, 1]` and
/// rounded to the nearest level of `maxval`.
pub fn encode(image: &Tensor<f32>, maxval: u16) -> Result<Vec<u8>> {
    let magic = match image.channels() {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::InvalidArgument(format!(
                "only 1- or 3-channel images can be written, got {c}"
            )))
        }
    };
    if maxval == 0 {
        return Err(Error::InvalidArgument("maxval must be positive".into()));
    }
    let (c, h, w) = image.shape();
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    let plane = h * w;
    let max = maxval as f32;
    for p in 0..plane {
        for ch in 0..c {
            let v = image.data()[ch * plane + p];
            let q = if v.is_nan() { 0 } else { (v.clamp(0.0, 1.0) * max).round() as u16 };
            if maxval > 255 {
                out.extend_from_slice(&q.to_be_bytes());
            } else {
                out.push(q as u8);
            }
        }
    }
    Ok(out)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// Writes an 8-bit image.
pub fn write_image(path: impl AsRef<Path>, image: &Tensor<f32>) -> Result<()> {
    write_image_with_maxval(path, image, 255)
}

/// Writes an image with the given maxval; above 255 samples are 16-bit.
pub fn write_image_with_maxval(path: impl AsRef<Path>, image: &Tensor<f32>, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(image, maxval)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_bit_samples_are_big_endian() {
        let mut bytes = b"P5\n2 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x00, 0x01, 0xFF, 0xFF]);
        let t = decode(&bytes).unwrap();
        assert_eq!(t.shape(), (1, 1, 2));
        assert_eq!(t.data(), &[1.0 / 65535.0, 1.0]);
    }

    #[test]
    fn comments_in_header() {
        let mut bytes = b"P6 # colour\n# a full comment line\n1 # w\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 51]);
        let t = decode(&bytes).unwrap();
        assert_eq!(t.shape(), (3, 1, 1));
        assert_eq!(t.data(), &[1.0, 0.0, 0.2]);
    }

    #[test]
    fn eight_bit_lattice_round_trips_exactly() {
        let t = Tensor::from_fn(3, 4, 5, |c, y, x| ((c * 20 + y * 5 + x) * 3) as f32 / 255.0);
        let bytes = encode(&t, 255).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(encode(&back, 255).unwrap(), bytes);
    }

    #[test]
    fn off_lattice_values_quantize_within_half_step() {
        let t = Tensor::from_fn(1, 3, 3, |_, y, x| (y * 3 + x) as f32 / 8.3);
        let back = decode(&encode(&t, 255).unwrap()).unwrap();
        assert!(t.max_abs_diff(&back).unwrap() <= 0.5 / 255.0 + 1e-7);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(decode(b""), Err(Error::Format(_))));
        assert!(matches!(decode(b"P3\n1 1\n255\n0"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n1 1\n"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n2 2\n255\n\x00"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n1 1\n70000\n\x00\x00"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\nx 1\n255\n\x00"), Err(Error::Format(_))));
        assert!(encode(&Tensor::zeros(2, 1, 1), 255).is_err());
    }
}
