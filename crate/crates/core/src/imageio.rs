//! PNG and PFM encoding helpers shared by baking and rendering.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl ImageError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        ImageError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        ImageError::Format { path: path.display().to_string(), message: message.into() }
    }
}

/// Decoded raster before any colour conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    /// 8 or 16.
    pub bit_depth: u8,
    /// Samples in row-major order; 8-bit samples are stored widened.
    pub samples: Vec<u16>,
    pub palette: Option<Vec<u8>>,
}

pub enum PngPixels<'a> {
    Rgb8(&'a [u8]),
    Gray16(&'a [u16]),
    Rgba16(&'a [u16]),
    Indexed { indices: &'a [u8], palette: &'a [u8] },
}

fn encode_err(path: &Path, e: png::EncodingError) -> ImageError {
    match e {
        png::EncodingError::IoError(io) => ImageError::io(path, io),
        other => ImageError::format(path, other.to_string()),
    }
}

pub fn write_png(path: &Path, width: u32, height: u32, pixels: PngPixels<'_>) -> Result<(), ImageError> {
    let file = File::create(path).map_err(|e| ImageError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width, height);
    enc.set_compression(png::Compression::Fast);
    let bytes: Vec<u8>;
    let data: &[u8] = match pixels {
        PngPixels::Rgb8(d) => {
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            d
        }
        PngPixels::Gray16(d) | PngPixels::Rgba16(d) => {
            let color = if matches!(pixels, PngPixels::Gray16(_)) {
                png::ColorType::Grayscale
            } else {
                png::ColorType::Rgba
            };
            enc.set_color(color);
            enc.set_depth(png::BitDepth::Sixteen);
            bytes = d.iter().flat_map(|v| v.to_be_bytes()).collect();
            &bytes
        }
        PngPixels::Indexed { indices, palette } => {
            enc.set_color(png::ColorType::Indexed);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_palette(palette.to_vec());
            indices
        }
    };
    let mut w = enc.write_header().map_err(|e| encode_err(path, e))?;
    w.write_image_data(data).map_err(|e| encode_err(path, e))?;
    w.finish().map_err(|e| encode_err(path, e))
}

pub fn read_png(path: &Path) -> Result<RawImage, ImageError> {
    let file = File::open(path).map_err(|e| ImageError::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(png::Transformations::IDENTITY);
    let fmt = |e: png::DecodingError| match e {
        png::DecodingError::IoError(io) => ImageError::io(path, io),
        other => ImageError::format(path, other.to_string()),
    };
    let mut reader = dec.read_info().map_err(fmt)?;
    let size = reader.output_buffer_size().ok_or_else(|| ImageError::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(fmt)?;
    buf.truncate(info.buffer_size());
    let channels = match info.color_type {
        png::ColorType::Grayscale | png::ColorType::Indexed => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
    };
    let palette = reader.info().palette.as_ref().map(|p| p.to_vec());
    let bit_depth = match info.bit_depth {
        png::BitDepth::Eight => 8,
        png::BitDepth::Sixteen => 16,
        other => return Err(ImageError::format(path, format!("unsupported bit depth {other:?}"))),
    };
    let samples = if bit_depth == 16 {
        buf.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        buf.iter().map(|&b| b as u16).collect()
    };
    Ok(RawImage { width: info.width, height: info.height, channels, bit_depth, samples, palette })
}

/// Single-channel little-endian PFM, rows stored bottom to top.
pub fn write_pfm(path: &Path, width: u32, height: u32, data: &[f32]) -> Result<(), ImageError> {
    let file = File::create(path).map_err(|e| ImageError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| ImageError::io(path, e);
    write!(w, "Pf\n{width} {height}\n-1.0\n").map_err(io)?;
    for row in data.chunks_exact(width as usize).rev() {
        for v in row {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_pfm(path: &Path) -> Result<(u32, u32, Vec<f32>), ImageError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| ImageError::io(path, e))?;
    let bad = |m: &str| ImageError::format(path, m.to_string());
    // header is three whitespace-terminated tokens
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if tokens[0] != "Pf" {
        return Err(bad("only single-channel Pf files are supported"));
    }
    let width: u32 = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: u32 = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f32 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
    if scale >= 0.0 {
        return Err(bad("big-endian PFM is not supported"));
    }
    let n = width as usize * height as usize;
    let body = bytes.get(pos..pos + 4 * n).ok_or_else(|| bad("truncated data"))?;
    let mut data = vec![0f32; n];
    for (r, row) in body.chunks_exact(4 * width as usize).enumerate() {
        let dst = (height as usize - 1 - r) * width as usize;
        for (c, v) in row.chunks_exact(4).enumerate() {
            data[dst + c] = f32::from_le_bytes([v[0], v[1], v[2], v[3]]);
        }
    }
    Ok((width, height, data))
}

#[inline]
pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
pub fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.pfm");
        let data: Vec<f32> = (0..12).map(|i| (i as f32).sin() * 1e-3 + f32::EPSILON * i as f32).collect();
        write_pfm(&p, 4, 3, &data).unwrap();
        let (w, h, back) = read_pfm(&p).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(
            data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let raw = std::fs::read(&p).unwrap();
        assert!(raw.starts_with(b"Pf\n4 3\n-1.0\n"));
        // bottom row first
        assert_eq!(&raw[12..16], &data[8].to_le_bytes());
    }

    #[test]
    fn png_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let rgb: Vec<u8> = (0..27).map(|i| (i * 9) as u8).collect();
        write_png(&p, 3, 3, PngPixels::Rgb8(&rgb)).unwrap();
        let img = read_png(&p).unwrap();
        assert_eq!((img.channels, img.bit_depth), (3, 8));
        assert_eq!(img.samples, rgb.iter().map(|&b| b as u16).collect::<Vec<_>>());

        let g: Vec<u16> = vec![0, 1, 65535, 4242];
        write_png(&p, 2, 2, PngPixels::Gray16(&g)).unwrap();
        assert_eq!(read_png(&p).unwrap().samples, g);

        let pal = [0u8, 0, 0, 255, 0, 0, 0, 255, 0];
        write_png(&p, 2, 2, PngPixels::Indexed { indices: &[0, 1, 2, 1], palette: &pal }).unwrap();
        let img = read_png(&p).unwrap();
        assert_eq!(img.samples, vec![0, 1, 2, 1]);
        assert_eq!(img.palette.unwrap(), pal.to_vec());
    }

    #[test]
    fn missing_and_garbage_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_png(&dir.path().join("none.png")), Err(ImageError::Io { .. })));
        let p = dir.path().join("junk.png");
        std::fs::write(&p, b"not a png").unwrap();
        assert!(matches!(read_png(&p), Err(ImageError::Format { .. })));
        std::fs::write(&p, b"Pf\n2 2\n-1.0\n\x00").unwrap();
        assert!(matches!(read_pfm(&p), Err(ImageError::Format { .. })));
    }

    #[test]
    fn srgb_inverse() {
        for i in 0..=255 {
            let c = i as f64 / 255.0;
            assert!((linear_to_srgb(srgb_to_linear(c)) - c).abs() < 1e-12);
        }
    }
}
