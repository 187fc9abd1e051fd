//! Binary PGM (P5) and PPM (P6) with 8-bit samples.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PnmError {
    #[error("unsupported PNM variant {0} (only binary P5/P6)")]
    UnsupportedFormat(String),
    #[error("not a PNM file")]
    NotPnm,
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported maxval {0} (only 255)")]
    UnsupportedMaxval(u32),
    #[error("raster truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("image buffer has {found} samples, expected {expected}")]
    SampleCount { expected: usize, found: usize },
    #[error("channel count {0} (only 1 or 3)")]
    Channels(u8),
}

/// Interleaved 8-bit image, one (gray) or three (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: u8,
    samples: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: u8,
        samples: Vec<u8>,
    ) -> Result<Self, PnmError> {
        if !matches!(channels, 1 | 3) {
            return Err(PnmError::Channels(channels));
        }
        let expected = width * height * channels as usize;
        if samples.len() != expected || width == 0 || height == 0 {
            return Err(PnmError::SampleCount {
                expected,
                found: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn raw_bytes(&self) -> usize {
        self.samples.len()
    }

    /// Samples of channel `c` in row-major order.
    pub fn channel(&self, c: usize) -> Vec<u8> {
        self.samples
            .iter()
            .skip(c)
            .step_by(self.channels as usize)
            .copied()
            .collect()
    }

    /// Interleaves separate channel planes.
    pub fn from_channels(
        width: usize,
        height: usize,
        planes: &[Vec<u8>],
    ) -> Result<Self, PnmError> {
        let channels = planes.len() as u8;
        let n = width * height;
        let mut samples = Vec::with_capacity(n * planes.len());
        for i in 0..n {
            for p in planes {
                samples.push(*p.get(i).ok_or(PnmError::SampleCount {
                    expected: n,
                    found: p.len(),
                })?);
            }
        }
        Self::new(width, height, channels, samples)
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u32, PnmError> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::MalformedHeader(what))
    }
}

pub fn load_image(bytes: &[u8]) -> Result<ImageBuffer, PnmError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(PnmError::NotPnm);
    }
    let channels = match bytes[1] {
        b'5' => 1u8,
        b'6' => 3,
        b'1'..=b'4' | b'7' => {
            return Err(PnmError::UnsupportedFormat(format!(
                "P{}",
                bytes[1] as char
            )))
        }
        _ => return Err(PnmError::NotPnm),
    };
    let mut h = Header { bytes, pos: 2 };
    if !h
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(PnmError::MalformedHeader("magic"));
    }
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader("zero dimension"));
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PnmError::MalformedHeader("missing separator before raster")),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels as usize))
        .ok_or(PnmError::MalformedHeader("dimensions overflow"))?;
    let raster = &bytes[h.pos..];
    if raster.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            found: raster.len(),
        });
    }
    ImageBuffer::new(width, height, channels, raster[..expected].to_vec())
}

pub fn save_image(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.samples);
    out
}
