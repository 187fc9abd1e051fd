//! The `.ahc` container.
//!
//! All multi-byte integers are little-endian.
//!
//! ```text
//! "AHC1"            magic
//! u8                version (1)
//! u8                mode: low nibble 0 fixed / 1 per-block / 2 global,
//!                   high nibble the basis id in fixed mode (0 otherwise)
//! u32 u32           width, height
//! u8 u8 u16         channels, levels, quant_levels
//! per channel:
//!   per level, fine to coarse:
//!     per-block: 2-bit ids, row-major, MSB-first, padded to a byte
//!     global:    one id byte
//!   per subband (level 1 V,H,D, ..., level n V,H,D, coarse A):
//!     f32 min, f32 step, u16 levels
//!   [u8; 256]       Huffman code lengths
//!   u64             payload bit length
//!   payload         ceil(bits / 8) bytes; symbols coarse A, then
//!                   level n V,H,D down to level 1
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::entropy::{CodeTable, EntropyError};
use crate::filterbank::BasisId;
use crate::quantizer::QuantizerSpec;
use crate::transform::{half_dims, level_dims, BasisIdMap, BasisMode};

pub const MAGIC: &[u8; 4] = b"AHC1";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContainerError {
    #[error("truncated stream: needed {needed} bytes for {what} at offset {offset}")]
    Truncated {
        what: &'static str,
        offset: usize,
        needed: usize,
    },
    #[error("bad magic (not an .ahc stream)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("invalid mode byte {0:#04x}")]
    InvalidMode(u8),
    #[error("basis id {0} out of range")]
    InvalidBasisId(u8),
    #[error("invalid code length header: {0}")]
    InvalidCodeLengths(EntropyError),
    #[error("invalid quantizer for subband {subband}: min {min}, step {step}, levels {levels}")]
    InvalidQuantizer {
        subband: usize,
        min: f32,
        step: f32,
        levels: u16,
    },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("payload length mismatch: {0}")]
    PayloadLength(String),
    #[error("{0} trailing bytes after last channel")]
    TrailingBytes(usize),
}

/// Coded data of one color channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelData {
    /// One entry per level, finest first.
    pub id_maps: Vec<BasisIdMap>,
    /// `3·levels + 1` specs: level 1 V,H,D, …, level n V,H,D, coarse A.
    pub quant: Vec<QuantizerSpec>,
    pub code_lengths: [u8; 256],
    pub payload_bits: u64,
    pub payload: Vec<u8>,
}

/// In-memory form of an `.ahc` stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedImage {
    pub width: u32,
    pub height: u32,
    pub levels: u8,
    pub quant_levels: u16,
    pub mode: BasisMode,
    pub channels: Vec<ChannelData>,
}

/// Per-level subband dimensions `(width, height)`, finest first.
pub fn subband_dims(
    width: u32,
    height: u32,
    levels: u8,
) -> Result<Vec<(usize, usize)>, ContainerError> {
    let dims = level_dims(width as usize, height as usize, levels as usize)
        .map_err(|e| ContainerError::InvalidHeader(e.to_string()))?;
    Ok(dims.into_iter().map(half_dims).collect())
}

/// Number of quantization indices coded per channel.
pub fn symbols_per_channel(width: u32, height: u32, levels: u8) -> Result<u64, ContainerError> {
    let dims = subband_dims(width, height, levels)?;
    let mut n: u128 = dims
        .iter()
        .map(|&(w, h)| 3 * (w as u128) * (h as u128))
        .sum();
    let &(w, h) = dims.last().expect("at least one level");
    n += (w as u128) * (h as u128);
    u64::try_from(n).map_err(|_| ContainerError::InvalidHeader("symbol count overflows".into()))
}

fn mode_byte(mode: BasisMode) -> u8 {
    match mode {
        BasisMode::Fixed(id) => id.index() << 4,
        BasisMode::PerBlock => 1,
        BasisMode::Global => 2,
    }
}

fn parse_mode(b: u8) -> Result<BasisMode, ContainerError> {
    let (kind, id) = (b & 0x0f, b >> 4);
    match (kind, id) {
        (0, id) => BasisId::from_index(id)
            .map(BasisMode::Fixed)
            .ok_or(ContainerError::InvalidBasisId(id)),
        (1, 0) => Ok(BasisMode::PerBlock),
        (2, 0) => Ok(BasisMode::Global),
        _ => Err(ContainerError::InvalidMode(b)),
    }
}

fn packed_len(n: usize) -> usize {
    n.div_ceil(4)
}

impl CompressedImage {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Checks every structural constraint the writer and reader rely on.
    pub fn validate(&self) -> Result<(), ContainerError> {
        let bad = |m: &str| Err(ContainerError::InvalidHeader(m.to_string()));
        if !matches!(self.channels.len(), 1 | 3) {
            return bad("channel count must be 1 or 3");
        }
        if !(2..=256).contains(&self.quant_levels) {
            return bad("quant_levels must lie in [2, 256]");
        }
        let dims = subband_dims(self.width, self.height, self.levels)?;
        let symbols = symbols_per_channel(self.width, self.height, self.levels)?;
        for ch in &self.channels {
            if ch.id_maps.len() != dims.len() {
                return bad("id map count differs from level count");
            }
            for (map, &(w, h)) in ch.id_maps.iter().zip(&dims) {
                let ok = match (self.mode, map) {
                    (BasisMode::Fixed(a), BasisIdMap::Fixed(b)) => a == *b,
                    (BasisMode::Global, BasisIdMap::Global(_)) => true,
                    (BasisMode::PerBlock, BasisIdMap::PerBlock { width, height, ids }) => {
                        (*width, *height) == (w, h) && ids.len() == w * h
                    }
                    _ => false,
                };
                if !ok {
                    return bad("id map does not match mode or dimensions");
                }
            }
            if ch.quant.len() != 3 * dims.len() + 1 {
                return bad("quantizer count must be 3*levels + 1");
            }
            for (i, q) in ch.quant.iter().enumerate() {
                // Detail bands use the header's level count, the coarse A band 256.
                let expected = if i == 3 * dims.len() {
                    256
                } else {
                    self.quant_levels
                };
                if q.validate().is_err() || q.levels != expected {
                    return Err(ContainerError::InvalidQuantizer {
                        subband: i,
                        min: q.min,
                        step: q.step,
                        levels: q.levels,
                    });
                }
            }
            CodeTable::from_lengths(ch.code_lengths).map_err(ContainerError::InvalidCodeLengths)?;
            check_payload(ch.payload_bits, ch.payload.len(), symbols)?;
        }
        Ok(())
    }
}

fn check_payload(bits: u64, bytes: usize, symbols: u64) -> Result<(), ContainerError> {
    if bits.div_ceil(8) != bytes as u64 {
        return Err(ContainerError::PayloadLength(format!(
            "{bits} bits stored in {bytes} bytes"
        )));
    }
    if bits < symbols {
        return Err(ContainerError::PayloadLength(format!(
            "{bits} bits cannot hold {symbols} symbols"
        )));
    }
    Ok(())
}

pub fn write(c: &CompressedImage) -> Result<Vec<u8>, ContainerError> {
    c.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(mode_byte(c.mode));
    out.extend_from_slice(&c.width.to_le_bytes());
    out.extend_from_slice(&c.height.to_le_bytes());
    out.push(c.channels.len() as u8);
    out.push(c.levels);
    out.extend_from_slice(&c.quant_levels.to_le_bytes());
    for ch in &c.channels {
        for map in &ch.id_maps {
            match map {
                BasisIdMap::Fixed(_) => {}
                BasisIdMap::Global(id) => out.push(id.index()),
                BasisIdMap::PerBlock { ids, .. } => {
                    let mut packed = vec![0u8; packed_len(ids.len())];
                    for (i, id) in ids.iter().enumerate() {
                        packed[i / 4] |= id.index() << (6 - 2 * (i % 4));
                    }
                    out.extend_from_slice(&packed);
                }
            }
        }
        for q in &ch.quant {
            out.extend_from_slice(&q.min.to_le_bytes());
            out.extend_from_slice(&q.step.to_le_bytes());
            out.extend_from_slice(&q.levels.to_le_bytes());
        }
        out.extend_from_slice(&ch.code_lengths);
        out.extend_from_slice(&ch.payload_bits.to_le_bytes());
        out.extend_from_slice(&ch.payload);
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ContainerError> {
        let remaining = self.bytes.len() - self.pos;
        if n > remaining {
            return Err(ContainerError::Truncated {
                what,
                offset: self.pos,
                needed: n,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N], ContainerError> {
        Ok(self.take(N, what)?.try_into().unwrap())
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, ContainerError> {
        Ok(self.array::<1>(what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, ContainerError> {
        self.array(what).map(u16::from_le_bytes)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ContainerError> {
        self.array(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, ContainerError> {
        self.array(what).map(u64::from_le_bytes)
    }

    fn f32(&mut self, what: &'static str) -> Result<f32, ContainerError> {
        self.array(what).map(f32::from_le_bytes)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Parses and validates a stream. Every length is checked against the
/// remaining input before anything is allocated.
pub fn read(bytes: &[u8]) -> Result<CompressedImage, ContainerError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let version = cur.u8("version")?;
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion(version));
    }
    let mode = parse_mode(cur.u8("mode")?)?;
    let width = cur.u32("width")?;
    let height = cur.u32("height")?;
    let channel_count = cur.u8("channels")?;
    let levels = cur.u8("levels")?;
    let quant_levels = cur.u16("quant_levels")?;
    if !matches!(channel_count, 1 | 3) {
        return Err(ContainerError::InvalidHeader(format!(
            "channel count {channel_count}"
        )));
    }
    if !(2..=256).contains(&quant_levels) {
        return Err(ContainerError::InvalidHeader(format!(
            "quant_levels {quant_levels}"
        )));
    }
    let dims = subband_dims(width, height, levels)?;
    let symbols = symbols_per_channel(width, height, levels)?;

    let mut channels = Vec::with_capacity(channel_count as usize);
    for _ in 0..channel_count {
        let mut id_maps = Vec::with_capacity(dims.len());
        for &(w, h) in &dims {
            let map = match mode {
                BasisMode::Fixed(id) => BasisIdMap::Fixed(id),
                BasisMode::Global => {
                    let b = cur.u8("global basis id")?;
                    BasisIdMap::Global(
                        BasisId::from_index(b).ok_or(ContainerError::InvalidBasisId(b))?,
                    )
                }
                BasisMode::PerBlock => {
                    let n = w
                        .checked_mul(h)
                        .ok_or_else(|| ContainerError::InvalidHeader("id grid too large".into()))?;
                    let packed = cur.take(packed_len(n), "basis id grid")?;
                    let ids = (0..n)
                        .map(|i| {
                            BasisId::from_index((packed[i / 4] >> (6 - 2 * (i % 4))) & 3).unwrap()
                        })
                        .collect();
                    if n % 4 != 0 && packed[n / 4] & (0xffu8 >> (2 * (n % 4))) != 0 {
                        return Err(ContainerError::InvalidHeader(
                            "nonzero id grid padding".into(),
                        ));
                    }
                    BasisIdMap::PerBlock {
                        width: w,
                        height: h,
                        ids,
                    }
                }
            };
            id_maps.push(map);
        }
        let mut quant = Vec::with_capacity(3 * dims.len() + 1);
        for subband in 0..3 * dims.len() + 1 {
            let q = QuantizerSpec {
                min: cur.f32("quantizer min")?,
                step: cur.f32("quantizer step")?,
                levels: cur.u16("quantizer levels")?,
            };
            if q.validate().is_err() {
                return Err(ContainerError::InvalidQuantizer {
                    subband,
                    min: q.min,
                    step: q.step,
                    levels: q.levels,
                });
            }
            quant.push(q);
        }
        let code_lengths = cur.array::<256>("code lengths")?;
        CodeTable::from_lengths(code_lengths).map_err(ContainerError::InvalidCodeLengths)?;
        let payload_bits = cur.u64("payload bit length")?;
        let byte_len = payload_bits.div_ceil(8);
        if byte_len > cur.remaining() as u64 {
            return Err(ContainerError::Truncated {
                what: "payload",
                offset: cur.pos,
                needed: usize::try_from(byte_len).unwrap_or(usize::MAX),
            });
        }
        let payload = cur.take(byte_len as usize, "payload")?.to_vec();
        check_payload(payload_bits, payload.len(), symbols)?;
        channels.push(ChannelData {
            id_maps,
            quant,
            code_lengths,
            payload_bits,
            payload,
        });
    }
    if cur.remaining() != 0 {
        return Err(ContainerError::TrailingBytes(cur.remaining()));
    }
    Ok(CompressedImage {
        width,
        height,
        levels,
        quant_levels,
        mode,
        channels,
    })
}

fn mode_name(mode: BasisMode) -> String {
    match mode {
        BasisMode::Fixed(id) => format!("fixed ({id})"),
        BasisMode::PerBlock => "adaptive per-block".into(),
        BasisMode::Global => "adaptive global".into(),
    }
}

/// Human-readable summary of a stream; payloads are not decoded.
pub fn inspect(bytes: &[u8]) -> Result<String, ContainerError> {
    let c = read(bytes)?;
    let mut s = String::new();
    let _ = writeln!(s, "format: AHC version {VERSION}");
    let _ = writeln!(
        s,
        "size: {}x{}, channels: {}",
        c.width,
        c.height,
        c.channels.len()
    );
    let _ = writeln!(s, "levels: {}, quant_levels: {}", c.levels, c.quant_levels);
    let _ = writeln!(s, "mode: {}", mode_name(c.mode));
    let _ = writeln!(s, "total_bytes: {}", bytes.len());
    for (ci, ch) in c.channels.iter().enumerate() {
        let _ = writeln!(
            s,
            "channel {ci}: payload {} bytes ({} bits)",
            ch.payload.len(),
            ch.payload_bits
        );
        for (li, map) in ch.id_maps.iter().enumerate() {
            match map {
                BasisIdMap::Fixed(id) => {
                    let _ = writeln!(s, "  level {}: {id}", li + 1);
                }
                BasisIdMap::Global(id) => {
                    let _ = writeln!(s, "  level {}: {id} (global)", li + 1);
                }
                BasisIdMap::PerBlock { width, height, .. } => {
                    let hist = map.histogram();
                    let total = map.len().max(1) as f64;
                    let pct: Vec<String> = BasisId::ALL
                        .iter()
                        .map(|id| {
                            format!(
                                "{id} {:.1}%",
                                100.0 * hist[id.index() as usize] as f64 / total
                            )
                        })
                        .collect();
                    let _ = writeln!(
                        s,
                        "  level {}: {width}x{height} blocks, {}",
                        li + 1,
                        pct.join(", ")
                    );
                }
            }
        }
    }
    Ok(s)
}
