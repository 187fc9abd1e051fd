//! End-to-end pipeline: channel split, pyramid transform, quantization,
//! Huffman coding and container assembly, plus decoding and metrics.

use std::fmt;
use std::str::FromStr;

use crate::container::{symbols_per_channel, ChannelData, CompressedImage};
use crate::entropy::{self, CodeTable};
use crate::exec::Exec;
use crate::filterbank::BasisId;
use crate::plane::Plane;
use crate::pnm::ImageBuffer;
use crate::quantizer::{self, QuantizerSpec};
use crate::transform::{
    level_dims, pyramid_forward, pyramid_inverse, BasisMode, LevelDetail, Scaling, SelectionEnergy,
    SubbandPyramid, TransformOptions,
};
use crate::Error;

/// The coarse approximation band is always quantized with this many levels.
pub const APPROX_LEVELS: u32 = 256;

/// Encoder parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeParams {
    pub levels: usize,
    pub quant_levels: u32,
    pub mode: BasisMode,
    pub energy: SelectionEnergy,
    pub exec: Exec,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self {
            levels: 2,
            quant_levels: 64,
            mode: BasisMode::PerBlock,
            energy: SelectionEnergy::Literal,
            exec: Exec::Parallel,
        }
    }
}

impl EncodeParams {
    fn transform_options(&self) -> TransformOptions {
        TransformOptions {
            scaling: Scaling::Scaled,
            energy: self.energy,
            exec: self.exec,
        }
    }
}

/// All six basis modes in CLI order.
pub const ALL_MODES: [BasisMode; 6] = [
    BasisMode::Fixed(BasisId::Set1),
    BasisMode::Fixed(BasisId::Set2),
    BasisMode::Fixed(BasisId::Set3),
    BasisMode::Fixed(BasisId::Set4),
    BasisMode::PerBlock,
    BasisMode::Global,
];

/// Command-line spelling of a mode (`set1`…`set4`, `adaptive-block`,
/// `adaptive-global`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeLabel(pub BasisMode);

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            BasisMode::Fixed(id) => write!(f, "{id}"),
            BasisMode::PerBlock => f.write_str("adaptive-block"),
            BasisMode::Global => f.write_str("adaptive-global"),
        }
    }
}

impl FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive-block" => Ok(ModeLabel(BasisMode::PerBlock)),
            "adaptive-global" => Ok(ModeLabel(BasisMode::Global)),
            other => other
                .parse::<BasisId>()
                .map(|id| ModeLabel(BasisMode::Fixed(id)))
                .map_err(|_| Error::InvalidParams(format!("unknown basis mode `{other}`"))),
        }
    }
}

fn validate(img: &ImageBuffer, p: &EncodeParams) -> Result<(), Error> {
    quantizer::check_levels(p.quant_levels)?;
    if u32::try_from(img.width()).is_err() || u32::try_from(img.height()).is_err() {
        return Err(Error::InvalidParams("image dimensions exceed u32".into()));
    }
    if p.levels > u8::MAX as usize {
        return Err(Error::InvalidParams(format!(
            "levels {} exceed 255",
            p.levels
        )));
    }
    level_dims(img.width(), img.height(), p.levels)?;
    Ok(())
}

fn to_plane(img: &ImageBuffer, c: usize) -> Plane {
    Plane::from_vec(
        img.width(),
        img.height(),
        img.channel(c).into_iter().map(f64::from).collect(),
    )
}

fn encode_channel(plane: &Plane, p: &EncodeParams) -> Result<ChannelData, Error> {
    let pyr = pyramid_forward(plane, p.levels, p.mode, p.transform_options())?;

    // Quantizer specs are stored fine to coarse.
    let mut quant = Vec::with_capacity(3 * p.levels + 1);
    let mut indices: Vec<Vec<u8>> = Vec::with_capacity(3 * p.levels + 1);
    for lvl in &pyr.levels {
        for band in [&lvl.v, &lvl.h, &lvl.d] {
            let (idx, spec) = quantizer::quantize_subband(band.data(), p.quant_levels)?;
            quant.push(spec);
            indices.push(idx);
        }
    }
    let (idx, spec) = quantizer::quantize_subband(pyr.coarse.data(), APPROX_LEVELS)?;
    quant.push(spec);
    indices.push(idx);

    let mut stream = Vec::with_capacity(indices.iter().map(Vec::len).sum());
    stream.extend_from_slice(indices.last().unwrap());
    for lvl in (0..p.levels).rev() {
        for band in 0..3 {
            stream.extend_from_slice(&indices[3 * lvl + band]);
        }
    }

    let table = entropy::build_code(&entropy::histogram(&stream))?;
    let (payload, payload_bits) = entropy::encode(&stream, &table)?;
    Ok(ChannelData {
        id_maps: pyr.levels.into_iter().map(|l| l.ids).collect(),
        quant,
        code_lengths: *table.lengths(),
        payload_bits,
        payload,
    })
}

/// Runs the full pipeline. Output is deterministic and independent of the
/// execution policy.
pub fn encode_image(img: &ImageBuffer, p: &EncodeParams) -> Result<CompressedImage, Error> {
    validate(img, p)?;
    let planes: Vec<Plane> = (0..img.channels() as usize)
        .map(|c| to_plane(img, c))
        .collect();
    let channels = p
        .exec
        .map_slice(&planes, |plane| encode_channel(plane, p))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompressedImage {
        width: img.width() as u32,
        height: img.height() as u32,
        levels: p.levels as u8,
        quant_levels: p.quant_levels as u16,
        mode: p.mode,
        channels,
    })
}

fn decode_channel(c: &CompressedImage, ch: &ChannelData, exec: Exec) -> Result<Vec<u8>, Error> {
    let (w, h) = (c.width as usize, c.height as usize);
    let dims = level_dims(w, h, c.levels as usize)?;
    let n = symbols_per_channel(c.width, c.height, c.levels)? as usize;
    let table = CodeTable::from_lengths(ch.code_lengths)?;
    let stream = entropy::decode(&ch.payload, ch.payload_bits, &table, n)?;

    let half: Vec<(usize, usize)> = dims
        .iter()
        .map(|&d| crate::transform::half_dims(d))
        .collect();
    let mut pos = 0;
    let mut take = |(bw, bh): (usize, usize), spec: &QuantizerSpec| -> Result<Plane, Error> {
        let idx = &stream[pos..pos + bw * bh];
        pos += bw * bh;
        Ok(Plane::from_vec(bw, bh, quantizer::dequantize(idx, spec)?))
    };
    let levels = c.levels as usize;
    let coarse = take(*half.last().unwrap(), &ch.quant[3 * levels])?;
    let mut details: Vec<LevelDetail> = Vec::with_capacity(levels);
    for lvl in (0..levels).rev() {
        let v = take(half[lvl], &ch.quant[3 * lvl])?;
        let hb = take(half[lvl], &ch.quant[3 * lvl + 1])?;
        let d = take(half[lvl], &ch.quant[3 * lvl + 2])?;
        details.push(LevelDetail {
            v,
            h: hb,
            d,
            ids: ch.id_maps[lvl].clone(),
        });
    }
    details.reverse();
    let pyr = SubbandPyramid {
        levels: details,
        coarse,
        orig_dims: dims,
    };
    let plane = pyramid_inverse(&pyr, Scaling::Scaled, exec)?;
    Ok(to_samples(&plane))
}

/// Rounds half away from zero and clamps to `[0, 255]`.
fn to_samples(p: &Plane) -> Vec<u8> {
    p.data()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn decode_image(c: &CompressedImage) -> Result<ImageBuffer, Error> {
    decode_image_with(c, Exec::Parallel)
}

pub fn decode_image_with(c: &CompressedImage, exec: Exec) -> Result<ImageBuffer, Error> {
    c.validate()?;
    let planes = exec
        .map_slice(&c.channels, |ch| decode_channel(c, ch, exec))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageBuffer::from_channels(
        c.width as usize,
        c.height as usize,
        &planes,
    )?)
}

/// Transform and inverse transform without quantization or coding
/// (debugging path that isolates the transform stage).
pub fn reconstruct_unquantized(img: &ImageBuffer, p: &EncodeParams) -> Result<ImageBuffer, Error> {
    validate(img, p)?;
    let planes: Vec<Plane> = (0..img.channels() as usize)
        .map(|c| to_plane(img, c))
        .collect();
    let out = p
        .exec
        .map_slice(&planes, |plane| -> Result<Vec<u8>, Error> {
            let pyr = pyramid_forward(plane, p.levels, p.mode, p.transform_options())?;
            Ok(to_samples(&pyramid_inverse(&pyr, Scaling::Scaled, p.exec)?))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageBuffer::from_channels(img.width(), img.height(), &out)?)
}

/// Basis usage counts per level, summed over channels.
pub fn basis_usage(c: &CompressedImage) -> Vec<[usize; 4]> {
    let mut out = vec![[0usize; 4]; c.levels as usize];
    for ch in &c.channels {
        for (acc, map) in out.iter_mut().zip(&ch.id_maps) {
            for (a, h) in acc.iter_mut().zip(map.histogram()) {
                *a += h;
            }
        }
    }
    out
}

/// Peak signal-to-noise ratio; identical images have no finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn from_mse(mse: f64) -> Self {
        if mse == 0.0 {
            Psnr::Infinite
        } else {
            Psnr::Finite(10.0 * (255.0f64 * 255.0 / mse).log10())
        }
    }

    /// `f64::INFINITY` for [`Psnr::Infinite`].
    pub fn value(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub compressed_bytes: usize,
    pub raw_bytes: usize,
    /// `100 · compressed / raw`.
    pub rate_pct: f64,
    pub mse_per_channel: Vec<f64>,
    pub mse: f64,
    pub psnr: Psnr,
}

impl Metrics {
    /// Line-oriented `key=value` rendering.
    pub fn to_key_value(&self) -> String {
        let per: Vec<String> = self
            .mse_per_channel
            .iter()
            .map(|m| format!("{m:.6}"))
            .collect();
        format!(
            "compressed_bytes={}\nraw_bytes={}\nrate_pct={:.4}\nmse={:.6}\nmse_per_channel={}\npsnr_db={}\n",
            self.compressed_bytes,
            self.raw_bytes,
            self.rate_pct,
            self.mse,
            per.join(","),
            self.psnr
        )
    }
}

pub fn compute_metrics(
    orig: &ImageBuffer,
    recon: &ImageBuffer,
    compressed_bytes: usize,
) -> Result<Metrics, Error> {
    if (orig.width(), orig.height(), orig.channels())
        != (recon.width(), recon.height(), recon.channels())
    {
        return Err(Error::DimensionMismatch);
    }
    let ch = orig.channels() as usize;
    let mut sse = vec![0.0f64; ch];
    for (i, (&a, &b)) in orig.samples().iter().zip(recon.samples()).enumerate() {
        let d = f64::from(a) - f64::from(b);
        sse[i % ch] += d * d;
    }
    let pixels = (orig.width() * orig.height()) as f64;
    let mse_per_channel: Vec<f64> = sse.iter().map(|s| s / pixels).collect();
    let mse = sse.iter().sum::<f64>() / (pixels * ch as f64);
    let raw_bytes = orig.raw_bytes();
    Ok(Metrics {
        compressed_bytes,
        raw_bytes,
        rate_pct: 100.0 * compressed_bytes as f64 / raw_bytes as f64,
        mse_per_channel,
        mse,
        psnr: Psnr::from_mse(mse),
    })
}
