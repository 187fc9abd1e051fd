//! Uniform scalar quantization with midpoint reconstruction.
//!
//! Bounds are stored as `f32`, so the quantizer works with the `f32`-rounded
//! `min` (rounded down) and `step` (rounded up). The grid therefore still
//! covers the whole input range and decoding sees the same parameters the
//! encoder used.

use thiserror::Error;

pub const MIN_LEVELS: u16 = 2;
pub const MAX_LEVELS: u16 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("quantization levels {0} outside [2, 256]")]
    LevelsOutOfRange(u32),
    #[error("non-finite coefficient {0}")]
    NonFinite(f64),
    #[error("quantization index {index} not below level count {levels}")]
    IndexOutOfRange { index: u8, levels: u16 },
    #[error("invalid quantizer parameters (min {min}, step {step}, levels {levels})")]
    InvalidSpec { min: f32, step: f32, levels: u16 },
}

/// Per-subband quantizer description; reconstruction points are
/// `min + (i + ½)·step` for `i < levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub min: f32,
    pub step: f32,
    pub levels: u16,
}

impl QuantizerSpec {
    pub fn validate(&self) -> Result<(), QuantError> {
        let ok = self.min.is_finite()
            && self.step.is_finite()
            && self.step > 0.0
            && (MIN_LEVELS..=MAX_LEVELS).contains(&self.levels);
        if ok {
            Ok(())
        } else {
            Err(QuantError::InvalidSpec {
                min: self.min,
                step: self.step,
                levels: self.levels,
            })
        }
    }

    #[inline]
    pub fn index_of(&self, x: f64) -> u8 {
        let cell = ((x - f64::from(self.min)) / f64::from(self.step)).floor();
        cell.clamp(0.0, f64::from(self.levels - 1)) as u8
    }

    #[inline]
    pub fn reconstruct(&self, index: u8) -> f64 {
        f64::from(self.min) + (f64::from(index) + 0.5) * f64::from(self.step)
    }
}

pub fn check_levels(levels: u32) -> Result<u16, QuantError> {
    if (u32::from(MIN_LEVELS)..=u32::from(MAX_LEVELS)).contains(&levels) {
        Ok(levels as u16)
    } else {
        Err(QuantError::LevelsOutOfRange(levels))
    }
}

fn f32_at_most(x: f64) -> f32 {
    let r = x as f32;
    if f64::from(r) > x {
        r.next_down()
    } else {
        r
    }
}

fn f32_at_least(x: f64) -> f32 {
    let r = x as f32;
    if f64::from(r) < x {
        r.next_up()
    } else {
        r
    }
}

/// Derives the quantizer for a set of values.
///
/// `step = (max − min) / L`. A constant input gets `step = 1` with the grid
/// shifted down by half a step, so its single reconstruction point is the
/// constant itself.
pub fn design(values: &[f64], levels: u32) -> Result<QuantizerSpec, QuantError> {
    let levels = check_levels(levels)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in values {
        if !x.is_finite() {
            return Err(QuantError::NonFinite(x));
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if values.is_empty() {
        lo = 0.0;
        hi = 0.0;
    }
    if hi == lo {
        return Ok(QuantizerSpec {
            min: f32_at_most(lo - 0.5),
            step: 1.0,
            levels,
        });
    }
    let min = f32_at_most(lo);
    let mut step = f32_at_least((hi - f64::from(min)) / f64::from(levels));
    while f64::from(min) + f64::from(levels) * f64::from(step) < hi {
        step = step.next_up();
    }
    Ok(QuantizerSpec { min, step, levels })
}

pub fn quantize_subband(
    values: &[f64],
    levels: u32,
) -> Result<(Vec<u8>, QuantizerSpec), QuantError> {
    let spec = design(values, levels)?;
    Ok((values.iter().map(|&x| spec.index_of(x)).collect(), spec))
}

pub fn dequantize(indices: &[u8], spec: &QuantizerSpec) -> Result<Vec<f64>, QuantError> {
    spec.validate()?;
    indices
        .iter()
        .map(|&i| {
            if u16::from(i) >= spec.levels {
                Err(QuantError::IndexOutOfRange {
                    index: i,
                    levels: spec.levels,
                })
            } else {
                Ok(spec.reconstruct(i))
            }
        })
        .collect()
}
