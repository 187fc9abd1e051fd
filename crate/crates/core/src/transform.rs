//! Block Haar transforms, adaptive bank selection and multi-level
//! subband decomposition.

use thiserror::Error;

use crate::exec::Exec;
use crate::filterbank::{builtin_bank, BasisId, BasisKind, WaveletBasis};
use crate::plane::Plane;

/// Upper bound on decomposition depth.
pub const MAX_LEVELS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("matrix dimensions {0}x{1} are not even")]
    OddDimensions(usize, usize),
    #[error("matrix is empty")]
    Empty,
    #[error("cannot decompose a {width}x{height} image into {levels} levels")]
    TooManyLevels {
        width: usize,
        height: usize,
        levels: usize,
    },
    #[error("subband dimensions are inconsistent")]
    DimensionMismatch,
}

/// Samples of one 2×2 block, row-major `(m11, m12, m21, m22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block(pub [f64; 4]);

impl Block {
    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Block([m11, m12, m21, m22])
    }

    pub fn constant(c: f64) -> Self {
        Block([c; 4])
    }
}

/// Whether detail coefficients are the literal sums or divided by 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    #[default]
    Literal,
    /// Details divided by 4; set1 details of 8-bit data stay in [-255, 255].
    Scaled,
}

/// Objective used when choosing a bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionEnergy {
    /// `v² + h² + d²` on literal coefficients.
    #[default]
    Literal,
    /// Each squared coefficient divided by the squared norm of its function,
    /// so sparse and dense banks are compared on equal footing.
    Normalized,
}

/// `(a, v, h, d)` for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCoeffs {
    pub a: f64,
    pub v: f64,
    pub h: f64,
    pub d: f64,
    pub basis: BasisKind,
}

impl BlockCoeffs {
    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.v, self.h, self.d]
    }

    /// `v² + h² + d²`.
    pub fn detail_energy(&self) -> f64 {
        self.v * self.v + self.h * self.h + self.d * self.d
    }
}

#[inline]
fn matvec(m: &[[f64; 4]; 4], x: &[f64; 4]) -> [f64; 4] {
    m.map(|row| row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3])
}

fn analysis_for(basis: &WaveletBasis, scaling: Scaling) -> &[[f64; 4]; 4] {
    match scaling {
        Scaling::Literal => basis.analysis(),
        Scaling::Scaled => basis.scaled_analysis(),
    }
}

fn synthesis_for(basis: &WaveletBasis, scaling: Scaling) -> &[[f64; 4]; 4] {
    match scaling {
        Scaling::Literal => basis.synthesis(),
        Scaling::Scaled => basis.scaled_synthesis(),
    }
}

pub fn block_forward(b: &Block, basis: &WaveletBasis) -> BlockCoeffs {
    block_forward_scaled(b, basis, Scaling::Literal)
}

pub fn block_forward_scaled(b: &Block, basis: &WaveletBasis, scaling: Scaling) -> BlockCoeffs {
    let [a, v, h, d] = matvec(analysis_for(basis, scaling), &b.0);
    BlockCoeffs {
        a,
        v,
        h,
        d,
        basis: basis.kind(),
    }
}

pub fn block_inverse(c: &BlockCoeffs, basis: &WaveletBasis) -> Block {
    block_inverse_scaled(c, basis, Scaling::Literal)
}

pub fn block_inverse_scaled(c: &BlockCoeffs, basis: &WaveletBasis, scaling: Scaling) -> Block {
    Block(matvec(synthesis_for(basis, scaling), &c.as_array()))
}

/// Squared-norm weights `Σ ψ_k²` used by [`SelectionEnergy::Normalized`].
fn norm_weights(basis: &WaveletBasis) -> [f64; 3] {
    basis.tables().psi.map(|r| r.iter().map(|v| v * v).sum())
}

#[inline]
fn selection_energy(literal: &[f64; 4], weights: &[f64; 3], energy: SelectionEnergy) -> f64 {
    match energy {
        SelectionEnergy::Literal => {
            literal[1] * literal[1] + literal[2] * literal[2] + literal[3] * literal[3]
        }
        SelectionEnergy::Normalized => {
            literal[1] * literal[1] / weights[0]
                + literal[2] * literal[2] / weights[1]
                + literal[3] * literal[3] / weights[2]
        }
    }
}

/// Objective value of each builtin bank on one block.
pub fn block_energies(b: &Block, energy: SelectionEnergy) -> [f64; 4] {
    let bank = builtin_bank();
    BasisId::ALL.map(|id| {
        let basis = &bank[id.index() as usize];
        let c = matvec(basis.analysis(), &b.0);
        selection_energy(&c, &norm_weights(basis), energy)
    })
}

/// Index of the minimum, ties resolved to the lowest index.
fn argmin(values: &[f64; 4]) -> BasisId {
    let mut best = 0;
    for i in 1..4 {
        if values[i] < values[best] {
            best = i;
        }
    }
    BasisId::ALL[best]
}

/// Bank a block would select under the given objective.
pub fn select_block_basis(b: &Block, energy: SelectionEnergy) -> BasisId {
    argmin(&block_energies(b, energy))
}

/// Transforms with every builtin bank and keeps the one with the least
/// detail energy (lowest id on ties).
pub fn adaptive_block_forward(b: &Block) -> BlockCoeffs {
    let id = select_block_basis(b, SelectionEnergy::Literal);
    block_forward(b, &builtin_bank()[id.index() as usize])
}

/// How banks are assigned across a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    Fixed(BasisId),
    /// One bank per 2×2 block.
    PerBlock,
    /// One bank for the whole matrix.
    Global,
}

/// Record of the bank(s) used for one decomposition level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisIdMap {
    Fixed(BasisId),
    Global(BasisId),
    /// Row-major grid with one id per block.
    PerBlock {
        width: usize,
        height: usize,
        ids: Vec<BasisId>,
    },
}

impl BasisIdMap {
    pub fn id_at(&self, x: usize, y: usize) -> BasisId {
        match self {
            BasisIdMap::Fixed(id) | BasisIdMap::Global(id) => *id,
            BasisIdMap::PerBlock { width, ids, .. } => ids[y * width + x],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BasisIdMap::PerBlock { ids, .. } => ids.len(),
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of blocks using each bank.
    pub fn histogram(&self) -> [usize; 4] {
        let mut h = [0; 4];
        match self {
            BasisIdMap::Fixed(id) | BasisIdMap::Global(id) => h[id.index() as usize] = 1,
            BasisIdMap::PerBlock { ids, .. } => {
                ids.iter().for_each(|id| h[id.index() as usize] += 1)
            }
        }
        h
    }
}

/// Options shared by the matrix-level transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransformOptions {
    pub scaling: Scaling,
    pub energy: SelectionEnergy,
    pub exec: Exec,
}

/// One decomposition level: four half-size matrices and the bank record.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub a: Plane,
    pub v: Plane,
    pub h: Plane,
    pub d: Plane,
    pub ids: BasisIdMap,
}

impl SubbandSet {
    /// `‖V‖ + ‖H‖ + ‖D‖` with `‖X‖ = Σ x²`.
    pub fn detail_energy(&self) -> f64 {
        self.v.energy() + self.h.energy() + self.d.energy()
    }
}

#[inline]
fn block_at(m: &Plane, bx: usize, by: usize) -> Block {
    let (x, y) = (2 * bx, 2 * by);
    Block([
        m.get(x, y),
        m.get(x + 1, y),
        m.get(x, y + 1),
        m.get(x + 1, y + 1),
    ])
}

fn check_even(m: &Plane) -> Result<(), TransformError> {
    if m.is_empty() {
        return Err(TransformError::Empty);
    }
    if !m.width().is_multiple_of(2) || !m.height().is_multiple_of(2) {
        return Err(TransformError::OddDimensions(m.width(), m.height()));
    }
    Ok(())
}

/// Objective of each builtin bank over a whole even-sized matrix.
///
/// Rows are evaluated independently and summed in row order, so the result
/// does not depend on the execution policy.
pub fn global_energies(
    m: &Plane,
    energy: SelectionEnergy,
    exec: Exec,
) -> Result<[f64; 4], TransformError> {
    check_even(m)?;
    let (bw, bh) = (m.width() / 2, m.height() / 2);
    let bank = builtin_bank();
    let weights = bank.each_ref().map(norm_weights);
    let rows = exec.map(bh, |by| {
        let mut acc = [0.0; 4];
        for bx in 0..bw {
            let b = block_at(m, bx, by);
            for (k, basis) in bank.iter().enumerate() {
                let c = matvec(basis.analysis(), &b.0);
                acc[k] += selection_energy(&c, &weights[k], energy);
            }
        }
        acc
    });
    let mut total = [0.0; 4];
    for r in rows {
        for k in 0..4 {
            total[k] += r[k];
        }
    }
    Ok(total)
}

/// Tiles an even-sized matrix into 2×2 blocks and transforms each one.
pub fn subband_forward(
    m: &Plane,
    mode: BasisMode,
    opts: TransformOptions,
) -> Result<SubbandSet, TransformError> {
    check_even(m)?;
    let (bw, bh) = (m.width() / 2, m.height() / 2);
    let bank = builtin_bank();
    let fixed = match mode {
        BasisMode::Fixed(id) => Some(id),
        BasisMode::Global => Some(argmin(&global_energies(m, opts.energy, opts.exec)?)),
        BasisMode::PerBlock => None,
    };

    let rows = opts.exec.map(bh, |by| {
        (0..bw)
            .map(|bx| {
                let b = block_at(m, bx, by);
                let id = fixed.unwrap_or_else(|| select_block_basis(&b, opts.energy));
                let c = matvec(analysis_for(&bank[id.index() as usize], opts.scaling), &b.0);
                (c, id)
            })
            .collect::<Vec<_>>()
    });

    let mut out = [(); 4].map(|_| Plane::new(bw, bh));
    let mut ids = Vec::with_capacity(if fixed.is_none() { bw * bh } else { 0 });
    for (by, row) in rows.into_iter().enumerate() {
        for (bx, (c, id)) in row.into_iter().enumerate() {
            for (plane, v) in out.iter_mut().zip(c) {
                plane.set(bx, by, v);
            }
            if fixed.is_none() {
                ids.push(id);
            }
        }
    }
    let ids = match mode {
        BasisMode::Fixed(id) => BasisIdMap::Fixed(id),
        BasisMode::Global => BasisIdMap::Global(fixed.unwrap()),
        BasisMode::PerBlock => BasisIdMap::PerBlock {
            width: bw,
            height: bh,
            ids,
        },
    };
    let [a, v, h, d] = out;
    Ok(SubbandSet { a, v, h, d, ids })
}

/// Reassembles the matrix from one level's subbands.
pub fn subband_inverse(
    s: &SubbandSet,
    scaling: Scaling,
    exec: Exec,
) -> Result<Plane, TransformError> {
    let (bw, bh) = s.a.dims();
    if s.v.dims() != (bw, bh) || s.h.dims() != (bw, bh) || s.d.dims() != (bw, bh) {
        return Err(TransformError::DimensionMismatch);
    }
    if let BasisIdMap::PerBlock { width, height, ids } = &s.ids {
        if (*width, *height) != (bw, bh) || ids.len() != bw * bh {
            return Err(TransformError::DimensionMismatch);
        }
    }
    let bank = builtin_bank();
    let rows = exec.map(bh, |by| {
        let mut top = Vec::with_capacity(2 * bw);
        let mut bottom = Vec::with_capacity(2 * bw);
        for bx in 0..bw {
            let id = s.ids.id_at(bx, by);
            let c = [
                s.a.get(bx, by),
                s.v.get(bx, by),
                s.h.get(bx, by),
                s.d.get(bx, by),
            ];
            let [m11, m12, m21, m22] =
                matvec(synthesis_for(&bank[id.index() as usize], scaling), &c);
            top.extend([m11, m12]);
            bottom.extend([m21, m22]);
        }
        (top, bottom)
    });
    let mut data = Vec::with_capacity(4 * bw * bh);
    for (top, bottom) in rows {
        data.extend(top);
        data.extend(bottom);
    }
    Ok(Plane::from_vec(2 * bw, 2 * bh, data))
}

/// Detail subbands and bank record of one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDetail {
    pub v: Plane,
    pub h: Plane,
    pub d: Plane,
    pub ids: BasisIdMap,
}

/// Multi-level decomposition, finest level first.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandPyramid {
    pub levels: Vec<LevelDetail>,
    /// Approximation left after the last level.
    pub coarse: Plane,
    /// Unpadded input dimensions of each level.
    pub orig_dims: Vec<(usize, usize)>,
}

impl SubbandPyramid {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Input dimensions of every level, validating the requested depth.
///
/// Each level halves its edge-padded input (rounding up). Level 1 accepts any
/// non-empty matrix; deeper levels need an approximation larger than 1×1.
pub fn level_dims(
    width: usize,
    height: usize,
    levels: usize,
) -> Result<Vec<(usize, usize)>, TransformError> {
    if width == 0 || height == 0 {
        return Err(TransformError::Empty);
    }
    let too_many = TransformError::TooManyLevels {
        width,
        height,
        levels,
    };
    if levels == 0 || levels > MAX_LEVELS {
        return Err(too_many);
    }
    let mut dims = Vec::with_capacity(levels);
    let (mut w, mut h) = (width, height);
    for k in 0..levels {
        if k > 0 && w == 1 && h == 1 {
            return Err(too_many);
        }
        dims.push((w, h));
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    Ok(dims)
}

/// Subband dimensions `(width, height)` produced by a level with the given input.
pub fn half_dims((w, h): (usize, usize)) -> (usize, usize) {
    (w.div_ceil(2), h.div_ceil(2))
}

pub fn pyramid_forward(
    m: &Plane,
    levels: usize,
    mode: BasisMode,
    opts: TransformOptions,
) -> Result<SubbandPyramid, TransformError> {
    let orig_dims = level_dims(m.width(), m.height(), levels)?;
    let mut current = m.clone();
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let set = subband_forward(&current.pad_even(), mode, opts)?;
        out.push(LevelDetail {
            v: set.v,
            h: set.h,
            d: set.d,
            ids: set.ids,
        });
        current = set.a;
    }
    Ok(SubbandPyramid {
        levels: out,
        coarse: current,
        orig_dims,
    })
}

pub fn pyramid_inverse(
    p: &SubbandPyramid,
    scaling: Scaling,
    exec: Exec,
) -> Result<Plane, TransformError> {
    if p.levels.len() != p.orig_dims.len() || p.levels.is_empty() {
        return Err(TransformError::DimensionMismatch);
    }
    let mut current = p.coarse.clone();
    for (detail, &(w, h)) in p.levels.iter().zip(&p.orig_dims).rev() {
        if current.dims() != half_dims((w, h)) {
            return Err(TransformError::DimensionMismatch);
        }
        let set = SubbandSet {
            a: current,
            v: detail.v.clone(),
            h: detail.h.clone(),
            d: detail.d.clone(),
            ids: detail.ids.clone(),
        };
        current = subband_inverse(&set, scaling, exec)?.crop(w, h);
    }
    Ok(current)
}
