//! Piecewise-constant 2×2 Haar wavelet banks.
//!
//! A bank is three functions on the unit square, each constant on the four
//! quarter cells. Tables are stored row-major in block order
//! `(m11, m12, m21, m22)`: row index runs along `y`, column index along `x`.
//! The parameterized families address cells by their position in the
//! generator's ordering instead:
//!
//! ```text
//! position 1 -> [0,1/2] x [0,1/2]   -> m11
//! position 2 -> [0,1/2] x [1/2,1]   -> m21
//! position 3 -> [1/2,1] x [1/2,1]   -> m22
//! position 4 -> [1/2,1] x [0,1/2]   -> m12
//! ```

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default tolerance for every validator in this module.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Smallest admissible `|2·a22 + a21|` for the first family.
const DEGENERATE_EPS: f64 = 1e-12;

/// Reciprocal condition estimate below which a generated analysis matrix is
/// treated as singular.
const MIN_RCOND: f64 = 1e-12;

/// Cell index (row-major) of each generator position.
const CELL_OF_POSITION: [usize; 4] = [0, 2, 3, 1];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterbankError {
    #[error("unknown basis id `{0}` (expected set1, set2, set3 or set4)")]
    UnknownBasis(String),
    #[error("degenerate parameters: 2*a22 + a21 = {0}")]
    DegenerateParameters(f64),
    #[error("analysis matrix is singular")]
    Singular,
    #[error("angle {name} = {value} outside {range}")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// One of the four shipped banks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisId {
    Set1,
    Set2,
    Set3,
    Set4,
}

impl BasisId {
    pub const ALL: [BasisId; 4] = [BasisId::Set1, BasisId::Set2, BasisId::Set3, BasisId::Set4];

    /// Two-bit identifier used in id maps and the container.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisId::Set1 => "set1",
            BasisId::Set2 => "set2",
            BasisId::Set3 => "set3",
            BasisId::Set4 => "set4",
        }
    }
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisId {
    type Err = FilterbankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "set1" => Ok(BasisId::Set1),
            "set2" => Ok(BasisId::Set2),
            "set3" => Ok(BasisId::Set3),
            "set4" => Ok(BasisId::Set4),
            other => Err(FilterbankError::UnknownBasis(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Builtin(BasisId),
    Custom,
}

/// The three wavelet tables of a bank, without any derived matrices.
///
/// Tables need not form a valid basis; [`WaveletBasis`] is the checked form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletTables {
    pub psi: [[f64; 4]; 3],
}

impl WaveletTables {
    /// Builds tables from 2×2 grids `[[m11, m12], [m21, m22]]`.
    pub fn from_grids(grids: [[[f64; 2]; 2]; 3]) -> Self {
        let mut psi = [[0.0; 4]; 3];
        for (row, g) in psi.iter_mut().zip(grids.iter()) {
            *row = [g[0][0], g[0][1], g[1][0], g[1][1]];
        }
        Self { psi }
    }

    /// Builds tables from coefficients indexed by generator position,
    /// `coeffs[i][j]` being `a_{i+1, j+1}`.
    pub fn from_positions(coeffs: [[f64; 4]; 3]) -> Self {
        let mut psi = [[0.0; 4]; 3];
        for (row, c) in psi.iter_mut().zip(coeffs.iter()) {
            for (pos, &value) in c.iter().enumerate() {
                row[CELL_OF_POSITION[pos]] = value;
            }
        }
        Self { psi }
    }

    /// Coefficients in generator-position order (inverse of [`Self::from_positions`]).
    pub fn positions(&self) -> [[f64; 4]; 3] {
        let mut out = [[0.0; 4]; 3];
        for (o, row) in out.iter_mut().zip(self.psi.iter()) {
            for (pos, v) in o.iter_mut().enumerate() {
                *v = row[CELL_OF_POSITION[pos]];
            }
        }
        out
    }

    pub fn grid(&self, k: usize) -> [[f64; 2]; 2] {
        let p = &self.psi[k];
        [[p[0], p[1]], [p[2], p[3]]]
    }

    /// Scales function `k` by `factor`.
    pub fn scaled(mut self, k: usize, factor: f64) -> Self {
        for v in self.psi[k].iter_mut() {
            *v *= factor;
        }
        self
    }
}

/// Tables of a builtin bank.
///
/// Sets 2–4 differ from their typeset form; see [`printed_tables`].
pub fn builtin_tables(id: BasisId) -> WaveletTables {
    WaveletTables::from_grids(builtin_grid_i8(id).map(|g| g.map(|r| r.map(f64::from))))
}

/// The banks exactly as originally typeset. Sets 2–4 are not orthogonal in
/// this form (set3 is even singular); kept for auditing only.
pub fn printed_tables(id: BasisId) -> WaveletTables {
    let grids: [[[i8; 2]; 2]; 3] = match id {
        BasisId::Set1 => builtin_grid_i8(BasisId::Set1),
        BasisId::Set2 => [[[1, -1], [1, -1]], [[1, 0], [-1, 0]], [[0, 1], [0, 1]]],
        BasisId::Set3 => [[[1, -1], [1, -1]], [[1, -1], [0, 0]], [[0, 0], [1, -1]]],
        BasisId::Set4 => [[[1, -1], [1, -1]], [[1, 0], [0, -1]], [[0, 1], [-1, -1]]],
    };
    WaveletTables::from_grids(grids.map(|g| g.map(|r| r.map(f64::from))))
}

fn builtin_grid_i8(id: BasisId) -> [[[i8; 2]; 2]; 3] {
    match id {
        BasisId::Set1 => [[[1, -1], [1, -1]], [[1, 1], [-1, -1]], [[1, -1], [-1, 1]]],
        BasisId::Set2 => [[[1, -1], [1, -1]], [[1, 0], [-1, 0]], [[0, 1], [0, -1]]],
        BasisId::Set3 => [[[1, 1], [-1, -1]], [[1, -1], [0, 0]], [[0, 0], [1, -1]]],
        BasisId::Set4 => [[[1, -1], [-1, 1]], [[1, 0], [0, -1]], [[0, 1], [-1, 0]]],
    }
}

type Mat4 = [[f64; 4]; 4];

/// A validated bank together with its 4×4 analysis and synthesis matrices.
///
/// `analysis` maps a block `(m11, m12, m21, m22)` to `(a, v, h, d)` with the
/// literal (unnormalized) detail sums; `synthesis` is its exact inverse. The
/// `scaled_*` pair divides the three detail rows by 4, which is the variant
/// the codec stores.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    kind: BasisKind,
    tables: WaveletTables,
    analysis: Mat4,
    synthesis: Mat4,
    scaled_analysis: Mat4,
    scaled_synthesis: Mat4,
}

impl WaveletBasis {
    /// Builds a builtin bank; the inverse is computed in exact rational
    /// arithmetic so every entry is the correctly rounded value.
    pub fn builtin(id: BasisId) -> Self {
        let grids = builtin_grid_i8(id);
        let mut exact = [[Ratio::new(1i64, 4); 4]; 4];
        for (k, g) in grids.iter().enumerate() {
            let flat = [g[0][0], g[0][1], g[1][0], g[1][1]];
            for (c, v) in flat.iter().enumerate() {
                exact[k + 1][c] = Ratio::from_integer(i64::from(*v));
            }
        }
        let inverse = invert_exact(exact).expect("builtin banks are nonsingular");
        let to_f64 = |r: &Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
        let analysis = exact.map(|row| row.each_ref().map(to_f64));
        let synthesis = inverse.map(|row| row.each_ref().map(to_f64));
        Self::assemble(
            BasisKind::Builtin(id),
            builtin_tables(id),
            analysis,
            synthesis,
        )
    }

    /// Builds a bank from arbitrary tables, inverting in floating point.
    pub fn from_tables(tables: WaveletTables) -> Result<Self, FilterbankError> {
        let analysis = analysis_matrix(&tables);
        let synthesis = invert_f64(&analysis).ok_or(FilterbankError::Singular)?;
        Ok(Self::assemble(
            BasisKind::Custom,
            tables,
            analysis,
            synthesis,
        ))
    }

    fn assemble(kind: BasisKind, tables: WaveletTables, analysis: Mat4, synthesis: Mat4) -> Self {
        let mut scaled_analysis = analysis;
        let mut scaled_synthesis = synthesis;
        for r in 1..4 {
            for c in 0..4 {
                scaled_analysis[r][c] = analysis[r][c] / 4.0;
                scaled_synthesis[c][r] = synthesis[c][r] * 4.0;
            }
        }
        Self {
            kind,
            tables,
            analysis,
            synthesis,
            scaled_analysis,
            scaled_synthesis,
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn tables(&self) -> &WaveletTables {
        &self.tables
    }

    pub fn analysis(&self) -> &[[f64; 4]; 4] {
        &self.analysis
    }

    pub fn synthesis(&self) -> &[[f64; 4]; 4] {
        &self.synthesis
    }

    pub fn scaled_analysis(&self) -> &[[f64; 4]; 4] {
        &self.scaled_analysis
    }

    pub fn scaled_synthesis(&self) -> &[[f64; 4]; 4] {
        &self.scaled_synthesis
    }
}

/// Lookup for the four builtin banks, built once.
pub fn builtin_bank() -> &'static [WaveletBasis; 4] {
    use std::sync::OnceLock;
    static BANK: OnceLock<[WaveletBasis; 4]> = OnceLock::new();
    BANK.get_or_init(|| BasisId::ALL.map(WaveletBasis::builtin))
}

/// `builtin_basis` by name, e.g. `"set3"`.
pub fn builtin_basis(name: &str) -> Result<WaveletBasis, FilterbankError> {
    let id: BasisId = name.parse()?;
    Ok(builtin_bank()[id.index() as usize].clone())
}

fn analysis_matrix(t: &WaveletTables) -> Mat4 {
    [[0.25; 4], t.psi[0], t.psi[1], t.psi[2]]
}

fn invert_exact(mut m: [[Ratio<i64>; 4]; 4]) -> Option<[[Ratio<i64>; 4]; 4]> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    let mut inv = [[zero; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = one;
    }
    for col in 0..4 {
        let pivot = (col..4).find(|&r| m[r][col] != zero)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for c in 0..4 {
            m[col][c] /= p;
            inv[col][c] /= p;
        }
        for r in 0..4 {
            if r != col && m[r][col] != zero {
                let f = m[r][col];
                for c in 0..4 {
                    let (mc, ic) = (m[col][c], inv[col][c]);
                    m[r][c] -= f * mc;
                    inv[r][c] -= f * ic;
                }
            }
        }
    }
    Some(inv)
}

/// Gauss–Jordan with partial pivoting; `None` when the matrix is singular or
/// too badly conditioned for the inverse to be trusted.
fn invert_f64(a: &Mat4) -> Option<Mat4> {
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return None;
    }
    let mut m = *a;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[pivot][col].abs() <= scale * MIN_RCOND {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for c in 0..4 {
            m[col][c] /= p;
            inv[col][c] /= p;
        }
        for r in 0..4 {
            if r != col {
                let f = m[r][col];
                for c in 0..4 {
                    m[r][c] -= f * m[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    // Infinity-norm condition estimate.
    let norm = |x: &Mat4| {
        x.iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let rcond = 1.0 / (norm(a) * norm(&inv));
    (rcond.is_finite() && rcond > MIN_RCOND).then_some(inv)
}

/// Parameters of the one-parameter-plus-three family (`λ, a21, a22, a31`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family1Params {
    pub lambda: f64,
    pub a21: f64,
    pub a22: f64,
    pub a31: f64,
}

impl Family1Params {
    /// Solves the bilinear constraint for `a32`.
    pub fn a32(&self) -> Result<f64, FilterbankError> {
        let den = 2.0 * self.a22 + self.a21;
        if den.abs() <= DEGENERATE_EPS {
            return Err(FilterbankError::DegenerateParameters(den));
        }
        Ok(-self.a31 * (2.0 * self.a21 + self.a22) / den)
    }
}

/// Tables of the first family. Fails only on a zero denominator; the result
/// may still be singular (see [`basis_from_family1`]).
pub fn family1_tables(p: &Family1Params) -> Result<WaveletTables, FilterbankError> {
    let a32 = p.a32()?;
    let l = p.lambda;
    Ok(WaveletTables::from_positions([
        [l, l, -3.0 * l, l],
        [p.a21, p.a22, -p.a21 - p.a22, 0.0],
        [p.a31, a32, -p.a31 - a32, 0.0],
    ]))
}

pub fn basis_from_family1(p: &Family1Params) -> Result<WaveletBasis, FilterbankError> {
    WaveletBasis::from_tables(family1_tables(p)?)
}

/// Largest absolute violation of the first family's defining equalities,
/// read back from the tables.
pub fn family1_residual(t: &WaveletTables) -> f64 {
    let a = t.positions();
    let l = a[0][0];
    let mut worst = [
        a[0][1] - l,
        a[0][3] - l,
        a[0][2] + 3.0 * l,
        2.0 * a[1][0] * a[2][0] + 2.0 * a[1][1] * a[2][1] + a[1][0] * a[2][1] + a[1][1] * a[2][0],
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    for row in &a[1..] {
        worst = worst
            .max(row[3].abs())
            .max((row[2] + row[0] + row[1]).abs());
    }
    worst
}

/// Angles `α ∈ [0, π]`, `β ∈ [0, 2π)` of the trigonometric family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleParams {
    alpha: [f64; 3],
    beta: [f64; 3],
}

impl AngleParams {
    pub fn new(alpha: [f64; 3], beta: [f64; 3]) -> Result<Self, FilterbankError> {
        const ALPHA: [&str; 3] = ["alpha1", "alpha2", "alpha3"];
        const BETA: [&str; 3] = ["beta1", "beta2", "beta3"];
        for (i, &a) in alpha.iter().enumerate() {
            if !(0.0..=PI).contains(&a) {
                return Err(FilterbankError::AngleOutOfRange {
                    name: ALPHA[i],
                    value: a,
                    range: "[0, pi]",
                });
            }
        }
        for (i, &b) in beta.iter().enumerate() {
            if !(0.0..2.0 * PI).contains(&b) {
                return Err(FilterbankError::AngleOutOfRange {
                    name: BETA[i],
                    value: b,
                    range: "[0, 2pi)",
                });
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    pub fn beta(&self) -> [f64; 3] {
        self.beta
    }
}

/// Coefficients of one function of the trigonometric family, in position
/// order. The fourth value closes the function to zero mean.
pub fn angle_function(alpha: f64, beta: f64) -> [f64; 4] {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let a1 = ca / s3 - 2.0 * sa * cb / s6;
    let a2 = ca / s3 + sa * cb / SQRT_2 + sa * sb / s6;
    let a3 = ca / s3 - sa * cb / SQRT_2 + sa * sb / s6;
    [a1, a2, a3, -(a1 + a2 + a3)]
}

pub fn angle_tables(p: &AngleParams) -> WaveletTables {
    WaveletTables::from_positions([0, 1, 2].map(|i| angle_function(p.alpha[i], p.beta[i])))
}

/// Builds a candidate from angles. Orthogonality is not guaranteed for
/// arbitrary angle combinations; the report says whether it holds.
pub fn basis_from_angles(
    p: &AngleParams,
) -> Result<(WaveletBasis, ValidationReport), FilterbankError> {
    let tables = angle_tables(p);
    let report = validate_orthogonality(&tables, DEFAULT_TOLERANCE);
    Ok((WaveletBasis::from_tables(tables)?, report))
}

/// Orthogonality diagnostics for a set of tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    /// `Σ a_ij` per function.
    pub sums: [f64; 3],
    pub zero_mean: [bool; 3],
    /// `⟨ψⁱ, ψʲ⟩ = ¼ Σ ψⁱψʲ`; the diagonal holds the squared norms.
    pub inner: [[f64; 3]; 3],
    pub pairwise_orthogonal: [[bool; 3]; 3],
    pub norms: [f64; 3],
    pub orthonormal: bool,
}

impl ValidationReport {
    /// All off-diagonal inner products vanish.
    pub fn orthogonal(&self) -> bool {
        self.pairwise_orthogonal.iter().flatten().all(|&b| b)
    }

    pub fn all_zero_mean(&self) -> bool {
        self.zero_mean.iter().all(|&b| b)
    }

    /// Orthonormal and orthogonal to the scaling function.
    pub fn is_onb(&self) -> bool {
        self.orthonormal && self.all_zero_mean()
    }
}

pub fn validate_orthogonality(t: &WaveletTables, tol: f64) -> ValidationReport {
    assert!(tol > 0.0, "tolerance must be positive");
    let sums = t.psi.map(|row| row.iter().sum::<f64>());
    let mut inner = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inner[i][j] = 0.25 * (0..4).map(|c| t.psi[i][c] * t.psi[j][c]).sum::<f64>();
        }
    }
    let mut pairwise_orthogonal = [[true; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                pairwise_orthogonal[i][j] = inner[i][j].abs() <= tol;
            }
        }
    }
    let norms = [inner[0][0], inner[1][1], inner[2][2]];
    let orthonormal = norms.iter().all(|n| (n - 1.0).abs() <= tol)
        && pairwise_orthogonal.iter().flatten().all(|&b| b);
    ValidationReport {
        tolerance: tol,
        sums,
        zero_mean: sums.map(|s| s.abs() <= tol),
        inner,
        pairwise_orthogonal,
        norms,
        orthonormal,
    }
}

/// Outcome of matching a bank's zero pattern against the admissible forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorollaryMatch {
    /// Some function does not have exactly one zero coefficient.
    NotApplicable,
    NoMatch,
    Pattern(u8),
}

/// Zero positions (1-based, position order) of ψ¹, ψ², ψ³ for each
/// admissible single-zero form.
pub const COROLLARY_PATTERNS: [[usize; 3]; 4] = [[4, 1, 2], [2, 3, 4], [1, 2, 3], [3, 4, 1]];

pub fn corollary_pattern_check(t: &WaveletTables) -> CorollaryMatch {
    const ZERO: f64 = 1e-12;
    let positions = t.positions();
    let mut zeros = [0usize; 3];
    for (z, row) in zeros.iter_mut().zip(positions.iter()) {
        let mut found = row.iter().enumerate().filter(|(_, v)| v.abs() <= ZERO);
        match (found.next(), found.next()) {
            (Some((pos, _)), None) => *z = pos + 1,
            _ => return CorollaryMatch::NotApplicable,
        }
    }
    COROLLARY_PATTERNS
        .iter()
        .position(|p| *p == zeros)
        .map_or(CorollaryMatch::NoMatch, |i| {
            CorollaryMatch::Pattern(i as u8 + 1)
        })
}

/// Lattice digit of each block cell, `(x, y)`.
const CELL_DIGITS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];

/// Representatives of `Z² / 2Z²`.
const COSETS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];

/// Modulation matrix `{m_ν(ξ + s_k/2)}` for ν, k = 0..3.
///
/// Mask ν has coefficient `½·(value/2)` on each cell's digit, the leading ½
/// being `|det M|^{-1/2}`; row 0 is the scaling mask with all values 1.
pub fn modulation_matrix(t: &WaveletTables, xi: [f64; 2]) -> [[Complex64; 4]; 4] {
    let rows = [[1.0; 4], t.psi[0], t.psi[1], t.psi[2]];
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (nu, coeffs) in rows.iter().enumerate() {
        for (k, s) in COSETS.iter().enumerate() {
            let point = [xi[0] + s[0] / 2.0, xi[1] + s[1] / 2.0];
            out[nu][k] = coeffs
                .iter()
                .zip(CELL_DIGITS.iter())
                .map(|(&c, n)| {
                    let phase = 2.0 * PI * (n[0] * point[0] + n[1] * point[1]);
                    Complex64::from_polar(c / 4.0, phase)
                })
                .sum();
        }
    }
    out
}

/// `max |(M M*) − I|` over all entries at frequency `xi`.
pub fn unitarity_deviation(t: &WaveletTables, xi: [f64; 2]) -> f64 {
    let m = modulation_matrix(t, xi);
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let s: Complex64 = (0..4).map(|k| m[i][k] * m[j][k].conj()).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Checks unitarity at `samples` pseudo-random frequencies in `[0,1)²`
/// drawn from a fixed-seed stream.
pub fn unitarity_check(t: &WaveletTables, samples: usize, tol: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4841_4152);
    (0..samples.max(1)).all(|_| {
        let xi = [rng.gen::<f64>(), rng.gen::<f64>()];
        unitarity_deviation(t, xi) <= tol
    })
}
