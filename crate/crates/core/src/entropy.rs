//! Canonical Huffman coding over byte alphabets.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Longest codeword the coder emits or accepts.
pub const MAX_CODE_LEN: u8 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EntropyError {
    #[error("no symbol has a nonzero frequency")]
    EmptyAlphabet,
    #[error("symbol {0} has no code")]
    SymbolNotInTable(u8),
    #[error("bit stream exhausted after {decoded} of {expected} symbols")]
    Exhausted { decoded: usize, expected: usize },
    #[error("bit pattern matches no codeword")]
    InvalidCode,
    #[error("{0} unused bits after the last symbol")]
    TrailingBits(u64),
    #[error("code lengths violate the Kraft inequality")]
    KraftViolation,
    #[error("code length {0} exceeds the maximum of 32")]
    CodeTooLong(u8),
    #[error("code table has no symbols")]
    EmptyTable,
}

/// Canonical prefix code: 256 lengths (0 = absent) and their codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTable {
    lengths: [u8; 256],
    codes: [u32; 256],
}

impl CodeTable {
    /// Rebuilds the canonical code from lengths alone.
    pub fn from_lengths(lengths: [u8; 256]) -> Result<Self, EntropyError> {
        if let Some(&l) = lengths.iter().find(|&&l| l > MAX_CODE_LEN) {
            return Err(EntropyError::CodeTooLong(l));
        }
        if lengths.iter().all(|&l| l == 0) {
            return Err(EntropyError::EmptyTable);
        }
        let kraft: u64 = lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| 1u64 << (MAX_CODE_LEN - l))
            .sum();
        if kraft > 1u64 << MAX_CODE_LEN {
            return Err(EntropyError::KraftViolation);
        }

        let mut order: Vec<u8> = (0..=255u8).filter(|&s| lengths[s as usize] > 0).collect();
        order.sort_by_key(|&s| (lengths[s as usize], s));
        let mut codes = [0u32; 256];
        let mut code = 0u64;
        let mut prev_len = lengths[order[0] as usize];
        for &s in &order {
            let len = lengths[s as usize];
            code <<= len - prev_len;
            codes[s as usize] = code as u32;
            code += 1;
            prev_len = len;
        }
        Ok(Self { lengths, codes })
    }

    pub fn lengths(&self) -> &[u8; 256] {
        &self.lengths
    }

    pub fn code(&self, symbol: u8) -> Option<(u32, u8)> {
        let len = self.lengths[symbol as usize];
        (len > 0).then(|| (self.codes[symbol as usize], len))
    }

    /// Number of symbols with a code.
    pub fn alphabet_size(&self) -> usize {
        self.lengths.iter().filter(|&&l| l > 0).count()
    }

    /// `Σ 2^(−len)` over present symbols.
    pub fn kraft_sum(&self) -> f64 {
        self.lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| (-f64::from(l)).exp2())
            .sum()
    }

    /// Total encoded size in bits for the given symbol counts.
    pub fn encoded_bits(&self, freqs: &[u64; 256]) -> u64 {
        freqs
            .iter()
            .zip(self.lengths.iter())
            .map(|(&f, &l)| f * u64::from(l))
            .sum()
    }
}

pub fn histogram(symbols: &[u8]) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &s in symbols {
        h[s as usize] += 1;
    }
    h
}

/// Builds a Huffman code for the given frequencies.
///
/// Merges are ordered by `(frequency, smallest symbol in subtree)`, which
/// makes the lengths deterministic. A single-symbol alphabet gets length 1.
pub fn build_code(freqs: &[u64; 256]) -> Result<CodeTable, EntropyError> {
    let present: Vec<usize> = (0..256).filter(|&s| freqs[s] > 0).collect();
    let mut lengths = [0u8; 256];
    match present.len() {
        0 => return Err(EntropyError::EmptyAlphabet),
        1 => {
            lengths[present[0]] = 1;
            return CodeTable::from_lengths(lengths);
        }
        _ => {}
    }

    // Nodes 0..n are leaves; parents are appended as they are created.
    let mut parent: Vec<usize> = vec![usize::MAX; present.len()];
    let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> = present
        .iter()
        .enumerate()
        .map(|(node, &s)| Reverse((freqs[s], s, node)))
        .collect();
    while heap.len() > 1 {
        let Reverse((f1, s1, n1)) = heap.pop().unwrap();
        let Reverse((f2, s2, n2)) = heap.pop().unwrap();
        let node = parent.len();
        parent.push(usize::MAX);
        parent[n1] = node;
        parent[n2] = node;
        heap.push(Reverse((f1 + f2, s1.min(s2), node)));
    }

    let mut depth = vec![0usize; parent.len()];
    for node in (0..parent.len()).rev() {
        if parent[node] != usize::MAX {
            depth[node] = depth[parent[node]] + 1;
        }
    }
    let mut max_depth = 0;
    for (leaf, &s) in present.iter().enumerate() {
        max_depth = max_depth.max(depth[leaf]);
        lengths[s] = depth[leaf].min(255) as u8;
    }
    if max_depth > MAX_CODE_LEN as usize {
        limit_lengths(&mut lengths, freqs, &present);
    }
    CodeTable::from_lengths(lengths)
}

/// Redistributes lengths so none exceeds [`MAX_CODE_LEN`] while keeping the
/// code complete. Only reachable for extremely skewed frequencies.
fn limit_lengths(lengths: &mut [u8; 256], freqs: &[u64; 256], present: &[usize]) {
    let max = MAX_CODE_LEN as usize;
    let mut count = vec![0u64; 256];
    for &s in present {
        count[(lengths[s] as usize).min(max)] += 1;
    }
    let mut total: u64 = (1..=max).map(|l| count[l] << (max - l)).sum();
    while total > 1u64 << max {
        count[max] -= 1;
        for l in (1..max).rev() {
            if count[l] > 0 {
                count[l] -= 1;
                count[l + 1] += 2;
                break;
            }
        }
        total -= 1;
    }
    let mut by_freq: Vec<usize> = present.to_vec();
    by_freq.sort_by_key(|&s| (Reverse(freqs[s]), s));
    let mut it = by_freq.into_iter();
    for l in 1..=max {
        for _ in 0..count[l] {
            if let Some(s) = it.next() {
                lengths[s] = l as u8;
            }
        }
    }
}

/// MSB-first bit packer.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    pending: u32,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `len` bits of `code`, most significant first.
    pub fn write(&mut self, code: u32, len: u8) {
        self.acc = (self.acc << len) | u64::from(code);
        self.pending += u32::from(len);
        self.bits += u64::from(len);
        while self.pending >= 8 {
            self.pending -= 8;
            self.bytes.push((self.acc >> self.pending) as u8);
        }
        self.acc &= (1u64 << self.pending) - 1;
    }

    /// Returns the packed bytes (final byte zero-padded) and the bit count.
    pub fn finish(mut self) -> (Vec<u8>, u64) {
        if self.pending > 0 {
            self.bytes.push((self.acc << (8 - self.pending)) as u8);
        }
        (self.bytes, self.bits)
    }
}

/// MSB-first bit reader bounded by an explicit bit length.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    limit: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        Self {
            bytes,
            pos: 0,
            limit: bit_len.min(bytes.len() as u64 * 8),
        }
    }

    #[inline]
    pub fn read_bit(&mut self) -> Option<u32> {
        if self.pos >= self.limit {
            return None;
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Some(u32::from(bit))
    }

    pub fn position(&self) -> u64 {
        self.pos
    }
}

pub fn encode(symbols: &[u8], table: &CodeTable) -> Result<(Vec<u8>, u64), EntropyError> {
    let mut w = BitWriter::new();
    for &s in symbols {
        let (code, len) = table.code(s).ok_or(EntropyError::SymbolNotInTable(s))?;
        w.write(code, len);
    }
    Ok(w.finish())
}

/// Per-length canonical decoding tables.
struct Decoder {
    first: [u64; MAX_CODE_LEN as usize + 1],
    count: [u64; MAX_CODE_LEN as usize + 1],
    offset: [usize; MAX_CODE_LEN as usize + 1],
    symbols: Vec<u8>,
    max_len: usize,
}

impl Decoder {
    fn new(table: &CodeTable) -> Self {
        let n = MAX_CODE_LEN as usize + 1;
        let mut count = [0u64; MAX_CODE_LEN as usize + 1];
        let mut symbols: Vec<u8> = (0..=255u8)
            .filter(|&s| table.lengths[s as usize] > 0)
            .collect();
        symbols.sort_by_key(|&s| (table.lengths[s as usize], s));
        for &s in &symbols {
            count[table.lengths[s as usize] as usize] += 1;
        }
        let mut first = [0u64; MAX_CODE_LEN as usize + 1];
        let mut offset = [0usize; MAX_CODE_LEN as usize + 1];
        let (mut code, mut index) = (0u64, 0usize);
        for l in 1..n {
            code <<= 1;
            first[l] = code;
            offset[l] = index;
            code += count[l];
            index += count[l] as usize;
        }
        let max_len = (1..n).rev().find(|&l| count[l] > 0).unwrap_or(0);
        Self {
            first,
            count,
            offset,
            symbols,
            max_len,
        }
    }
}

/// Reads exactly `n` symbols from the first `bit_len` bits of `bytes`,
/// which must be consumed completely.
pub fn decode(
    bytes: &[u8],
    bit_len: u64,
    table: &CodeTable,
    n: usize,
) -> Result<Vec<u8>, EntropyError> {
    let dec = Decoder::new(table);
    let mut r = BitReader::new(bytes, bit_len);
    let mut out = Vec::with_capacity(n.min(bit_len as usize));
    while out.len() < n {
        let mut code = 0u64;
        let mut len = 0usize;
        loop {
            let bit = r.read_bit().ok_or(EntropyError::Exhausted {
                decoded: out.len(),
                expected: n,
            })?;
            code = (code << 1) | u64::from(bit);
            len += 1;
            let rel = code.wrapping_sub(dec.first[len]);
            if code >= dec.first[len] && rel < dec.count[len] {
                out.push(dec.symbols[dec.offset[len] + rel as usize]);
                break;
            }
            if len >= dec.max_len {
                return Err(EntropyError::InvalidCode);
            }
        }
    }
    let unused = bit_len - r.position();
    if unused != 0 {
        return Err(EntropyError::TrailingBits(unused));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn freqs(pairs: &[(u8, u64)]) -> [u64; 256] {
        let mut f = [0u64; 256];
        for &(s, c) in pairs {
            f[s as usize] = c;
        }
        f
    }

    /// Lengths from an independent textbook construction: repeatedly merge
    /// the two lightest groups, adding one bit to every member.
    fn reference_lengths(f: &[u64; 256]) -> [u8; 256] {
        let mut groups: Vec<(u64, Vec<usize>)> = (0..256)
            .filter(|&s| f[s] > 0)
            .map(|s| (f[s], vec![s]))
            .collect();
        let mut len = [0u8; 256];
        if groups.len() == 1 {
            len[groups[0].1[0]] = 1;
            return len;
        }
        while groups.len() > 1 {
            groups.sort_by_key(|(w, m)| (*w, *m.iter().min().unwrap()));
            let (w1, m1) = groups.remove(0);
            let (w2, m2) = groups.remove(0);
            for &s in m1.iter().chain(&m2) {
                len[s] += 1;
            }
            groups.push((w1 + w2, m1.into_iter().chain(m2).collect()));
        }
        len
    }

    #[test]
    fn three_symbol_example() {
        let f = freqs(&[(b'a', 3), (b'b', 1), (b'c', 1)]);
        let t = build_code(&f).unwrap();
        assert_eq!(t.lengths()[b'a' as usize], 1);
        assert_eq!(t.lengths()[b'b' as usize], 2);
        assert_eq!(t.lengths()[b'c' as usize], 2);
        assert_eq!(t.encoded_bits(&f) as f64 / 5.0, 1.4);
    }

    #[test]
    fn single_symbol() {
        let f = freqs(&[(9, 100)]);
        let t = build_code(&f).unwrap();
        assert_eq!(t.code(9), Some((0, 1)));
        let symbols = vec![9u8; 100];
        let (bytes, bits) = encode(&symbols, &t).unwrap();
        assert_eq!(bits, 100);
        assert_eq!(decode(&bytes, bits, &t, 100).unwrap(), symbols);
    }

    #[test]
    fn unused_bits_rejected() {
        let t = build_code(&freqs(&[(1, 3), (2, 1)])).unwrap();
        let (bytes, bits) = encode(&[1, 2, 1], &t).unwrap();
        assert_eq!(decode(&bytes, bits, &t, 3).unwrap(), vec![1, 2, 1]);
        assert_eq!(
            decode(&bytes, bits, &t, 2).unwrap_err(),
            EntropyError::TrailingBits(1)
        );
    }

    #[test]
    fn uniform_alphabet_is_flat() {
        let t = build_code(&[5u64; 256]).unwrap();
        assert!(t.lengths().iter().all(|&l| l == 8));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(
            build_code(&[0; 256]).unwrap_err(),
            EntropyError::EmptyAlphabet
        );
        let t = build_code(&freqs(&[(1, 1), (2, 1)])).unwrap();
        let (bytes, bits) = encode(&[], &t).unwrap();
        assert!(bytes.is_empty() && bits == 0);
        assert!(decode(&bytes, bits, &t, 0).unwrap().is_empty());
    }

    #[test]
    fn matches_reference_construction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.gen_range(1..=256);
            let mut f = [0u64; 256];
            for s in 0..n {
                f[s] = rng.gen_range(0..1000);
            }
            if f.iter().all(|&c| c == 0) {
                continue;
            }
            let t = build_code(&f).unwrap();
            let reference = reference_lengths(&f);
            // Tie handling can swap equal-cost lengths; total cost must match.
            let cost = |l: &[u8; 256]| {
                f.iter()
                    .zip(l)
                    .map(|(&c, &l)| c * u64::from(l))
                    .sum::<u64>()
            };
            assert_eq!(t.encoded_bits(&f), cost(&reference));
        }
    }

    #[test]
    fn prefix_free_and_kraft_complete() {
        let f = freqs(&[(0, 50), (1, 20), (2, 20), (3, 5), (4, 3), (5, 1), (6, 1)]);
        let t = build_code(&f).unwrap();
        assert_eq!(t.kraft_sum(), 1.0);
        let codes: Vec<(u32, u8)> = (0..=255u8).filter_map(|s| t.code(s)).collect();
        for (i, &(ca, la)) in codes.iter().enumerate() {
            for &(cb, lb) in &codes[i + 1..] {
                let l = la.min(lb);
                assert_ne!(ca >> (la - l), cb >> (lb - l));
            }
        }
    }

    #[test]
    fn fibonacci_frequencies_are_length_limited() {
        let mut f = [0u64; 256];
        let (mut a, mut b) = (1u64, 1u64);
        for slot in f.iter_mut().take(60) {
            *slot = a;
            (a, b) = (b, a + b);
        }
        let t = build_code(&f).unwrap();
        assert!(t.lengths().iter().all(|&l| l <= MAX_CODE_LEN));
        assert!((t.kraft_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        let mut l = [0u8; 256];
        l[0] = 1;
        l[1] = 1;
        l[2] = 1;
        assert_eq!(
            CodeTable::from_lengths(l).unwrap_err(),
            EntropyError::KraftViolation
        );
        l = [0; 256];
        l[0] = 40;
        assert_eq!(
            CodeTable::from_lengths(l).unwrap_err(),
            EntropyError::CodeTooLong(40)
        );
        assert_eq!(
            CodeTable::from_lengths([0; 256]).unwrap_err(),
            EntropyError::EmptyTable
        );
    }

    #[test]
    fn invalid_prefix_detected() {
        // Single-symbol code "0"; a 1 bit matches nothing.
        let t = build_code(&freqs(&[(3, 1)])).unwrap();
        assert_eq!(
            decode(&[0x80], 8, &t, 1).unwrap_err(),
            EntropyError::InvalidCode
        );
        assert!(matches!(
            decode(&[0x00], 2, &t, 3),
            Err(EntropyError::Exhausted { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip(symbols in prop::collection::vec(any::<u8>(), 1..2000)) {
            let t = build_code(&histogram(&symbols)).unwrap();
            let (bytes, bits) = encode(&symbols, &t).unwrap();
            prop_assert_eq!(bytes.len() as u64, bits.div_ceil(8));
            if bits % 8 != 0 {
                prop_assert_eq!(bytes.last().unwrap() & ((1u8 << (8 - bits % 8)) - 1), 0);
            }
            prop_assert_eq!(decode(&bytes, bits, &t, symbols.len()).unwrap(), symbols);
        }
    }
}
