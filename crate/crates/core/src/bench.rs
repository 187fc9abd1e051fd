//! Parameter sweeps over an image corpus.

use std::time::Instant;

use crate::codec::{
    compute_metrics, decode_image_with, encode_image, EncodeParams, ModeLabel, Psnr, ALL_MODES,
};
use crate::container;
use crate::exec::Exec;
use crate::filterbank::BasisId;
use crate::pnm::ImageBuffer;
use crate::transform::{BasisMode, SelectionEnergy};
use crate::Error;

pub const CSV_HEADER: &str = "image,mode,levels,quant,bytes,rate_pct,psnr_db,enc_ms,dec_ms";

/// Parameter grid; defaults to L ∈ {64, 32, 16, 8}, levels 1–4 and all six
/// basis modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub quant: Vec<u32>,
    pub levels: Vec<usize>,
    pub modes: Vec<BasisMode>,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            quant: vec![64, 32, 16, 8],
            levels: vec![1, 2, 3, 4],
            modes: ALL_MODES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub mode: BasisMode,
    pub levels: usize,
    pub quant: u32,
    pub bytes: usize,
    pub raw_bytes: usize,
    pub rate_pct: f64,
    pub psnr: Psnr,
    pub enc_ms: f64,
    pub dec_ms: f64,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{},{:.3},{:.3}",
            self.image,
            ModeLabel(self.mode),
            self.levels,
            self.quant,
            self.bytes,
            self.rate_pct,
            self.psnr,
            self.enc_ms,
            self.dec_ms
        )
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Options for [`run_bench`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub exec: Exec,
    /// Record wall times; when off the timing columns are zero and the CSV
    /// is reproducible byte for byte.
    pub timing: bool,
    pub energy: SelectionEnergy,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            exec: Exec::Parallel,
            timing: true,
            energy: SelectionEnergy::Literal,
        }
    }
}

/// Encodes and decodes every image at every grid point.
///
/// Jobs run concurrently across the grid (each job single-threaded); rows
/// come back ordered by image name, then mode, levels and quant in grid order.
pub fn run_bench(
    images: &[(String, ImageBuffer)],
    grid: &BenchGrid,
    opts: BenchOptions,
) -> Result<Vec<BenchRow>, Error> {
    if images.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut sorted: Vec<&(String, ImageBuffer)> = images.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut jobs = Vec::new();
    for img in &sorted {
        for &mode in &grid.modes {
            for &levels in &grid.levels {
                for &quant in &grid.quant {
                    jobs.push((*img, mode, levels, quant));
                }
            }
        }
    }
    opts.exec
        .map_slice(&jobs, |&((name, img), mode, levels, quant)| {
            let params = EncodeParams {
                levels,
                quant_levels: quant,
                mode,
                energy: opts.energy,
                exec: Exec::Sequential,
            };
            let t0 = Instant::now();
            let c = encode_image(img, &params)?;
            let bytes = container::write(&c)?;
            let enc = t0.elapsed();
            let t1 = Instant::now();
            let recon = decode_image_with(&container::read(&bytes)?, Exec::Sequential)?;
            let dec = t1.elapsed();
            let m = compute_metrics(img, &recon, bytes.len())?;
            let ms = |d: std::time::Duration| {
                if opts.timing {
                    d.as_secs_f64() * 1e3
                } else {
                    0.0
                }
            };
            Ok(BenchRow {
                image: name.clone(),
                mode,
                levels,
                quant,
                bytes: bytes.len(),
                raw_bytes: m.raw_bytes,
                rate_pct: m.rate_pct,
                psnr: m.psnr,
                enc_ms: ms(enc),
                dec_ms: ms(dec),
            })
        })
        .into_iter()
        .collect()
}

/// Adaptive modes against the best fixed bank for one image and setting.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub image: String,
    pub levels: usize,
    pub quant: u32,
    pub best_fixed: BasisId,
    pub best_fixed_bytes: usize,
    pub raw_bytes: usize,
    pub adaptive_block_bytes: Option<usize>,
    pub adaptive_global_bytes: Option<usize>,
}

impl OverheadRow {
    /// `(adaptive − best fixed) / raw`, in percentage points.
    pub fn block_overhead_pct(&self) -> Option<f64> {
        self.adaptive_block_bytes
            .map(|b| 100.0 * (b as f64 - self.best_fixed_bytes as f64) / self.raw_bytes as f64)
    }

    pub fn global_overhead_pct(&self) -> Option<f64> {
        self.adaptive_global_bytes
            .map(|b| 100.0 * (b as f64 - self.best_fixed_bytes as f64) / self.raw_bytes as f64)
    }
}

/// Groups rows by (image, levels, quant) and compares adaptive modes with
/// the smallest fixed-bank result. Groups without a fixed-bank row are skipped.
pub fn adaptive_overhead(rows: &[BenchRow]) -> Vec<OverheadRow> {
    let mut keys: Vec<(String, usize, u32)> = rows
        .iter()
        .map(|r| (r.image.clone(), r.levels, r.quant))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(image, levels, quant)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.image == image && r.levels == levels && r.quant == quant)
                .collect();
            let best = group
                .iter()
                .filter_map(|r| match r.mode {
                    BasisMode::Fixed(id) => Some((r.bytes, id, r.raw_bytes)),
                    _ => None,
                })
                .min()?;
            let find = |m: BasisMode| group.iter().find(|r| r.mode == m).map(|r| r.bytes);
            Some(OverheadRow {
                image,
                levels,
                quant,
                best_fixed: best.1,
                best_fixed_bytes: best.0,
                raw_bytes: best.2,
                adaptive_block_bytes: find(BasisMode::PerBlock),
                adaptive_global_bytes: find(BasisMode::Global),
            })
        })
        .collect()
}

/// Text rendering of the overhead aggregate, with corpus means.
pub fn overhead_report(rows: &[OverheadRow]) -> String {
    let mut s = String::from(
        "image,levels,quant,best_fixed,best_fixed_bytes,block_overhead_pct,global_overhead_pct\n",
    );
    let fmt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.4}"));
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.image,
            r.levels,
            r.quant,
            r.best_fixed,
            r.best_fixed_bytes,
            fmt(r.block_overhead_pct()),
            fmt(r.global_overhead_pct())
        ));
    }
    let mean = |f: &dyn Fn(&OverheadRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    s.push_str(&format!(
        "mean_block_overhead_pct={}\nmean_global_overhead_pct={}\n",
        fmt(mean(&OverheadRow::block_overhead_pct)),
        fmt(mean(&OverheadRow::global_overhead_pct))
    ));
    s
}
