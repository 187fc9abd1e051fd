use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ahc_core::bench::{self, BenchGrid, BenchOptions};
use ahc_core::codec::{self, EncodeParams, ModeLabel};
use ahc_core::container::{self, ContainerError};
use ahc_core::filterbank::{
    self, AngleParams, BasisId, CorollaryMatch, Family1Params, FilterbankError, WaveletBasis,
    WaveletTables, DEFAULT_TOLERANCE,
};
use ahc_core::pnm::PnmError;
use ahc_core::quantizer::QuantError;
use ahc_core::{Error, Exec, SelectionEnergy};

#[derive(Parser)]
#[command(name = "ahc", version, about = "Adaptive 2D Haar wavelet image codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM/PPM image into an .ahc file
    Encode(EncodeArgs),
    /// Restore a PGM/PPM image from an .ahc file
    Decode(DecodeArgs),
    /// Print the header and basis usage of an .ahc file
    Inspect { path: PathBuf },
    /// Sweep codec parameters over a directory of PNM images
    Bench(BenchArgs),
    /// Print and check wavelet banks
    ValidateBases(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Energy {
    Literal,
    Normalized,
}

impl From<Energy> for SelectionEnergy {
    fn from(e: Energy) -> Self {
        match e {
            Energy::Literal => SelectionEnergy::Literal,
            Energy::Normalized => SelectionEnergy::Normalized,
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 64)]
    quant: u32,
    /// set1, set2, set3, set4, adaptive-block or adaptive-global
    #[arg(long, default_value = "adaptive-block")]
    basis: String,
    /// Decode the result and report PSNR
    #[arg(long)]
    verify: bool,
    /// Bank selection objective
    #[arg(long, value_enum, default_value = "literal")]
    energy: Energy,
    /// Disable multi-threading
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct DecodeArgs {
    path: PathBuf,
    /// Defaults to the input path with a .pgm/.ppm extension
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [64u32, 32, 16, 8])]
    quant: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4])]
    levels: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = ["set1", "set2", "set3", "set4", "adaptive-block", "adaptive-global"].map(String::from)
    )]
    basis: Vec<String>,
    /// Write rows here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the adaptive-vs-fixed aggregate here instead of stderr
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Zero the timing columns so output is reproducible
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_enum, default_value = "literal")]
    energy: Energy,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// `builtin` (the default when no generator flag is given)
    target: Option<String>,
    /// Show the tables exactly as originally typeset
    #[arg(long)]
    as_printed: bool,
    #[arg(long, num_args = 4, value_names = ["LAMBDA", "A21", "A22", "A31"], allow_hyphen_values = true)]
    family1: Option<Vec<f64>>,
    #[arg(long, num_args = 6, value_names = ["A1", "B1", "A2", "B2", "A3", "B3"], allow_hyphen_values = true)]
    angles: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    /// Frequencies sampled by the modulation-matrix check
    #[arg(long, default_value_t = 16)]
    samples: usize,
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let img = ahc_core::load_image(&read_file(&a.input)?)?;
    let mode = a.basis.parse::<ModeLabel>()?.0;
    let params = EncodeParams {
        levels: a.levels,
        quant_levels: a.quant,
        mode,
        energy: a.energy.into(),
        exec: exec(a.sequential),
    };
    let compressed = codec::encode_image(&img, &params)?;
    let bytes = container::write(&compressed)?;
    write_file(&a.output, &bytes)?;
    let raw = img.raw_bytes();
    println!("compressed_bytes={}", bytes.len());
    println!("raw_bytes={raw}");
    println!("rate_pct={:.4}", 100.0 * bytes.len() as f64 / raw as f64);
    if a.verify {
        let recon = codec::decode_image(&container::read(&bytes)?)?;
        let m = codec::compute_metrics(&img, &recon, bytes.len())?;
        println!("mse={:.6}", m.mse);
        println!("psnr_db={}", m.psnr);
        println!("verified=ok");
    }
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let c = container::read(&read_file(&a.path)?)?;
    let img = codec::decode_image(&c)?;
    let output = a.output.unwrap_or_else(|| {
        a.path
            .with_extension(if img.channels() == 1 { "pgm" } else { "ppm" })
    });
    write_file(&output, &ahc_core::save_image(&img))?;
    println!(
        "{}x{} channels={} -> {}",
        img.width(),
        img.height(),
        img.channels(),
        output.display()
    );
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    print!("{}", container::inspect(&read_file(path)?)?);
    Ok(())
}

fn load_corpus(dir: &Path) -> Result<Vec<(String, ahc_core::ImageBuffer)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !matches!(ext, "pgm" | "ppm" | "pnm") {
            continue;
        }
        let img = ahc_core::load_image(&read_file(&path)?)
            .with_context(|| format!("loading {}", path.display()))?;
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.push((name, img));
    }
    Ok(out)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let images = load_corpus(&a.corpus)?;
    let modes = a
        .basis
        .iter()
        .map(|s| s.parse::<ModeLabel>().map(|m| m.0))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = BenchGrid {
        quant: a.quant,
        levels: a.levels,
        modes,
    };
    let opts = BenchOptions {
        exec: exec(a.sequential),
        timing: !a.no_timing,
        energy: a.energy.into(),
    };
    let rows = bench::run_bench(&images, &grid, opts)?;
    let csv = bench::to_csv(&rows);
    match &a.output {
        Some(p) => write_file(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    let report = bench::overhead_report(&bench::adaptive_overhead(&rows));
    match &a.summary {
        Some(p) => write_file(p, report.as_bytes())?,
        None => eprint!("{report}"),
    }
    Ok(())
}

fn print_grid(t: &WaveletTables) {
    for row in 0..2 {
        let cells: Vec<String> = (0..3)
            .map(|k| {
                let g = t.grid(k);
                format!("[{:>9.5} {:>9.5}]", g[row][0], g[row][1])
            })
            .collect();
        println!("  {}", cells.join("  "));
    }
}

fn print_checks(t: &WaveletTables, tol: f64, samples: usize) {
    print_grid(t);
    let r = filterbank::validate_orthogonality(t, tol);
    let f = |v: [f64; 3]| v.map(|x| format!("{x:.6}")).join(", ");
    println!("  sums: [{}] zero_mean: {:?}", f(r.sums), r.zero_mean);
    println!("  norms: [{}]", f(r.norms));
    println!(
        "  inner: <1,2>={:.6} <1,3>={:.6} <2,3>={:.6}",
        r.inner[0][1], r.inner[0][2], r.inner[1][2]
    );
    println!(
        "  orthogonal: {} orthonormal: {} onb: {}",
        r.orthogonal(),
        r.orthonormal,
        r.is_onb()
    );
    let pattern = match filterbank::corollary_pattern_check(t) {
        CorollaryMatch::NotApplicable => "not applicable".to_string(),
        CorollaryMatch::NoMatch => "none".to_string(),
        CorollaryMatch::Pattern(p) => p.to_string(),
    };
    println!("  corollary pattern: {pattern}");
    match WaveletBasis::from_tables(*t) {
        Ok(_) => println!("  analysis matrix: invertible"),
        Err(e) => println!("  analysis matrix: {e}"),
    }
    println!(
        "  modulation matrix unitary: {}",
        filterbank::unitarity_check(t, samples, tol)
    );
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    if a.tol.is_nan() || a.tol <= 0.0 {
        bail!(Error::InvalidParams("tolerance must be positive".into()));
    }
    if let Some(v) = a.family1 {
        let p = Family1Params {
            lambda: v[0],
            a21: v[1],
            a22: v[2],
            a31: v[3],
        };
        let t = filterbank::family1_tables(&p)?;
        println!(
            "family1 lambda={} a21={} a22={} a31={} -> a32={}",
            p.lambda,
            p.a21,
            p.a22,
            p.a31,
            p.a32()?
        );
        println!(
            "  constraint residual: {:e}",
            filterbank::family1_residual(&t)
        );
        print_checks(&t, a.tol, a.samples);
        return Ok(());
    }
    if let Some(v) = a.angles {
        let p = AngleParams::new([v[0], v[2], v[4]], [v[1], v[3], v[5]])?;
        println!("angles alpha={:?} beta={:?}", p.alpha(), p.beta());
        print_checks(&filterbank::angle_tables(&p), a.tol, a.samples);
        return Ok(());
    }
    match a.target.as_deref() {
        None | Some("builtin") => {}
        Some(other) => bail!(Error::InvalidParams(format!("unknown target `{other}`"))),
    }
    for id in BasisId::ALL {
        let t = if a.as_printed {
            filterbank::printed_tables(id)
        } else {
            filterbank::builtin_tables(id)
        };
        println!("{id}{}", if a.as_printed { " (as printed)" } else { "" });
        print_checks(&t, a.tol, a.samples);
    }
    Ok(())
}

/// Exit status per error family.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 3;
    }
    if err.downcast_ref::<PnmError>().is_some() {
        return 4;
    }
    if err.downcast_ref::<ContainerError>().is_some() {
        return 5;
    }
    if err.downcast_ref::<FilterbankError>().is_some() {
        return 7;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Pnm(_)) => 4,
        Some(Error::Container(_)) => 5,
        Some(Error::Entropy(_)) => 6,
        Some(Error::Quant(QuantError::LevelsOutOfRange(_))) => 7,
        Some(Error::Quant(_)) => 6,
        Some(
            Error::InvalidParams(_)
            | Error::Transform(_)
            | Error::Filterbank(_)
            | Error::EmptyCorpus,
        ) => 7,
        Some(Error::DimensionMismatch) => 8,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Inspect { path } => cmd_inspect(&path),
        Command::Bench(a) => cmd_bench(a),
        Command::ValidateBases(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
