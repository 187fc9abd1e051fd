//! Adaptive two-dimensional Haar wavelet image codec.
//!
//! Images are split into color channels, decomposed with 2×2 Haar banks
//! chosen per block or per matrix, quantized uniformly, Huffman coded and
//! stored in the `.ahc` container.
//!
//! ```text
//! PNM -> channels -> pyramid_forward -> quantize -> Huffman -> .ahc
//! .ahc -> Huffman -> dequantize -> pyramid_inverse -> round/clamp -> PNM
//! ```
//!
//! Row-level kernels run on rayon when the `parallel` feature is enabled
//! (the default); [`Exec::Sequential`] forces single-threaded execution and
//! produces identical output.

#![allow(clippy::needless_range_loop)] // index loops read closest to the matrix algebra

pub mod bench;
pub mod codec;
pub mod container;
pub mod entropy;
pub mod exec;
pub mod filterbank;
pub mod plane;
pub mod pnm;
pub mod quantizer;
pub mod transform;

pub use codec::{
    compute_metrics, decode_image, encode_image, EncodeParams, Metrics, ModeLabel, Psnr,
};
pub use container::CompressedImage;
pub use exec::Exec;
pub use filterbank::{BasisId, WaveletBasis};
pub use plane::Plane;
pub use pnm::{load_image, save_image, ImageBuffer};
pub use transform::{BasisMode, SelectionEnergy};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Filterbank(#[from] filterbank::FilterbankError),
    #[error(transparent)]
    Transform(#[from] transform::TransformError),
    #[error(transparent)]
    Quant(#[from] quantizer::QuantError),
    #[error(transparent)]
    Entropy(#[from] entropy::EntropyError),
    #[error(transparent)]
    Container(#[from] container::ContainerError),
    #[error(transparent)]
    Pnm(#[from] pnm::PnmError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("image dimensions or channel counts differ")]
    DimensionMismatch,
    #[error("empty corpus")]
    EmptyCorpus,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
