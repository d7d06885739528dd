//! Local directional relation pattern (LDRP) face and texture descriptor.
//!
//! The crate is organized as:
//!
//! - [`pixel_grid`] – gray rasters, resampling and circular neighbor sampling.
//! - [`ldrp`] – the LDRP codes, per-scale histograms and the normalized
//!   multi-scale descriptor.
//! - [`lbp`] – the classic local binary pattern baseline.
//! - [`similarity`] – Euclidean, cosine, L1, D1 and chi-square distances.
//! - [`evaluation`] – ARP/ARR/F-score/ANMRR retrieval curves, CMC, ROC and
//!   rank-1 gallery/probe accuracy.
//! - [`corpus_store`] – folder corpora, parallel extraction and the binary
//!   feature store.
//!
//! ```
//! use ldrp_core::{multiscale_descriptor, GrayImage, LdrpParams};
//!
//! let image = GrayImage::from_fn(64, 64, |r, c| ((r * 3 + c * 5) % 256) as u8);
//! let descriptor = multiscale_descriptor(&image, &LdrpParams::default()).unwrap();
//! assert_eq!(descriptor.len(), 1024);
//! ```

pub mod corpus_store;
pub mod evaluation;
pub mod lbp;
pub mod ldrp;
pub mod pixel_grid;
pub mod similarity;

pub use corpus_store::{
    extract_all, ingest, load_store, save_store, Corpus, CorpusError, CorpusManifest,
    DescriptorConfig, FeatureStore, StoreFileError,
};
pub use evaluation::{
    anmrr, cmc, rank1_accuracy, rank_gallery, retrieval_curves, roc, CmcCurve, EvalError,
    LabeledStore, MetricCurves, MetricRow, Record, RocCurve,
};
pub use lbp::{lbp_code, lbp_histogram, LbpParams};
pub use ldrp::{
    directional_bits, directional_code, ldrp_code, multiscale_descriptor, pair_index,
    scale_histogram, transform_center, DescriptorError, DirectionalBits, DirectionalCode,
    LdrpParams, MultiScaleDescriptor, ScaleConfig,
};
pub use pixel_grid::{
    neighbor_offset, resize, sample_neighbor, to_grayscale, GrayImage, GridError, SamplingMode,
};
pub use similarity::{distance, DistanceError, DistanceKind};
