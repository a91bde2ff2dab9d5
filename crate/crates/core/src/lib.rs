//! Localized statistics decoding (LSD) for quantum LDPC codes.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf2`] holds sparse binary matrices and the incremental (on-the-fly)
//!   PLU factorization that LSD clusters grow and merge.
//! * [`model`] defines detector models, syndromes and the fault graph.
//! * [`bp`], [`osd`] and [`lsd`] are the decoders; [`decoder`] chains them
//!   into the BP+OSD and BP+LSD pipelines.
//! * [`codes`] constructs surface, hypergraph-product and bivariate-bicycle
//!   codes and turns them into detector models.
//! * [`experiments`] runs Monte-Carlo sweeps, windowed decoding and cluster
//!   statistics.
//!
//! Decoders are generic over the scalar type through [`Real`]; the aliases
//! below fix it to `f64`.

pub mod bp;
pub mod codes;
pub mod decoder;
pub mod experiments;
pub mod gf2;
pub mod lsd;
pub mod model;
pub mod osd;
mod scalar;

pub use gf2::SparseBinaryMatrix;
pub use model::{DetectorModel, Syndrome};
pub use scalar::Real;

pub type Model = DetectorModel<f64>;
pub type LlrVector = Vec<f64>;
pub type BpConfig = bp::BpConfig<f64>;
pub type BpDecoder = bp::BpDecoder<f64>;
pub type DecoderSpec = decoder::DecoderSpec<f64>;
pub type Decoder = decoder::Decoder<f64>;
