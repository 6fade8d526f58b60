//! Curation toolkit for affective image-captioning corpora.
//!
//! The crate is organised around the data flow of a contrastive collection round:
//!
//! * [`corpus`] holds paintings, their emotion-labelled captions and image feature vectors,
//!   and reads/writes the on-disk formats.
//! * [`index`] is an exact cosine kNN index over the feature vectors.
//! * [`bias`] scores paintings by emotional polarity and measures how homogeneous visual
//!   neighbourhoods are.
//! * [`selector`] builds the 24-painting candidate sets shown to annotators.
//! * [`metrics`] scores generated captions (BLEU, ROUGE-L, CIDEr-D) and hosts the
//!   nearest-neighbour baseline speaker.
//! * [`spectrum`] analyses extended-emotion probability vectors.
//! * [`synthetic`] generates deterministic biased corpora for tests and demos.

pub mod bias;
pub mod corpus;
mod error;
pub mod index;
pub mod metrics;
pub mod selector;
pub mod spectrum;
pub mod synthetic;

pub use error::{Error, Result};

/// FNV-1a: a stable (platform- and run-independent) hash for deriving per-item RNG seeds.
pub(crate) fn stable_hash(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}
