//! Embedding-space measures for vision-language dual encoders and the
//! statistics used to turn them into predictions of fine-tuning gains.
//!
//! * [`embed_io`]: NPY arrays, manifests, validated [`TaskEmbeddings`](embed_io::TaskEmbeddings).
//! * [`measures`]: IIMM and the comparison measures.
//! * [`stats`]: Spearman correlation and simple linear regression.
//! * [`transfer`]: accuracy records to gains, fitting and prediction.

pub mod embed_io;
pub mod measures;
pub mod reduce;
pub mod stats;
pub mod synth;
pub mod transfer;
