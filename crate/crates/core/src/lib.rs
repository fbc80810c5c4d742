//! Itemset-frequency sketches and the constructions that bound their size.
//!
//! The crate has two halves. The constructive half builds and queries
//! sketches of a binary database ([`sketch`], [`validity`]). The other half
//! implements the encoding arguments that turn any small sketch into a
//! decoder for a long message ([`shatter`], [`indicator_attack`],
//! [`estimator_attack`]), together with the error-correcting codes those
//! decoders rely on.

pub mod attack;
pub mod bits;
pub mod combinatorics;
pub mod database;
pub mod ecc;
pub mod error;
pub mod estimator_attack;
pub mod indicator_attack;
pub mod rng;
pub mod shatter;
pub mod sketch;
pub mod validity;

pub use bits::{BitMatrix, BitString};
pub use database::{exact_fraction, ColumnIndex, Database, Frequency, Itemset};
pub use error::{Error, Result};
pub use sketch::{
    Algo, Answer, Builder, Semantics, Sketch, SketchBlob, SketchBuilder, SketchError, SketchParams,
};
