//! Prototype of a date-sharded web-search architecture in which clients keep a
//! pre-loaded snapshot index and the datacentre searches only the shards newer
//! than each client's snapshot, plus the growth-projection models that motivate
//! that design (storage, bandwidth, and web-size trend curves and their
//! crossover years).
//!
//! Layout:
//! - [`corpus`]: documents, tokenization, JSONL corpus files.
//! - [`index`]: term-only inverted index with tf-grouped, delta+vbyte coded
//!   postings, BM25 search, and a bit-exact file format.
//! - [`datacentre`]: date/random sharding, snapshot routing, the statistics
//!   authority, supersede filtering, replica planning, shard retirement.
//! - [`updates`]: append-only change archive, broadcast delivery with catch-up,
//!   incremental client index maintenance.
//! - [`simulate`]: seeded workload simulation comparing the architectures.
//! - [`projections`]: growth curves, crossover solver, sensitivity scaling,
//!   and the probe-based corpus-size estimator.

// Validation sites compare floats as `!(x > 0.0)` on purpose: the negated
// form rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod datacentre;
pub mod date;
pub mod error;
pub mod index;
pub mod projections;
pub mod simulate;
pub mod updates;

pub use date::Date;
pub use error::{Error, Result};
