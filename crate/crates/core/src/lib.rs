//! Core model for benchmarking object stores under access patterns that
//! change over time.
//!
//! The crate builds a synthetic object database (a graph of typed objects
//! with forward and inverse references), derives access traces from a set
//! of navigational operations, and drives those operations from a root
//! selector whose hot/cold structure evolves while a run is in progress.
//! Traces are replayed against a simulated page store with an LRU buffer
//! pool, so the cost of a workload is measured in page reads and writes.
//! A clustering policy can watch the trace stream and reorganize object
//! placement on pages; its I/O is accounted separately from transaction
//! I/O.
//!
//! The pieces compose in layers:
//!
//! - [`db`] — schema and object-base generation, reference sets.
//! - [`ops`] — the operation families (random access, scans, traversals,
//!   evolutions, updates) producing [`ops::AccessTrace`]s.
//! - [`regions`] — partitioning a candidate set into weighted regions and
//!   sampling roots from them.
//! - [`protocols`] — schedules that mutate region weights over time plus
//!   rules that derive the next root from the previous one.
//! - [`store`] — object-to-page placement, LRU buffering, I/O counters.
//! - [`clustering`] — the policy interface, a no-op baseline, and a
//!   windowed co-access policy.
//!
//! Everything is deterministic for a fixed seed: all randomness flows
//! through explicitly seeded generators (see [`rng`]).

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod clustering;
pub mod db;
pub mod error;
pub mod ops;
pub mod protocols;
pub mod regions;
pub mod rng;
pub mod store;

pub use db::{ClassId, Database, DatabaseGenConfig, ObjectId, RefKind};
pub use error::Error;
pub use ops::{Access, AccessTrace, OperationKind, TraversalMode};
pub use store::{BufferPool, IoStats, PageId, PageStore, StoreConfig};

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
