//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

use crate::db::{ClassId, ObjectId};
use crate::store::PageId;

/// Everything that can go wrong when building or driving a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration field violates its documented bound. The message
    /// names the field and the bound.
    Config { field: &'static str, message: String },
    /// Lookup of an object id that is not (or no longer) in the database.
    UnknownObject(ObjectId),
    /// Lookup of a class id that is not (or no longer) in the schema.
    UnknownClass(ClassId),
    /// An operation needs at least one live object.
    EmptyDatabase,
    /// An operation needs at least one live class.
    EmptySchema,
    /// Region partitioning was given no candidates.
    EmptyCandidates,
    /// Region sizes sum to more than 1.
    RegionSizesExceedOne,
    /// Probability sampling over a set whose weights are all zero.
    AllWeightsZero,
    /// Dependency selection probabilities do not sum to 1.
    BadDependencyProbabilities,
    /// Access to an object that has no page placement.
    UnmappedObject(ObjectId),
    /// Object move onto a page without room for it.
    PageFull { page: PageId, free: u32, needed: u32 },
    /// Snapshot payload fails structural validation.
    CorruptSnapshot(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config { field, message } => write!(f, "config field `{field}`: {message}"),
            Error::UnknownObject(oid) => write!(f, "unknown object id {oid}"),
            Error::UnknownClass(cid) => write!(f, "unknown class id {cid}"),
            Error::EmptyDatabase => write!(f, "database has no live objects"),
            Error::EmptySchema => write!(f, "schema has no live classes"),
            Error::EmptyCandidates => write!(f, "candidate set is empty"),
            Error::RegionSizesExceedOne => write!(f, "region size fractions sum to more than 1"),
            Error::AllWeightsZero => write!(f, "all region weights are zero"),
            Error::BadDependencyProbabilities => {
                write!(f, "dependency protocol probabilities must sum to 1")
            }
            Error::UnmappedObject(oid) => write!(f, "object {oid} has no page placement"),
            Error::PageFull { page, free, needed } => {
                write!(f, "page {page} has {free} free bytes, move needs {needed}")
            }
            Error::CorruptSnapshot(msg) => write!(f, "corrupt snapshot: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl fmt::Display) -> Self {
        use alloc::string::ToString;
        Error::Config {
            field,
            message: message.to_string(),
        }
    }
}
