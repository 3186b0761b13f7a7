//! The operation families: random access, sequential scans and range
//! lookups, four traversal flavors, schema/database evolution, and
//! attribute updates.
//!
//! Every read-only operation is a pure function of its arguments; the
//! stochastic traversal derives its generator from `(traversal_seed,
//! root)` alone, so a given root always yields the same walk. Operations
//! return an [`AccessTrace`]: the exact visit order with a read/write tag
//! per visit. Revisited objects are recorded again but never re-expanded,
//! which terminates traversals on cyclic graphs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::db::{ClassId, Database, ObjectId};
use crate::error::Error;
use crate::rng::{self, DetRng};
use crate::Result;

/// Read or write, per visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

/// How a traversal walks the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraversalMode {
    /// Breadth-first over forward references.
    SetOriented,
    /// Depth-first over forward references.
    Simple,
    /// Depth-first following only edges of one reference type.
    Hierarchical(u8),
    /// A single path, choosing one outgoing edge per step with a
    /// generator seeded by `(traversal_seed, root)`.
    Stochastic,
}

/// Insert or delete, for evolution operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveAction {
    Insert,
    Delete,
}

/// The operation vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperationKind {
    RandomAccess { count: u32 },
    SequentialScan { class: ClassId },
    RangeLookup { class: ClassId, test_attributes: u32 },
    Traversal { mode: TraversalMode, depth: u32, reversed: bool },
    SchemaEvolution { action: EvolveAction },
    DatabaseEvolution { action: EvolveAction },
    AttributeUpdate { count: u32 },
    SequentialUpdate { class: ClassId },
}

/// Ordered visit record of one operation.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessTrace {
    pub kind: OperationKind,
    pub root: Option<ObjectId>,
    pub visits: Vec<(ObjectId, Access)>,
}

impl AccessTrace {
    fn new(kind: OperationKind, root: Option<ObjectId>) -> Self {
        AccessTrace {
            kind,
            root,
            visits: Vec::new(),
        }
    }

    /// Distinct visited objects, first-visit order.
    pub fn distinct(&self) -> Vec<ObjectId> {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut out = Vec::new();
        for &(oid, _) in &self.visits {
            if seen.insert(oid) {
                out.push(oid);
            }
        }
        out
    }
}

/// Reads `count` uniformly chosen live objects.
pub fn random_access(db: &Database, count: u32, rng: &mut DetRng) -> Result<AccessTrace> {
    if db.live_object_count() == 0 {
        return Err(Error::EmptyDatabase);
    }
    let mut trace = AccessTrace::new(OperationKind::RandomAccess { count }, None);
    for _ in 0..count {
        let oid = db.random_object(rng)?;
        if trace.root.is_none() {
            trace.root = Some(oid);
        }
        trace.visits.push((oid, Access::Read));
    }
    Ok(trace)
}

/// Reads every live instance of a class in iterator order. With
/// `test_attributes` set this is a range lookup: each read additionally
/// evaluates that many attribute predicates, CPU-only work that changes
/// nothing about the visit sequence.
pub fn scan(db: &Database, class: ClassId, test_attributes: Option<u32>) -> Result<AccessTrace> {
    let spec = db.class(class)?;
    let kind = match test_attributes {
        Some(n) => OperationKind::RangeLookup {
            class,
            test_attributes: n,
        },
        None => OperationKind::SequentialScan { class },
    };
    let mut trace = AccessTrace::new(kind, spec.iterator.first().copied());
    let mut predicate_hits = 0u64;
    for &oid in &spec.iterator {
        let obj = db.object(oid)?;
        if let Some(n) = test_attributes {
            for a in obj.attributes.iter().take(n as usize) {
                if *a >= 0 {
                    predicate_hits += 1;
                }
            }
        }
        trace.visits.push((oid, Access::Read));
    }
    let _ = predicate_hits;
    Ok(trace)
}

/// Outgoing edges of `oid` under the traversal's direction and mode
/// filter.
fn out_edges(db: &Database, oid: ObjectId, mode: TraversalMode, reversed: bool) -> Vec<ObjectId> {
    let obj = match db.object(oid) {
        Ok(o) => o,
        Err(_) => return Vec::new(),
    };
    let type_filter = match mode {
        TraversalMode::Hierarchical(t) => Some(t),
        _ => None,
    };
    if !reversed {
        obj.orefs
            .iter()
            .filter(|r| type_filter.map_or(true, |t| r.ref_type == t))
            .map(|r| r.target)
            .collect()
    } else {
        match type_filter {
            None => obj.backrefs.clone(),
            // An inverse edge has the type of the forward edge it mirrors.
            Some(t) => obj
                .backrefs
                .iter()
                .copied()
                .filter(|&b| {
                    db.object(b)
                        .map(|s| s.orefs.iter().any(|r| r.target == oid && r.ref_type == t))
                        .unwrap_or(false)
                })
                .collect(),
        }
    }
}

/// Walks the graph from `root` to the given depth. See [`TraversalMode`]
/// for the four shapes. `reversed` follows inverse references instead of
/// forward ones.
pub fn traversal(
    db: &Database,
    root: ObjectId,
    mode: TraversalMode,
    depth: u32,
    reversed: bool,
    traversal_seed: u64,
) -> Result<AccessTrace> {
    db.object(root)?;
    let kind = OperationKind::Traversal {
        mode,
        depth,
        reversed,
    };
    let mut trace = AccessTrace::new(kind, Some(root));
    let mut expanded = vec![false; db.object_id_space() as usize];

    match mode {
        TraversalMode::Stochastic => {
            let mut walk_rng = rng::seeded(rng::mix(traversal_seed, u64::from(root.0)));
            let mut current = root;
            trace.visits.push((current, Access::Read));
            for _ in 0..depth {
                let edges = out_edges(db, current, mode, reversed);
                if edges.is_empty() {
                    break;
                }
                current = edges[walk_rng.gen_range(0..edges.len())];
                trace.visits.push((current, Access::Read));
            }
        }
        TraversalMode::SetOriented => {
            let mut queue = alloc::collections::VecDeque::new();
            queue.push_back((root, 0u32));
            while let Some((oid, d)) = queue.pop_front() {
                trace.visits.push((oid, Access::Read));
                if expanded[oid.idx()] || d >= depth {
                    continue;
                }
                expanded[oid.idx()] = true;
                for t in out_edges(db, oid, mode, reversed) {
                    queue.push_back((t, d + 1));
                }
            }
        }
        TraversalMode::Simple | TraversalMode::Hierarchical(_) => {
            let mut stack = vec![(root, 0u32)];
            while let Some((oid, d)) = stack.pop() {
                trace.visits.push((oid, Access::Read));
                if expanded[oid.idx()] || d >= depth {
                    continue;
                }
                expanded[oid.idx()] = true;
                let edges = out_edges(db, oid, mode, reversed);
                for t in edges.into_iter().rev() {
                    stack.push((t, d + 1));
                }
            }
        }
    }
    Ok(trace)
}

/// Report of one evolution operation.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationReport {
    pub kind: OperationKind,
    /// Object inserted or deleted, if the operation was object-level.
    pub object: Option<ObjectId>,
    /// Class inserted or deleted, if the operation was schema-level.
    pub class: Option<ClassId>,
    /// Objects removed as a side effect (class deletion cascade).
    pub removed_objects: Vec<ObjectId>,
}

/// Evolution target: the schema (classes) or the base (objects).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveKind {
    Schema,
    Database,
}

/// Inserts or deletes one uniformly chosen class or object, keeping
/// inverse-reference symmetry and class iterators intact.
pub fn evolve(
    db: &mut Database,
    kind: EvolveKind,
    action: EvolveAction,
    rng: &mut DetRng,
) -> Result<MutationReport> {
    match (kind, action) {
        (EvolveKind::Database, EvolveAction::Insert) => {
            let oid = db.insert_object(rng)?;
            Ok(MutationReport {
                kind: OperationKind::DatabaseEvolution { action },
                object: Some(oid),
                class: None,
                removed_objects: Vec::new(),
            })
        }
        (EvolveKind::Database, EvolveAction::Delete) => {
            let oid = db.random_object(rng)?;
            db.delete_object(oid)?;
            Ok(MutationReport {
                kind: OperationKind::DatabaseEvolution { action },
                object: Some(oid),
                class: None,
                removed_objects: vec![oid],
            })
        }
        (EvolveKind::Schema, EvolveAction::Insert) => {
            let cid = db.insert_class(rng)?;
            Ok(MutationReport {
                kind: OperationKind::SchemaEvolution { action },
                object: None,
                class: Some(cid),
                removed_objects: Vec::new(),
            })
        }
        (EvolveKind::Schema, EvolveAction::Delete) => {
            let cid = db.random_class(rng)?;
            let removed = db.class(cid)?.iterator.clone();
            db.delete_class(cid)?;
            Ok(MutationReport {
                kind: OperationKind::SchemaEvolution { action },
                object: None,
                class: Some(cid),
                removed_objects: removed,
            })
        }
    }
}

/// Update flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    /// Increment an attribute on `count` uniformly chosen objects.
    Attribute { count: u32 },
    /// Increment an attribute on every instance of a class, iterator
    /// order.
    Sequential { class: ClassId },
}

/// Applies an update and returns the write trace.
pub fn update(db: &mut Database, kind: UpdateKind, rng: &mut DetRng) -> Result<AccessTrace> {
    match kind {
        UpdateKind::Attribute { count } => {
            if db.live_object_count() == 0 {
                return Err(Error::EmptyDatabase);
            }
            let mut trace =
                AccessTrace::new(OperationKind::AttributeUpdate { count }, None);
            for _ in 0..count {
                let oid = db.random_object(rng)?;
                if trace.root.is_none() {
                    trace.root = Some(oid);
                }
                bump_attribute(db, oid)?;
                trace.visits.push((oid, Access::Write));
            }
            Ok(trace)
        }
        UpdateKind::Sequential { class } => {
            let members = db.class(class)?.iterator.clone();
            let mut trace = AccessTrace::new(
                OperationKind::SequentialUpdate { class },
                members.first().copied(),
            );
            for oid in members {
                bump_attribute(db, oid)?;
                trace.visits.push((oid, Access::Write));
            }
            Ok(trace)
        }
    }
}

fn bump_attribute(db: &mut Database, oid: ObjectId) -> Result<()> {
    let obj = db.object_mut(oid)?;
    if let Some(a) = obj.attributes.first_mut() {
        *a += 1;
    }
    Ok(())
}
