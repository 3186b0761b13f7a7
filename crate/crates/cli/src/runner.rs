//! Whole-experiment execution: build the database, place it, then loop
//! root selection -> operation -> store replay -> clustering, recording
//! one CSV row per transaction.
//!
//! Everything is a pure function of `(config, seed)`: the master seed is
//! split into named streams (generation, workload, protocol, policy) so
//! one knob never perturbs unrelated draws, and two identical runs emit
//! byte-identical CSVs.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use dobench_core::clustering::{Cfc, ClusteringPolicy, NoClustering};
use dobench_core::db::{self, Database, ObjectId};
use dobench_core::ops::{self, AccessTrace, EvolveAction, EvolveKind, TraversalMode, UpdateKind};
use dobench_core::protocols::{RegionalState, WorkloadState};
use dobench_core::rng::{self, DetRng};
use dobench_core::store::{self, BufferPool, IoStats, PageStore};

use crate::config::{ClusteringChoice, ExperimentConfig, OpChoice};
use crate::{CliError, Result};

/// Region column value for roots that belong to no region (inserted after
/// the candidate set was frozen).
pub const NO_REGION: u32 = u32::MAX;

/// One CSV row. `reads`/`writes` are the transaction-attributed page I/O
/// of this transaction; `c_reads`/`c_writes` the clustering-attributed
/// I/O that happened during it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxnRow {
    pub txn: u64,
    pub reads: u64,
    pub writes: u64,
    pub c_reads: u64,
    pub c_writes: u64,
    pub root: u32,
    pub region: u32,
}

/// Result of one run: per-transaction rows plus whole-run counters.
/// Final-flush writes are folded into the last row so that totals always
/// equal column sums.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub rows: Vec<TxnRow>,
    pub stats: IoStats,
    pub fallbacks: u64,
    pub moved_pages: u64,
    pub final_page_count: usize,
    pub wall: Duration,
}

impl RunResult {
    pub fn total_io(&self) -> u64 {
        self.stats.total_io()
    }

    /// Column sums over the per-transaction rows, in header order.
    pub fn column_sums(&self) -> (u64, u64, u64, u64) {
        let mut sums = (0, 0, 0, 0);
        for row in &self.rows {
            sums.0 += row.reads;
            sums.1 += row.writes;
            sums.2 += row.c_reads;
            sums.3 += row.c_writes;
        }
        sums
    }
}

pub const CSV_HEADER: &str = "txn,reads,writes,c_reads,c_writes,root,region";
pub const SUMMARY_HEADER: &str = "param,total_io,txn_io,clust_io";

struct RunContext {
    workload_rng: DetRng,
    traversal_seed: u64,
}

fn class_of(db: &Database, oid: ObjectId) -> Result<dobench_core::db::ClassId> {
    Ok(db.object(oid)?.class_id)
}

/// Executes the configured operation on the selected root. Returns the
/// trace and whether its store I/O has already been applied (evolution
/// operations apply their own writes while syncing placements).
fn execute(
    cfg: &ExperimentConfig,
    db: &mut Database,
    store: &mut PageStore,
    buffer: &mut BufferPool,
    state: &mut WorkloadState,
    ctx: &mut RunContext,
    root: ObjectId,
) -> Result<(AccessTrace, bool)> {
    let w = &cfg.workload;
    let trace = match w.operation {
        OpChoice::SimpleTraversal => ops::traversal(
            db,
            root,
            TraversalMode::Simple,
            w.depth,
            w.reversed,
            ctx.traversal_seed,
        )?,
        OpChoice::SetTraversal => ops::traversal(
            db,
            root,
            TraversalMode::SetOriented,
            w.depth,
            w.reversed,
            ctx.traversal_seed,
        )?,
        OpChoice::HierarchicalTraversal => ops::traversal(
            db,
            root,
            TraversalMode::Hierarchical(w.ref_type),
            w.depth,
            w.reversed,
            ctx.traversal_seed,
        )?,
        OpChoice::StochasticTraversal => ops::traversal(
            db,
            root,
            TraversalMode::Stochastic,
            w.depth,
            w.reversed,
            ctx.traversal_seed,
        )?,
        OpChoice::RandomAccess => {
            ops::random_access(db, w.random_count, &mut ctx.workload_rng)?
        }
        OpChoice::Scan => ops::scan(db, class_of(db, root)?, None)?,
        OpChoice::RangeLookup => ops::scan(db, class_of(db, root)?, Some(w.test_attributes))?,
        OpChoice::AttributeUpdate => ops::update(
            db,
            UpdateKind::Attribute {
                count: w.update_count,
            },
            &mut ctx.workload_rng,
        )?,
        OpChoice::SequentialUpdate => {
            let class = class_of(db, root)?;
            ops::update(db, UpdateKind::Sequential { class }, &mut ctx.workload_rng)?
        }
        OpChoice::ObjectInsert
        | OpChoice::ObjectDelete
        | OpChoice::ClassInsert
        | OpChoice::ClassDelete => {
            let (kind, action) = match w.operation {
                OpChoice::ObjectInsert => (EvolveKind::Database, EvolveAction::Insert),
                OpChoice::ObjectDelete => (EvolveKind::Database, EvolveAction::Delete),
                OpChoice::ClassInsert => (EvolveKind::Schema, EvolveAction::Insert),
                _ => (EvolveKind::Schema, EvolveAction::Delete),
            };
            let report = ops::evolve(db, kind, action, &mut ctx.workload_rng)?;
            let mut trace = AccessTrace {
                kind: report.kind,
                root: report.object.or(Some(root)),
                visits: Vec::new(),
            };
            match action {
                EvolveAction::Insert => {
                    if let Some(oid) = report.object {
                        let size = db.object(oid)?.filler_size.max(1);
                        store.add_object(oid, size);
                        store::access(store, buffer, oid, ops::Access::Write)?;
                        trace.visits.push((oid, ops::Access::Write));
                    }
                }
                EvolveAction::Delete => {
                    for oid in &report.removed_objects {
                        // Deleting rewrites the page the object lived on.
                        store::access(store, buffer, *oid, ops::Access::Write)?;
                        store.remove_object(*oid)?;
                        state.regional.remove_member(*oid);
                        trace.visits.push((*oid, ops::Access::Write));
                    }
                }
            }
            return Ok((trace, true));
        }
    };
    Ok((trace, false))
}

/// Runs one experiment on a freshly generated database.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    let mut gen_cfg = cfg.database.clone();
    gen_cfg.seed = rng::stream_word(cfg.seed, "generation");
    let db = db::generate(&gen_cfg)?;
    run_experiment_on(cfg, db)
}

/// Runs one experiment on an existing database (snapshot replay).
pub fn run_experiment_on(cfg: &ExperimentConfig, mut db: Database) -> Result<RunResult> {
    let started = Instant::now();
    let store_cfg = cfg.store.clone();
    let mut page_store = store::place_sequential(&db, &store_cfg)?;
    let mut buffer = BufferPool::new(&store_cfg);

    let mut layout_rng = rng::stream(cfg.seed, "protocol.layout");
    let candidates: Vec<ObjectId> = db.live_objects().to_vec();
    let id_space = db.object_id_space();
    let class_lookup: Vec<u32> = {
        let mut v = vec![0u32; id_space as usize];
        for obj in db.objects() {
            v[obj.oid.idx()] = obj.class_id.0;
        }
        v
    };
    let regional = RegionalState::init(
        candidates,
        &cfg.workload.regional,
        id_space,
        &mut layout_rng,
        |oid| class_lookup[oid.idx()],
    )?;
    let mut state = WorkloadState::new(
        regional,
        cfg.workload.dependency.clone(),
        cfg.workload.integrated,
        cfg.workload.regional.assign,
        rng::stream(cfg.seed, "protocol.select"),
        rng::stream(cfg.seed, "protocol.partition"),
    )?;
    let mut ctx = RunContext {
        workload_rng: rng::stream(cfg.seed, "workload"),
        traversal_seed: rng::stream_word(cfg.seed, "traversal"),
    };
    let mut policy: Box<dyn ClusteringPolicy> = match &cfg.clustering {
        ClusteringChoice::None => Box::new(NoClustering),
        ClusteringChoice::Cfc(c) => Box::new(Cfc::new(c.clone())),
    };

    let mut rows = Vec::with_capacity(cfg.workload.transactions as usize);
    let mut prev = buffer.stats();
    let mut moved_pages = 0u64;
    for txn in 0..cfg.workload.transactions {
        let sel = state.next_root(&db)?;
        let (trace, already_fed) = execute(
            cfg,
            &mut db,
            &mut page_store,
            &mut buffer,
            &mut state,
            &mut ctx,
            sel.root,
        )?;
        if !already_fed {
            for &(oid, rw) in &trace.visits {
                store::access(&mut page_store, &mut buffer, oid, rw)?;
            }
        }
        state.record_trace(&trace);
        policy.observe(&trace);
        moved_pages += policy.maybe_recluster(&mut page_store, &mut buffer) as u64;

        let now = buffer.stats();
        rows.push(TxnRow {
            txn,
            reads: now.transaction_reads() - prev.transaction_reads(),
            writes: now.transaction_writes() - prev.transaction_writes(),
            c_reads: now.clustering_reads - prev.clustering_reads,
            c_writes: now.clustering_writes - prev.clustering_writes,
            root: sel.root.0,
            region: sel.region.unwrap_or(NO_REGION),
        });
        prev = now;
    }

    let stats = store::flush_and_report(&mut buffer);
    if let Some(last) = rows.last_mut() {
        last.writes += stats.transaction_writes() - prev.transaction_writes();
        last.c_writes += stats.clustering_writes - prev.clustering_writes;
    }

    Ok(RunResult {
        rows,
        stats,
        fallbacks: state.fallbacks,
        moved_pages,
        final_page_count: page_store.page_count(),
        wall: started.elapsed(),
    })
}

/// Runs the base config once per value of a swept key. The first run
/// keeps the master seed (a one-value sweep equals a plain run); later
/// runs derive per-run seeds from it.
pub fn sweep(
    cfg: &ExperimentConfig,
    key: &str,
    values: &[String],
) -> Result<Vec<(String, RunResult)>> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let mut out = Vec::with_capacity(values.len());
    for (i, value) in values.iter().enumerate() {
        // Reapply the swept key through the builder so it revalidates
        // like any other assignment.
        let mut builder = crate::config::ConfigBuilder::from_config(cfg.clone());
        builder
            .apply(key, value)
            .map_err(|message| CliError::Config {
                path: format!("--sweep {key}"),
                line: 0,
                message,
            })?;
        let mut run_cfg = builder.finalize().map_err(|message| CliError::Config {
            path: format!("--sweep {key}={value}"),
            line: 0,
            message,
        })?;
        run_cfg.seed = if i == 0 {
            cfg.seed
        } else {
            rng::stream_word(cfg.seed, &format!("sweep[{i}]"))
        };
        log::info!("sweep {key}={value} (seed {})", run_cfg.seed);
        let result = run_experiment(&run_cfg)?;
        out.push((value.clone(), result));
    }
    Ok(out)
}

/// Writes the per-transaction CSV.
pub fn write_csv(result: &RunResult, mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.txn, row.reads, row.writes, row.c_reads, row.c_writes, row.root, row.region
        )?;
    }
    Ok(())
}

pub fn write_csv_file(result: &RunResult, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Writes the sweep summary CSV: one line per swept value.
pub fn write_summary(entries: &[(String, RunResult)], mut w: impl Write) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for (value, result) in entries {
        writeln!(
            w,
            "{},{},{},{}",
            value,
            result.stats.total_io(),
            result.stats.transaction_io(),
            result.stats.clustering_io()
        )?;
    }
    Ok(())
}

pub fn write_summary_file(entries: &[(String, RunResult)], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_summary(entries, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
