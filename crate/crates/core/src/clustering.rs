//! Pluggable reorganization policies.
//!
//! A policy watches the trace stream (`observe`, once per transaction)
//! and may reorganize object placement (`maybe_recluster`, called once
//! per transaction by the runner). All pages it touches are charged to
//! the clustering I/O counters by the store's move machinery.
//!
//! Two policies ship: [`NoClustering`], the baseline that never acts, and
//! [`Cfc`], a careful/flexible policy that keeps exact access and
//! co-access counts over a sliding transaction window and repacks only
//! pages whose hot objects mostly co-access off-page partners. Driving
//! `badness_threshold` to zero and lifting `max_pages_per_round` turns it
//! into an aggressive variant that reorganizes on any off-page affinity.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::db::ObjectId;
use crate::ops::AccessTrace;
use crate::store::{BufferPool, PageId, PageStore};

/// A placement reorganization policy.
pub trait ClusteringPolicy {
    /// Ingests the trace of one finished transaction.
    fn observe(&mut self, trace: &AccessTrace);

    /// Possibly reorganizes placement. Called once per transaction;
    /// returns the number of distinct pages touched by moves.
    fn maybe_recluster(&mut self, store: &mut PageStore, buffer: &mut BufferPool) -> usize;

    fn name(&self) -> &'static str;
}

/// Baseline policy: never observes anything, never moves anything.
#[derive(Debug, Default, Clone)]
pub struct NoClustering;

impl ClusteringPolicy for NoClustering {
    fn observe(&mut self, _trace: &AccessTrace) {}

    fn maybe_recluster(&mut self, _store: &mut PageStore, _buffer: &mut BufferPool) -> usize {
        0
    }

    fn name(&self) -> &'static str {
        "none"
    }
}

/// Tuning knobs for [`Cfc`].
#[derive(Debug, Clone, PartialEq)]
pub struct CfcConfig {
    /// Transactions of statistics retained.
    pub stat_window: usize,
    /// Transactions between reorganization attempts.
    pub trigger_period: u64,
    /// Minimum in-window access count before an object counts as hot.
    pub min_heat: u32,
    /// Fraction of a hot object's co-accesses that must fall off its page
    /// before the page qualifies for repacking, in (0, 1] for the careful
    /// variant; 0 makes every off-page affinity qualify (aggressive).
    pub badness_threshold: f64,
    /// Reorganization cap per round.
    pub max_pages_per_round: usize,
}

impl Default for CfcConfig {
    fn default() -> Self {
        CfcConfig {
            stat_window: 200,
            trigger_period: 50,
            min_heat: 3,
            badness_threshold: 0.5,
            max_pages_per_round: 32,
        }
    }
}

/// Per-transaction deltas retained by the sliding window.
#[derive(Debug, Clone, Default)]
struct TxnDelta {
    heat: Vec<(ObjectId, u32)>,
    pairs: Vec<((ObjectId, ObjectId), u32)>,
}

/// Careful/flexible co-access clustering.
///
/// Statistics are exact counts over the last `stat_window` transactions:
/// per-object heat (visit counts) and co-access weights between adjacent
/// trace visits, `O(|trace|)` work per transaction. Every
/// `trigger_period` transactions the policy scores pages by the worst
/// off-page co-access fraction among their hot objects, takes at most
/// `max_pages_per_round` offenders, and repacks each hot object together
/// with its strongest partners onto a freshly allocated page.
#[derive(Debug, Clone)]
pub struct Cfc {
    config: CfcConfig,
    heat: BTreeMap<ObjectId, u32>,
    partners: BTreeMap<ObjectId, BTreeMap<ObjectId, u32>>,
    window: VecDeque<TxnDelta>,
    transactions: u64,
}

impl Cfc {
    pub fn new(config: CfcConfig) -> Cfc {
        Cfc {
            config,
            heat: BTreeMap::new(),
            partners: BTreeMap::new(),
            window: VecDeque::new(),
            transactions: 0,
        }
    }

    pub fn config(&self) -> &CfcConfig {
        &self.config
    }

    pub fn heat_of(&self, oid: ObjectId) -> u32 {
        self.heat.get(&oid).copied().unwrap_or(0)
    }

    pub fn coaccess(&self, a: ObjectId, b: ObjectId) -> u32 {
        self.partners
            .get(&a)
            .and_then(|m| m.get(&b))
            .copied()
            .unwrap_or(0)
    }

    fn add_pair(&mut self, a: ObjectId, b: ObjectId, n: u32) {
        *self
            .partners
            .entry(a)
            .or_default()
            .entry(b)
            .or_insert(0) += n;
        *self
            .partners
            .entry(b)
            .or_default()
            .entry(a)
            .or_insert(0) += n;
    }

    fn sub_pair(&mut self, a: ObjectId, b: ObjectId, n: u32) {
        for (x, y) in [(a, b), (b, a)] {
            if let Some(m) = self.partners.get_mut(&x) {
                if let Some(w) = m.get_mut(&y) {
                    *w = w.saturating_sub(n);
                    if *w == 0 {
                        m.remove(&y);
                    }
                }
                if m.is_empty() {
                    self.partners.remove(&x);
                }
            }
        }
    }

    fn evict_oldest(&mut self) {
        if let Some(old) = self.window.pop_front() {
            for (oid, n) in old.heat {
                if let Some(h) = self.heat.get_mut(&oid) {
                    *h = h.saturating_sub(n);
                    if *h == 0 {
                        self.heat.remove(&oid);
                    }
                }
            }
            for ((a, b), n) in old.pairs {
                self.sub_pair(a, b, n);
            }
        }
    }

    /// Off-page fraction of a hot object's co-access weight.
    fn off_page_fraction(&self, store: &PageStore, oid: ObjectId, page: PageId) -> f64 {
        let Some(partners) = self.partners.get(&oid) else {
            return 0.0;
        };
        let mut on = 0u64;
        let mut off = 0u64;
        for (&p, &w) in partners {
            match store.object_pages(p) {
                Ok((pg, 1)) if pg == page => on += u64::from(w),
                Ok((_, _)) => off += u64::from(w),
                Err(_) => {}
            }
        }
        let total = on + off;
        if total == 0 {
            0.0
        } else {
            off as f64 / total as f64
        }
    }
}

impl ClusteringPolicy for Cfc {
    fn observe(&mut self, trace: &AccessTrace) {
        let mut delta = TxnDelta::default();
        let mut heat: BTreeMap<ObjectId, u32> = BTreeMap::new();
        let mut pairs: BTreeMap<(ObjectId, ObjectId), u32> = BTreeMap::new();
        let mut prev: Option<ObjectId> = None;
        for &(oid, _) in &trace.visits {
            *heat.entry(oid).or_insert(0) += 1;
            if let Some(p) = prev {
                if p != oid {
                    let key = if p < oid { (p, oid) } else { (oid, p) };
                    *pairs.entry(key).or_insert(0) += 1;
                }
            }
            prev = Some(oid);
        }
        for (&oid, &n) in &heat {
            *self.heat.entry(oid).or_insert(0) += n;
            delta.heat.push((oid, n));
        }
        for (&(a, b), &n) in &pairs {
            self.add_pair(a, b, n);
            delta.pairs.push(((a, b), n));
        }
        self.window.push_back(delta);
        while self.window.len() > self.config.stat_window {
            self.evict_oldest();
        }
    }

    fn maybe_recluster(&mut self, store: &mut PageStore, buffer: &mut BufferPool) -> usize {
        self.transactions += 1;
        if self.transactions % self.config.trigger_period != 0 {
            return 0;
        }

        // Hot objects and their current single pages.
        let mut hot: Vec<(ObjectId, u32, PageId)> = Vec::new();
        for (&oid, &h) in &self.heat {
            if h < self.config.min_heat {
                continue;
            }
            if let Ok((page, 1)) = store.object_pages(oid) {
                hot.push((oid, h, page));
            }
        }
        if hot.is_empty() {
            return 0;
        }

        // Score pages by the worst off-page fraction among their hot
        // objects.
        let mut page_score: BTreeMap<PageId, f64> = BTreeMap::new();
        let mut page_hot: BTreeMap<PageId, Vec<(ObjectId, u32)>> = BTreeMap::new();
        for &(oid, h, page) in &hot {
            let frac = self.off_page_fraction(store, oid, page);
            if frac > self.config.badness_threshold {
                let entry = page_score.entry(page).or_insert(0.0);
                if frac > *entry {
                    *entry = frac;
                }
                page_hot.entry(page).or_default().push((oid, h));
            }
        }
        if page_score.is_empty() {
            return 0;
        }

        let mut ranked: Vec<(PageId, f64)> = page_score.into_iter().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        ranked.truncate(self.config.max_pages_per_round);

        let page_size = store.page_size();
        let mut moved: alloc::collections::BTreeSet<ObjectId> = Default::default();
        let mut touched: alloc::collections::BTreeSet<PageId> = Default::default();

        for (page, _) in ranked {
            let mut anchors = page_hot.remove(&page).unwrap_or_default();
            anchors.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            for (anchor, _) in anchors {
                if moved.contains(&anchor) {
                    continue;
                }
                // Grow a bundle by strongest accumulated affinity to any
                // member, while it fits one page. This follows co-access
                // chains, not just the anchor's direct partners.
                let mut bundle = alloc::vec![anchor];
                let mut bytes = match store.object_bytes(anchor) {
                    Ok(b) => b,
                    Err(_) => continue,
                };
                let mut affinity: BTreeMap<ObjectId, u64> = BTreeMap::new();
                let mut absorb = |affinity: &mut BTreeMap<ObjectId, u64>,
                                  partners: &BTreeMap<ObjectId, BTreeMap<ObjectId, u32>>,
                                  member: ObjectId| {
                    if let Some(ps) = partners.get(&member) {
                        for (&p, &w) in ps {
                            *affinity.entry(p).or_insert(0) += u64::from(w);
                        }
                    }
                };
                absorb(&mut affinity, &self.partners, anchor);
                loop {
                    let best = affinity
                        .iter()
                        .filter(|(p, _)| !moved.contains(p) && !bundle.contains(*p))
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                        .map(|(&p, _)| p);
                    let Some(partner) = best else { break };
                    affinity.remove(&partner);
                    let Ok((_, count)) = store.object_pages(partner) else {
                        continue;
                    };
                    if count != 1 {
                        continue;
                    }
                    let size = store.object_bytes(partner).unwrap_or(u32::MAX);
                    if bytes + size > page_size {
                        continue;
                    }
                    bytes += size;
                    bundle.push(partner);
                    absorb(&mut affinity, &self.partners, partner);
                }
                if bundle.len() < 2 {
                    continue; // nothing to co-locate
                }
                let target = store.allocate_page();
                for oid in bundle {
                    if let Ok(pages) = store.move_object(buffer, oid, target) {
                        touched.extend(pages);
                        moved.insert(oid);
                    }
                }
            }
        }
        touched.len()
    }

    fn name(&self) -> &'static str {
        "cfc"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::ops::{Access, AccessTrace, OperationKind};
    use crate::store::{BufferPool, StoreConfig};

    fn trace_of(ids: &[u32]) -> AccessTrace {
        AccessTrace {
            kind: OperationKind::RandomAccess {
                count: ids.len() as u32,
            },
            root: ids.first().map(|&i| ObjectId(i)),
            visits: ids.iter().map(|&i| (ObjectId(i), Access::Read)).collect(),
        }
    }

    fn store_of(sizes: &[u32], page_size: u32) -> crate::store::PageStore {
        let mut store = crate::store::PageStore::new(
            page_size,
            sizes.iter().copied().min().unwrap_or(1),
        );
        for (i, &s) in sizes.iter().enumerate() {
            store.add_object(ObjectId(i as u32), s);
        }
        store
    }

    #[test]
    fn observe_counts_heat_and_adjacent_pairs() {
        let mut cfc = Cfc::new(CfcConfig::default());
        cfc.observe(&trace_of(&[]));
        assert_eq!(cfc.heat_of(ObjectId(0)), 0);
        cfc.observe(&trace_of(&[0, 1]));
        assert_eq!(cfc.heat_of(ObjectId(0)), 1);
        assert_eq!(cfc.heat_of(ObjectId(1)), 1);
        assert_eq!(cfc.coaccess(ObjectId(0), ObjectId(1)), 1);
        assert_eq!(cfc.coaccess(ObjectId(1), ObjectId(0)), 1);
    }

    #[test]
    fn window_eviction_decays_to_zero() {
        let mut cfc = Cfc::new(CfcConfig {
            stat_window: 1,
            ..CfcConfig::default()
        });
        cfc.observe(&trace_of(&[0, 1, 0]));
        assert_eq!(cfc.heat_of(ObjectId(0)), 2);
        cfc.observe(&trace_of(&[2, 3]));
        assert_eq!(cfc.heat_of(ObjectId(0)), 0);
        assert_eq!(cfc.coaccess(ObjectId(0), ObjectId(1)), 0);
        assert_eq!(cfc.heat_of(ObjectId(2)), 1);
    }

    #[test]
    fn uniform_workload_never_moves() {
        let mut cfc = Cfc::new(CfcConfig {
            stat_window: 50,
            trigger_period: 10,
            min_heat: 20,
            badness_threshold: 0.5,
            max_pages_per_round: 100,
        });
        let sizes = vec![100u32; 400];
        let mut store = store_of(&sizes, 1024);
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size: 1024,
            cache_size: 1024 * 16,
            ..StoreConfig::default()
        });
        let mut rng_state = 1u64;
        let mut moves = 0;
        for _ in 0..2000 {
            // Cheap LCG over the 400 objects: expected in-window heat per
            // object is 0.5, far under min_heat.
            let mut ids = Vec::new();
            for _ in 0..4 {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                ids.push((rng_state >> 33) as u32 % 400);
            }
            cfc.observe(&trace_of(&ids));
            moves += cfc.maybe_recluster(&mut store, &mut buffer);
        }
        assert_eq!(moves, 0);
        assert_eq!(buffer.stats().clustering_io(), 0);
    }

    #[test]
    fn scattered_hot_set_packs_onto_few_pages() {
        // 16 hot objects of 100 bytes spread over 16 pages of filler.
        let mut sizes = Vec::new();
        for _ in 0..16 {
            sizes.push(100u32); // hot object
            sizes.push(900u32); // filler sharing its page
        }
        let mut store = store_of(&sizes, 1024);
        let hot_ids: Vec<u32> = (0..32).filter(|i| i % 2 == 0).collect();
        let pages_before: alloc::collections::BTreeSet<PageId> = hot_ids
            .iter()
            .map(|&i| store.object_pages(ObjectId(i)).unwrap().0)
            .collect();
        assert_eq!(pages_before.len(), 16);

        let mut cfc = Cfc::new(CfcConfig {
            stat_window: 100,
            trigger_period: 20,
            min_heat: 3,
            badness_threshold: 0.3,
            max_pages_per_round: 64,
        });
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size: 1024,
            cache_size: 1024 * 64,
            ..StoreConfig::default()
        });
        for _ in 0..20 {
            cfc.observe(&trace_of(&hot_ids));
            cfc.maybe_recluster(&mut store, &mut buffer);
        }
        let pages_after: alloc::collections::BTreeSet<PageId> = hot_ids
            .iter()
            .map(|&i| store.object_pages(ObjectId(i)).unwrap().0)
            .collect();
        // 16 * 100 bytes fit in two 1024-byte pages; allow the +1 slack.
        let bound = (16 * 100usize).div_ceil(1024) + 1;
        assert!(
            pages_after.len() <= bound,
            "hot set still on {} pages (bound {bound})",
            pages_after.len()
        );
        assert!(buffer.stats().clustering_io() > 0);
    }

    #[test]
    fn huge_trigger_period_acts_like_no_clustering() {
        let mut cfc = Cfc::new(CfcConfig {
            trigger_period: u64::MAX,
            ..CfcConfig::default()
        });
        let sizes = vec![100u32; 50];
        let mut store = store_of(&sizes, 1024);
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size: 1024,
            cache_size: 1024 * 8,
            ..StoreConfig::default()
        });
        for _ in 0..500 {
            cfc.observe(&trace_of(&[1, 2, 3, 4, 5]));
            assert_eq!(cfc.maybe_recluster(&mut store, &mut buffer), 0);
        }
        assert_eq!(buffer.stats().clustering_io(), 0);
    }

    #[test]
    fn no_clustering_is_inert() {
        let mut policy = NoClustering;
        let sizes = vec![100u32; 10];
        let mut store = store_of(&sizes, 1024);
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size: 1024,
            cache_size: 1024 * 8,
            ..StoreConfig::default()
        });
        for _ in 0..100 {
            policy.observe(&trace_of(&[1, 2, 3]));
            assert_eq!(policy.maybe_recluster(&mut store, &mut buffer), 0);
        }
        assert_eq!(buffer.stats().clustering_io(), 0);
        assert_eq!(buffer.stats().total_io(), 0);
    }

    #[test]
    fn recluster_io_goes_to_clustering_counters() {
        let mut sizes = Vec::new();
        for _ in 0..8 {
            sizes.push(100u32);
            sizes.push(900u32);
        }
        let mut store = store_of(&sizes, 1024);
        let hot_ids: Vec<u32> = (0..16).filter(|i| i % 2 == 0).collect();
        let mut cfc = Cfc::new(CfcConfig {
            stat_window: 100,
            trigger_period: 5,
            min_heat: 2,
            badness_threshold: 0.0,
            max_pages_per_round: usize::MAX,
        });
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size: 1024,
            cache_size: 1024 * 64,
            ..StoreConfig::default()
        });
        let mut moved_pages = 0;
        for _ in 0..5 {
            cfc.observe(&trace_of(&hot_ids));
            moved_pages += cfc.maybe_recluster(&mut store, &mut buffer);
        }
        assert!(moved_pages > 0);
        let stats = buffer.stats();
        assert_eq!(stats.reads, stats.clustering_reads);
        assert_eq!(stats.writes, stats.clustering_writes);
    }
}
