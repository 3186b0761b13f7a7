//! Simulated page store: object-to-page placement, an LRU buffer pool,
//! and page I/O accounting.
//!
//! Objects live on fixed-size pages. Initial placement packs objects in
//! id order, first-fit; an object larger than a page gets its own run of
//! dedicated pages. Every access goes through the buffer pool: a miss
//! costs one page read (and one page write when it evicts a dirty
//! victim); writes are deferred until eviction or the final flush.
//!
//! Each read and write is attributed either to transactions or to
//! clustering reorganization, never both; a dirty page remembers who
//! dirtied it first, and its eventual write is charged there. Deletions
//! and moves leave holes; nothing compacts pages except clustering moves.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::db::{Database, ObjectId};
use crate::error::Error;
use crate::ops::Access;
use crate::Result;

/// Dense ordinal identifying a page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PageId(pub u32);

impl PageId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Initial placement discipline (only sequential packing is modeled).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Sequential,
}

/// Buffer eviction discipline (only LRU is modeled).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eviction {
    Lru,
}

/// Page store and buffer configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreConfig {
    pub page_size: u32,
    pub cache_size: u64,
    pub placement: Placement,
    pub eviction: Eviction,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            page_size: 4096,
            cache_size: 4 * 1024 * 1024,
            placement: Placement::Sequential,
            eviction: Eviction::Lru,
        }
    }
}

impl StoreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.page_size == 0 {
            return Err(Error::config("page_size", "must be > 0"));
        }
        if self.cache_size < u64::from(self.page_size) {
            return Err(Error::config("cache_size", "must be >= page_size"));
        }
        Ok(())
    }

    pub fn cache_pages(&self) -> usize {
        (self.cache_size / u64::from(self.page_size)) as usize
    }
}

/// Who caused an I/O (and who dirtied a page).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoPhase {
    Transaction,
    Clustering,
}

/// Monotone page I/O counters. `reads`/`writes` are totals;
/// `clustering_reads`/`clustering_writes` are the subsets attributed to
/// reorganization, so transaction I/O is the difference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoStats {
    pub reads: u64,
    pub writes: u64,
    pub clustering_reads: u64,
    pub clustering_writes: u64,
}

impl IoStats {
    pub fn transaction_reads(&self) -> u64 {
        self.reads - self.clustering_reads
    }

    pub fn transaction_writes(&self) -> u64 {
        self.writes - self.clustering_writes
    }

    pub fn transaction_io(&self) -> u64 {
        self.transaction_reads() + self.transaction_writes()
    }

    pub fn clustering_io(&self) -> u64 {
        self.clustering_reads + self.clustering_writes
    }

    pub fn total_io(&self) -> u64 {
        self.reads + self.writes
    }

    fn charge_read(&mut self, phase: IoPhase) {
        self.reads += 1;
        if phase == IoPhase::Clustering {
            self.clustering_reads += 1;
        }
    }

    fn charge_write(&mut self, phase: IoPhase) {
        self.writes += 1;
        if phase == IoPhase::Clustering {
            self.clustering_writes += 1;
        }
    }
}

/// Where one object sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ObjPlace {
    first_page: PageId,
    page_count: u32,
    slot: u32,
    bytes: u32,
}

/// Object-to-page mapping with byte-level fill accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct PageStore {
    page_size: u32,
    slots: Vec<Option<ObjPlace>>,
    page_fill: Vec<u32>,
    page_objects: Vec<Vec<ObjectId>>,
    dedicated: Vec<bool>,
    /// Pages allocated but never materialized on disk: their first load
    /// costs no read.
    fresh: Vec<bool>,
    /// Pages eligible for first-fit placement (free >= min_open_size).
    open_pages: BTreeSet<u32>,
    min_open_size: u32,
}

impl PageStore {
    /// An empty store. `min_open_size` is the smallest object size that
    /// will ever be placed; pages with less free space than that are
    /// closed to first-fit placement.
    pub fn new(page_size: u32, min_open_size: u32) -> PageStore {
        PageStore {
            page_size,
            slots: Vec::new(),
            page_fill: Vec::new(),
            page_objects: Vec::new(),
            dedicated: Vec::new(),
            fresh: Vec::new(),
            open_pages: BTreeSet::new(),
            min_open_size: min_open_size.max(1),
        }
    }

    pub fn page_size(&self) -> u32 {
        self.page_size
    }

    pub fn page_count(&self) -> usize {
        self.page_fill.len()
    }

    pub fn page_fill(&self, page: PageId) -> u32 {
        self.page_fill[page.idx()]
    }

    pub fn is_dedicated(&self, page: PageId) -> bool {
        self.dedicated[page.idx()]
    }

    /// Objects currently placed on a page (first page only, for dedicated
    /// runs).
    pub fn objects_on(&self, page: PageId) -> &[ObjectId] {
        &self.page_objects[page.idx()]
    }

    /// First page and page count of an object.
    pub fn object_pages(&self, oid: ObjectId) -> Result<(PageId, u32)> {
        let place = self
            .slots
            .get(oid.idx())
            .and_then(|s| s.as_ref())
            .ok_or(Error::UnmappedObject(oid))?;
        Ok((place.first_page, place.page_count))
    }

    pub fn object_bytes(&self, oid: ObjectId) -> Result<u32> {
        Ok(self
            .slots
            .get(oid.idx())
            .and_then(|s| s.as_ref())
            .ok_or(Error::UnmappedObject(oid))?
            .bytes)
    }

    pub fn is_mapped(&self, oid: ObjectId) -> bool {
        self.slots.get(oid.idx()).map_or(false, Option::is_some)
    }

    fn new_page(&mut self, fresh: bool) -> PageId {
        let id = PageId(self.page_fill.len() as u32);
        self.page_fill.push(0);
        self.page_objects.push(Vec::new());
        self.dedicated.push(false);
        self.fresh.push(fresh);
        id
    }

    /// Allocates an empty page as a clustering move target; its first
    /// load costs no read.
    pub fn allocate_page(&mut self) -> PageId {
        let id = self.new_page(true);
        self.open_pages.insert(id.0);
        id
    }

    fn refresh_open(&mut self, page: PageId) {
        let free = self.page_size - self.page_fill[page.idx()];
        if !self.dedicated[page.idx()] && free >= self.min_open_size {
            self.open_pages.insert(page.0);
        } else {
            self.open_pages.remove(&page.0);
        }
    }

    fn ensure_slot(&mut self, oid: ObjectId) {
        if self.slots.len() <= oid.idx() {
            self.slots.resize(oid.idx() + 1, None);
        }
    }

    /// Places an object first-fit (initial placement and insertions).
    /// Oversized objects get dedicated pages.
    pub fn add_object(&mut self, oid: ObjectId, bytes: u32) {
        self.ensure_slot(oid);
        debug_assert!(self.slots[oid.idx()].is_none());
        if bytes > self.page_size {
            let pages = bytes.div_ceil(self.page_size);
            let first = self.new_page(false);
            self.dedicated[first.idx()] = true;
            self.page_fill[first.idx()] = self.page_size;
            self.page_objects[first.idx()].push(oid);
            self.open_pages.remove(&first.0);
            for i in 1..pages {
                let p = self.new_page(false);
                self.dedicated[p.idx()] = true;
                self.page_fill[p.idx()] = if i + 1 == pages {
                    bytes - (pages - 1) * self.page_size
                } else {
                    self.page_size
                };
                self.open_pages.remove(&p.0);
            }
            self.slots[oid.idx()] = Some(ObjPlace {
                first_page: first,
                page_count: pages,
                slot: 0,
                bytes,
            });
            return;
        }
        let target = self
            .open_pages
            .iter()
            .copied()
            .find(|&p| self.page_size - self.page_fill[p as usize] >= bytes)
            .map(PageId)
            .unwrap_or_else(|| {
                let p = self.new_page(false);
                self.open_pages.insert(p.0);
                p
            });
        let slot = self.page_objects[target.idx()].len() as u32;
        self.page_fill[target.idx()] += bytes;
        self.page_objects[target.idx()].push(oid);
        self.refresh_open(target);
        self.slots[oid.idx()] = Some(ObjPlace {
            first_page: target,
            page_count: 1,
            slot,
            bytes,
        });
    }

    /// Unmaps a deleted object, leaving a hole.
    pub fn remove_object(&mut self, oid: ObjectId) -> Result<PageId> {
        let place = self
            .slots
            .get_mut(oid.idx())
            .and_then(Option::take)
            .ok_or(Error::UnmappedObject(oid))?;
        let page = place.first_page;
        if place.page_count == 1 {
            self.page_fill[page.idx()] -= place.bytes;
            let objs = &mut self.page_objects[page.idx()];
            if let Some(pos) = objs.iter().position(|&o| o == oid) {
                objs.remove(pos);
            }
            self.refresh_open(page);
        } else {
            for i in 0..place.page_count {
                let p = (page.0 + i) as usize;
                self.page_fill[p] = 0;
                self.page_objects[p].clear();
            }
        }
        Ok(page)
    }

    /// Moves a single-page object onto `target`, reading and dirtying the
    /// source and target pages through the buffer (charged to clustering).
    /// Moving an object onto its own page is a no-op with zero I/O.
    pub fn move_object(
        &mut self,
        buffer: &mut BufferPool,
        oid: ObjectId,
        target: PageId,
    ) -> Result<Vec<PageId>> {
        let place = self
            .slots
            .get(oid.idx())
            .and_then(|s| s.as_ref())
            .copied()
            .ok_or(Error::UnmappedObject(oid))?;
        if place.page_count != 1 {
            return Err(Error::PageFull {
                page: target,
                free: 0,
                needed: place.bytes,
            });
        }
        let source = place.first_page;
        if source == target {
            return Ok(Vec::new());
        }
        if target.idx() >= self.page_count() || self.dedicated[target.idx()] {
            return Err(Error::UnmappedObject(oid));
        }
        let free = self.page_size - self.page_fill[target.idx()];
        if free < place.bytes {
            return Err(Error::PageFull {
                page: target,
                free,
                needed: place.bytes,
            });
        }

        for page in [source, target] {
            let fresh = self.fresh[page.idx()];
            let outcome = buffer.access_page(page, true, IoPhase::Clustering, fresh);
            if outcome.loaded {
                self.fresh[page.idx()] = false;
            }
        }

        self.page_fill[source.idx()] -= place.bytes;
        if let Some(pos) = self.page_objects[source.idx()]
            .iter()
            .position(|&o| o == oid)
        {
            self.page_objects[source.idx()].remove(pos);
        }
        let slot = self.page_objects[target.idx()].len() as u32;
        self.page_fill[target.idx()] += place.bytes;
        self.page_objects[target.idx()].push(oid);
        self.refresh_open(source);
        self.refresh_open(target);
        self.slots[oid.idx()] = Some(ObjPlace {
            first_page: target,
            page_count: 1,
            slot,
            bytes: place.bytes,
        });
        Ok(vec![source, target])
    }
}

/// Packs a database sequentially: objects in id order, first-fit, never
/// splitting an object across pages unless it exceeds the page size.
pub fn place_sequential(db: &Database, config: &StoreConfig) -> Result<PageStore> {
    config.validate()?;
    let min_size = db
        .classes()
        .map(|c| c.instance_size)
        .min()
        .unwrap_or(1)
        .max(1);
    let mut store = PageStore::new(config.page_size, min_size);
    for obj in db.objects() {
        store.add_object(obj.oid, obj.filler_size.max(1));
    }
    Ok(store)
}

/// Result of one page touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageOutcome {
    pub hit: bool,
    /// The page entered the buffer on this touch.
    pub loaded: bool,
}

/// Hit/miss verdict of one object access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitMiss {
    Hit,
    Miss,
}

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
struct Frame {
    page: u32,
    dirty: Option<IoPhase>,
    prev: u32,
    next: u32,
}

/// Fixed-capacity LRU page buffer with write-back accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferPool {
    capacity: usize,
    frames: Vec<Frame>,
    resident: Vec<u32>,
    head: u32,
    tail: u32,
    stats: IoStats,
}

impl BufferPool {
    pub fn new(config: &StoreConfig) -> BufferPool {
        BufferPool {
            capacity: config.cache_pages().max(1),
            frames: Vec::new(),
            resident: Vec::new(),
            head: NIL,
            tail: NIL,
            stats: IoStats::default(),
        }
    }

    pub fn stats(&self) -> IoStats {
        self.stats
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn resident_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_resident(&self, page: PageId) -> bool {
        self.resident.get(page.idx()).map_or(false, |&f| f != NIL)
    }

    pub fn is_dirty(&self, page: PageId) -> bool {
        self.resident
            .get(page.idx())
            .filter(|&&f| f != NIL)
            .map_or(false, |&f| self.frames[f as usize].dirty.is_some())
    }

    fn unlink(&mut self, frame: u32) {
        let (prev, next) = {
            let f = &self.frames[frame as usize];
            (f.prev, f.next)
        };
        if prev != NIL {
            self.frames[prev as usize].next = next;
        } else {
            self.head = next;
        }
        if next != NIL {
            self.frames[next as usize].prev = prev;
        } else {
            self.tail = prev;
        }
    }

    fn push_front(&mut self, frame: u32) {
        self.frames[frame as usize].prev = NIL;
        self.frames[frame as usize].next = self.head;
        if self.head != NIL {
            self.frames[self.head as usize].prev = frame;
        }
        self.head = frame;
        if self.tail == NIL {
            self.tail = frame;
        }
    }

    /// Touches one page: hit refreshes recency, miss loads it (one read,
    /// unless the page is fresh) evicting the LRU page first when full (one
    /// write if the victim is dirty, charged to whoever dirtied it).
    pub fn access_page(
        &mut self,
        page: PageId,
        write: bool,
        phase: IoPhase,
        fresh: bool,
    ) -> PageOutcome {
        if self.resident.len() <= page.idx() {
            self.resident.resize(page.idx() + 1, NIL);
        }
        let existing = self.resident[page.idx()];
        if existing != NIL {
            self.unlink(existing);
            self.push_front(existing);
            if write && self.frames[existing as usize].dirty.is_none() {
                self.frames[existing as usize].dirty = Some(phase);
            }
            return PageOutcome {
                hit: true,
                loaded: false,
            };
        }

        if !fresh {
            self.stats.charge_read(phase);
        }
        let frame = if self.frames.len() < self.capacity {
            let idx = self.frames.len() as u32;
            self.frames.push(Frame {
                page: page.0,
                dirty: None,
                prev: NIL,
                next: NIL,
            });
            idx
        } else {
            let victim = self.tail;
            self.unlink(victim);
            let old = &mut self.frames[victim as usize];
            if let Some(source) = old.dirty.take() {
                self.stats.charge_write(source);
            }
            self.resident[old.page as usize] = NIL;
            old.page = page.0;
            victim
        };
        self.resident[page.idx()] = frame;
        self.push_front(frame);
        if write {
            self.frames[frame as usize].dirty = Some(phase);
        }
        PageOutcome {
            hit: false,
            loaded: true,
        }
    }

    /// Writes out every dirty page (kept resident, now clean). Returns
    /// the number of pages written.
    pub fn flush(&mut self) -> u64 {
        let mut written = 0;
        for frame in &mut self.frames {
            if let Some(source) = frame.dirty.take() {
                self.stats.charge_write(source);
                written += 1;
            }
        }
        written
    }
}

/// Touches every page of an object through the buffer in transaction
/// phase. Returns `Hit` only when all its pages were resident.
pub fn access(
    store: &mut PageStore,
    buffer: &mut BufferPool,
    oid: ObjectId,
    rw: Access,
) -> Result<HitMiss> {
    let (first, count) = store.object_pages(oid)?;
    let write = rw == Access::Write;
    let mut all_hit = true;
    for i in 0..count {
        let page = PageId(first.0 + i);
        let fresh = store.fresh[page.idx()];
        let outcome = buffer.access_page(page, write, IoPhase::Transaction, fresh);
        if outcome.loaded {
            store.fresh[page.idx()] = false;
        }
        all_hit &= outcome.hit;
    }
    Ok(if all_hit { HitMiss::Hit } else { HitMiss::Miss })
}

/// Flushes the buffer and returns the final counters.
pub fn flush_and_report(buffer: &mut BufferPool) -> IoStats {
    buffer.flush();
    buffer.stats()
}
