//! Root-selection protocols.
//!
//! Two orthogonal mechanisms drive how workload roots evolve over time:
//!
//! **Regional schedules** mutate region weights at a rate set by `h`: one
//! move event fires per `⌈1/h⌉` root selections, after the selection that
//! completes the period.
//!
//! - *Moving window*: one hot region; at each event the window jumps to
//!   the next region in cyclic order, the region left drops straight back
//!   to the floor and the one entered jumps to the ceiling (step size is
//!   `highest - lowest`).
//! - *Gradual moving window*: same window movement, but with a user step
//!   size; the entered region's step direction is inverted, the left
//!   region keeps its direction, so regions warm up and cool down over
//!   several events and clamp at the bounds.
//! - *Cycles*: two equal regions trade places between the floor and the
//!   ceiling every event; the rest of the candidate set sits in a third
//!   region whose probability never changes.
//!
//! **Dependency rules** derive the next root from the previous one: a
//! fresh uniform pick, a pick among the previous root's structural or
//! dependency references, a pick inside a prefix of the objects the
//! previous operation visited, or a pick inside a window of the previous
//! root's class iterator. A hybrid selector alternates one schedule-driven
//! selection with `r` dependency selections.
//!
//! With integration enabled, a dependency rule's candidate set is itself
//! partitioned into regions mirroring the live weights of the global
//! schedule, so dependent picks follow the same hot/cold drift.

use alloc::vec::Vec;

use rand::Rng;

use crate::db::{Database, ObjectId, RefKind};
use crate::error::Error;
use crate::ops::AccessTrace;
use crate::regions::{partition, window_params, AssignMethod, Direction, HRegionParams, RegionSet};
use crate::rng::DetRng;
use crate::Result;

/// Sentinel period for schedules that never move.
const NEVER: u64 = u64::MAX;

/// Which regional schedule drives the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionalKind {
    MovingWindow,
    GradualMovingWindow { weight_step: f64 },
    Cycles,
    /// Window-style layout whose weights never change.
    Static,
    /// One region holding every candidate: plain uniform selection.
    Uniform,
}

/// Full regional-schedule configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalConfig {
    pub kind: RegionalKind,
    /// Change rate: one move event per `⌈1/h⌉` selections.
    pub h: f64,
    /// Region size as a fraction of the candidate set. For `Cycles` this
    /// is the size of each of the two cycling regions.
    pub hr_size: f64,
    pub lowest_weight: f64,
    pub highest_weight: f64,
    pub assign: AssignMethod,
}

impl RegionalConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            RegionalKind::Uniform => return Ok(()),
            RegionalKind::Static => {}
            _ => {
                if !(self.h > 0.0 && self.h <= 1.0) {
                    return Err(Error::config("h", "must be in (0, 1]"));
                }
            }
        }
        if !(self.hr_size > 0.0 && self.hr_size <= 1.0) {
            return Err(Error::config("hr_size", "must be in (0, 1]"));
        }
        if let RegionalKind::Cycles = self.kind {
            if self.hr_size * 2.0 > 1.0 {
                return Err(Error::config("hr_size", "cycles needs 2 * hr_size <= 1"));
            }
        }
        if let RegionalKind::GradualMovingWindow { weight_step } = self.kind {
            if weight_step < 0.0 {
                return Err(Error::config("weight_step", "must be >= 0"));
            }
        }
        if !(self.lowest_weight <= self.highest_weight) {
            return Err(Error::config("lowest_weight", "must be <= highest_weight"));
        }
        if self.lowest_weight < 0.0 {
            return Err(Error::config("lowest_weight", "must be >= 0"));
        }
        Ok(())
    }
}

/// Selections per move event for a change rate `h`; near-integer
/// reciprocals snap to the integer before the ceiling.
pub fn period_of(h: f64) -> u64 {
    let inv = 1.0 / h;
    let rounded = libm::round(inv);
    let snapped = if (inv - rounded).abs() < 1e-9 { rounded } else { libm::ceil(inv) };
    snapped as u64
}

/// Live state of a regional schedule over one region set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalState {
    pub region_set: RegionSet,
    kind: RegionalKind,
    pub window_index: usize,
    selections_since_move: u64,
    period: u64,
    /// Object id -> region index over the global candidate set.
    region_lookup: Vec<u32>,
}

const NO_REGION: u32 = u32::MAX;

fn build_lookup(rs: &RegionSet, id_space: u32) -> Vec<u32> {
    let mut lookup = alloc::vec![NO_REGION; id_space as usize];
    for (i, region) in rs.regions.iter().enumerate() {
        for &m in &region.members {
            if let Some(slot) = lookup.get_mut(m.idx()) {
                *slot = i as u32;
            }
        }
    }
    lookup
}

impl RegionalState {
    /// Builds the schedule state over `candidates`. `id_space` bounds the
    /// object ids for the reverse lookup table.
    pub fn init(
        candidates: Vec<ObjectId>,
        config: &RegionalConfig,
        id_space: u32,
        rng: &mut DetRng,
        class_key: impl Fn(ObjectId) -> u32,
    ) -> Result<RegionalState> {
        config.validate()?;
        let n_candidates = candidates.len();
        let (params, period) = match config.kind {
            RegionalKind::Uniform => (
                alloc::vec![HRegionParams {
                    hr_size: 1.0,
                    init_weight: 1.0,
                    lowest_weight: 0.0,
                    highest_weight: 1.0,
                    weight_step: 0.0,
                    init_dir: Direction::Down,
                }],
                NEVER,
            ),
            RegionalKind::MovingWindow | RegionalKind::Static => {
                let count = window_region_count(config.hr_size, n_candidates)?;
                let step = config.highest_weight - config.lowest_weight;
                let period = match config.kind {
                    RegionalKind::Static => NEVER,
                    _ => period_of(config.h),
                };
                (
                    window_params(
                        count,
                        config.hr_size,
                        config.lowest_weight,
                        config.highest_weight,
                        step,
                    ),
                    period,
                )
            }
            RegionalKind::GradualMovingWindow { weight_step } => {
                let count = window_region_count(config.hr_size, n_candidates)?;
                (
                    window_params(
                        count,
                        config.hr_size,
                        config.lowest_weight,
                        config.highest_weight,
                        weight_step,
                    ),
                    period_of(config.h),
                )
            }
            RegionalKind::Cycles => {
                let step = config.highest_weight - config.lowest_weight;
                let third = 1.0 - 2.0 * config.hr_size;
                let mut params = alloc::vec![
                    HRegionParams {
                        hr_size: config.hr_size,
                        init_weight: config.highest_weight,
                        lowest_weight: config.lowest_weight,
                        highest_weight: config.highest_weight,
                        weight_step: step,
                        init_dir: Direction::Down,
                    },
                    HRegionParams {
                        hr_size: config.hr_size,
                        init_weight: config.lowest_weight,
                        lowest_weight: config.lowest_weight,
                        highest_weight: config.highest_weight,
                        weight_step: step,
                        init_dir: Direction::Up,
                    },
                ];
                if third > 1e-12 {
                    params.push(HRegionParams {
                        hr_size: third,
                        init_weight: config.lowest_weight,
                        lowest_weight: config.lowest_weight,
                        highest_weight: config.highest_weight,
                        weight_step: 0.0,
                        init_dir: Direction::Down,
                    });
                }
                (params, period_of(config.h))
            }
        };
        let region_set = partition(candidates, &params, config.assign, rng, class_key)?;
        let region_lookup = build_lookup(&region_set, id_space);
        Ok(RegionalState {
            region_set,
            kind: config.kind,
            window_index: 0,
            selections_since_move: 0,
            period,
            region_lookup,
        })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// Current weight vector (for event observation).
    pub fn weights(&self) -> Vec<f64> {
        self.region_set.regions.iter().map(|r| r.weight).collect()
    }

    /// Region index of an object in the global set, if any.
    pub fn region_of(&self, oid: ObjectId) -> Option<u32> {
        match self.region_lookup.get(oid.idx()) {
            Some(&r) if r != NO_REGION => Some(r),
            _ => None,
        }
    }

    /// Drops a deleted object from the set.
    pub fn remove_member(&mut self, oid: ObjectId) {
        if self.region_of(oid).is_some() {
            self.region_set.remove_member(oid);
            self.region_lookup[oid.idx()] = NO_REGION;
        }
    }

    /// Draws a root from the global set.
    pub fn select_root(&self, rng: &mut DetRng) -> Result<(ObjectId, u32)> {
        self.region_set.select_root(rng)
    }

    /// Counts one root selection; when the count completes a period, the
    /// schedule applies its move event. Returns true when an event fired.
    pub fn tick(&mut self) -> bool {
        if self.period == NEVER {
            return false;
        }
        self.selections_since_move += 1;
        if self.selections_since_move < self.period {
            return false;
        }
        self.selections_since_move = 0;
        let n = self.region_set.regions.len();
        match self.kind {
            RegionalKind::MovingWindow => {
                let left = self.window_index;
                self.window_index = (self.window_index + 1) % n;
                self.region_set.regions[left].dir = Direction::Down;
                self.region_set.regions[self.window_index].dir = Direction::Up;
                for region in &mut self.region_set.regions {
                    region.step_weight();
                }
            }
            RegionalKind::GradualMovingWindow { .. } => {
                self.window_index = (self.window_index + 1) % n;
                let entered = &mut self.region_set.regions[self.window_index];
                entered.dir = entered.dir.invert();
                for region in &mut self.region_set.regions {
                    region.step_weight();
                }
            }
            RegionalKind::Cycles => {
                for region in &mut self.region_set.regions {
                    if region.params.weight_step <= 0.0 {
                        continue;
                    }
                    region.step_weight();
                    if region.weight == region.params.lowest_weight
                        || region.weight == region.params.highest_weight
                    {
                        region.dir = region.dir.invert();
                    }
                }
            }
            RegionalKind::Static | RegionalKind::Uniform => {}
        }
        true
    }
}

fn window_region_count(hr_size: f64, candidates: usize) -> Result<usize> {
    let count = libm::round(1.0 / hr_size) as usize;
    let count = count.max(1);
    if candidates < count {
        return Err(Error::config(
            "hr_size",
            "candidate set smaller than the region count it implies",
        ));
    }
    Ok(count)
}

/// Dependency-rule parameters and mixing probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyConfig {
    /// Dependency references per object (graph generation knob).
    pub d: u32,
    /// Fraction of the previous operation's distinct visit set eligible
    /// as the next root.
    pub c: f64,
    /// Fraction of the previous root's class eligible as the next root.
    pub u: f64,
    /// Dependency selections between schedule-driven selections.
    pub r: u32,
    pub random_prob: f64,
    pub sref_prob: f64,
    pub dref_prob: f64,
    pub traversed_prob: f64,
    pub class_prob: f64,
}

impl Default for DependencyConfig {
    fn default() -> Self {
        DependencyConfig {
            d: 0,
            c: 1.0,
            u: 1.0,
            r: 0,
            random_prob: 1.0,
            sref_prob: 0.0,
            dref_prob: 0.0,
            traversed_prob: 0.0,
            class_prob: 0.0,
        }
    }
}

impl DependencyConfig {
    pub fn validate(&self) -> Result<()> {
        let sum = self.random_prob
            + self.sref_prob
            + self.dref_prob
            + self.traversed_prob
            + self.class_prob;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadDependencyProbabilities);
        }
        for (field, p) in [
            ("random_prob", self.random_prob),
            ("sref_prob", self.sref_prob),
            ("dref_prob", self.dref_prob),
            ("traversed_prob", self.traversed_prob),
            ("class_prob", self.class_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, "must be in [0, 1]"));
            }
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::config("c", "must be in (0, 1]"));
        }
        if !(self.u > 0.0 && self.u <= 1.0) {
            return Err(Error::config("u", "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Which dependency rule a selection used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependencyChoice {
    Random,
    SRef,
    DRef,
    Traversed,
    Class,
}

/// Uniform pick over the whole base (the default `RAND` law; swap in a
/// skewed law by drawing the root yourself).
pub fn dep_random(db: &Database, rng: &mut DetRng) -> Result<ObjectId> {
    db.random_object(rng)
}

/// Uniform pick among the previous root's reference set; `None` when the
/// set is empty.
pub fn dep_ref(
    db: &Database,
    prev: ObjectId,
    kind: RefKind,
    rng: &mut DetRng,
) -> Result<Option<ObjectId>> {
    let set = db.refset(prev, kind)?;
    if set.is_empty() {
        return Ok(None);
    }
    Ok(Some(set[rng.gen_range(0..set.len())]))
}

/// The eligible prefix of a distinct visit set under fraction `c`:
/// the first `⌈c × n⌉` objects in visit order.
pub fn traversed_candidates(distinct: &[ObjectId], c: f64) -> &[ObjectId] {
    if distinct.is_empty() {
        return distinct;
    }
    let k = libm::ceil(c * distinct.len() as f64) as usize;
    &distinct[..k.clamp(1, distinct.len())]
}

/// Uniform pick inside the eligible prefix of the previous operation's
/// distinct visit set.
pub fn dep_traversed(distinct: &[ObjectId], c: f64, rng: &mut DetRng) -> Option<ObjectId> {
    let set = traversed_candidates(distinct, c);
    if set.is_empty() {
        return None;
    }
    Some(set[rng.gen_range(0..set.len())])
}

/// The candidate window for class-based selection: the `⌈u × n⌉`
/// consecutive iterator entries starting at the previous root's own
/// position (cyclic). Distinct previous roots map to distinct windows
/// because iterator positions are unique.
pub fn class_candidates(db: &Database, prev: ObjectId, u: f64) -> Result<Vec<ObjectId>> {
    let class = db.class(db.object(prev)?.class_id)?;
    let n = class.iterator.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let offset = class
        .iterator
        .iter()
        .position(|&m| m == prev)
        .ok_or(Error::UnknownObject(prev))?;
    let k = (libm::ceil(u * n as f64) as usize).clamp(1, n);
    Ok((0..k).map(|i| class.iterator[(offset + i) % n]).collect())
}

/// Uniform pick inside the class window of the previous root.
pub fn dep_class(
    db: &Database,
    prev: ObjectId,
    u: f64,
    rng: &mut DetRng,
) -> Result<Option<ObjectId>> {
    let set = class_candidates(db, prev, u)?;
    if set.is_empty() {
        return Ok(None);
    }
    Ok(Some(set[rng.gen_range(0..set.len())]))
}

/// Selection phase of the hybrid state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Random,
    Dependency { steps_done: u32 },
}

/// One selected root with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSelection {
    pub root: ObjectId,
    /// Region index the draw came from (or the global region holding the
    /// root, for plain dependency draws).
    pub region: Option<u32>,
    /// Phase the selection happened in.
    pub phase: Phase,
    /// Dependency rule used, when in the dependency phase.
    pub dependency: Option<DependencyChoice>,
    /// True when an empty candidate set forced a global random fallback.
    pub fell_back: bool,
}

/// The full root-selection state machine: a regional schedule plus a
/// dependency mix, alternating per the hybrid two-phase scheme.
#[derive(Debug, Clone)]
pub struct WorkloadState {
    pub regional: RegionalState,
    pub dependency: DependencyConfig,
    /// Partition dependency candidate sets into regions mirroring the
    /// global schedule's live weights.
    pub integrated: bool,
    assign: AssignMethod,
    phase: Phase,
    prev_root: Option<ObjectId>,
    prev_distinct: Option<Vec<ObjectId>>,
    select_rng: DetRng,
    partition_rng: DetRng,
    /// Count of empty-candidate fallbacks to global random selection.
    pub fallbacks: u64,
}

impl WorkloadState {
    pub fn new(
        regional: RegionalState,
        dependency: DependencyConfig,
        integrated: bool,
        assign: AssignMethod,
        select_rng: DetRng,
        partition_rng: DetRng,
    ) -> Result<WorkloadState> {
        dependency.validate()?;
        Ok(WorkloadState {
            regional,
            dependency,
            integrated,
            assign,
            phase: Phase::Random,
            prev_root: None,
            prev_distinct: None,
            select_rng,
            partition_rng,
            fallbacks: 0,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Feeds back the trace of the operation just executed on the last
    /// selected root; the traversed-set rule reads it.
    pub fn record_trace(&mut self, trace: &AccessTrace) {
        self.prev_distinct = Some(trace.distinct());
    }

    /// Selects the next root and advances phase and schedule.
    pub fn next_root(&mut self, db: &Database) -> Result<RootSelection> {
        let selection = match self.phase {
            Phase::Random => {
                let (root, region) = self.regional.select_root(&mut self.select_rng)?;
                self.phase = if self.dependency.r > 0 {
                    Phase::Dependency { steps_done: 0 }
                } else {
                    Phase::Random
                };
                RootSelection {
                    root,
                    region: Some(region),
                    phase: Phase::Random,
                    dependency: None,
                    fell_back: false,
                }
            }
            Phase::Dependency { steps_done } => {
                let choice = self.draw_choice();
                let phase = self.phase;
                let (root, region, fell_back) = self.dependency_select(db, choice)?;
                let done = steps_done + 1;
                self.phase = if done >= self.dependency.r {
                    Phase::Random
                } else {
                    Phase::Dependency { steps_done: done }
                };
                RootSelection {
                    root,
                    region,
                    phase,
                    dependency: Some(choice),
                    fell_back,
                }
            }
        };
        self.regional.tick();
        self.prev_root = Some(selection.root);
        self.prev_distinct = None;
        Ok(selection)
    }

    fn draw_choice(&mut self) -> DependencyChoice {
        let d = &self.dependency;
        let u = self.select_rng.gen::<f64>();
        let mut acc = d.random_prob;
        if u < acc {
            return DependencyChoice::Random;
        }
        acc += d.sref_prob;
        if u < acc {
            return DependencyChoice::SRef;
        }
        acc += d.dref_prob;
        if u < acc {
            return DependencyChoice::DRef;
        }
        acc += d.traversed_prob;
        if u < acc {
            return DependencyChoice::Traversed;
        }
        DependencyChoice::Class
    }

    fn dependency_select(
        &mut self,
        db: &Database,
        choice: DependencyChoice,
    ) -> Result<(ObjectId, Option<u32>, bool)> {
        let prev = self.prev_root.ok_or(Error::EmptyCandidates)?;
        let candidates: Vec<ObjectId> = match choice {
            DependencyChoice::Random => {
                // The whole base is the candidate set; its partition is
                // the global region set itself.
                return if self.integrated {
                    let (root, region) = self.regional.select_root(&mut self.select_rng)?;
                    Ok((root, Some(region), false))
                } else {
                    let root = dep_random(db, &mut self.select_rng)?;
                    Ok((root, self.regional.region_of(root), false))
                };
            }
            DependencyChoice::SRef => db.refset(prev, RefKind::Structural)?,
            DependencyChoice::DRef => db.refset(prev, RefKind::Dependency)?,
            DependencyChoice::Traversed => match &self.prev_distinct {
                Some(distinct) => traversed_candidates(distinct, self.dependency.c).to_vec(),
                None => Vec::new(),
            },
            DependencyChoice::Class => class_candidates(db, prev, self.dependency.u)?,
        };
        if candidates.is_empty() {
            self.fallbacks += 1;
            let root = dep_random(db, &mut self.select_rng)?;
            return Ok((root, self.regional.region_of(root), true));
        }
        if self.integrated {
            let (root, region) = self.integrated_select(db, candidates)?;
            Ok((root, Some(region), false))
        } else {
            let root = candidates[self.select_rng.gen_range(0..candidates.len())];
            Ok((root, self.regional.region_of(root), false))
        }
    }

    /// Partitions a candidate set into as many regions as the global set,
    /// mirrors the live weights onto the blocks, and draws.
    fn integrated_select(
        &mut self,
        db: &Database,
        candidates: Vec<ObjectId>,
    ) -> Result<(ObjectId, u32)> {
        let params: Vec<HRegionParams> = self
            .regional
            .region_set
            .regions
            .iter()
            .map(|r| r.params.clone())
            .collect();
        let mut local = partition(
            candidates,
            &params,
            self.assign,
            &mut self.partition_rng,
            |oid| db.object(oid).map(|o| o.class_id.0).unwrap_or(0),
        )?;
        for (mirror, global) in local
            .regions
            .iter_mut()
            .zip(self.regional.region_set.regions.iter())
        {
            mirror.weight = global.weight;
            mirror.dir = global.dir;
        }
        local.select_root(&mut self.select_rng)
    }
}
