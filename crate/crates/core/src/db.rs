//! Synthetic object database: schema generation and instantiation.
//!
//! The database is a graph of `no` objects spread over `nc` classes. A
//! class fixes an instance size (a base size times a skew-distributed
//! integer factor) and a list of typed class references; every object
//! instantiates its class's references with targets drawn inside a cyclic
//! ordinal window, and every forward reference is mirrored by an inverse
//! reference on the target. Each class keeps an iterator listing its live
//! members in insertion order. Objects can additionally carry dependency
//! references (`drefs`), extra edges used only to correlate successive
//! workload roots.
//!
//! Object and class ids are dense ordinals. Deletion leaves a hole; ids
//! are never reused, so page placements and reference targets stay stable.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::Error;
use crate::rng::DetRng;
use crate::Result;

/// Dense ordinal identifying an object. Ids are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(pub u32);

/// Dense ordinal identifying a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ObjectId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl ClassId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which edge family a reference-set query reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefKind {
    /// Structural references: the object graph's forward edges.
    Structural,
    /// Dependency references: extra edges carrying root-to-root
    /// correlation only.
    Dependency,
}

/// Generation parameters for schema and object base.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseGenConfig {
    /// Number of classes.
    pub nc: u32,
    /// Maximum references per class; the actual count is uniform in
    /// `[1, maxnref]`.
    pub maxnref: u32,
    /// Base instance size in bytes; a class's instance size is
    /// `basesize * k` for a skew-distributed `k`.
    pub basesize: u32,
    /// Total object count.
    pub no: u32,
    /// Number of reference types.
    pub nreft: u32,
    /// Integer attributes per object.
    pub attrange: u32,
    /// Class-reference locality window, in classes (cyclic). `nc` means
    /// unrestricted.
    pub clocref: u32,
    /// Object-reference locality window, in objects (cyclic). `no` means
    /// unrestricted.
    pub olocref: u32,
    /// Cap for the instance-size factor `k`.
    pub size_factor_max: u32,
    /// Exponent of the size-factor distribution `P(k) ∝ k^-skew`.
    /// The default is calibrated so that, with `basesize = 50` and
    /// `size_factor_max = 32`, mean instance size lands near 233 bytes.
    pub size_skew: f64,
    /// Dependency references per object.
    pub drefs_per_object: u32,
    /// Seed for the generation stream.
    pub seed: u64,
}

/// Calibrated default for [`DatabaseGenConfig::size_skew`].
pub const DEFAULT_SIZE_SKEW: f64 = 1.44;

impl Default for DatabaseGenConfig {
    fn default() -> Self {
        DatabaseGenConfig {
            nc: 50,
            maxnref: 10,
            basesize: 50,
            no: 20_000,
            nreft: 4,
            attrange: 1,
            clocref: 50,
            olocref: 20_000,
            size_factor_max: 32,
            size_skew: DEFAULT_SIZE_SKEW,
            drefs_per_object: 0,
            seed: 0,
        }
    }
}

impl DatabaseGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nc < 1 {
            return Err(Error::config("nc", "must be >= 1"));
        }
        if self.no < self.nc {
            return Err(Error::config("no", "must be >= nc"));
        }
        if self.clocref < 1 || self.clocref > self.nc {
            return Err(Error::config("clocref", "must satisfy 1 <= clocref <= nc"));
        }
        if self.olocref < 1 || self.olocref > self.no {
            return Err(Error::config("olocref", "must satisfy 1 <= olocref <= no"));
        }
        if self.maxnref < 1 {
            return Err(Error::config("maxnref", "must be >= 1"));
        }
        if self.basesize == 0 {
            return Err(Error::config("basesize", "must be > 0"));
        }
        if self.nreft < 1 {
            return Err(Error::config("nreft", "must be >= 1"));
        }
        if self.size_factor_max < 1 {
            return Err(Error::config("size_factor_max", "must be >= 1"));
        }
        if !(self.size_skew.is_finite() && self.size_skew >= 0.0) {
            return Err(Error::config("size_skew", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// A typed class-level reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CRef {
    pub target: ClassId,
    pub ref_type: u8,
}

/// A typed object-level reference; instantiates one of the owning class's
/// [`CRef`]s and keeps its type after schema mutations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ORef {
    pub target: ObjectId,
    pub ref_type: u8,
}

/// One class of the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub id: ClassId,
    pub crefs: Vec<CRef>,
    /// Instance size in bytes, shared by all members.
    pub instance_size: u32,
    /// Live members in insertion order.
    pub iterator: Vec<ObjectId>,
}

/// One object of the base.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub oid: ObjectId,
    pub class_id: ClassId,
    pub attributes: Vec<i64>,
    pub orefs: Vec<ORef>,
    /// Inverse edges: one entry per forward edge pointing here.
    pub backrefs: Vec<ObjectId>,
    pub drefs: Vec<ObjectId>,
    /// Simulated payload size in bytes (= owning class instance size).
    pub filler_size: u32,
}

/// The generated object base. Immutable from the outside except through
/// the mutators used by evolution operations.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub config: DatabaseGenConfig,
    classes: Vec<Option<ClassSpec>>,
    objects: Vec<Option<ObjectInstance>>,
    live_objects: Vec<ObjectId>,
    live_pos: Vec<u32>,
    live_classes: Vec<ClassId>,
    class_live_pos: Vec<u32>,
}

const DEAD: u32 = u32::MAX;

/// Cumulative table for the size-factor distribution `P(k) ∝ k^-skew`
/// over `[1, max]`.
struct SizeFactorDist {
    cumulative: Vec<f64>,
}

impl SizeFactorDist {
    fn new(max: u32, skew: f64) -> Self {
        let mut cumulative = Vec::with_capacity(max as usize);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += libm::pow(f64::from(k), -skew);
            cumulative.push(acc);
        }
        SizeFactorDist { cumulative }
    }

    fn sample(&self, rng: &mut DetRng) -> u32 {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.gen::<f64>() * total;
        let pos = self.cumulative.partition_point(|&c| c <= u);
        (pos.min(self.cumulative.len() - 1) + 1) as u32
    }
}

/// Draws an ordinal inside the cyclic window `[base, base + window)` mod
/// `modulus`.
fn window_draw(rng: &mut DetRng, base: u32, window: u32, modulus: u32) -> u32 {
    (base + rng.gen_range(0..window)) % modulus
}

/// Generates the schema: class reference lists and instance sizes.
pub fn generate_schema(config: &DatabaseGenConfig, rng: &mut DetRng) -> Result<Vec<ClassSpec>> {
    config.validate()?;
    let sizes = SizeFactorDist::new(config.size_factor_max, config.size_skew);
    let mut classes = Vec::with_capacity(config.nc as usize);
    for id in 0..config.nc {
        let nref = rng.gen_range(1..=config.maxnref);
        let mut crefs = Vec::with_capacity(nref as usize);
        for _ in 0..nref {
            let target = window_draw(rng, id, config.clocref, config.nc);
            let ref_type = rng.gen_range(0..config.nreft) as u8;
            crefs.push(CRef {
                target: ClassId(target),
                ref_type,
            });
        }
        let instance_size = config.basesize * sizes.sample(rng);
        classes.push(ClassSpec {
            id: ClassId(id),
            crefs,
            instance_size,
            iterator: Vec::new(),
        });
    }
    Ok(classes)
}

/// Instantiates the object base over a schema: assigns each object a
/// class uniformly, wires its references inside the locality window, and
/// mirrors every edge with an inverse reference.
pub fn instantiate_database(
    schema: Vec<ClassSpec>,
    config: &DatabaseGenConfig,
    rng: &mut DetRng,
) -> Result<Database> {
    config.validate()?;
    let mut classes: Vec<Option<ClassSpec>> = schema.into_iter().map(Some).collect();
    let nc = classes.len() as u32;
    let no = config.no;

    // Pass 1: class assignment and shells.
    let mut objects: Vec<Option<ObjectInstance>> = Vec::with_capacity(no as usize);
    for oid in 0..no {
        let class_id = ClassId(rng.gen_range(0..nc));
        classes[class_id.idx()]
            .as_mut()
            .expect("schema classes are live")
            .iterator
            .push(ObjectId(oid));
        let filler_size = classes[class_id.idx()].as_ref().unwrap().instance_size;
        objects.push(Some(ObjectInstance {
            oid: ObjectId(oid),
            class_id,
            attributes: vec![0; config.attrange as usize],
            orefs: Vec::new(),
            backrefs: Vec::new(),
            drefs: Vec::new(),
            filler_size,
        }));
    }

    // Pass 2: forward edges inside the locality window, inverse edges on
    // the targets.
    for oid in 0..no {
        let class_id = objects[oid as usize].as_ref().unwrap().class_id;
        let crefs = classes[class_id.idx()].as_ref().unwrap().crefs.clone();
        for cref in crefs {
            let target = ObjectId(window_draw(rng, oid, config.olocref, no));
            objects[oid as usize].as_mut().unwrap().orefs.push(ORef {
                target,
                ref_type: cref.ref_type,
            });
            objects[target.idx()]
                .as_mut()
                .unwrap()
                .backrefs
                .push(ObjectId(oid));
        }
    }

    // Pass 3: dependency references.
    if config.drefs_per_object > 0 {
        for oid in 0..no {
            let drefs = (0..config.drefs_per_object)
                .map(|_| ObjectId(rng.gen_range(0..no)))
                .collect();
            objects[oid as usize].as_mut().unwrap().drefs = drefs;
        }
    }

    Database::assemble(config.clone(), classes, objects)
}

/// Generates a complete database from a config, using its own seed.
pub fn generate(config: &DatabaseGenConfig) -> Result<Database> {
    let mut rng = crate::rng::seeded(config.seed);
    let schema = generate_schema(config, &mut rng)?;
    instantiate_database(schema, config, &mut rng)
}

impl Database {
    fn assemble(
        config: DatabaseGenConfig,
        classes: Vec<Option<ClassSpec>>,
        objects: Vec<Option<ObjectInstance>>,
    ) -> Result<Database> {
        let mut live_pos = vec![DEAD; objects.len()];
        let mut live_objects = Vec::new();
        for obj in objects.iter().flatten() {
            live_pos[obj.oid.idx()] = live_objects.len() as u32;
            live_objects.push(obj.oid);
        }
        let mut class_live_pos = vec![DEAD; classes.len()];
        let mut live_classes = Vec::new();
        for class in classes.iter().flatten() {
            class_live_pos[class.id.idx()] = live_classes.len() as u32;
            live_classes.push(class.id);
        }
        Ok(Database {
            config,
            classes,
            objects,
            live_objects,
            live_pos,
            live_classes,
            class_live_pos,
        })
    }

    /// Rebuilds a database from explicit parts (snapshot loading, hand-made
    /// test graphs). Validates ids, iterator consistency, and inverse-edge
    /// symmetry.
    pub fn from_parts(
        config: DatabaseGenConfig,
        classes: Vec<Option<ClassSpec>>,
        objects: Vec<Option<ObjectInstance>>,
    ) -> Result<Database> {
        for (idx, class) in classes.iter().enumerate() {
            if let Some(c) = class {
                if c.id.idx() != idx {
                    return Err(Error::CorruptSnapshot(alloc::format!(
                        "class at slot {idx} has id {}",
                        c.id
                    )));
                }
            }
        }
        for (idx, obj) in objects.iter().enumerate() {
            if let Some(o) = obj {
                if o.oid.idx() != idx {
                    return Err(Error::CorruptSnapshot(alloc::format!(
                        "object at slot {idx} has id {}",
                        o.oid
                    )));
                }
                if classes.get(o.class_id.idx()).map_or(true, Option::is_none) {
                    return Err(Error::CorruptSnapshot(alloc::format!(
                        "object {} references dead class {}",
                        o.oid,
                        o.class_id
                    )));
                }
            }
        }
        let db = Database::assemble(config, classes, objects)?;
        if !db.backrefs_symmetric() {
            return Err(Error::CorruptSnapshot(
                "inverse references are not symmetric".into(),
            ));
        }
        for class in db.classes.iter().flatten() {
            for &m in &class.iterator {
                let obj = db.object(m).map_err(|_| {
                    Error::CorruptSnapshot(alloc::format!("iterator of class {} lists dead {m}", class.id))
                })?;
                if obj.class_id != class.id {
                    return Err(Error::CorruptSnapshot(alloc::format!(
                        "object {m} in iterator of class {} but owned by {}",
                        class.id,
                        obj.class_id
                    )));
                }
            }
        }
        Ok(db)
    }

    /// Total id space ever allocated for objects (live + holes).
    pub fn object_id_space(&self) -> u32 {
        self.objects.len() as u32
    }

    /// Total id space ever allocated for classes.
    pub fn class_id_space(&self) -> u32 {
        self.classes.len() as u32
    }

    pub fn live_object_count(&self) -> usize {
        self.live_objects.len()
    }

    pub fn live_class_count(&self) -> usize {
        self.live_classes.len()
    }

    /// Live object ids, in liveness-pool order (not sorted after deletes).
    pub fn live_objects(&self) -> &[ObjectId] {
        &self.live_objects
    }

    pub fn live_classes(&self) -> &[ClassId] {
        &self.live_classes
    }

    pub fn object(&self, oid: ObjectId) -> Result<&ObjectInstance> {
        self.objects
            .get(oid.idx())
            .and_then(Option::as_ref)
            .ok_or(Error::UnknownObject(oid))
    }

    pub fn object_mut(&mut self, oid: ObjectId) -> Result<&mut ObjectInstance> {
        self.objects
            .get_mut(oid.idx())
            .and_then(Option::as_mut)
            .ok_or(Error::UnknownObject(oid))
    }

    pub fn class(&self, cid: ClassId) -> Result<&ClassSpec> {
        self.classes
            .get(cid.idx())
            .and_then(Option::as_ref)
            .ok_or(Error::UnknownClass(cid))
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().flatten()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassSpec> {
        self.classes.iter().flatten()
    }

    /// A uniformly chosen live object.
    pub fn random_object(&self, rng: &mut DetRng) -> Result<ObjectId> {
        if self.live_objects.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        Ok(self.live_objects[rng.gen_range(0..self.live_objects.len())])
    }

    /// A uniformly chosen live class.
    pub fn random_class(&self, rng: &mut DetRng) -> Result<ClassId> {
        if self.live_classes.is_empty() {
            return Err(Error::EmptySchema);
        }
        Ok(self.live_classes[rng.gen_range(0..self.live_classes.len())])
    }

    /// The reference set of an object: structural targets or dependency
    /// targets, in stored order.
    pub fn refset(&self, oid: ObjectId, kind: RefKind) -> Result<Vec<ObjectId>> {
        let obj = self.object(oid)?;
        Ok(match kind {
            RefKind::Structural => obj.orefs.iter().map(|r| r.target).collect(),
            RefKind::Dependency => obj.drefs.clone(),
        })
    }

    /// Checks full inverse-reference symmetry (multiset equality of
    /// forward and inverse edge endpoints).
    pub fn backrefs_symmetric(&self) -> bool {
        // Count forward edges per (source, target) and consume them from
        // the targets' inverse lists.
        let mut forward: alloc::collections::BTreeMap<(u32, u32), i64> =
            alloc::collections::BTreeMap::new();
        for obj in self.objects() {
            for r in &obj.orefs {
                *forward.entry((obj.oid.0, r.target.0)).or_insert(0) += 1;
            }
        }
        for obj in self.objects() {
            for &b in &obj.backrefs {
                match forward.get_mut(&(b.0, obj.oid.0)) {
                    Some(n) => *n -= 1,
                    None => return false,
                }
            }
        }
        forward.values().all(|&n| n == 0)
    }

    /// Inserts one object wired per generation rules: uniform live class,
    /// targets inside the locality window (live ids only), plus dependency
    /// references. Returns the new id.
    pub fn insert_object(&mut self, rng: &mut DetRng) -> Result<ObjectId> {
        let class_id = self.random_class(rng)?;
        let oid = ObjectId(self.objects.len() as u32);
        let modulus = self.objects.len() as u32 + 1;
        let window = self.config.olocref.min(modulus);
        let crefs = self.class(class_id)?.crefs.clone();
        let filler_size = self.class(class_id)?.instance_size;

        self.objects.push(None);
        self.live_pos.push(DEAD);

        let mut orefs = Vec::with_capacity(crefs.len());
        for cref in crefs {
            let target = self.draw_live_in_window(rng, oid.0, window, modulus)?;
            orefs.push(ORef {
                target,
                ref_type: cref.ref_type,
            });
        }
        let drefs = (0..self.config.drefs_per_object)
            .map(|_| self.random_object(rng))
            .collect::<Result<Vec<_>>>()
            .unwrap_or_default();

        for r in &orefs {
            self.object_mut(r.target)?.backrefs.push(oid);
        }
        self.objects[oid.idx()] = Some(ObjectInstance {
            oid,
            class_id,
            attributes: vec![0; self.config.attrange as usize],
            orefs,
            backrefs: Vec::new(),
            drefs,
            filler_size,
        });
        self.live_pos[oid.idx()] = self.live_objects.len() as u32;
        self.live_objects.push(oid);
        self.classes[class_id.idx()]
            .as_mut()
            .unwrap()
            .iterator
            .push(oid);
        Ok(oid)
    }

    /// Draws a live object id inside the cyclic window, rejection-sampling
    /// first and falling back to a scan of the window.
    fn draw_live_in_window(
        &self,
        rng: &mut DetRng,
        base: u32,
        window: u32,
        modulus: u32,
    ) -> Result<ObjectId> {
        if self.live_objects.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        for _ in 0..32 {
            let cand = window_draw(rng, base, window, modulus);
            if self
                .live_pos
                .get(cand as usize)
                .map_or(false, |&p| p != DEAD)
            {
                return Ok(ObjectId(cand));
            }
        }
        let mut live = Vec::new();
        for off in 0..window {
            let cand = (base + off) % modulus;
            if self
                .live_pos
                .get(cand as usize)
                .map_or(false, |&p| p != DEAD)
            {
                live.push(ObjectId(cand));
            }
        }
        if live.is_empty() {
            // Window holds no live object; any live one keeps the graph
            // connected.
            return self.random_object(rng);
        }
        Ok(live[rng.gen_range(0..live.len())])
    }

    /// Deletes an object, unlinking every forward, inverse, and dependency
    /// edge touching it and updating its class iterator.
    pub fn delete_object(&mut self, oid: ObjectId) -> Result<()> {
        let obj = self
            .objects
            .get_mut(oid.idx())
            .and_then(Option::take)
            .ok_or(Error::UnknownObject(oid))?;

        // Inverse entries on our forward targets.
        for r in &obj.orefs {
            if r.target == oid {
                continue; // self edge died with the object
            }
            if let Some(t) = self.objects[r.target.idx()].as_mut() {
                if let Some(pos) = t.backrefs.iter().position(|&b| b == oid) {
                    t.backrefs.swap_remove(pos);
                }
            }
        }
        // Forward edges on the sources that point here (one per inverse
        // entry).
        for &b in &obj.backrefs {
            if b == oid {
                continue;
            }
            if let Some(s) = self.objects[b.idx()].as_mut() {
                if let Some(pos) = s.orefs.iter().position(|r| r.target == oid) {
                    s.orefs.remove(pos);
                }
            }
        }
        // Dependency edges elsewhere that point here.
        if self.config.drefs_per_object > 0 {
            for slot in self.objects.iter_mut().flatten() {
                slot.drefs.retain(|&d| d != oid);
            }
        }
        // Class iterator and liveness pool.
        if let Some(class) = self.classes[obj.class_id.idx()].as_mut() {
            if let Some(pos) = class.iterator.iter().position(|&m| m == oid) {
                class.iterator.remove(pos);
            }
        }
        self.remove_from_live(oid);
        Ok(())
    }

    fn remove_from_live(&mut self, oid: ObjectId) {
        let pos = self.live_pos[oid.idx()];
        debug_assert_ne!(pos, DEAD);
        self.live_objects.swap_remove(pos as usize);
        if let Some(&moved) = self.live_objects.get(pos as usize) {
            self.live_pos[moved.idx()] = pos;
        }
        self.live_pos[oid.idx()] = DEAD;
    }

    /// Inserts one class wired per generation rules. The new class starts
    /// with no members.
    pub fn insert_class(&mut self, rng: &mut DetRng) -> Result<ClassId> {
        let cid = ClassId(self.classes.len() as u32);
        let modulus = self.classes.len() as u32 + 1;
        let window = self.config.clocref.min(modulus);
        let nref = rng.gen_range(1..=self.config.maxnref);
        let mut crefs = Vec::with_capacity(nref as usize);
        for _ in 0..nref {
            let target = self.draw_live_class_in_window(rng, cid.0, window, modulus, cid)?;
            let ref_type = rng.gen_range(0..self.config.nreft) as u8;
            crefs.push(CRef { target, ref_type });
        }
        let sizes = SizeFactorDist::new(self.config.size_factor_max, self.config.size_skew);
        let instance_size = self.config.basesize * sizes.sample(rng);
        self.classes.push(Some(ClassSpec {
            id: cid,
            crefs,
            instance_size,
            iterator: Vec::new(),
        }));
        self.class_live_pos.push(self.live_classes.len() as u32);
        self.live_classes.push(cid);
        Ok(cid)
    }

    fn draw_live_class_in_window(
        &self,
        rng: &mut DetRng,
        base: u32,
        window: u32,
        modulus: u32,
        pending: ClassId,
    ) -> Result<ClassId> {
        let is_live = |cid: u32| {
            cid == pending.0
                || self
                    .class_live_pos
                    .get(cid as usize)
                    .map_or(false, |&p| p != DEAD)
        };
        for _ in 0..32 {
            let cand = window_draw(rng, base, window, modulus);
            if is_live(cand) {
                return Ok(ClassId(cand));
            }
        }
        let mut live = Vec::new();
        for off in 0..window {
            let cand = (base + off) % modulus;
            if is_live(cand) {
                live.push(ClassId(cand));
            }
        }
        if live.is_empty() {
            return Err(Error::EmptySchema);
        }
        Ok(live[rng.gen_range(0..live.len())])
    }

    /// Deletes a class: removes all of its instances, then drops class
    /// references of other classes that target it.
    pub fn delete_class(&mut self, cid: ClassId) -> Result<()> {
        let members = self.class(cid)?.iterator.clone();
        for m in members {
            self.delete_object(m)?;
        }
        self.classes[cid.idx()] = None;
        let pos = self.class_live_pos[cid.idx()];
        self.live_classes.swap_remove(pos as usize);
        if let Some(&moved) = self.live_classes.get(pos as usize) {
            self.class_live_pos[moved.idx()] = pos;
        }
        self.class_live_pos[cid.idx()] = DEAD;
        for class in self.classes.iter_mut().flatten() {
            class.crefs.retain(|r| r.target != cid);
        }
        Ok(())
    }

    /// Decomposes into raw parts (snapshot writing).
    pub fn into_parts(
        self,
    ) -> (
        DatabaseGenConfig,
        Vec<Option<ClassSpec>>,
        Vec<Option<ObjectInstance>>,
    ) {
        (self.config, self.classes, self.objects)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn gen_default(seed: u64) -> Database {
        let config = DatabaseGenConfig {
            seed,
            ..DatabaseGenConfig::default()
        };
        generate(&config).unwrap()
    }

    #[test]
    fn smallest_legal_schema() {
        let config = DatabaseGenConfig {
            nc: 1,
            maxnref: 1,
            no: 1,
            clocref: 1,
            olocref: 1,
            ..DatabaseGenConfig::default()
        };
        let mut r = rng::seeded(1);
        let schema = generate_schema(&config, &mut r).unwrap();
        assert_eq!(schema.len(), 1);
        assert_eq!(schema[0].crefs.len(), 1);
        assert_eq!(schema[0].crefs[0].target, ClassId(0));
    }

    #[test]
    fn default_schema_shape() {
        let config = DatabaseGenConfig::default();
        let mut r = rng::seeded(7);
        let schema = generate_schema(&config, &mut r).unwrap();
        assert_eq!(schema.len(), 50);
        for class in &schema {
            assert!((1..=10).contains(&class.crefs.len()));
            assert_eq!(class.instance_size % 50, 0);
            assert!(class.instance_size >= 50 && class.instance_size <= 50 * 32);
            for cref in &class.crefs {
                assert!(cref.ref_type < 4);
            }
        }
    }

    #[test]
    fn single_object_references_itself() {
        let config = DatabaseGenConfig {
            nc: 1,
            maxnref: 1,
            no: 1,
            clocref: 1,
            olocref: 1,
            ..DatabaseGenConfig::default()
        };
        let db = generate(&config).unwrap();
        let obj = db.object(ObjectId(0)).unwrap();
        assert!(obj.orefs.iter().all(|r| r.target == ObjectId(0)));
        assert!(!obj.orefs.is_empty());
    }

    #[test]
    fn default_database_counts() {
        let db = gen_default(3);
        assert_eq!(db.live_object_count(), 20_000);
        assert_eq!(db.live_class_count(), 50);
        let member_total: usize = db.classes().map(|c| c.iterator.len()).sum();
        assert_eq!(member_total, 20_000);
    }

    #[test]
    fn backref_symmetry_exhaustive() {
        let db = gen_default(11);
        assert!(db.backrefs_symmetric());
        // Direct oracle: scan forward edges and look them up in inverse
        // lists, and vice versa.
        for obj in db.objects() {
            for r in &obj.orefs {
                let t = db.object(r.target).unwrap();
                assert!(t.backrefs.contains(&obj.oid));
            }
            for &b in &obj.backrefs {
                let s = db.object(b).unwrap();
                assert!(s.orefs.iter().any(|r| r.target == obj.oid));
            }
        }
    }

    #[test]
    fn locality_windows_hold() {
        let config = DatabaseGenConfig {
            nc: 10,
            no: 1000,
            clocref: 3,
            olocref: 40,
            seed: 5,
            ..DatabaseGenConfig::default()
        };
        let db = generate(&config).unwrap();
        for class in db.classes() {
            for cref in &class.crefs {
                let dist = (cref.target.0 + 10 - class.id.0) % 10;
                assert!(dist < 3, "class {} -> {}", class.id, cref.target);
            }
        }
        for obj in db.objects() {
            for r in &obj.orefs {
                let dist = (r.target.0 + 1000 - obj.oid.0) % 1000;
                assert!(dist < 40, "object {} -> {}", obj.oid, r.target);
            }
        }
    }

    #[test]
    fn determinism_same_seed_same_database() {
        let a = gen_default(99);
        let b = gen_default(99);
        assert_eq!(a, b);
        let c = gen_default(100);
        assert_ne!(a, c);
    }

    #[test]
    fn refset_returns_stored_order() {
        let db = gen_default(2);
        let obj = db.objects().next().unwrap();
        let s = db.refset(obj.oid, RefKind::Structural).unwrap();
        let expect: Vec<ObjectId> = obj.orefs.iter().map(|r| r.target).collect();
        assert_eq!(s, expect);
        assert!(db.refset(obj.oid, RefKind::Dependency).unwrap().is_empty());
    }

    #[test]
    fn refset_membership_valid() {
        let config = DatabaseGenConfig {
            no: 500,
            nc: 5,
            clocref: 5,
            olocref: 500,
            drefs_per_object: 3,
            seed: 8,
            ..DatabaseGenConfig::default()
        };
        let db = generate(&config).unwrap();
        for obj in db.objects() {
            for kind in [RefKind::Structural, RefKind::Dependency] {
                for t in db.refset(obj.oid, kind).unwrap() {
                    assert!(db.object(t).is_ok());
                }
            }
            assert_eq!(db.refset(obj.oid, RefKind::Dependency).unwrap().len(), 3);
        }
    }

    #[test]
    fn refset_unknown_object_errors() {
        let db = gen_default(2);
        assert_eq!(
            db.refset(ObjectId(1_000_000), RefKind::Structural),
            Err(Error::UnknownObject(ObjectId(1_000_000)))
        );
    }

    #[test]
    fn invalid_configs_name_the_bound() {
        let bad = DatabaseGenConfig {
            nc: 0,
            ..DatabaseGenConfig::default()
        };
        match bad.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "nc"),
            other => panic!("expected config error, got {other:?}"),
        }
        let bad = DatabaseGenConfig {
            no: 10,
            nc: 20,
            olocref: 1,
            clocref: 1,
            ..DatabaseGenConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn insert_object_keeps_symmetry() {
        let config = DatabaseGenConfig {
            nc: 1,
            no: 10,
            clocref: 1,
            olocref: 10,
            seed: 4,
            ..DatabaseGenConfig::default()
        };
        let mut db = generate(&config).unwrap();
        let mut r = rng::seeded(9);
        let oid = db.insert_object(&mut r).unwrap();
        assert_eq!(db.live_object_count(), 11);
        assert!(db.backrefs_symmetric());
        assert!(db
            .class(db.object(oid).unwrap().class_id)
            .unwrap()
            .iterator
            .contains(&oid));
    }

    #[test]
    fn delete_only_object_leaves_clean_db() {
        let config = DatabaseGenConfig {
            nc: 1,
            no: 1,
            clocref: 1,
            olocref: 1,
            ..DatabaseGenConfig::default()
        };
        let mut db = generate(&config).unwrap();
        db.delete_object(ObjectId(0)).unwrap();
        assert_eq!(db.live_object_count(), 0);
        assert!(db.backrefs_symmetric());
        assert!(db.class(ClassId(0)).unwrap().iterator.is_empty());
    }

    #[test]
    fn delete_repairs_all_edges() {
        let config = DatabaseGenConfig {
            nc: 3,
            no: 60,
            clocref: 3,
            olocref: 60,
            drefs_per_object: 2,
            seed: 21,
            ..DatabaseGenConfig::default()
        };
        let mut db = generate(&config).unwrap();
        db.delete_object(ObjectId(17)).unwrap();
        assert!(db.backrefs_symmetric());
        for obj in db.objects() {
            assert!(obj.orefs.iter().all(|r| r.target != ObjectId(17)));
            assert!(obj.backrefs.iter().all(|&b| b != ObjectId(17)));
            assert!(obj.drefs.iter().all(|&d| d != ObjectId(17)));
        }
    }

    #[test]
    fn insert_class_respects_locality() {
        let config = DatabaseGenConfig {
            nc: 10,
            no: 100,
            clocref: 4,
            olocref: 100,
            seed: 31,
            ..DatabaseGenConfig::default()
        };
        let mut db = generate(&config).unwrap();
        let mut r = rng::seeded(3);
        let cid = db.insert_class(&mut r).unwrap();
        assert_eq!(db.live_class_count(), 11);
        let modulus = db.class_id_space();
        for cref in &db.class(cid).unwrap().crefs {
            let dist = (cref.target.0 + modulus - cid.0) % modulus;
            assert!(dist < 4);
        }
    }

    #[test]
    fn delete_class_cascades() {
        let config = DatabaseGenConfig {
            nc: 4,
            no: 40,
            clocref: 4,
            olocref: 40,
            seed: 13,
            ..DatabaseGenConfig::default()
        };
        let mut db = generate(&config).unwrap();
        let victim = ClassId(2);
        let members = db.class(victim).unwrap().iterator.len();
        assert!(members > 0);
        db.delete_class(victim).unwrap();
        assert_eq!(db.live_class_count(), 3);
        assert_eq!(db.live_object_count(), 40 - members);
        assert!(db.backrefs_symmetric());
        for class in db.classes() {
            assert!(class.crefs.iter().all(|r| r.target != victim));
        }
    }

    #[test]
    fn from_parts_rejects_broken_symmetry() {
        let config = DatabaseGenConfig {
            nc: 1,
            no: 2,
            clocref: 1,
            olocref: 2,
            ..DatabaseGenConfig::default()
        };
        let db = generate(&config).unwrap();
        let (cfg, classes, mut objects) = db.into_parts();
        objects[0].as_mut().unwrap().backrefs = vec![ObjectId(1), ObjectId(1), ObjectId(1)];
        assert!(matches!(
            Database::from_parts(cfg, classes, objects),
            Err(Error::CorruptSnapshot(_))
        ));
    }
}
