//! Property tests over randomized configurations and event sequences.

use dobench_core::db::{self, DatabaseGenConfig, ObjectId};
use dobench_core::ops::{self, Access, EvolveAction, EvolveKind, TraversalMode};
use dobench_core::regions::{partition, AssignMethod, Direction, HRegion, HRegionParams};
use dobench_core::store::{self, BufferPool, PageId, PageStore, StoreConfig};
use dobench_core::rng;
use proptest::prelude::*;

fn small_gen_config() -> impl Strategy<Value = DatabaseGenConfig> {
    (1u32..6, 1u32..120, 1u32..4, 0u32..3, 1u64..1000).prop_flat_map(
        |(nc, extra, maxnref, drefs, seed)| {
            let no = nc + extra;
            (1..=nc, 1..=no).prop_map(move |(clocref, olocref)| DatabaseGenConfig {
                nc,
                no,
                maxnref,
                clocref,
                olocref,
                drefs_per_object: drefs,
                seed,
                ..DatabaseGenConfig::default()
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_invariants(config in small_gen_config()) {
        let db = db::generate(&config).unwrap();
        prop_assert_eq!(db.live_object_count() as u32, config.no);
        prop_assert!(db.backrefs_symmetric());
        for obj in db.objects() {
            for r in &obj.orefs {
                let dist = (r.target.0 + config.no - obj.oid.0) % config.no;
                prop_assert!(dist < config.olocref);
            }
            prop_assert_eq!(obj.drefs.len() as u32, config.drefs_per_object);
        }
        for class in db.classes() {
            prop_assert!(!class.crefs.is_empty());
            prop_assert!(class.crefs.len() as u32 <= config.maxnref);
            for cref in &class.crefs {
                let dist = (cref.target.0 + config.nc - class.id.0) % config.nc;
                prop_assert!(dist < config.clocref);
            }
        }
    }

    #[test]
    fn evolution_preserves_symmetry(
        config in small_gen_config(),
        script in proptest::collection::vec(0u8..4, 1..30),
        seed in 0u64..1000,
    ) {
        let mut db = db::generate(&config).unwrap();
        let mut r = rng::seeded(seed);
        for step in script {
            let (kind, action) = match step {
                0 => (EvolveKind::Database, EvolveAction::Insert),
                1 => (EvolveKind::Database, EvolveAction::Delete),
                2 => (EvolveKind::Schema, EvolveAction::Insert),
                _ => (EvolveKind::Schema, EvolveAction::Delete),
            };
            let _ = ops::evolve(&mut db, kind, action, &mut r);
        }
        prop_assert!(db.backrefs_symmetric());
        for class in db.classes() {
            for &m in &class.iterator {
                prop_assert_eq!(db.object(m).unwrap().class_id, class.id);
            }
        }
    }

    #[test]
    fn partition_is_disjoint_and_covering(
        n in 1usize..400,
        pieces in 1usize..8,
        seed in 0u64..1000,
    ) {
        let frac = 1.0 / pieces as f64;
        let params: Vec<HRegionParams> = (0..pieces)
            .map(|_| HRegionParams {
                hr_size: frac,
                init_weight: 0.5,
                lowest_weight: 0.0,
                highest_weight: 1.0,
                weight_step: 0.1,
                init_dir: Direction::Down,
            })
            .collect();
        let candidates: Vec<ObjectId> = (0..n as u32).map(ObjectId).collect();
        let mut r = rng::seeded(seed);
        let rs = partition(candidates.clone(), &params, AssignMethod::Random, &mut r, |_| 0).unwrap();
        let mut all: Vec<ObjectId> = rs.regions.iter().flat_map(|x| x.members.clone()).collect();
        prop_assert_eq!(all.len(), n);
        all.sort();
        prop_assert_eq!(all, candidates);
        let probs = rs.access_probabilities().unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weight_stays_within_bounds(
        start in 0.0f64..1.0,
        step in 0.0f64..0.5,
        flips in proptest::collection::vec(any::<bool>(), 1..200),
    ) {
        let lowest = 0.1;
        let highest = 0.9;
        let start = lowest + start * (highest - lowest);
        let mut region = HRegion {
            params: HRegionParams {
                hr_size: 1.0,
                init_weight: start,
                lowest_weight: lowest,
                highest_weight: highest,
                weight_step: step,
                init_dir: Direction::Up,
            },
            members: vec![ObjectId(0)],
            weight: start,
            dir: Direction::Up,
        };
        for flip in flips {
            if flip {
                region.dir = region.dir.invert();
            }
            region.step_weight();
            prop_assert!(region.weight >= lowest && region.weight <= highest);
        }
    }

    #[test]
    fn traversals_are_deterministic_and_in_bounds(
        seed in 0u64..500,
        root in 0u32..50,
        depth in 0u32..4,
        mode_pick in 0u8..4,
        reversed in any::<bool>(),
    ) {
        let config = DatabaseGenConfig {
            nc: 3,
            no: 50,
            clocref: 3,
            olocref: 50,
            seed,
            ..DatabaseGenConfig::default()
        };
        let db = db::generate(&config).unwrap();
        let mode = match mode_pick {
            0 => TraversalMode::Simple,
            1 => TraversalMode::SetOriented,
            2 => TraversalMode::Hierarchical(1),
            _ => TraversalMode::Stochastic,
        };
        let a = ops::traversal(&db, ObjectId(root), mode, depth, reversed, 17).unwrap();
        let b = ops::traversal(&db, ObjectId(root), mode, depth, reversed, 17).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(!a.visits.is_empty());
        prop_assert_eq!(a.visits[0].0, ObjectId(root));
        for (oid, _) in &a.visits {
            prop_assert!(db.object(*oid).is_ok());
        }
    }

    #[test]
    fn store_conservation_and_capacity(
        sizes in proptest::collection::vec(20u32..900, 2..60),
        script in proptest::collection::vec((0u16..60, any::<bool>()), 1..80),
    ) {
        let page_size = 1024;
        let mut store = PageStore::new(page_size, *sizes.iter().min().unwrap());
        for (i, &s) in sizes.iter().enumerate() {
            store.add_object(ObjectId(i as u32), s);
        }
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size,
            cache_size: u64::from(page_size) * 4,
            ..StoreConfig::default()
        });
        for (pick, do_move) in script {
            let oid = ObjectId(u32::from(pick) % sizes.len() as u32);
            if do_move {
                let target = store.allocate_page();
                let _ = store.move_object(&mut buffer, oid, target);
            } else {
                store::access(&mut store, &mut buffer, oid, Access::Read).unwrap();
            }
        }
        // Every object still mapped exactly once; no page over capacity.
        for (i, &s) in sizes.iter().enumerate() {
            let (page, count) = store.object_pages(ObjectId(i as u32)).unwrap();
            prop_assert_eq!(count, 1);
            prop_assert!(store.objects_on(page).contains(&ObjectId(i as u32)));
            prop_assert_eq!(store.object_bytes(ObjectId(i as u32)).unwrap(), s);
        }
        for p in 0..store.page_count() {
            let page = PageId(p as u32);
            prop_assert!(store.page_fill(page) <= page_size);
            let by_objects: u32 = store
                .objects_on(page)
                .iter()
                .map(|&o| store.object_bytes(o).unwrap())
                .sum();
            prop_assert_eq!(by_objects, store.page_fill(page));
        }
        // Total I/O decomposition is exact.
        let stats = buffer.stats();
        prop_assert_eq!(
            stats.total_io(),
            stats.transaction_io() + stats.clustering_io()
        );
    }

    #[test]
    fn lru_matches_reference_model(
        pages in proptest::collection::vec(0u32..12, 1..300),
        capacity in 1usize..6,
    ) {
        let mut buffer = BufferPool::new(&StoreConfig {
            page_size: 4096,
            cache_size: 4096 * capacity as u64,
            ..StoreConfig::default()
        });
        // Reference model: most-recent-first vector.
        let mut model: Vec<u32> = Vec::new();
        for p in pages {
            let outcome = buffer.access_page(PageId(p), false, store::IoPhase::Transaction, false);
            let model_hit = model.contains(&p);
            prop_assert_eq!(outcome.hit, model_hit);
            model.retain(|&x| x != p);
            model.insert(0, p);
            model.truncate(capacity);
        }
    }
}
