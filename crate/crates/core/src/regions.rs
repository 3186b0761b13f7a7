//! Weighted regions over a candidate object set.
//!
//! A region set partitions an ordered candidate list into consecutive
//! blocks, one per region. Each region carries a weight inside
//! `[lowest, highest]` bounds, a step size, and a current step direction.
//! The probability of drawing a root from a region is its weight divided
//! by the sum of all weights; inside a region members are equally likely.
//! Regions left empty by the block cut (tiny candidate sets) are skipped
//! when sampling, their probability mass renormalized over the rest.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::db::ObjectId;
use crate::error::Error;
use crate::rng::DetRng;
use crate::Result;

/// Tolerance on size-fraction sums.
const SIZE_SUM_EPS: f64 = 1e-9;

/// Weight step direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn invert(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// How candidates are dealt into regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignMethod {
    /// Shuffle the candidates, then cut consecutive blocks.
    Random,
    /// Sort candidates by (class, id), then cut consecutive blocks.
    ByClass,
}

/// Static parameters of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct HRegionParams {
    /// Fraction of the candidate set this region receives.
    pub hr_size: f64,
    pub init_weight: f64,
    pub lowest_weight: f64,
    pub highest_weight: f64,
    pub weight_step: f64,
    pub init_dir: Direction,
}

impl HRegionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hr_size > 0.0 && self.hr_size <= 1.0) {
            return Err(Error::config("hr_size", "must be in (0, 1]"));
        }
        if !(self.lowest_weight <= self.init_weight && self.init_weight <= self.highest_weight) {
            return Err(Error::config(
                "init_weight",
                "must satisfy lowest <= init <= highest",
            ));
        }
        if self.weight_step < 0.0 {
            return Err(Error::config("weight_step", "must be >= 0"));
        }
        Ok(())
    }
}

/// One region: its parameters, members, and live weight state.
#[derive(Debug, Clone, PartialEq)]
pub struct HRegion {
    pub params: HRegionParams,
    pub members: Vec<ObjectId>,
    pub weight: f64,
    pub dir: Direction,
}

impl HRegion {
    /// Moves the weight one step along `dir`, stopping exactly on a bound
    /// when the step covers (or exceeds) the remaining headroom. A weight
    /// already at its bound in the step direction stays put.
    pub fn step_weight(&mut self) {
        let step = self.params.weight_step;
        match self.dir {
            Direction::Up => {
                if step >= self.params.highest_weight - self.weight {
                    self.weight = self.params.highest_weight;
                } else {
                    self.weight += step;
                }
            }
            Direction::Down => {
                if step >= self.weight - self.params.lowest_weight {
                    self.weight = self.params.lowest_weight;
                } else {
                    self.weight -= step;
                }
            }
        }
    }
}

/// A full partition of a candidate set into weighted regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    pub regions: Vec<HRegion>,
    candidate_count: usize,
}

/// Partitions `candidates` into one block per entry of `params`.
///
/// Block `i` receives `⌊hr_size_i × N⌋` candidates; the last region
/// absorbs the remainder. With [`AssignMethod::Random`] the candidates
/// are shuffled first with the supplied generator; with
/// [`AssignMethod::ByClass`] they are sorted by `(class, id)` using
/// `class_key`.
pub fn partition<F>(
    mut candidates: Vec<ObjectId>,
    params: &[HRegionParams],
    method: AssignMethod,
    rng: &mut DetRng,
    class_key: F,
) -> Result<RegionSet>
where
    F: Fn(ObjectId) -> u32,
{
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if params.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let size_sum: f64 = params.iter().map(|p| p.hr_size).sum();
    if size_sum > 1.0 + SIZE_SUM_EPS {
        return Err(Error::RegionSizesExceedOne);
    }
    for p in params {
        p.validate()?;
    }

    match method {
        AssignMethod::Random => candidates.shuffle(rng),
        AssignMethod::ByClass => candidates.sort_by_key(|&oid| (class_key(oid), oid.0)),
    }

    let n = candidates.len();
    let mut regions = Vec::with_capacity(params.len());
    let mut offset = 0usize;
    for (i, p) in params.iter().enumerate() {
        let take = if i + 1 == params.len() {
            n - offset
        } else {
            let block = libm::floor(p.hr_size * n as f64) as usize;
            block.min(n - offset)
        };
        let members = candidates[offset..offset + take].to_vec();
        offset += take;
        regions.push(HRegion {
            weight: p.init_weight,
            dir: p.init_dir,
            params: p.clone(),
            members,
        });
    }
    Ok(RegionSet {
        regions,
        candidate_count: n,
    })
}

impl RegionSet {
    pub fn candidate_count(&self) -> usize {
        self.candidate_count
    }

    /// Normalized access probabilities, one per region (empty regions
    /// included, at their nominal share).
    pub fn access_probabilities(&self) -> Result<Vec<f64>> {
        let total: f64 = self.regions.iter().map(|r| r.weight).sum();
        if total <= 0.0 {
            return Err(Error::AllWeightsZero);
        }
        Ok(self.regions.iter().map(|r| r.weight / total).collect())
    }

    /// Draws a region by weight (empty regions skipped, mass
    /// renormalized), then a member uniformly inside it. Returns the
    /// member and its region index.
    pub fn select_root(&self, rng: &mut DetRng) -> Result<(ObjectId, u32)> {
        let total: f64 = self
            .regions
            .iter()
            .filter(|r| !r.members.is_empty())
            .map(|r| r.weight)
            .sum();
        if total <= 0.0 {
            return Err(Error::AllWeightsZero);
        }
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = None;
        for (i, region) in self.regions.iter().enumerate() {
            if region.members.is_empty() {
                continue;
            }
            chosen = Some(i);
            if u < region.weight {
                break;
            }
            u -= region.weight;
        }
        let idx = chosen.ok_or(Error::EmptyCandidates)?;
        let region = &self.regions[idx];
        let member = region.members[rng.gen_range(0..region.members.len())];
        Ok((member, idx as u32))
    }

    /// Region index of a member, if it is in the set.
    pub fn region_of(&self, oid: ObjectId) -> Option<u32> {
        self.regions
            .iter()
            .position(|r| r.members.contains(&oid))
            .map(|i| i as u32)
    }

    /// Drops a member (deleted object) from whichever region holds it.
    pub fn remove_member(&mut self, oid: ObjectId) {
        for region in &mut self.regions {
            if let Some(pos) = region.members.iter().position(|&m| m == oid) {
                region.members.remove(pos);
                self.candidate_count -= 1;
                return;
            }
        }
    }
}

/// Equal-size region parameters used by the window protocols: `count`
/// regions of fraction `hr_size` each, step = `highest - lowest`, all
/// pointing down, the first one hot.
pub fn window_params(
    count: usize,
    hr_size: f64,
    lowest: f64,
    highest: f64,
    step: f64,
) -> Vec<HRegionParams> {
    (0..count)
        .map(|i| HRegionParams {
            hr_size,
            init_weight: if i == 0 { highest } else { lowest },
            lowest_weight: lowest,
            highest_weight: highest,
            weight_step: step,
            init_dir: Direction::Down,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::rng;

    fn ids(n: u32) -> Vec<ObjectId> {
        (0..n).map(ObjectId).collect()
    }

    fn one_region(n: u32) -> RegionSet {
        let params = vec![HRegionParams {
            hr_size: 1.0,
            init_weight: 0.5,
            lowest_weight: 0.0,
            highest_weight: 1.0,
            weight_step: 0.1,
            init_dir: Direction::Up,
        }];
        let mut r = rng::seeded(1);
        partition(ids(n), &params, AssignMethod::Random, &mut r, |_| 0).unwrap()
    }

    #[test]
    fn single_region_takes_everything() {
        let rs = one_region(10);
        assert_eq!(rs.regions.len(), 1);
        assert_eq!(rs.regions[0].members.len(), 10);
        assert_eq!(rs.access_probabilities().unwrap(), vec![1.0]);
    }

    #[test]
    fn exact_division_into_quarters() {
        let params = window_params(4, 0.25, 0.1, 0.7, 0.6);
        let mut r = rng::seeded(2);
        let rs = partition(ids(100), &params, AssignMethod::Random, &mut r, |_| 0).unwrap();
        let sizes: Vec<usize> = rs.regions.iter().map(|x| x.members.len()).collect();
        assert_eq!(sizes, vec![25, 25, 25, 25]);
    }

    #[test]
    fn remainder_goes_to_last_region() {
        let params = window_params(3, 0.33, 0.1, 0.7, 0.6);
        let mut r = rng::seeded(3);
        let rs = partition(ids(10), &params, AssignMethod::Random, &mut r, |_| 0).unwrap();
        let sizes: Vec<usize> = rs.regions.iter().map(|x| x.members.len()).collect();
        assert_eq!(sizes, vec![3, 3, 4]);
        // Disjoint and covering.
        let mut all: Vec<ObjectId> = rs
            .regions
            .iter()
            .flat_map(|x| x.members.iter().copied())
            .collect();
        all.sort();
        assert_eq!(all, ids(10));
    }

    #[test]
    fn by_class_sorts_before_cutting() {
        let params = window_params(2, 0.5, 0.1, 0.7, 0.6);
        let mut r = rng::seeded(4);
        // Odd ids are class 0, even ids class 1.
        let rs = partition(ids(10), &params, AssignMethod::ByClass, &mut r, |oid| {
            (oid.0 + 1) % 2
        })
        .unwrap();
        let first: Vec<u32> = rs.regions[0].members.iter().map(|o| o.0).collect();
        assert_eq!(first, vec![1, 3, 5, 7, 9]);
    }

    #[test]
    fn hot_probability_matches_weights() {
        // 1 hot + 332 cold regions at the documented default weights.
        let params = window_params(333, 0.003, 0.0006, 0.80, 0.80 - 0.0006);
        let mut r = rng::seeded(5);
        let rs = partition(ids(99_900), &params, AssignMethod::Random, &mut r, |_| 0).unwrap();
        let probs = rs.access_probabilities().unwrap();
        let expected = 0.80 / (0.80 + 332.0 * 0.0006);
        assert!((probs[0] - expected).abs() < 1e-12);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let cold: f64 = probs[1..].iter().sum();
        assert!((cold - (1.0 - expected)).abs() < 1e-9);
    }

    #[test]
    fn probability_arithmetic() {
        let mut rs = one_region(3);
        rs.regions[0].weight = 1.0;
        let mut two_more = rs.clone();
        two_more.regions.push(HRegion {
            params: rs.regions[0].params.clone(),
            members: vec![ObjectId(100)],
            weight: 1.0,
            dir: Direction::Up,
        });
        two_more.regions.push(HRegion {
            params: rs.regions[0].params.clone(),
            members: vec![ObjectId(101)],
            weight: 2.0,
            dir: Direction::Up,
        });
        assert_eq!(
            two_more.access_probabilities().unwrap(),
            vec![0.25, 0.25, 0.5]
        );
    }

    #[test]
    fn select_root_single_member() {
        let params = vec![HRegionParams {
            hr_size: 1.0,
            init_weight: 0.123,
            lowest_weight: 0.0,
            highest_weight: 1.0,
            weight_step: 0.0,
            init_dir: Direction::Up,
        }];
        let mut r = rng::seeded(6);
        let rs = partition(vec![ObjectId(9)], &params, AssignMethod::Random, &mut r, |_| 0)
            .unwrap();
        for _ in 0..10 {
            assert_eq!(rs.select_root(&mut r).unwrap(), (ObjectId(9), 0));
        }
    }

    #[test]
    fn within_region_selection_is_uniform() {
        let rs = one_region(10);
        let mut r = rng::seeded(7);
        let mut hist = vec![0u32; 10];
        let draws = 100_000u32;
        for _ in 0..draws {
            let (oid, _) = rs.select_root(&mut r).unwrap();
            hist[oid.idx()] += 1;
        }
        for count in hist {
            let dev = (f64::from(count) - f64::from(draws) / 10.0).abs() / f64::from(draws);
            assert!(dev < 0.03);
        }
    }

    #[test]
    fn empty_regions_are_skipped_and_renormalized() {
        let params = window_params(4, 0.25, 0.1, 0.7, 0.6);
        let mut r = rng::seeded(8);
        let mut rs = partition(ids(8), &params, AssignMethod::Random, &mut r, |_| 0).unwrap();
        rs.regions[0].members.clear(); // empty the hot region
        let mut seen_regions = alloc::collections::BTreeSet::new();
        for _ in 0..1000 {
            let (_, region) = rs.select_root(&mut r).unwrap();
            seen_regions.insert(region);
        }
        assert!(!seen_regions.contains(&0));
        assert!(seen_regions.len() >= 2);
    }

    #[test]
    fn step_weight_snaps_to_bounds() {
        let params = HRegionParams {
            hr_size: 1.0,
            init_weight: 0.0006,
            lowest_weight: 0.0006,
            highest_weight: 0.80,
            weight_step: 0.80 - 0.0006,
            init_dir: Direction::Up,
        };
        let mut region = HRegion {
            params,
            members: vec![ObjectId(0)],
            weight: 0.0006,
            dir: Direction::Up,
        };
        region.step_weight();
        assert_eq!(region.weight, 0.80);
        // Already at the ceiling: unchanged.
        region.step_weight();
        assert_eq!(region.weight, 0.80);
        region.dir = Direction::Down;
        region.step_weight();
        assert_eq!(region.weight, 0.0006);
    }

    #[test]
    fn step_weight_plain_arithmetic() {
        let params = HRegionParams {
            hr_size: 1.0,
            init_weight: 0.40,
            lowest_weight: 0.0,
            highest_weight: 1.0,
            weight_step: 0.02,
            init_dir: Direction::Down,
        };
        let mut region = HRegion {
            params,
            members: vec![ObjectId(0)],
            weight: 0.40,
            dir: Direction::Down,
        };
        region.step_weight();
        assert!((region.weight - 0.38).abs() < 1e-15);
    }

    #[test]
    fn oversized_fractions_rejected() {
        let params = window_params(3, 0.5, 0.1, 0.7, 0.6);
        let mut r = rng::seeded(9);
        assert_eq!(
            partition(ids(10), &params, AssignMethod::Random, &mut r, |_| 0),
            Err(Error::RegionSizesExceedOne)
        );
        assert_eq!(
            partition(Vec::new(), &params, AssignMethod::Random, &mut r, |_| 0),
            Err(Error::EmptyCandidates)
        );
    }
}
