//! A tree driven by remembered fresh randomness instead of hashing.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::{Distribution, Kernel};
use crate::dst::{SeedSource, SplitStats, Walker, DEFAULT_MAX_REJECT_ATTEMPTS};
use crate::error::Result;
use crate::prefix::Prefix;

const ROOT_KEY: (u32, u64, u32) = (u32::MAX, 0, 0);

/// Seeds drawn from a ChaCha8 stream on first use and memoized per
/// `(level, index, attempt)`.
#[derive(Debug)]
struct MemoSeeds {
    rng: RefCell<ChaCha8Rng>,
    store: RefCell<HashMap<(u32, u64, u32), u64>>,
}

impl MemoSeeds {
    fn new(seed: u64) -> Self {
        MemoSeeds {
            rng: RefCell::new(ChaCha8Rng::seed_from_u64(seed)),
            store: RefCell::new(HashMap::new()),
        }
    }

    fn get(&self, key: (u32, u64, u32)) -> u64 {
        *self
            .store
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| self.rng.borrow_mut().next_u64())
    }
}

impl SeedSource for MemoSeeds {
    fn root_seed(&self) -> Result<u64> {
        Ok(self.get(ROOT_KEY))
    }

    fn split_seed(&self, level: u32, index: u64, attempt: u32) -> Result<u64> {
        Ok(self.get((level, index, attempt)))
    }
}

/// Same queries as [`crate::Dst`], but single-threaded: it mutates its store.
#[derive(Debug)]
pub struct IdealDst {
    kernel: Kernel,
    universe_log: u32,
    seeds: MemoSeeds,
}

impl IdealDst {
    pub fn new(distribution: Distribution, universe_log: u32, seed: u64) -> Result<Self> {
        crate::dst::DstConfig::new(universe_log, distribution, 0).validate()?;
        Ok(IdealDst {
            kernel: Kernel::new(distribution, universe_log)?,
            universe_log,
            seeds: MemoSeeds::new(seed),
        })
    }

    /// Fresh randomness, same distribution tables.
    pub fn reseeded(&self, seed: u64) -> IdealDst {
        IdealDst {
            kernel: self.kernel.clone(),
            universe_log: self.universe_log,
            seeds: MemoSeeds::new(seed),
        }
    }

    pub fn universe_log(&self) -> u32 {
        self.universe_log
    }

    pub fn distribution(&self) -> Distribution {
        self.kernel.distribution()
    }

    /// Number of seeds drawn so far.
    pub fn stored_seeds(&self) -> usize {
        self.seeds.store.borrow().len()
    }

    fn walker(&self) -> Walker<'_, MemoSeeds> {
        Walker {
            kernel: &self.kernel,
            universe_log: self.universe_log,
            max_attempts: DEFAULT_MAX_REJECT_ATTEMPTS,
            seeds: &self.seeds,
        }
    }

    pub fn node_value(&self, p: Prefix) -> Result<f64> {
        self.walker().node_value(p, &mut SplitStats::default())
    }

    pub fn singleton(&self, i: u64) -> Result<f64> {
        self.node_value(Prefix::leaf(i, self.universe_log)?)
    }

    pub fn range_sum(&self, a: u64, b: u64) -> Result<f64> {
        self.walker().range_sum(a, b, &mut SplitStats::default())
    }

    pub fn cover_values(&self, a: u64, b: u64) -> Result<Vec<(Prefix, f64)>> {
        self.walker().cover_values(a, b, &mut SplitStats::default())
    }
}
