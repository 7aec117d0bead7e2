//! Dyadic simulation trees.
//!
//! The root holds `S[0, U) ~ X^{*U}`; every other node is produced top-down
//! by splitting its parent, left child `L`, right child `parent - L`. A node
//! value is recomputed from the root on every query, so a [`Dst`] is
//! immutable and queries are pure.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Kernel, RwTables};
use crate::error::{Error, Result};
use crate::hashing::{derive_level_seeds, HashFamily, HashFamilySpec, MAX_ATTEMPTS_PER_KEY};
use crate::prefix::{check_range, Prefix};

pub const DEFAULT_MAX_REJECT_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DstConfig {
    /// `U = 2^universe_log`.
    pub universe_log: u32,
    pub distribution: Distribution,
    pub master_seed: u64,
    pub hash_family: HashFamily,
    pub max_reject_attempts: u32,
}

impl DstConfig {
    pub fn new(universe_log: u32, distribution: Distribution, master_seed: u64) -> Self {
        DstConfig {
            universe_log,
            distribution,
            master_seed,
            hash_family: HashFamily::FastMixer,
            max_reject_attempts: DEFAULT_MAX_REJECT_ATTEMPTS,
        }
    }

    pub fn with_hash(mut self, hash_family: HashFamily) -> Self {
        self.hash_family = hash_family;
        self
    }

    pub fn with_max_attempts(mut self, attempts: u32) -> Self {
        self.max_reject_attempts = attempts;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn universe(&self) -> u64 {
        1u64 << self.universe_log
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=63).contains(&self.universe_log) {
            return Err(Error::InvalidConfig(format!(
                "universe_log must be in [1, 63], got {}",
                self.universe_log
            )));
        }
        if self.distribution == Distribution::RandomWalk && self.universe_log > 52 {
            return Err(Error::InvalidConfig(format!(
                "random-walk values must stay below 2^53; universe_log {} > 52",
                self.universe_log
            )));
        }
        if self.max_reject_attempts == 0 || self.max_reject_attempts > MAX_ATTEMPTS_PER_KEY {
            return Err(Error::InvalidConfig(format!(
                "max_reject_attempts must be in [1, {MAX_ATTEMPTS_PER_KEY}], got {}",
                self.max_reject_attempts
            )));
        }
        self.hash_family.validate()
    }
}

/// Split and attempt counters for one or more queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub splits: u64,
    pub attempts: u64,
}

impl SplitStats {
    pub fn add(&mut self, other: SplitStats) {
        self.splits += other.splits;
        self.attempts += other.attempts;
    }
}

/// Source of the uniform strings that drive the root sample and node splits.
pub trait SeedSource {
    fn root_seed(&self) -> Result<u64>;
    fn split_seed(&self, level: u32, index: u64, attempt: u32) -> Result<u64>;
}

/// `if cond { a } else { b }` as a bit blend, so data-dependent descents do
/// not mispredict.
#[inline(always)]
fn select(cond: bool, a: f64, b: f64) -> f64 {
    let m = 0u64.wrapping_sub(cond as u64);
    f64::from_bits((a.to_bits() & m) | (b.to_bits() & !m))
}

/// Tree walks shared by hashed and idealized trees.
pub(crate) struct Walker<'a, S: ?Sized> {
    pub kernel: &'a Kernel,
    pub universe_log: u32,
    pub max_attempts: u32,
    pub seeds: &'a S,
}

impl<S: SeedSource + ?Sized> Walker<'_, S> {
    pub fn root(&self) -> Result<f64> {
        self.kernel.root(self.universe_log, self.seeds.root_seed()?)
    }

    /// Left child value of `node`, whose value is `z`.
    #[inline]
    pub fn split(&self, node: Prefix, z: f64, stats: &mut SplitStats) -> Result<f64> {
        let n = 1u64 << (self.universe_log - node.level - 1);
        let seeds = self.seeds;
        let (left, attempts) = self
            .kernel
            .split(z, n, self.max_attempts, |t| seeds.split_seed(node.level, node.index, t))
            .map_err(|e| match e {
                Error::SamplingExhausted { attempts, .. } => Error::SamplingExhausted {
                    level: node.level,
                    index: node.index,
                    attempts,
                },
                e => e,
            })?;
        stats.splits += 1;
        stats.attempts += attempts as u64;
        Ok(left)
    }

    pub fn node_value(&self, p: Prefix, stats: &mut SplitStats) -> Result<f64> {
        if !p.is_valid(self.universe_log) {
            return Err(Error::InvalidPrefix {
                level: p.level,
                index: p.index,
                universe_log: self.universe_log,
            });
        }
        let mut z = self.root()?;
        for l in 0..p.level {
            let node = p.ancestor(l);
            let left = self.split(node, z, stats)?;
            let bit = (p.index >> (p.level - l - 1)) & 1;
            z = select(bit == 1, z - left, left);
        }
        Ok(z)
    }

    /// Feeds the dyadic cover of `[a, b)` with node values to `emit` in
    /// increasing order, using at most two splits per level.
    pub fn walk_cover<E: FnMut(Prefix, f64)>(&self, a: u64, b: u64, stats: &mut SplitStats, mut emit: E) -> Result<()> {
        let ulog = self.universe_log;
        check_range(a, b, ulog)?;
        if a == b {
            return Ok(());
        }
        let diff = a ^ (b - 1);
        let lca_level = ulog - (64 - diff.leading_zeros());
        let lca = Prefix {
            level: lca_level,
            index: a >> (ulog - lca_level),
        };
        let lca_value = self.node_value(lca, stats)?;
        let (lo, hi) = lca.range(ulog);
        if lo == a && hi == b {
            emit(lca, lca_value);
            return Ok(());
        }

        let left_value = self.split(lca, lca_value, stats)?;
        let right_value = lca_value - left_value;

        // Both descents are branch-free in the endpoint bits; cover nodes go
        // to a buffer at a position advanced only when a node is taken.
        let mut buf = [(Prefix::ROOT, 0.0f64); 64];

        // Suffix [a, mid) of the left child is found right to left.
        let mut count = 0;
        let (mut node, mut z) = (lca.left_child(), left_value);
        while node.range(ulog).0 != a {
            let l = self.split(node, z, stats)?;
            let r = z - l;
            let go_right = (a >> (ulog - node.level - 1)) & 1 == 1;
            buf[count] = (node.right_child(), r);
            count += !go_right as usize;
            node = Prefix {
                level: node.level + 1,
                index: 2 * node.index + go_right as u64,
            };
            z = select(go_right, r, l);
        }
        buf[count] = (node, z);
        for &(p, v) in buf[..=count].iter().rev() {
            emit(p, v);
        }

        // Prefix [mid, b) of the right child, left to right.
        let mut count = 0;
        let (mut node, mut z) = (lca.right_child(), right_value);
        while node.range(ulog).1 != b {
            let l = self.split(node, z, stats)?;
            let r = z - l;
            let go_right = ((b - 1) >> (ulog - node.level - 1)) & 1 == 1;
            buf[count] = (node.left_child(), l);
            count += go_right as usize;
            node = Prefix {
                level: node.level + 1,
                index: 2 * node.index + go_right as u64,
            };
            z = select(go_right, r, l);
        }
        buf[count] = (node, z);
        for &(p, v) in &buf[..=count] {
            emit(p, v);
        }
        Ok(())
    }

    pub fn cover_values(&self, a: u64, b: u64, stats: &mut SplitStats) -> Result<Vec<(Prefix, f64)>> {
        let mut out = Vec::with_capacity(2 * self.universe_log as usize);
        self.walk_cover(a, b, stats, |p, v| out.push((p, v)))?;
        Ok(out)
    }

    /// Sum of the cover's node values, left to right.
    pub fn range_sum(&self, a: u64, b: u64, stats: &mut SplitStats) -> Result<f64> {
        let mut sum = 0.0;
        self.walk_cover(a, b, stats, |_, v| sum += v)?;
        Ok(sum)
    }
}

/// Hash-driven dyadic simulation tree.
#[derive(Debug, Clone)]
pub struct Dst {
    config: DstConfig,
    /// Levels `0..universe_log` drive splits; the extra last level seeds the root.
    hashes: HashFamilySpec,
    kernel: Kernel,
}

impl SeedSource for HashFamilySpec {
    #[inline]
    fn root_seed(&self) -> Result<u64> {
        self.hash_node(self.levels() - 1, 0, 0)
    }

    #[inline]
    fn split_seed(&self, level: u32, index: u64, attempt: u32) -> Result<u64> {
        self.hash_node(level as usize, index, attempt)
    }
}

impl Dst {
    pub fn new(config: DstConfig) -> Result<Self> {
        config.validate()?;
        let kernel = Kernel::new(config.distribution, config.universe_log)?;
        Self::assemble(config, kernel)
    }

    /// Builds a random-walk tree on existing tables.
    pub fn with_tables(config: DstConfig, tables: Arc<RwTables>) -> Result<Self> {
        config.validate()?;
        if config.distribution != Distribution::RandomWalk || tables.universe_log() != config.universe_log {
            return Err(Error::InvalidConfig("tables do not match the configuration".into()));
        }
        Self::assemble(config, Kernel::RandomWalk(tables))
    }

    fn assemble(config: DstConfig, kernel: Kernel) -> Result<Self> {
        let hashes = derive_level_seeds(config.master_seed, config.universe_log as usize + 1, config.hash_family)?;
        Ok(Dst { config, hashes, kernel })
    }

    /// Same configuration with another master seed; shares precomputed tables.
    pub fn reseeded(&self, master_seed: u64) -> Dst {
        let config = self.config.with_seed(master_seed);
        let hashes = derive_level_seeds(master_seed, config.universe_log as usize + 1, config.hash_family)
            .expect("validated family");
        Dst {
            config,
            hashes,
            kernel: self.kernel.clone(),
        }
    }

    pub fn config(&self) -> &DstConfig {
        &self.config
    }

    pub fn universe_log(&self) -> u32 {
        self.config.universe_log
    }

    pub fn universe(&self) -> u64 {
        self.config.universe()
    }

    pub fn distribution(&self) -> Distribution {
        self.config.distribution
    }

    pub fn hashes(&self) -> &HashFamilySpec {
        &self.hashes
    }

    pub fn rw_tables(&self) -> Option<&Arc<RwTables>> {
        self.kernel.rw_tables()
    }

    fn walker(&self) -> Walker<'_, HashFamilySpec> {
        Walker {
            kernel: &self.kernel,
            universe_log: self.config.universe_log,
            max_attempts: self.config.max_reject_attempts,
            seeds: &self.hashes,
        }
    }

    pub fn root_value(&self) -> Result<f64> {
        self.walker().root()
    }

    pub fn node_value(&self, p: Prefix) -> Result<f64> {
        self.walker().node_value(p, &mut SplitStats::default())
    }

    pub fn node_value_with_stats(&self, p: Prefix) -> Result<(f64, SplitStats)> {
        let mut stats = SplitStats::default();
        let v = self.walker().node_value(p, &mut stats)?;
        Ok((v, stats))
    }

    /// Left child of `node` given its value, as the tree would compute it.
    pub fn split_node(&self, node: Prefix, z: f64) -> Result<(f64, SplitStats)> {
        if !node.is_valid(self.universe_log()) || node.level >= self.universe_log() {
            return Err(Error::InvalidPrefix {
                level: node.level,
                index: node.index,
                universe_log: self.universe_log(),
            });
        }
        let mut stats = SplitStats::default();
        let l = self.walker().split(node, z, &mut stats)?;
        Ok((l, stats))
    }

    pub fn singleton(&self, i: u64) -> Result<f64> {
        self.node_value(Prefix::leaf(i, self.universe_log())?)
    }

    /// `S[a, b)`: the sum of the dyadic cover's node values, left to right.
    pub fn range_sum(&self, a: u64, b: u64) -> Result<f64> {
        self.walker().range_sum(a, b, &mut SplitStats::default())
    }

    pub fn range_sum_with_stats(&self, a: u64, b: u64) -> Result<(f64, SplitStats)> {
        let mut stats = SplitStats::default();
        let v = self.walker().range_sum(a, b, &mut stats)?;
        Ok((v, stats))
    }

    /// The dyadic cover of `[a, b)` with each node's value.
    pub fn cover_values(&self, a: u64, b: u64) -> Result<Vec<(Prefix, f64)>> {
        self.walker().cover_values(a, b, &mut SplitStats::default())
    }

    /// All node values level by level, root first (`2U - 1` entries).
    pub fn all_nodes(&self) -> Result<Vec<f64>> {
        let ulog = self.universe_log();
        if ulog > 24 {
            return Err(Error::UniverseTooLarge { universe_log: ulog, limit: 24 });
        }
        let walker = self.walker();
        let mut stats = SplitStats::default();
        let mut level = vec![walker.root()?];
        let mut out = level.clone();
        for l in 0..ulog {
            let mut next = Vec::with_capacity(level.len() * 2);
            for (i, &z) in level.iter().enumerate() {
                let left = walker.split(Prefix { level: l, index: i as u64 }, z, &mut stats)?;
                next.push(left);
                next.push(z - left);
            }
            out.extend_from_slice(&next);
            level = next;
        }
        Ok(out)
    }
}
