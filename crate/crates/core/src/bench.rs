//! Split and range-sum timing.
//!
//! Each measurement runs a warmup batch, then five timed batches of random
//! range sums, and reports the median batch. Query endpoints are drawn
//! before timing starts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distributions::Distribution;
use crate::dst::{Dst, DstConfig};
use crate::error::Result;

const BATCHES: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct SplitTiming {
    pub distribution: Distribution,
    pub universe_log: u32,
    pub ns_per_split: f64,
    pub ns_per_range_sum: f64,
    /// Splits and queries in one timed batch.
    pub splits_per_batch: u64,
    pub queries_per_batch: usize,
}

fn random_ranges(universe_log: u32, count: usize, seed: u64) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = 1u64 << universe_log;
    (0..count)
        .map(|_| {
            let x = rng.random_range(0..=u);
            let y = rng.random_range(0..=u);
            (x.min(y), x.max(y))
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

/// Times random range sums until each batch holds at least
/// `min_splits / 5` splits.
pub fn time_splits(distribution: Distribution, universe_log: u32, min_splits: u64, seed: u64) -> Result<SplitTiming> {
    let dst = Dst::new(DstConfig::new(universe_log, distribution, seed))?;
    let per_batch = (min_splits / BATCHES as u64).max(1);
    // Size the query list from a pilot run.
    let pilot = random_ranges(universe_log, 1000, seed ^ 1);
    let mut pilot_splits = 0;
    for &(a, b) in &pilot {
        pilot_splits += dst.range_sum_with_stats(a, b)?.1.splits;
    }
    let avg = (pilot_splits as f64 / pilot.len() as f64).max(1.0);
    let queries = ((per_batch as f64 / avg) * 1.05).ceil() as usize + 1;
    let ranges = random_ranges(universe_log, queries, seed ^ 2);

    let mut per_split = Vec::with_capacity(BATCHES);
    let mut per_query = Vec::with_capacity(BATCHES);
    let mut splits = 0;
    for batch in 0..=BATCHES {
        let mut sink = 0.0;
        splits = 0;
        let start = Instant::now();
        for &(a, b) in &ranges {
            let (v, s) = dst.range_sum_with_stats(a, b)?;
            sink += v;
            splits += s.splits;
        }
        let ns = start.elapsed().as_nanos() as f64;
        std::hint::black_box(sink);
        if batch > 0 {
            per_split.push(ns / splits as f64);
            per_query.push(ns / ranges.len() as f64);
        }
    }
    Ok(SplitTiming {
        distribution,
        universe_log,
        ns_per_split: median(per_split),
        ns_per_range_sum: median(per_query),
        splits_per_batch: splits,
        queries_per_batch: ranges.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingPoint {
    pub universe_log: u32,
    pub ns_per_range_sum: f64,
}

/// Range-sum latency at each universe size.
pub fn range_sum_scaling(
    distribution: Distribution,
    universe_logs: &[u32],
    queries: usize,
    seed: u64,
) -> Result<Vec<ScalingPoint>> {
    universe_logs
        .iter()
        .map(|&ulog| {
            let dst = Dst::new(DstConfig::new(ulog, distribution, seed))?;
            let ranges = random_ranges(ulog, queries, seed ^ ulog as u64);
            let mut times = Vec::with_capacity(BATCHES);
            for batch in 0..=BATCHES {
                let mut sink = 0.0;
                let start = Instant::now();
                for &(a, b) in &ranges {
                    sink += dst.range_sum(a, b)?;
                }
                let ns = start.elapsed().as_nanos() as f64;
                std::hint::black_box(sink);
                if batch > 0 {
                    times.push(ns / queries as f64);
                }
            }
            Ok(ScalingPoint {
                universe_log: ulog,
                ns_per_range_sum: median(times),
            })
        })
        .collect()
}

/// Latency growth over `log U` growth between the smallest and largest
/// universes; about 1 when latency is linear in `log U`.
pub fn scaling_slope(points: &[ScalingPoint]) -> f64 {
    match (points.first(), points.last()) {
        (Some(a), Some(b)) if points.len() > 1 => {
            let t = b.ns_per_range_sum / a.ns_per_range_sum;
            let l = b.universe_log as f64 / a.universe_log as f64;
            t / l
        }
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_shape() {
        let t = time_splits(Distribution::Gaussian, 10, 20_000, 1).unwrap();
        assert!(t.ns_per_split > 0.0 && t.ns_per_range_sum >= t.ns_per_split);
        assert!(t.splits_per_batch >= 4000);
        let s = range_sum_scaling(Distribution::Gaussian, &[8, 12], 200, 1).unwrap();
        assert_eq!(s.len(), 2);
        assert!(scaling_slope(&s) > 0.0);
    }
}
