//! Gaussian random-walk LSH for L1 distance.
//!
//! Coordinate `j` of a point `s` contributes `S_j[0, s_j)` from its own
//! Gaussian tree, so `f(s) - f(q)` is `N(0, |s - q|_1)`. Points are bucketed
//! with `g(s) = floor((f(s) + B) / W)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distributions::{uniform53, Distribution};
use crate::dst::{Dst, DstConfig};
use crate::error::{Error, Result};
use crate::hashing::{derive_seed, fmix64, HashFamily};

const OFFSET_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct GrwLshFunction {
    universe_log: u32,
    width: f64,
    offset: f64,
    seed: u64,
    dsts: Vec<Dst>,
}

impl GrwLshFunction {
    pub fn new(m: usize, universe_log: u32, width: f64, seed: u64) -> Result<Self> {
        Self::with_hash(m, universe_log, width, seed, HashFamily::FastMixer)
    }

    pub fn with_hash(m: usize, universe_log: u32, width: f64, seed: u64, hash_family: HashFamily) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("LSH dimension m must be >= 1".into()));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidConfig(format!("bucket width must be positive, got {width}")));
        }
        let dsts = (0..m)
            .map(|j| {
                Dst::new(
                    DstConfig::new(universe_log, Distribution::Gaussian, derive_seed(seed, j as u64)).with_hash(hash_family),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let offset = width * uniform53(fmix64(derive_seed(seed, OFFSET_STREAM)));
        Ok(GrwLshFunction {
            universe_log,
            width,
            offset,
            seed,
            dsts,
        })
    }

    pub fn m(&self) -> usize {
        self.dsts.len()
    }

    pub fn universe_log(&self) -> u32 {
        self.universe_log
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// The bucket offset `B`, in `[0, W)`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// One Gaussian tree per coordinate.
    pub fn dsts(&self) -> &[Dst] {
        &self.dsts
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `f(s) = sum_j S_j[0, s_j)`.
    pub fn raw_hash(&self, s: &[u64]) -> Result<f64> {
        if s.len() != self.dsts.len() {
            return Err(Error::InvalidConfig(format!(
                "point has {} coordinates, function expects {}",
                s.len(),
                self.dsts.len()
            )));
        }
        let u = 1u64 << self.universe_log;
        let mut f = 0.0;
        for (&x, dst) in s.iter().zip(&self.dsts) {
            if x > u {
                return Err(Error::IndexOutOfRange {
                    index: x,
                    universe_log: self.universe_log,
                });
            }
            f += dst.range_sum(0, x)?;
        }
        Ok(f)
    }

    pub fn lsh_value(&self, s: &[u64]) -> Result<i64> {
        Ok(bucket(self.raw_hash(s)?, self.offset, self.width))
    }
}

/// `floor((raw + offset) / width)`, rounding toward negative infinity.
pub fn bucket(raw: f64, offset: f64, width: f64) -> i64 {
    ((raw + offset) / width).floor() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionPoint {
    pub distance: u64,
    pub probability: f64,
    pub stderr: f64,
}

/// Monte-Carlo collision probability of two points at L1 distance `D`, one
/// fresh function per trial. The points differ in a single coordinate.
pub fn collision_curve(
    universe_log: u32,
    width: f64,
    distances: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<CollisionPoint>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("collision curve needs at least one trial".into()));
    }
    distances
        .iter()
        .map(|&d| {
            let stream = derive_seed(seed, d);
            let mut hits = 0u64;
            for t in 0..trials {
                let h = GrwLshFunction::new(1, universe_log, width, derive_seed(stream, t))?;
                if h.lsh_value(&[0])? == h.lsh_value(&[d])? {
                    hits += 1;
                }
            }
            let p = hits as f64 / trials as f64;
            Ok(CollisionPoint {
                distance: d,
                probability: p,
                stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            })
        })
        .collect()
}

/// Exact collision probability when `f(s) - f(q) ~ N(0, d1)` and `B` is
/// uniform on `[0, W)`.
pub fn collision_probability(width: f64, d1: f64) -> f64 {
    if d1 == 0.0 {
        return 1.0;
    }
    let sigma = d1.sqrt();
    let t = width / sigma;
    let phi = Normal::new(0.0, 1.0).expect("unit normal").cdf(t);
    2.0 * phi - 1.0 - 2.0 / (t * (2.0 * std::f64::consts::PI).sqrt()) * (1.0 - (-0.5 * t * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_examples() {
        assert_eq!(bucket(10.0, 5.0, 122.0), 0);
        assert_eq!(bucket(-130.0, 5.0, 122.0), -2);
        for k in [-3.0, 1.0, 7.0] {
            assert_eq!(
                bucket(10.0 + k * 122.0, 5.0, 122.0) == bucket(100.0 + k * 122.0, 5.0, 122.0),
                bucket(10.0, 5.0, 122.0) == bucket(100.0, 5.0, 122.0)
            );
        }
    }

    #[test]
    fn zero_point_hashes_to_zero() {
        let h = GrwLshFunction::new(4, 12, 122.0, 3).unwrap();
        assert_eq!(h.raw_hash(&[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(h.offset() >= 0.0 && h.offset() < 122.0);
    }

    #[test]
    fn one_dimensional_telescoping() {
        let h = GrwLshFunction::new(1, 12, 50.0, 8).unwrap();
        let (a, b) = (3000u64, 1200u64);
        let diff = h.raw_hash(&[a]).unwrap() - h.raw_hash(&[b]).unwrap();
        let rs = h.dsts[0].range_sum(b, a).unwrap();
        assert!((diff - rs).abs() <= 1e-9 * rs.abs().max(1.0));
    }

    #[test]
    fn deterministic_and_validated() {
        let h = GrwLshFunction::new(3, 10, 10.0, 1).unwrap();
        let p = [5, 1000, 1024];
        assert_eq!(h.lsh_value(&p).unwrap(), h.lsh_value(&p).unwrap());
        assert_eq!(
            GrwLshFunction::new(3, 10, 10.0, 1).unwrap().raw_hash(&p).unwrap(),
            h.raw_hash(&p).unwrap()
        );
        assert!(h.raw_hash(&[1, 2]).is_err());
        assert!(h.raw_hash(&[1, 2, 1025]).is_err());
        assert!(GrwLshFunction::new(0, 10, 10.0, 1).is_err());
        assert!(GrwLshFunction::new(1, 10, 0.0, 1).is_err());
    }

    #[test]
    fn identical_points_always_collide() {
        let c = collision_curve(12, 122.0, &[0], 200, 5).unwrap();
        assert_eq!(c[0].probability, 1.0);
        assert_eq!(c[0].stderr, 0.0);
        assert!(collision_curve(12, 122.0, &[0], 0, 5).is_err());
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(collision_probability(122.0, 0.0), 1.0);
        assert!(collision_probability(122.0, 1e-2) > 0.999);
        assert!(collision_probability(1.0, 1e12) < 1e-5);
    }
}
