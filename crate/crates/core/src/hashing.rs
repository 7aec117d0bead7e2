//! Per-level sources of the uniform split seeds.
//!
//! Every level of a tree owns an independent hash function. A node's seed for
//! rejection attempt `t` is the level hash of the key `index * 128 + t`, so
//! retries stay inside the same family over a 7-bit-wider key universe.
//!
//! Two families are provided, both bit-exact across platforms:
//!
//! * [`HashFamily::FastMixer`]: with `lo`/`hi` the low/high 64-bit words of
//!   the 128-bit key and `s` the level seed,
//!   `fmix64(fmix64(lo ^ s) ^ hi ^ s.rotate_left(32))`, where `fmix64` is
//!   the MurmurHash3 finalizer (shifts 33, multipliers `0xff51afd7ed558ccd`
//!   and `0xc4ceb9fe1a85ec53`).
//! * [`HashFamily::PolyKWise`]: a degree `k-1` polynomial over GF(2^61 - 1)
//!   with uniformly random coefficients, evaluated by Horner's rule from the
//!   leading coefficient down at `key mod p`. The 61-bit field value `v` is
//!   stretched to 64 bits as `(v << 3) | (v >> 58)`.
//!
//! Level seeds are derived from a master seed by the SplitMix64 sequence
//! (increment `0x9e3779b97f4a7c15`, multipliers `0xbf58476d1ce4e5b9` and
//! `0x94d049bb133111eb`). Polynomial coefficients take the top 61 bits of
//! successive outputs, rejecting the value `p` and a zero leading coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Mersenne prime 2^61 - 1.
pub const FIELD_PRIME: u64 = (1u64 << 61) - 1;

/// Attempts per node that fit in the key encoding.
pub const MAX_ATTEMPTS_PER_KEY: u32 = 128;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HashFamily {
    FastMixer,
    /// k-wise independent polynomial hashing, `k >= 2`.
    PolyKWise(u32),
}

impl HashFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HashFamily::FastMixer => Ok(()),
            HashFamily::PolyKWise(k) if (2..=64).contains(&k) => Ok(()),
            HashFamily::PolyKWise(k) => Err(Error::InvalidConfig(format!(
                "polynomial hashing needs 2 <= k <= 64, got k = {k}"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            HashFamily::FastMixer => "fast".to_string(),
            HashFamily::PolyKWise(k) => format!("poly{k}"),
        }
    }
}

impl std::str::FromStr for HashFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" | "mixer" => Ok(HashFamily::FastMixer),
            _ => {
                let k = s
                    .strip_prefix("poly")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown hash family '{s}'")))?;
                let fam = HashFamily::PolyKWise(k);
                fam.validate()?;
                Ok(fam)
            }
        }
    }
}

/// MurmurHash3 64-bit finalizer.
#[inline(always)]
pub fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

/// SplitMix64 stream used for all seed expansion.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn next_field(&mut self) -> u64 {
        loop {
            let v = self.next_u64() >> 3;
            if v < FIELD_PRIME {
                return v;
            }
        }
    }
}

/// Seed for the `stream`-th independent sub-generator of `master`
/// (sketch accumulators, LSH coordinates, ...).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    fmix64(master ^ fmix64(stream.wrapping_add(GOLDEN)))
}

#[inline(always)]
fn reduce128(x: u128) -> u64 {
    let p = FIELD_PRIME as u128;
    let mut r = (x & p) + (x >> 61);
    r = (r & p) + (r >> 61);
    let mut r = r as u64;
    if r >= FIELD_PRIME {
        r -= FIELD_PRIME;
    }
    r
}

#[inline(always)]
fn mulmod(a: u64, b: u64) -> u64 {
    reduce128(a as u128 * b as u128)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
enum LevelHashes {
    Fast(Vec<u64>),
    /// Row-major `levels x k`, lowest-degree coefficient first.
    Poly { k: usize, coeffs: Vec<u64> },
}

/// One independent hash function per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFamilySpec {
    kind: HashFamily,
    levels: usize,
    hashes: LevelHashes,
}

impl HashFamilySpec {
    pub fn kind(&self) -> HashFamily {
        self.kind
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Mixer seeds, when the family is [`HashFamily::FastMixer`].
    pub fn mixer_seeds(&self) -> Option<&[u64]> {
        match &self.hashes {
            LevelHashes::Fast(s) => Some(s),
            LevelHashes::Poly { .. } => None,
        }
    }

    /// Coefficients of one level, lowest degree first.
    pub fn coefficients(&self, level: usize) -> Option<&[u64]> {
        match &self.hashes {
            LevelHashes::Poly { k, coeffs } => Some(&coeffs[level * k..(level + 1) * k]),
            LevelHashes::Fast(_) => None,
        }
    }

    /// All coefficients, level-major.
    pub fn all_coefficients(&self) -> Option<&[u64]> {
        match &self.hashes {
            LevelHashes::Poly { coeffs, .. } => Some(coeffs),
            LevelHashes::Fast(_) => None,
        }
    }

    /// Hash of a raw 128-bit key at `level`.
    #[inline]
    pub fn hash_key(&self, level: usize, key: u128) -> u64 {
        match &self.hashes {
            LevelHashes::Fast(seeds) => {
                let s = seeds[level];
                let lo = key as u64;
                let hi = (key >> 64) as u64;
                fmix64(fmix64(lo ^ s) ^ hi ^ s.rotate_left(32))
            }
            LevelHashes::Poly { k, coeffs } => {
                let c = &coeffs[level * k..(level + 1) * k];
                let x = reduce128(key);
                let mut h = c[k - 1];
                for &a in c[..k - 1].iter().rev() {
                    h = mulmod(h, x) + a;
                    if h >= FIELD_PRIME {
                        h -= FIELD_PRIME;
                    }
                }
                (h << 3) | (h >> 58)
            }
        }
    }

    /// Split seed for rejection attempt `attempt` of node `index` at `level`.
    #[inline]
    pub fn hash_node(&self, level: usize, index: u64, attempt: u32) -> Result<u64> {
        if attempt >= MAX_ATTEMPTS_PER_KEY {
            return Err(Error::KeyEncoding { attempt });
        }
        Ok(self.hash_key(level, node_key(index, attempt)))
    }
}

/// Key encoding `index * 128 + attempt`.
#[inline(always)]
pub fn node_key(index: u64, attempt: u32) -> u128 {
    ((index as u128) << 7) | attempt as u128
}

/// Expands a master seed into `levels` independent level hashes.
pub fn derive_level_seeds(master_seed: u64, levels: usize, kind: HashFamily) -> Result<HashFamilySpec> {
    kind.validate()?;
    if levels == 0 {
        return Err(Error::InvalidConfig("at least one hash level is required".into()));
    }
    let mut sm = SplitMix64::new(master_seed);
    let hashes = match kind {
        HashFamily::FastMixer => LevelHashes::Fast((0..levels).map(|_| sm.next_u64()).collect()),
        HashFamily::PolyKWise(k) => {
            let k = k as usize;
            let mut coeffs = Vec::with_capacity(levels * k);
            for _ in 0..levels {
                for _ in 0..k - 1 {
                    coeffs.push(sm.next_field());
                }
                let lead = loop {
                    let c = sm.next_field();
                    if c != 0 {
                        break c;
                    }
                };
                coeffs.push(lead);
            }
            LevelHashes::Poly { k, coeffs }
        }
    };
    Ok(HashFamilySpec { kind, levels, hashes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_deterministic() {
        for kind in [HashFamily::FastMixer, HashFamily::PolyKWise(2), HashFamily::PolyKWise(4)] {
            assert_eq!(
                derive_level_seeds(99, 20, kind).unwrap(),
                derive_level_seeds(99, 20, kind).unwrap()
            );
        }
    }

    #[test]
    fn neighbouring_masters_differ_everywhere() {
        let a = derive_level_seeds(0, 32, HashFamily::FastMixer).unwrap();
        let b = derive_level_seeds(1, 32, HashFamily::FastMixer).unwrap();
        for (x, y) in a.mixer_seeds().unwrap().iter().zip(b.mixer_seeds().unwrap()) {
            assert_ne!(x, y);
        }
        let a = derive_level_seeds(0, 20, HashFamily::PolyKWise(4)).unwrap();
        let b = derive_level_seeds(1, 20, HashFamily::PolyKWise(4)).unwrap();
        for l in 0..20 {
            assert_ne!(a.coefficients(l), b.coefficients(l));
        }
    }

    #[test]
    fn poly4_has_80_field_coefficients() {
        let spec = derive_level_seeds(7, 20, HashFamily::PolyKWise(4)).unwrap();
        let c = spec.all_coefficients().unwrap();
        assert_eq!(c.len(), 80);
        assert!(c.iter().all(|&x| x < FIELD_PRIME));
        for l in 0..20 {
            assert_ne!(spec.coefficients(l).unwrap()[3], 0);
        }
    }

    #[test]
    fn degenerate_polynomials_rejected() {
        assert!(derive_level_seeds(1, 4, HashFamily::PolyKWise(1)).is_err());
        assert!(derive_level_seeds(1, 4, HashFamily::PolyKWise(0)).is_err());
        assert!(derive_level_seeds(1, 0, HashFamily::FastMixer).is_err());
    }

    #[test]
    fn attempt_field_is_seven_bits() {
        let spec = derive_level_seeds(1, 4, HashFamily::FastMixer).unwrap();
        assert!(spec.hash_node(0, 5, 127).is_ok());
        assert_eq!(spec.hash_node(0, 5, 128), Err(Error::KeyEncoding { attempt: 128 }));
    }

    #[test]
    fn poly_matches_naive_evaluation() {
        let spec = derive_level_seeds(3, 2, HashFamily::PolyKWise(3)).unwrap();
        let c = spec.coefficients(1).unwrap();
        for key in [0u128, 1, 2, 1000, (1u128 << 70) + 5] {
            let x = (key % FIELD_PRIME as u128) as u128;
            let p = FIELD_PRIME as u128;
            let v = (c[0] as u128 + c[1] as u128 * x % p + c[2] as u128 * (x * x % p) % p) % p;
            let v = v as u64;
            assert_eq!(spec.hash_key(1, key), (v << 3) | (v >> 58));
        }
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("fast".parse::<HashFamily>().unwrap(), HashFamily::FastMixer);
        assert_eq!("poly2".parse::<HashFamily>().unwrap(), HashFamily::PolyKWise(2));
        assert_eq!("poly4".parse::<HashFamily>().unwrap(), HashFamily::PolyKWise(4));
        assert!("poly1".parse::<HashFamily>().is_err());
        assert!("wyhash".parse::<HashFamily>().is_err());
    }

    #[test]
    fn mixer_avalanche() {
        let spec = derive_level_seeds(12345, 1, HashFamily::FastMixer).unwrap();
        let mut sm = SplitMix64::new(42);
        let keys = 10_000;
        let mut total = 0u64;
        let mut count = 0u64;
        for _ in 0..keys {
            let key = (sm.next_u64() >> 7) as u128;
            let h = spec.hash_key(0, key);
            for bit in 0..64 {
                let flipped = spec.hash_key(0, key ^ (1u128 << bit));
                total += (h ^ flipped).count_ones() as u64;
                count += 1;
            }
        }
        let mean = total as f64 / count as f64;
        assert!((mean - 32.0).abs() < 6.0, "mean flipped bits {mean}");
        // Much tighter in practice.
        assert!((mean - 32.0).abs() < 0.5, "mean flipped bits {mean}");
    }
}
