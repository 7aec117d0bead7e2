//! Single-step random walk: probable-value tables and the binary split.
//!
//! Child widths `n <= 128` split by tabular inverse transform on the exact
//! conditional pmf. Wider children split by rejection sampling from the
//! shifted proposal `Y' + 2 ceil(z/4)`, `Y' ~ X^{*n}`, with envelope
//! constant [`RW_ENVELOPE`].

use super::binomial::ln_walk_pmf;
use super::uniform53;
use crate::error::{Error, Result};

/// Envelope constant for `n >= 256` over probable parents.
pub const RW_ENVELOPE: f64 = 1.47;

/// Largest child width split by tabular inverse transform.
pub const RW_TABULAR_MAX_N: u64 = 128;

/// Half-width of a table window in standard deviations of `X^{*n}`.
pub const WINDOW_SIGMAS: f64 = 8.0;

/// A parent value `z` of width `2n` is probable when `rho_2n(z) >= 1e-9`.
pub const PROBABLE_PMF: f64 = 1e-9;

const PMF_FLOOR: f64 = 1e-300;

/// Inverse-transform table over a contiguous window of same-parity values.
#[derive(Debug, Clone)]
pub struct CdfTable {
    /// Smallest support value; the i-th entry is `x_min + 2 i`.
    pub x_min: i64,
    /// Cumulative probabilities, renormalized so the last entry is 1.
    pub cdf: Vec<f64>,
    guide: Vec<u32>,
}

impl CdfTable {
    fn from_weights(x_min: i64, weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        // Guide table: guide[j] = first index with cdf > j / len.
        let g = cdf.len();
        let mut guide = Vec::with_capacity(g);
        let mut i = 0usize;
        for j in 0..g {
            let t = j as f64 / g as f64;
            while cdf[i] <= t {
                i += 1;
            }
            guide.push(i as u32);
        }
        CdfTable { x_min, cdf, guide }
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn x_max(&self) -> i64 {
        self.x_min + 2 * (self.cdf.len() as i64 - 1)
    }

    pub fn prob(&self, i: usize) -> f64 {
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    /// Inverse transform of a uniform `u` in `[0, 1)`.
    #[inline]
    pub fn sample(&self, u: f64) -> i64 {
        let g = self.guide.len();
        let mut i = self.guide[((u * g as f64) as usize).min(g - 1)] as usize;
        while self.cdf[i] <= u {
            i += 1;
        }
        self.x_min + 2 * i as i64
    }

    fn bytes(&self) -> usize {
        self.cdf.len() * 8 + self.guide.len() * 4
    }
}

/// Probable-value table of `X^{*n}` for one power of two `n`.
#[derive(Debug, Clone)]
pub struct RwPmfTable {
    pub n: u64,
    pub table: CdfTable,
    /// Exact (not renormalized) `ln rho_n(x)` over the window.
    pub log_pmf: Vec<f64>,
}

impl RwPmfTable {
    pub fn build(n: u64) -> Self {
        let parity = (n % 2) as i64;
        let mut half = (WINDOW_SIGMAS * (n as f64).sqrt()).floor() as i64;
        half = half.min(n as i64);
        if (half - parity).rem_euclid(2) != 0 {
            half -= 1;
        }
        let mut xs: Vec<i64> = (0..).map(|i| -half + 2 * i).take_while(|&x| x <= half).collect();
        let mut lp: Vec<f64> = xs.iter().map(|&x| ln_walk_pmf(n, x)).collect();
        // Drop points whose probability underflows the floor (symmetric).
        let floor = PMF_FLOOR.ln();
        while lp.len() > 1 && lp[0] < floor {
            xs.remove(0);
            lp.remove(0);
            xs.pop();
            lp.pop();
        }
        let weights: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        RwPmfTable {
            n,
            table: CdfTable::from_weights(xs[0], &weights),
            log_pmf: lp,
        }
    }

    /// `ln rho_n(x)`, from the window when possible.
    #[inline]
    pub fn ln_pmf(&self, x: i64) -> f64 {
        let off = x - self.table.x_min;
        if off >= 0 && off % 2 == 0 && ((off / 2) as usize) < self.log_pmf.len() {
            self.log_pmf[(off / 2) as usize]
        } else {
            ln_walk_pmf(self.n, x)
        }
    }

    pub fn pmf(&self, x: i64) -> f64 {
        self.ln_pmf(x).exp()
    }

    /// Largest `|z|` that is probable as a value of this table's walk.
    pub fn probable_bound(&self) -> i64 {
        let thr = PROBABLE_PMF.ln();
        let mut best = -1;
        for (i, &l) in self.log_pmf.iter().enumerate() {
            if l >= thr {
                let x = self.table.x_min + 2 * i as i64;
                best = best.max(x.abs());
            }
        }
        best
    }

    fn bytes(&self) -> usize {
        self.table.bytes() + self.log_pmf.len() * 8
    }
}

/// Exact conditional law `f(L = x | S = z)` for one `(n, z >= 0)`.
#[derive(Debug, Clone)]
struct CondTable {
    table: CdfTable,
}

/// Tables for every width `n = 2^j <= U`.
#[derive(Debug, Clone)]
pub struct RwTables {
    pub universe_log: u32,
    /// `unconditional[j]` describes `X^{*2^j}`.
    pub unconditional: Vec<RwPmfTable>,
    /// `conditional[j][z / 2]` for child width `2^j <= 128`, parent `z >= 0`.
    conditional: Vec<Vec<CondTable>>,
    /// `probable_z[j]`: probable bound of parents of child width `2^j`.
    probable_z: Vec<i64>,
}

/// Builds all tables for `U = 2^universe_log`.
pub fn build_rw_tables(universe_log: u32) -> Result<RwTables> {
    if !(1..=52).contains(&universe_log) {
        return Err(Error::InvalidConfig(format!(
            "random-walk trees need 1 <= universe_log <= 52, got {universe_log}"
        )));
    }
    let unconditional: Vec<RwPmfTable> = (0..=universe_log).map(|j| RwPmfTable::build(1u64 << j)).collect();
    let mut conditional = Vec::new();
    for j in 0..universe_log {
        let n = 1u64 << j;
        if n > RW_TABULAR_MAX_N {
            break;
        }
        let tables = (0..=n as i64)
            .map(|h| build_conditional(&unconditional, j, 2 * h))
            .collect();
        conditional.push(tables);
    }
    let probable_z = (0..universe_log)
        .map(|j| unconditional[j as usize + 1].probable_bound())
        .collect();
    Ok(RwTables {
        universe_log,
        unconditional,
        conditional,
        probable_z,
    })
}

fn build_conditional(unc: &[RwPmfTable], j: u32, z: i64) -> CondTable {
    let n = 1i64 << j;
    let child = &unc[j as usize];
    let parent = &unc[j as usize + 1];
    let lo = (-n).max(z - n);
    let hi = n.min(z + n);
    let lz = parent.ln_pmf(z);
    let weights: Vec<f64> = (0..)
        .map(|i| lo + 2 * i)
        .take_while(|&x| x <= hi)
        .map(|x| (child.ln_pmf(x) + child.ln_pmf(z - x) - lz).exp())
        .collect();
    CondTable {
        table: CdfTable::from_weights(lo, &weights),
    }
}

/// `f(L = x | S = z)` for child width `n`, evaluated from log-pmfs.
pub fn rw_conditional_pmf(tables: &RwTables, z: i64, n: u64, x: i64) -> f64 {
    let j = n.trailing_zeros() as usize;
    let child = &tables.unconditional[j];
    let parent = &tables.unconditional[j + 1];
    (child.ln_pmf(x) + child.ln_pmf(z - x) - parent.ln_pmf(z)).exp()
}

/// Proposal pmf `psi(x | z) = rho_n(x - 2 ceil(z/4))`.
pub fn rw_proposal_pmf(tables: &RwTables, z: i64, n: u64, x: i64) -> f64 {
    let j = n.trailing_zeros() as usize;
    tables.unconditional[j].pmf(x - proposal_shift(z))
}

#[inline]
pub fn proposal_shift(z: i64) -> i64 {
    // 2 * ceil(z / 4) for any sign of z.
    2 * z.div_euclid(4) + if z.rem_euclid(4) != 0 { 2 } else { 0 }
}

impl RwTables {
    pub fn universe_log(&self) -> u32 {
        self.universe_log
    }

    pub fn table(&self, n: u64) -> &RwPmfTable {
        &self.unconditional[n.trailing_zeros() as usize]
    }

    /// Probable bound on `|z|` for parents of child width `n`.
    pub fn probable_parent_bound(&self, n: u64) -> i64 {
        self.probable_z[n.trailing_zeros() as usize]
    }

    /// Resident bytes of all tables.
    pub fn memory_bytes(&self) -> usize {
        let unc: usize = self.unconditional.iter().map(|t| t.bytes()).sum();
        let cond: usize = self
            .conditional
            .iter()
            .flat_map(|v| v.iter())
            .map(|t| t.table.bytes())
            .sum();
        unc + cond
    }

    /// Root value `S[0, U)` from a 64-bit seed.
    pub fn root(&self, c: u64) -> i64 {
        self.unconditional[self.universe_log as usize].table.sample(uniform53(c))
    }

    /// Envelope constant used when splitting parent `z` into width-`n` children.
    pub fn envelope(&self, z: i64, n: u64) -> f64 {
        if z.abs() <= self.probable_parent_bound(n) {
            RW_ENVELOPE
        } else {
            // Improbable parent: scan a band around the mode of f(. | z).
            let band = (10.0 * (n as f64).sqrt()).ceil() as i64 + 4;
            let centre = z / 2;
            let parity = (n % 2) as i64;
            let mut x = centre - band;
            if (x - parity).rem_euclid(2) != 0 {
                x -= 1;
            }
            let c = proposal_shift(z);
            let child = self.table(n);
            let lz = self.unconditional[n.trailing_zeros() as usize + 1].ln_pmf(z);
            let mut best: f64 = 0.0;
            while x <= centre + band {
                let lf = child.ln_pmf(x) + child.ln_pmf(z - x) - lz;
                let lpsi = child.ln_pmf(x - c);
                if lf.is_finite() && lpsi.is_finite() {
                    best = best.max((lf - lpsi).exp());
                }
                x += 2;
            }
            RW_ENVELOPE.max(best * (1.0 + 1e-9))
        }
    }

    /// Left child of a parent `z` spanning `2n` leaves.
    ///
    /// `seeds(t)` yields the split seed of attempt `t`. Returns the value and
    /// the number of attempts used.
    pub fn split<F>(&self, z: i64, n: u64, max_attempts: u32, mut seeds: F) -> Result<(i64, u32)>
    where
        F: FnMut(u32) -> Result<u64>,
    {
        if n == 0 || !n.is_power_of_two() || z.unsigned_abs() > 2 * n || z.rem_euclid(2) != 0 {
            return Err(Error::RwSupport { z, n });
        }
        if (n.trailing_zeros()) >= self.universe_log {
            return Err(Error::RwSupport { z, n });
        }
        if n <= RW_TABULAR_MAX_N {
            let u = uniform53(seeds(0)?);
            let cond = &self.conditional[n.trailing_zeros() as usize];
            let x = cond[(z.unsigned_abs() / 2) as usize].table.sample(u);
            return Ok((if z >= 0 { x } else { -x }, 1));
        }
        let j = n.trailing_zeros() as usize;
        let child = &self.unconditional[j];
        let lz = self.unconditional[j + 1].ln_pmf(z);
        let shift = proposal_shift(z);
        let q = self.envelope(z, n);
        let lq = q.ln();
        for t in 0..max_attempts {
            let c = seeds(t)?;
            let u = (c >> 32) as f64 * (1.0 / 4294967296.0);
            let v = (c & 0xffff_ffff) as f64 * (1.0 / 4294967296.0);
            let y = child.table.sample(u);
            let x = y + shift;
            let log_ratio = child.ln_pmf(x) + child.ln_pmf(z - x) - lz - child.log_pmf[((y - child.table.x_min) / 2) as usize];
            debug_assert!(
                log_ratio <= lq + 1e-12,
                "envelope violated: n={n} z={z} x={x} ratio={}",
                log_ratio.exp()
            );
            if v < (log_ratio - lq).exp() {
                return Ok((x, t + 1));
            }
        }
        Err(Error::SamplingExhausted {
            level: 0,
            index: 0,
            attempts: max_attempts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposal_shift_is_twice_ceil_quarter() {
        for z in -40i64..=40 {
            if z % 2 != 0 {
                continue;
            }
            let want = 2 * ((z as f64) / 4.0).ceil() as i64;
            assert_eq!(proposal_shift(z), want, "z={z}");
        }
    }

    #[test]
    fn two_step_table() {
        let t = RwPmfTable::build(2);
        assert_eq!(t.table.x_min, -2);
        assert_eq!(t.table.len(), 3);
        let p: Vec<f64> = (0..3).map(|i| t.table.prob(i)).collect();
        for (got, want) in p.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn tables_normalize() {
        for j in [2u32, 6, 10, 20] {
            let t = RwPmfTable::build(1 << j);
            let raw: f64 = t.log_pmf.iter().map(|l| l.exp()).sum();
            assert!((raw - 1.0).abs() < 1e-12, "n=2^{j} window mass {raw}");
            assert_eq!(*t.table.cdf.last().unwrap(), 1.0);
            assert!(t.table.cdf.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn window_covers_eight_sigma() {
        let t = RwPmfTable::build(1 << 20);
        assert!(t.table.x_max() >= (8.0 * 1024.0) as i64 - 1);
        assert_eq!(t.table.x_min, -t.table.x_max());
    }

    #[test]
    fn inverse_transform_hits_every_point() {
        let t = RwPmfTable::build(4);
        assert_eq!(t.table.sample(0.0), -4);
        assert_eq!(t.table.sample(1.0 / 16.0 - 1e-12), -4);
        assert_eq!(t.table.sample(1.0 / 16.0), -2);
        assert_eq!(t.table.sample(0.5), 0);
        assert_eq!(t.table.sample(1.0 - 1e-12), 4);
    }

    #[test]
    fn forced_and_fair_unit_splits() {
        let tables = build_rw_tables(4).unwrap();
        for c in [0u64, 1, u64::MAX, 0x8000_0000_0000_0000] {
            assert_eq!(tables.split(2, 1, 100, |_| Ok(c)).unwrap().0, 1);
            assert_eq!(tables.split(-2, 1, 100, |_| Ok(c)).unwrap().0, -1);
        }
        // z = 0, n = 1: the lower half of the seed space gives -1.
        assert_eq!(tables.split(0, 1, 100, |_| Ok(0)).unwrap().0, -1);
        assert_eq!(tables.split(0, 1, 100, |_| Ok(u64::MAX)).unwrap().0, 1);
    }

    #[test]
    fn conditional_small_pmfs_sum_to_one() {
        let tables = build_rw_tables(4).unwrap();
        for n in [1u64, 2, 4, 8] {
            for z in (-2 * n as i64..=2 * n as i64).step_by(2) {
                let s: f64 = (-(n as i64)..=n as i64)
                    .map(|x| rw_conditional_pmf(&tables, z, n, x))
                    .sum();
                assert!((s - 1.0).abs() < 1e-12, "n={n} z={z} sum={s}");
            }
        }
    }

    #[test]
    fn split_rejects_bad_inputs() {
        let tables = build_rw_tables(10).unwrap();
        assert!(tables.split(3, 4, 100, |_| Ok(0)).is_err());
        assert!(tables.split(10, 4, 100, |_| Ok(0)).is_err());
        assert!(tables.split(0, 3, 100, |_| Ok(0)).is_err());
        assert!(tables.split(0, 1024, 100, |_| Ok(0)).is_err());
        assert!(build_rw_tables(0).is_err());
        assert!(build_rw_tables(53).is_err());
    }

    #[test]
    fn exhausted_rejection_reports() {
        let tables = build_rw_tables(10).unwrap();
        // v = 1 - 2^-32 is never below an acceptance probability < 1.
        let r = tables.split(0, 256, 3, |_| Ok(0x8000_0000_ffff_ffff));
        assert!(matches!(r, Err(Error::SamplingExhausted { attempts: 3, .. })));
    }
}
