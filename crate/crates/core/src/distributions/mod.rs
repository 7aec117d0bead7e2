//! Root sampling and binary split kernels.
//!
//! A split takes a parent value `z` spanning `2n` leaves and draws the left
//! child `L` from `f(L = x | S = z) = rho_n(x) rho_n(z - x) / rho_2n(z)`;
//! the right child is `z - L`.
//!
//! Bit usage of a 64-bit split seed `C`:
//!
//! * Gaussian: Box-Muller with `u1 = (hi32 + 1) / 2^32` in `(0, 1]` and
//!   `u2 = lo32 / 2^32` in `[0, 1)`.
//! * Cauchy (per attempt): bit 63 picks the mixture component, bits 32..63
//!   give `u = (b31 + 1/2) / 2^31` for the proposal, `lo32 / 2^32` is the
//!   acceptance uniform.
//! * Random walk: tabular splits and roots use the top 53 bits; rejection
//!   attempts use `hi32` for the proposal and `lo32` for acceptance.

mod binomial;
mod random_walk;
pub mod trig;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binomial::{ln_binom_half, ln_walk_pmf};
pub use random_walk::{
    build_rw_tables, proposal_shift, rw_conditional_pmf, rw_proposal_pmf, CdfTable, RwPmfTable, RwTables,
    PROBABLE_PMF, RW_ENVELOPE, RW_TABULAR_MAX_N, WINDOW_SIGMAS,
};

/// Target distribution of the underlying variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distribution {
    /// Standard normal `N(0, 1)`.
    Gaussian,
    /// Standard Cauchy.
    Cauchy,
    /// Uniform on `{-1, +1}`.
    RandomWalk,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Gaussian, Distribution::Cauchy, Distribution::RandomWalk];

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Gaussian => "gaussian",
            Distribution::Cauchy => "cauchy",
            Distribution::RandomWalk => "rw",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            "cauchy" => Ok(Distribution::Cauchy),
            "rw" | "randomwalk" | "random-walk" => Ok(Distribution::RandomWalk),
            _ => Err(Error::InvalidConfig(format!("unknown distribution '{s}'"))),
        }
    }
}

const TWO_POW_M32: f64 = 1.0 / 4294967296.0;
const TWO_POW_M53: f64 = 1.0 / 9007199254740992.0;

/// Top 53 bits of `c` as a uniform in `[0, 1)`.
#[inline(always)]
pub fn uniform53(c: u64) -> f64 {
    (c >> 11) as f64 * TWO_POW_M53
}

/// Top 53 bits of `c` as a uniform in `(0, 1)`.
#[inline(always)]
pub fn uniform53_open(c: u64) -> f64 {
    ((c >> 11) as f64 + 0.5) * TWO_POW_M53
}

/// The two Box-Muller uniforms carried by one seed.
#[inline(always)]
pub fn box_muller_uniforms(c: u64) -> (f64, f64) {
    (((c >> 32) + 1) as f64 * TWO_POW_M32, (c & 0xffff_ffff) as f64 * TWO_POW_M32)
}

/// `sqrt(-2 ln u1) cos(2 pi u2)`.
#[inline(always)]
pub fn box_muller(u1: f64, u2: f64) -> f64 {
    (-2.0 * u1.ln()).sqrt() * trig::cos_2pi(u2)
}

/// Standard normal from one seed.
#[inline(always)]
pub fn standard_normal(c: u64) -> f64 {
    let (u1, u2) = box_muller_uniforms(c);
    box_muller(u1, u2)
}

/// `scale * tan(pi (u - 1/2))`, the Cauchy(0, scale) quantile.
#[inline(always)]
pub fn cauchy_quantile(u: f64, scale: f64) -> f64 {
    scale * trig::tan_pi(u - 0.5)
}

/// Gaussian split: `L = z/2 + sqrt(n/2) g`.
#[inline]
pub fn gaussian_split(z: f64, n: u64, c: u64) -> f64 {
    0.5 * z + (0.5 * n as f64).sqrt() * standard_normal(c)
}

/// Ratio `f(x | z) / psi(x | z)` of the Cauchy split, at most 2.
#[inline(always)]
pub fn cauchy_ratio(z: f64, n: f64, x: f64) -> f64 {
    let d = x - 0.5 * z;
    (4.0 * n * n + z * z) / (2.0 * n * n + 0.5 * z * z + 2.0 * d * d)
}

/// Conditional density of the left child of a Cauchy parent.
pub fn cauchy_conditional_pdf(z: f64, n: f64, x: f64) -> f64 {
    n / (2.0 * PI) * (z * z + 4.0 * n * n) / ((n * n + x * x) * (n * n + (z - x) * (z - x)))
}

/// Cauchy split by rejection from the mixture `Y'` / `Y' + z`, `Q = 2`.
pub fn cauchy_split<F>(z: f64, n: u64, max_attempts: u32, mut seeds: F) -> Result<(f64, u32)>
where
    F: FnMut(u32) -> Result<u64>,
{
    let nf = n as f64;
    for t in 0..max_attempts {
        let c = seeds(t)?;
        let shift = if c >> 63 == 1 { z } else { 0.0 };
        let u = (((c >> 32) & 0x7fff_ffff) as f64 + 0.5) * (1.0 / 2147483648.0);
        let v = (c & 0xffff_ffff) as f64 * TWO_POW_M32;
        let x = cauchy_quantile(u, nf) + shift;
        // v < ratio / 2, cleared of the division.
        let d = x - 0.5 * z;
        if v * (4.0 * nf * nf + z * z + 4.0 * d * d) < 4.0 * nf * nf + z * z {
            return Ok((x, t + 1));
        }
    }
    Err(Error::SamplingExhausted {
        level: 0,
        index: 0,
        attempts: max_attempts,
    })
}

/// `S[0, U)` for `U = 2^universe_log`. Random walks need their tables.
pub fn root_sample(distribution: Distribution, universe_log: u32, c: u64, tables: Option<&RwTables>) -> Result<f64> {
    let u = (1u64 << universe_log) as f64;
    match distribution {
        Distribution::Gaussian => Ok(u.sqrt() * standard_normal(c)),
        Distribution::Cauchy => Ok(cauchy_quantile(uniform53_open(c), u)),
        Distribution::RandomWalk => {
            let t = tables.ok_or_else(|| Error::InvalidConfig("random-walk root needs tables".into()))?;
            if t.universe_log != universe_log {
                return Err(Error::InvalidConfig("random-walk tables built for another universe".into()));
            }
            Ok(t.root(c) as f64)
        }
    }
}

/// Distribution-specific state held by a tree.
#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    Gaussian,
    Cauchy,
    RandomWalk(Arc<RwTables>),
}

impl Kernel {
    pub(crate) fn new(distribution: Distribution, universe_log: u32) -> Result<Self> {
        Ok(match distribution {
            Distribution::Gaussian => Kernel::Gaussian,
            Distribution::Cauchy => Kernel::Cauchy,
            Distribution::RandomWalk => Kernel::RandomWalk(Arc::new(build_rw_tables(universe_log)?)),
        })
    }

    pub(crate) fn distribution(&self) -> Distribution {
        match self {
            Kernel::Gaussian => Distribution::Gaussian,
            Kernel::Cauchy => Distribution::Cauchy,
            Kernel::RandomWalk(_) => Distribution::RandomWalk,
        }
    }

    pub(crate) fn rw_tables(&self) -> Option<&Arc<RwTables>> {
        match self {
            Kernel::RandomWalk(t) => Some(t),
            _ => None,
        }
    }

    pub(crate) fn root(&self, universe_log: u32, c: u64) -> Result<f64> {
        root_sample(self.distribution(), universe_log, c, self.rw_tables().map(|t| t.as_ref()))
    }

    /// Left child of `z` (spanning `2n` leaves) and the attempts consumed.
    #[inline]
    pub(crate) fn split<F>(&self, z: f64, n: u64, max_attempts: u32, mut seeds: F) -> Result<(f64, u32)>
    where
        F: FnMut(u32) -> Result<u64>,
    {
        match self {
            Kernel::Gaussian => Ok((gaussian_split(z, n, seeds(0)?), 1)),
            Kernel::Cauchy => cauchy_split(z, n, max_attempts, seeds),
            Kernel::RandomWalk(t) => {
                let (x, a) = t.split(z as i64, n, max_attempts, seeds)?;
                Ok((x as f64, a))
            }
        }
    }
}
