//! Range-update streaming sketches for the L1 and L2 norms of a counter
//! vector `sigma` over `[0, U)`.
//!
//! Accumulator `j` holds `sum_i sigma_i X_i^(j)` for the leaves of its own
//! tree (Cauchy for L1, Gaussian for L2), so a range update costs one range
//! sum per accumulator. Accumulators sum exactly, so cancelling updates and
//! merges reproduce the single-stream state bit for bit.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::dst::{Dst, DstConfig};
use crate::error::{Error, Result};
use crate::exact_sum::ExactSum;
use crate::hashing::{derive_seed, HashFamily};
use crate::prefix::check_range;

pub const EXPORT_HEADER: &str = "dyasim-sketch v1";

/// Largest `universe_log` the exact counters will materialize.
pub const MAX_EXACT_UNIVERSE_LOG: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn name(&self) -> &'static str {
        match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
        }
    }

    /// The stable law whose leaves back this norm.
    pub fn distribution(&self) -> Distribution {
        match self {
            Norm::L1 => Distribution::Cauchy,
            Norm::L2 => Distribution::Gaussian,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            _ => Err(Error::InvalidConfig(format!("unknown norm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub norm: Norm,
    pub r: usize,
    pub universe_log: u32,
    pub seed: u64,
    pub hash_family: HashFamily,
}

impl SketchConfig {
    pub fn new(norm: Norm, r: usize, universe_log: u32, seed: u64) -> Self {
        SketchConfig {
            norm,
            r,
            universe_log,
            seed,
            hash_family: HashFamily::FastMixer,
        }
    }

    pub fn with_hash(mut self, hash_family: HashFamily) -> Self {
        self.hash_family = hash_family;
        self
    }

    /// Tree configuration backing accumulator `j`.
    pub fn dst_config(&self, j: usize) -> DstConfig {
        DstConfig::new(self.universe_log, self.norm.distribution(), derive_seed(self.seed, j as u64))
            .with_hash(self.hash_family)
    }
}

/// One range update `sigma[a..b) += delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub a: u64,
    pub b: u64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct LpSketch {
    config: SketchConfig,
    accumulators: Vec<ExactSum>,
    dsts: Vec<Dst>,
}

impl LpSketch {
    pub fn new(config: SketchConfig) -> Result<Self> {
        if config.r == 0 {
            return Err(Error::InvalidConfig("sketch needs r >= 1 accumulators".into()));
        }
        let dsts = (0..config.r)
            .map(|j| Dst::new(config.dst_config(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LpSketch {
            config,
            accumulators: vec![ExactSum::new(); config.r],
            dsts,
        })
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn norm(&self) -> Norm {
        self.config.norm
    }

    pub fn r(&self) -> usize {
        self.config.r
    }

    /// Current accumulator values `A_1..A_r`.
    pub fn accumulators(&self) -> Vec<f64> {
        self.accumulators.iter().map(ExactSum::value).collect()
    }

    pub fn dsts(&self) -> &[Dst] {
        &self.dsts
    }

    pub fn update(&mut self, a: u64, b: u64, delta: f64) -> Result<()> {
        check_range(a, b, self.config.universe_log)?;
        if !delta.is_finite() {
            return Err(Error::InvalidConfig(format!("update delta must be finite, got {delta}")));
        }
        if a == b {
            return Ok(());
        }
        for (acc, dst) in self.accumulators.iter_mut().zip(&self.dsts) {
            acc.add(delta * dst.range_sum(a, b)?);
        }
        Ok(())
    }

    pub fn apply(&mut self, updates: &[Update]) -> Result<()> {
        for u in updates {
            self.update(u.a, u.b, u.delta)?;
        }
        Ok(())
    }

    fn require(&self, wanted: Norm) -> Result<()> {
        if self.config.norm != wanted {
            return Err(Error::WrongNorm {
                wanted: wanted.name(),
                actual: self.config.norm.name(),
            });
        }
        Ok(())
    }

    /// Estimate of `d2^2`: mean of squared accumulators.
    pub fn estimate_l2(&self) -> Result<f64> {
        self.require(Norm::L2)?;
        let s: f64 = self.accumulators().iter().map(|a| a * a).sum();
        Ok(s / self.config.r as f64)
    }

    /// Estimate of `d1`: median of absolute accumulators.
    pub fn estimate_l1(&self) -> Result<f64> {
        self.require(Norm::L1)?;
        let abs: Vec<f64> = self.accumulators().iter().map(|a| a.abs()).collect();
        Ok(median(abs))
    }

    /// The norm itself (`d1`, or `sqrt` of the `d2^2` estimate).
    pub fn estimate_norm(&self) -> f64 {
        match self.config.norm {
            Norm::L1 => self.estimate_l1().expect("norm checked"),
            Norm::L2 => self.estimate_l2().expect("norm checked").sqrt(),
        }
    }

    /// Accumulator-wise sum of two sketches built from the same configuration.
    pub fn merge(&self, other: &LpSketch) -> Result<LpSketch> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &LpSketch) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch(format!(
                "cannot merge {:?} with {:?}",
                self.config, other.config
            )));
        }
        for (a, b) in self.accumulators.iter_mut().zip(&other.accumulators) {
            a.add_sum(b);
        }
        Ok(())
    }

    /// Portable text form: a header, the configuration, then one accumulator
    /// per line as its exact partial sums.
    pub fn export(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "{EXPORT_HEADER}\nnorm {}\nr {}\nuniverse_log {}\nseed {}\nhash {}\n",
            c.norm,
            c.r,
            c.universe_log,
            c.seed,
            c.hash_family.name()
        );
        for a in &self.accumulators {
            let parts: Vec<String> = a.partials().iter().map(|p| format!("{p:?}")).collect();
            s.push_str(if parts.is_empty() { "0.0" } else { "" });
            s.push_str(&parts.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn import(text: &str) -> Result<LpSketch> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };
        match lines.next() {
            Some((_, l)) if l.trim() == EXPORT_HEADER => {}
            Some((i, l)) => return Err(parse_err(i, format!("unsupported header {l:?}"))),
            None => return Err(parse_err(0, "empty sketch export".into())),
        }
        let mut field = |name: &str| -> Result<String> {
            let (i, l) = lines.next().ok_or_else(|| parse_err(0, format!("missing field {name}")))?;
            let mut parts = l.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k == name => Ok(v.to_string()),
                _ => Err(parse_err(i, format!("expected `{name} <value>`, got {l:?}"))),
            }
        };
        let norm: Norm = field("norm")?.parse()?;
        let r: usize = field("r")?
            .parse()
            .map_err(|e| Error::Parse { line: 3, msg: format!("{e}") })?;
        let universe_log: u32 = field("universe_log")?
            .parse()
            .map_err(|e| Error::Parse { line: 4, msg: format!("{e}") })?;
        let seed: u64 = field("seed")?
            .parse()
            .map_err(|e| Error::Parse { line: 5, msg: format!("{e}") })?;
        let hash_family: HashFamily = field("hash")?.parse()?;
        let mut accumulators = Vec::with_capacity(r);
        for (i, l) in lines {
            let parts = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| parse_err(i, format!("bad accumulator {l:?}: {e}")))?;
            if parts.iter().any(|p| !p.is_finite()) {
                return Err(parse_err(i, format!("non-finite accumulator {l:?}")));
            }
            accumulators.push(ExactSum::from_partials(&parts));
        }
        if accumulators.len() != r {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {r} accumulators, found {}", accumulators.len()),
            });
        }
        let mut sketch = LpSketch::new(SketchConfig {
            norm,
            r,
            universe_log,
            seed,
            hash_family,
        })?;
        sketch.accumulators = accumulators;
        Ok(sketch)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Dense counters kept as a difference array; the validation oracle.
#[derive(Debug, Clone)]
pub struct ExactCounters {
    universe_log: u32,
    diff: Vec<f64>,
}

impl ExactCounters {
    pub fn new(universe_log: u32) -> Result<Self> {
        if universe_log > MAX_EXACT_UNIVERSE_LOG {
            return Err(Error::UniverseTooLarge {
                universe_log,
                limit: MAX_EXACT_UNIVERSE_LOG,
            });
        }
        Ok(ExactCounters {
            universe_log,
            diff: vec![0.0; (1usize << universe_log) + 1],
        })
    }

    pub fn update(&mut self, a: u64, b: u64, delta: f64) -> Result<()> {
        check_range(a, b, self.universe_log)?;
        if a < b {
            self.diff[a as usize] += delta;
            self.diff[b as usize] -= delta;
        }
        Ok(())
    }

    pub fn apply(&mut self, updates: &[Update]) -> Result<()> {
        for u in updates {
            self.update(u.a, u.b, u.delta)?;
        }
        Ok(())
    }

    /// The counter vector `sigma`.
    pub fn counters(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.diff[..self.diff.len() - 1]
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect()
    }
}

/// `(d1, d2)` of the counter vector.
pub fn oracle_norms(counters: &ExactCounters) -> (f64, f64) {
    let sigma = counters.counters();
    let d1 = sigma.iter().map(|s| s.abs()).sum();
    let d2 = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    (d1, d2)
}

/// Reads `a b delta` lines; blank lines and `#` comments are skipped.
pub fn parse_stream<R: BufRead>(reader: R) -> Result<Vec<Update>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(format!("expected `a b delta`, got {body:?}")));
        }
        let a: u64 = f[0].parse().map_err(|e| err(format!("bad a {:?}: {e}", f[0])))?;
        let b: u64 = f[1].parse().map_err(|e| err(format!("bad b {:?}: {e}", f[1])))?;
        let delta: f64 = f[2].parse().map_err(|e| err(format!("bad delta {:?}: {e}", f[2])))?;
        if a > b {
            return Err(err(format!("empty-or-reversed range {a} > {b}")));
        }
        if !delta.is_finite() {
            return Err(err(format!("delta must be finite, got {delta}")));
        }
        out.push(Update { a, b, delta });
    }
    Ok(out)
}
