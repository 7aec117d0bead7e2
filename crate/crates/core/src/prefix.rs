//! Dyadic ranges named as nodes of a complete binary trie.
//!
//! A [`Prefix`] at `level` with `index` names the range
//! `[index * w, (index + 1) * w)` where `w = U >> level`. The root is `(0, 0)`
//! and the leaves `(log2 U, i)` are the singletons `[i, i + 1)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    pub level: u32,
    pub index: u64,
}

impl Prefix {
    pub const ROOT: Prefix = Prefix { level: 0, index: 0 };

    pub fn new(level: u32, index: u64, universe_log: u32) -> Result<Self> {
        let p = Prefix { level, index };
        if p.is_valid(universe_log) {
            Ok(p)
        } else {
            Err(Error::InvalidPrefix {
                level,
                index,
                universe_log,
            })
        }
    }

    pub fn leaf(index: u64, universe_log: u32) -> Result<Self> {
        if universe_log < 64 && index >= 1u64 << universe_log {
            return Err(Error::IndexOutOfRange {
                index,
                universe_log,
            });
        }
        Ok(Prefix {
            level: universe_log,
            index,
        })
    }

    pub fn is_valid(&self, universe_log: u32) -> bool {
        self.level <= universe_log && (self.level == 0 && self.index == 0 || self.level > 0 && self.index >> self.level == 0)
    }

    pub fn is_root(&self) -> bool {
        self.level == 0
    }

    /// Number of leaves under this node.
    pub fn width(&self, universe_log: u32) -> u64 {
        1u64 << (universe_log - self.level)
    }

    /// Half-open range `[lo, hi)` covered by this node.
    pub fn range(&self, universe_log: u32) -> (u64, u64) {
        let shift = universe_log - self.level;
        let lo = self.index << shift;
        // hi may be 2^64 only when universe_log == 64, which configs reject.
        (lo, lo + (1u64 << shift))
    }

    pub fn left_child(&self) -> Prefix {
        Prefix {
            level: self.level + 1,
            index: self.index << 1,
        }
    }

    pub fn right_child(&self) -> Prefix {
        Prefix {
            level: self.level + 1,
            index: (self.index << 1) | 1,
        }
    }

    pub fn parent(&self) -> Option<Prefix> {
        (self.level > 0).then(|| Prefix {
            level: self.level - 1,
            index: self.index >> 1,
        })
    }

    /// Ancestor at `level` (which must not exceed `self.level`).
    pub fn ancestor(&self, level: u32) -> Prefix {
        debug_assert!(level <= self.level);
        Prefix {
            level,
            index: self.index >> (self.level - level),
        }
    }

    /// Binary-trie label, e.g. `01*` for `[4, 8)` in a universe of 16.
    pub fn label(&self) -> String {
        let mut s: String = (0..self.level)
            .rev()
            .map(|b| if (self.index >> b) & 1 == 1 { '1' } else { '0' })
            .collect();
        s.push('*');
        s
    }
}

/// A dyadic range together with its universe, for display as `[lo,hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicRange {
    pub prefix: Prefix,
    pub lo: u64,
    pub hi: u64,
}

impl fmt::Display for DyadicRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.lo, self.hi)
    }
}

pub(crate) fn check_range(a: u64, b: u64, universe_log: u32) -> Result<()> {
    if universe_log > 63 || a > b || b > 1u64 << universe_log {
        return Err(Error::InvalidRange { a, b, universe_log });
    }
    Ok(())
}

/// The unique minimum partition of `[a, b)` into dyadic ranges, in increasing
/// order. Its length never exceeds `2 * universe_log`.
pub fn dyadic_cover(a: u64, b: u64, universe_log: u32) -> Result<Vec<Prefix>> {
    check_range(a, b, universe_log)?;
    let mut out = Vec::new();
    let mut lo = a;
    while lo < b {
        // Largest aligned block starting at lo that fits in what remains.
        let align = if lo == 0 { universe_log } else { lo.trailing_zeros().min(universe_log) };
        let fit = 63 - (b - lo).leading_zeros();
        let k = align.min(fit);
        out.push(Prefix {
            level: universe_log - k,
            index: lo >> k,
        });
        lo += 1u64 << k;
    }
    Ok(out)
}

/// Same as [`dyadic_cover`] but with explicit bounds for display.
pub fn dyadic_cover_ranges(a: u64, b: u64, universe_log: u32) -> Result<Vec<DyadicRange>> {
    Ok(dyadic_cover(a, b, universe_log)?
        .into_iter()
        .map(|prefix| {
            let (lo, hi) = prefix.range(universe_log);
            DyadicRange { prefix, lo, hi }
        })
        .collect())
}
