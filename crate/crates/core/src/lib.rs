//! Dyadic simulation trees and the sketches built on them.
//!
//! A [`Dst`] simulates `U = 2^universe_log` i.i.d. variables from a stable
//! law (Gaussian, Cauchy) or the random-walk law on `{-1, +1}` so that any
//! range sum `S[a, b)` is computed in `O(log U)` time from a short seed,
//! without materializing the variables.

pub mod bench;
pub mod distributions;
pub mod dst;
pub mod lsh;
pub mod sketch;
pub mod verify;
pub mod error;
pub mod exact_sum;
pub mod hashing;
pub mod prefix;

pub use distributions::Distribution;
pub use dst::{Dst, DstConfig, SeedSource, SplitStats};
pub use error::{Error, Result};
pub use hashing::{HashFamily, HashFamilySpec};
pub use prefix::{dyadic_cover, dyadic_cover_ranges, DyadicRange, Prefix};
pub use lsh::{collision_curve, GrwLshFunction};
pub use sketch::{ExactCounters, LpSketch, Norm, SketchConfig};
