//! Log-pmf of the n-step simple random walk, `2 * Binom(n, 1/2) - n`.
//!
//! Uses Loader's saddle-point form (Stirling error + deviance), which has no
//! catastrophic cancellation even for `n` near 2^52, unlike differences of
//! `ln Gamma` values.

use std::f64::consts::{LN_2, PI};

const STIRLERR_SMALL: [f64; 16] = [
    0.0, // n = 0 is never used
    0.08106146679532725821967,
    0.04134069595540929409382,
    0.02767792568499833914879,
    0.02079067210376509311152,
    0.01664469118982119216319,
    0.01387612882307074799875,
    0.01189670994589177009506,
    0.01041126526197209649748,
    0.009255462182712732917729,
    0.008330563433362871256469,
    0.007573675487951840794972,
    0.006942840107209529865664,
    0.00640899418800420706844,
    0.005951370112758847735624,
    0.005554733551962801371039,
];

/// `ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi))`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return STIRLERR_SMALL[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance `x ln(x / np) + np - x`, accurate when `x ~ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P[Binom(n, 1/2) = k]`.
pub fn ln_binom_half(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    if k == 0 || k == n {
        return -nf * LN_2;
    }
    let kf = k as f64;
    let rest = (n - k) as f64;
    let half = nf * 0.5;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(rest) - bd0(kf, half) - bd0(rest, half);
    let lf = (2.0 * PI).ln() + kf.ln() + rest.ln() - nf.ln();
    lc - 0.5 * lf
}

/// `ln rho_n(x)`: log-probability that an n-step walk ends at `x`.
/// `-inf` outside the support or on the wrong parity.
pub fn ln_walk_pmf(n: u64, x: i64) -> f64 {
    let ax = x.unsigned_abs();
    if ax > n || (n - ax) % 2 != 0 {
        return f64::NEG_INFINITY;
    }
    // k = (n - x) / 2 counts the -1 steps; the pmf is symmetric in x.
    ln_binom_half(n, (n - ax) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_choose_naive(n: u64, k: u64) -> f64 {
        let k = k.min(n - k);
        (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
    }

    #[test]
    fn matches_direct_sum_of_logs() {
        for n in [1u64, 2, 3, 7, 16, 31, 64, 100, 257, 1000, 4096] {
            for k in 0..=n {
                let want = ln_choose_naive(n, k) - n as f64 * LN_2;
                let got = ln_binom_half(n, k);
                let tol = 1e-12 * want.abs().max(1.0);
                assert!((got - want).abs() <= tol, "n={n} k={k} got={got} want={want}");
            }
        }
    }

    #[test]
    fn small_walks_exact() {
        assert!((ln_walk_pmf(2, 0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((ln_walk_pmf(2, 2) - 0.25f64.ln()).abs() < 1e-15);
        assert!((ln_walk_pmf(2, -2) - 0.25f64.ln()).abs() < 1e-15);
        assert_eq!(ln_walk_pmf(2, 1), f64::NEG_INFINITY);
        assert_eq!(ln_walk_pmf(2, 4), f64::NEG_INFINITY);
        assert!((ln_walk_pmf(1, 1) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn normalizes_for_moderate_n() {
        for n in [10u64, 128, 1000, 65536] {
            let s: f64 = (0..=n).map(|k| ln_binom_half(n, k).exp()).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn huge_n_central_term_matches_asymptotics() {
        // P[center] ~ sqrt(2 / (pi n)) * (1 - 1/(4n)).
        let n = 1u64 << 52;
        let want = (2.0 / (PI * n as f64)).sqrt().ln() - 0.25 / n as f64;
        let got = ln_binom_half(n, n / 2);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // Ratio of neighbours is exact: C(n, k-1)/C(n, k) = k / (n - k + 1).
        let k = n / 2 + 1000;
        let d = ln_binom_half(n, k - 1) - ln_binom_half(n, k);
        let want = ((k as f64) / ((n - k + 1) as f64)).ln();
        assert!((d - want).abs() < 1e-12, "{d} vs {want}");
    }
}
