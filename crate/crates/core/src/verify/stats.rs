//! Goodness-of-fit statistics and the reference laws `X^{*n}`.

use std::f64::consts::PI;

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, Normal};

use crate::distributions::{Distribution, RwPmfTable};
use crate::error::{Error, Result};

/// Kolmogorov-Smirnov distance between the empirical cdf of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic critical value `c(alpha) / sqrt(n)`, `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Upper `alpha` quantile of the chi-square law with `dof` degrees of freedom.
pub fn chi_square_critical(alpha: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").inverse_cdf(1.0 - alpha)
}

/// Two-sided standard normal quantile `z_{1 - alpha / 2}`.
pub fn normal_critical(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(1.0 - alpha / 2.0)
}

/// Pearson chi-square over `(observed, expected probability)` cells, merging
/// neighbours until every expected count is at least 5. Returns the
/// statistic and degrees of freedom.
pub fn chi_square(cells: &[(u64, f64)]) -> Result<(f64, usize)> {
    let total: u64 = cells.iter().map(|c| c.0).sum();
    if total == 0 {
        return Err(Error::EmptySample);
    }
    if cells.iter().any(|&(o, p)| p <= 0.0 && o > 0) {
        return Ok((f64::INFINITY, cells.len().saturating_sub(1)));
    }
    let n = total as f64;
    let mut merged: Vec<(u64, f64)> = Vec::new();
    let mut cur = (0u64, 0.0f64);
    for &(o, p) in cells {
        cur.0 += o;
        cur.1 += p;
        if cur.1 * n >= 5.0 {
            merged.push(cur);
            cur = (0, 0.0);
        }
    }
    if cur.0 > 0 || cur.1 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => merged.push(cur),
        }
    }
    let mut stat = 0.0;
    for &(o, p) in &merged {
        let e = p * n;
        if e <= 0.0 {
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    Ok((stat, merged.len().saturating_sub(1)))
}

/// Exact `P[X^{*n} = x]` for the walk, from the binomial law.
pub fn walk_pmf(n: u64, x: i64) -> f64 {
    let ax = x.unsigned_abs();
    if ax > n || (n - ax) % 2 != 0 {
        return 0.0;
    }
    let k = ((x + n as i64) / 2) as u64;
    Binomial::new(0.5, n).expect("valid binomial").pmf(k)
}

/// Chi-square cells for integer walk samples of `n` steps. Samples off the
/// support land in an impossible cell.
pub fn walk_cells(n: u64, samples: &[f64]) -> Vec<(u64, f64)> {
    let ni = n as i64;
    let half = ((10.0 * (n as f64).sqrt()).ceil() as i64 + 2).min(ni);
    let lo = if (ni - half) % 2 == 0 { -half } else { -half + 1 };
    let hi = -lo;
    let m = ((hi - lo) / 2 + 1) as usize;
    let mut cells: Vec<(u64, f64)> = (0..m).map(|i| (0, walk_pmf(n, lo + 2 * i as i64))).collect();
    let tail = ((1.0 - cells.iter().map(|c| c.1).sum::<f64>()) / 2.0).max(0.0);
    cells[0].1 += tail;
    cells[m - 1].1 += tail;
    let mut impossible = 0u64;
    for &s in samples {
        let x = s as i64;
        if x as f64 != s || x.abs() > ni || (ni - x) % 2 != 0 {
            impossible += 1;
            continue;
        }
        let i = ((x.clamp(lo, hi) - lo) / 2) as usize;
        cells[i].0 += 1;
    }
    if impossible > 0 {
        cells.push((impossible, 0.0));
    }
    cells
}

/// Cumulative distribution function of `X^{*n}`.
pub fn theoretical_cdf(distribution: Distribution, n: u64) -> Box<dyn Fn(f64) -> f64 + Send + Sync> {
    let nf = n as f64;
    match distribution {
        Distribution::Gaussian => {
            let normal = Normal::new(0.0, nf.sqrt()).expect("positive variance");
            Box::new(move |x| normal.cdf(x))
        }
        Distribution::Cauchy => Box::new(move |x| 0.5 + (x / nf).atan() / PI),
        Distribution::RandomWalk => {
            let t = RwPmfTable::build(n);
            let x_min = t.table.x_min;
            let mut acc = 0.0;
            let cum: Vec<f64> = t
                .log_pmf
                .iter()
                .map(|l| {
                    acc += l.exp();
                    acc
                })
                .collect();
            Box::new(move |x| {
                if x < x_min as f64 {
                    return 0.0;
                }
                let i = ((x.floor() as i64 - x_min) / 2) as usize;
                cum[i.min(cum.len() - 1)]
            })
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `(mean - expected) / stderr`, with the stderr from the sample itself.
pub fn z_score(xs: &[f64], expected: f64) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    if se == 0.0 {
        return if m == expected { 0.0 } else { f64::INFINITY };
    }
    (m - expected) / se
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Rank correlation; defined for heavy tails.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}
