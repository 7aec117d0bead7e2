use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::ideal::IdealDst;
use super::stats::{
    chi_square, chi_square_critical, ks_critical, ks_statistic, pearson, spearman, theoretical_cdf, walk_cells,
    walk_pmf, z_score,
};
use super::{Report, MOMENT_Z};
use crate::distributions::{build_rw_tables, rw_conditional_pmf, Distribution, Kernel, RwTables};
use crate::dst::{Dst, DstConfig, DEFAULT_MAX_REJECT_ATTEMPTS};
use crate::error::{Error, Result};
use crate::hashing::HashFamily;
use crate::prefix::Prefix;

/// Goodness of fit of `samples` against `X^{*n}`: KS for the continuous laws,
/// chi-square against the exact pmf for the walk.
pub fn fit_report(
    test: &str,
    distribution: Distribution,
    n: u64,
    samples: &[f64],
    alpha: f64,
    mut params: serde_json::Value,
) -> Result<Report> {
    params["n"] = json!(n);
    params["samples"] = json!(samples.len());
    params["alpha"] = json!(alpha);
    match distribution {
        Distribution::RandomWalk => {
            let (stat, dof) = chi_square(&walk_cells(n, samples))?;
            params["method"] = json!("chi-square");
            params["dof"] = json!(dof);
            Ok(Report::new(test, params, stat, chi_square_critical(alpha, dof)))
        }
        d => {
            let stat = ks_statistic(samples, theoretical_cdf(d, n))?;
            params["method"] = json!("ks");
            Ok(Report::new(test, params, stat, ks_critical(alpha, samples.len())))
        }
    }
}

fn log2_exact(n: u64) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("{n} is not a power of two")));
    }
    Ok(n.trailing_zeros())
}

fn positive_probability(distribution: Distribution, n: u64) -> f64 {
    match distribution {
        Distribution::RandomWalk => {
            let ni = n as i64;
            (1..=ni).map(|x| walk_pmf(n, x)).sum()
        }
        _ => 0.5,
    }
}

/// Largest deviation of `P[S = z] f(x | z)` from `P[X = x] P[X = z - x]`
/// over the whole support, for width-`n` children.
pub fn rw_joint_enumeration(n: u64) -> Result<f64> {
    let j = log2_exact(n)?;
    let tables: RwTables = build_rw_tables(j + 1)?;
    let ni = n as i64;
    let mut worst = 0.0f64;
    for z in (-2 * ni..=2 * ni).step_by(2) {
        let pz = walk_pmf(2 * n, z);
        for x in (-ni..=ni).step_by(2) {
            let got = pz * rw_conditional_pmf(&tables, z, n, x);
            let want = walk_pmf(n, x) * walk_pmf(n, z - x);
            worst = worst.max((got - want).abs());
        }
    }
    Ok(worst)
}

/// Splits `trials` parents `z ~ X^{*2n}` and tests that the children are
/// i.i.d. `X^{*n}`. Marginal fits share `alpha` evenly.
pub fn check_split_theorem(
    distribution: Distribution,
    n: u64,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<Report>> {
    let ulog = log2_exact(n)? + 1;
    let kernel = Kernel::new(distribution, ulog)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut left = Vec::with_capacity(trials);
    let mut right = Vec::with_capacity(trials);
    for _ in 0..trials {
        let z = kernel.root(ulog, rng.next_u64())?;
        let (l, _) = kernel.split(z, n, DEFAULT_MAX_REJECT_ATTEMPTS, |_| Ok(rng.next_u64()))?;
        left.push(l);
        right.push(z - l);
    }
    let small_rw = distribution == Distribution::RandomWalk && n <= 4;
    let fits = if small_rw { 3 } else { 2 };
    let a = alpha / fits as f64;
    let params = json!({"distribution": distribution.name(), "seed": seed});
    let mut out = vec![
        fit_report("split-left-marginal", distribution, n, &left, a, params.clone())?,
        fit_report("split-right-marginal", distribution, n, &right, a, params.clone())?,
    ];
    let (rho, method) = match distribution {
        Distribution::Cauchy => (spearman(&left, &right), "spearman"),
        _ => (pearson(&left, &right), "pearson"),
    };
    let mut p = params.clone();
    p["n"] = json!(n);
    p["method"] = json!(method);
    out.push(Report::new("split-correlation", p, rho.abs(), 3.0 / (trials as f64).sqrt()));

    if small_rw {
        let mut p = params.clone();
        p["n"] = json!(n);
        out.push(Report::new("split-joint-exact", p, rw_joint_enumeration(n)?, 1e-12));

        let ni = n as i64;
        let side = (n + 1) as usize;
        let mut cells: Vec<(u64, f64)> = Vec::with_capacity(side * side);
        for x in (-ni..=ni).step_by(2) {
            for y in (-ni..=ni).step_by(2) {
                cells.push((0, walk_pmf(n, x) * walk_pmf(n, y)));
            }
        }
        for (&l, &r) in left.iter().zip(&right) {
            let (ix, iy) = (((l as i64 + ni) / 2) as usize, ((r as i64 + ni) / 2) as usize);
            cells[ix * side + iy].0 += 1;
        }
        let (stat, dof) = chi_square(&cells)?;
        let mut p = params;
        p["n"] = json!(n);
        p["dof"] = json!(dof);
        p["alpha"] = json!(a);
        out.push(Report::new("split-joint-empirical", p, stat, chi_square_critical(a, dof)));
    }
    Ok(out)
}

/// Samples `S[a, b)` over independent master seeds and fits `X^{*(b - a)}`.
#[allow(clippy::too_many_arguments)]
pub fn check_marginal_theorem(
    distribution: Distribution,
    hash_family: HashFamily,
    universe_log: u32,
    a: u64,
    b: u64,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<Report> {
    if a >= b {
        return Err(Error::InvalidRange { a, b, universe_log });
    }
    let base = Dst::new(DstConfig::new(universe_log, distribution, 0).with_hash(hash_family))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..trials)
        .map(|_| base.reseeded(rng.next_u64()).range_sum(a, b))
        .collect::<Result<Vec<f64>>>()?;
    let params = json!({
        "distribution": distribution.name(),
        "hash": hash_family.name(),
        "universe_log": universe_log,
        "a": a,
        "b": b,
        "seed": seed,
    });
    fit_report("marginal", distribution, b - a, &samples, alpha, params)
}

/// Product-moment checks on the values of `nodes` at one level, across
/// independent master seeds. Each check passes within `MOMENT_Z` standard
/// errors.
#[allow(clippy::too_many_arguments)]
pub fn check_kwise_theorem(
    distribution: Distribution,
    hash_family: HashFamily,
    universe_log: u32,
    level: u32,
    nodes: &[u64],
    trials: usize,
    seed: u64,
) -> Result<Vec<Report>> {
    for &i in nodes {
        Prefix::new(level, i, universe_log)?;
    }
    let base = Dst::new(DstConfig::new(universe_log, distribution, 0).with_hash(hash_family))?;
    let width = 1u64 << (universe_log - level);
    let k = nodes.len() as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signs = Vec::with_capacity(trials);
    let mut products = Vec::with_capacity(trials);
    let mut squares = Vec::with_capacity(trials);
    for _ in 0..trials {
        let t = base.reseeded(rng.next_u64());
        let vals = nodes
            .iter()
            .map(|&i| t.node_value(Prefix { level, index: i }))
            .collect::<Result<Vec<f64>>>()?;
        signs.push(if vals.iter().all(|&v| v > 0.0) { 1.0 } else { 0.0 });
        products.push(vals.iter().product::<f64>());
        squares.push(vals.iter().map(|v| v * v).product::<f64>());
    }
    let params = json!({
        "distribution": distribution.name(),
        "hash": hash_family.name(),
        "universe_log": universe_log,
        "level": level,
        "nodes": nodes,
        "trials": trials,
        "seed": seed,
    });
    let p_pos = positive_probability(distribution, width).powi(k);
    let mut out = vec![Report::new(
        "kwise-joint-sign",
        params.clone(),
        z_score(&signs, p_pos).abs(),
        MOMENT_Z,
    )];
    if distribution != Distribution::Cauchy {
        out.push(Report::new("kwise-product", params.clone(), z_score(&products, 0.0).abs(), MOMENT_Z));
        out.push(Report::new(
            "kwise-square-product",
            params,
            z_score(&squares, (width as f64).powi(k)).abs(),
            MOMENT_Z,
        ));
    }
    Ok(out)
}

enum Tree {
    Ideal(IdealDst),
    Hashed(Dst),
}

impl Tree {
    fn singleton(&self, i: u64) -> Result<f64> {
        match self {
            Tree::Ideal(t) => t.singleton(i),
            Tree::Hashed(t) => t.singleton(i),
        }
    }

    fn range_sum(&self, a: u64, b: u64) -> Result<f64> {
        match self {
            Tree::Ideal(t) => t.range_sum(a, b),
            Tree::Hashed(t) => t.range_sum(a, b),
        }
    }
}

/// Runs the same i.i.d. battery on the idealized tree and on a hashed tree
/// with the fast mixer. The six fits share `alpha` evenly.
pub fn check_ideal_equivalence(
    distribution: Distribution,
    universe_log: u32,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<Report>> {
    if !(2..=8).contains(&universe_log) {
        return Err(Error::InvalidConfig(format!(
            "equivalence battery runs on 4 <= U <= 256, got universe_log {universe_log}"
        )));
    }
    let u = 1u64 << universe_log;
    let a = alpha / 6.0;
    let ideal = IdealDst::new(distribution, universe_log, 0)?;
    let hashed = Dst::new(DstConfig::new(universe_log, distribution, 0))?;
    let mut out = Vec::new();
    for kind in ["ideal", "hashed"] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut x0, mut x1, mut xl, mut mid) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for _ in 0..trials {
            let s = rng.next_u64();
            let t = match kind {
                "ideal" => Tree::Ideal(ideal.reseeded(s)),
                _ => Tree::Hashed(hashed.reseeded(s)),
            };
            x0.push(t.singleton(0)?);
            x1.push(t.singleton(1)?);
            xl.push(t.singleton(u - 1)?);
            mid.push(t.range_sum(1, u - 1)?);
        }
        let params = json!({
            "tree": kind,
            "distribution": distribution.name(),
            "universe_log": universe_log,
            "trials": trials,
            "seed": seed,
        });
        let name = |t: &str| format!("{kind}-{t}");
        out.push(fit_report(&name("marginal-first"), distribution, 1, &x0, a, params.clone())?);
        out.push(fit_report(&name("marginal-last"), distribution, 1, &xl, a, params.clone())?);
        out.push(fit_report(&name("marginal-inner-range"), distribution, u - 2, &mid, a, params.clone())?);
        let both = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(y)
                .map(|(a, b)| if *a > 0.0 && *b > 0.0 { 1.0 } else { 0.0 })
                .collect()
        };
        out.push(Report::new(
            name("sign-adjacent"),
            params.clone(),
            z_score(&both(&x0, &x1), 0.25).abs(),
            MOMENT_Z,
        ));
        out.push(Report::new(
            name("sign-distant"),
            params.clone(),
            z_score(&both(&x0, &xl), 0.25).abs(),
            MOMENT_Z,
        ));
        if distribution != Distribution::Cauchy {
            let prod: Vec<f64> = x0.iter().zip(&x1).map(|(a, b)| a * b).collect();
            out.push(Report::new(name("product-adjacent"), params, z_score(&prod, 0.0).abs(), MOMENT_Z));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rw_unit_split_joint_is_uniform() {
        assert!(rw_joint_enumeration(1).unwrap() < 1e-15);
        assert!(rw_joint_enumeration(4).unwrap() < 1e-12);
    }

    #[test]
    fn split_reports_are_reproducible() {
        let a = check_split_theorem(Distribution::Gaussian, 8, 500, 0.01, 3).unwrap();
        let b = check_split_theorem(Distribution::Gaussian, 8, 500, 0.01, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn root_marginal_is_root_law() {
        let r = check_marginal_theorem(Distribution::Gaussian, HashFamily::FastMixer, 6, 0, 64, 2000, 0.01, 9).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn argument_checks() {
        assert!(check_split_theorem(Distribution::Gaussian, 3, 10, 0.01, 0).is_err());
        assert!(check_marginal_theorem(Distribution::Gaussian, HashFamily::FastMixer, 4, 5, 5, 10, 0.01, 0).is_err());
        assert!(check_kwise_theorem(Distribution::Gaussian, HashFamily::FastMixer, 4, 1, &[0, 2], 10, 0).is_err());
        assert!(check_ideal_equivalence(Distribution::Gaussian, 9, 10, 0.01, 0).is_err());
    }
}
