use dyasim::verify::{
    check_ideal_equivalence, check_kwise_theorem, check_marginal_theorem, check_split_theorem, ks_critical,
    ks_statistic, run_with_retry, rw_joint_enumeration, theoretical_cdf, IdealDst, Report, DEFAULT_ALPHA,
};
use dyasim::{Distribution, Dst, DstConfig, Error, HashFamily};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn failures(reports: &[Report]) -> Vec<String> {
    reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {} > {}", r.test, r.statistic, r.critical))
        .collect()
}

#[test]
fn ks_statistic_examples() {
    let n = Normal::new(0.0, 1.0).unwrap();
    assert_eq!(ks_statistic(&[0.0; 10], |x| n.cdf(x)).unwrap(), 0.5);
    let single = ks_statistic(&[n.inverse_cdf(0.3)], |x| n.cdf(x)).unwrap();
    assert!((single - 0.7).abs() < 1e-12);
    assert!(matches!(ks_statistic(&[], |x| x), Err(Error::EmptySample)));

    let crit = ks_critical(0.01, 10_000);
    assert!((crit - 0.016276).abs() < 1e-6, "{crit}");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..10_000)
        .map(|_| n.inverse_cdf((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 + 1e-17))
        .collect();
    assert!(ks_statistic(&xs, |x| n.cdf(x)).unwrap() < crit);
}

#[test]
fn theoretical_cdf_examples() {
    assert_eq!(theoretical_cdf(Distribution::Gaussian, 1)(0.0), 0.5);
    assert!((theoretical_cdf(Distribution::Cauchy, 2)(2.0) - 0.75).abs() < 1e-15);
    assert!((theoretical_cdf(Distribution::RandomWalk, 2)(0.0) - 0.75).abs() < 1e-15);
    assert!((theoretical_cdf(Distribution::RandomWalk, 2)(-2.0) - 0.25).abs() < 1e-15);
    assert_eq!(theoretical_cdf(Distribution::RandomWalk, 2)(2.0), 1.0);
}

#[test]
fn split_theorem_examples() {
    // Two-step parent: the children are independent fair steps.
    assert!(rw_joint_enumeration(1).unwrap() < 1e-15);
    assert!(rw_joint_enumeration(4).unwrap() < 1e-12);
    let rw = run_with_retry(5, |s| check_split_theorem(Distribution::RandomWalk, 1, 10_000, DEFAULT_ALPHA, s)).unwrap();
    assert!(rw.pass, "{:?}", rw.failed);
    assert!(rw.first.iter().any(|r| r.test == "split-joint-empirical"));

    let g = run_with_retry(6, |s| check_split_theorem(Distribution::Gaussian, 8, 10_000, DEFAULT_ALPHA, s)).unwrap();
    assert!(g.pass, "{:?}", g.failed);
    let corr = g.first.iter().find(|r| r.test == "split-correlation").unwrap();
    assert!((corr.critical - 0.03).abs() < 1e-12);

    let c = run_with_retry(7, |s| check_split_theorem(Distribution::Cauchy, 4, 10_000, DEFAULT_ALPHA, s)).unwrap();
    assert!(c.pass, "{:?}", c.failed);
}

#[test]
fn split_checks_are_reproducible() {
    let a = check_split_theorem(Distribution::Cauchy, 16, 2000, DEFAULT_ALPHA, 42).unwrap();
    let b = check_split_theorem(Distribution::Cauchy, 16, 2000, DEFAULT_ALPHA, 42).unwrap();
    let stats = |v: &[Report]| v.iter().map(|r| r.statistic.to_bits()).collect::<Vec<_>>();
    assert_eq!(stats(&a), stats(&b));
    let c = check_split_theorem(Distribution::Cauchy, 16, 2000, DEFAULT_ALPHA, 43).unwrap();
    assert_ne!(stats(&a), stats(&c));
}

#[test]
fn marginal_theorem_examples() {
    let root = Dst::new(DstConfig::new(4, Distribution::RandomWalk, 1)).unwrap();
    assert_eq!(root.range_sum(0, 16).unwrap(), root.root_value().unwrap());

    let rw = run_with_retry(3, |s| {
        check_marginal_theorem(Distribution::RandomWalk, HashFamily::PolyKWise(2), 4, 3, 9, 100_000, DEFAULT_ALPHA, s)
            .map(|r| vec![r])
    })
    .unwrap();
    assert!(rw.pass, "{:?}", rw.first);

    let g = run_with_retry(4, |s| {
        check_marginal_theorem(
            Distribution::Gaussian,
            HashFamily::PolyKWise(2),
            20,
            623_390,
            623_490,
            10_000,
            DEFAULT_ALPHA,
            s,
        )
        .map(|r| vec![r])
    })
    .unwrap();
    assert!(g.pass, "{:?}", g.first);

    let c = run_with_retry(5, |s| {
        check_marginal_theorem(Distribution::Cauchy, HashFamily::PolyKWise(2), 10, 0, 1024, 10_000, DEFAULT_ALPHA, s)
            .map(|r| vec![r])
    })
    .unwrap();
    assert!(c.pass, "{:?}", c.first);
    assert!(check_marginal_theorem(Distribution::Cauchy, HashFamily::FastMixer, 4, 5, 5, 10, 0.01, 1).is_err());
}

#[test]
fn kwise_theorem_examples() {
    let g = run_with_retry(8, |s| {
        check_kwise_theorem(Distribution::Gaussian, HashFamily::PolyKWise(2), 6, 1, &[0, 1], 20_000, s)
    })
    .unwrap();
    assert!(g.pass, "{:?}", failures(&g.first));

    // Two leaves both +1 with probability 1/4.
    let rw = run_with_retry(9, |s| {
        check_kwise_theorem(Distribution::RandomWalk, HashFamily::PolyKWise(2), 5, 5, &[3, 20], 20_000, s)
    })
    .unwrap();
    assert!(rw.pass, "{:?}", failures(&rw.first));

    let four = run_with_retry(10, |s| {
        check_kwise_theorem(Distribution::Gaussian, HashFamily::PolyKWise(4), 6, 3, &[0, 2, 5, 7], 20_000, s)
    })
    .unwrap();
    assert!(four.pass, "{:?}", failures(&four.first));
    assert!(check_kwise_theorem(Distribution::Gaussian, HashFamily::FastMixer, 4, 2, &[4], 10, 1).is_err());
}

#[test]
fn ideal_and_hashed_trees_pass_the_same_battery() {
    for (i, d) in Distribution::ALL.into_iter().enumerate() {
        let out = run_with_retry(20 + i as u64, |s| check_ideal_equivalence(d, 6, 10_000, DEFAULT_ALPHA, s)).unwrap();
        assert!(out.pass, "{d}: {:?}", out.failed);
        assert!(out.first.iter().any(|r| r.test.starts_with("ideal-")));
        assert!(out.first.iter().any(|r| r.test.starts_with("hashed-")));
    }
    assert!(check_ideal_equivalence(Distribution::Gaussian, 9, 10, 0.01, 1).is_err());
}

#[test]
fn ideal_tree_is_consistent() {
    for d in Distribution::ALL {
        let t = IdealDst::new(d, 7, 3).unwrap();
        let first: Vec<f64> = (0..128).map(|i| t.singleton(i).unwrap()).collect();
        let stored = t.stored_seeds();
        let ranges = [(5u64, 90u64), (0, 128), (64, 65), (17, 33)];
        let sums: Vec<f64> = ranges.iter().map(|&(a, b)| t.range_sum(a, b).unwrap()).collect();
        let again: Vec<f64> = (0..128).rev().map(|i| t.singleton(i).unwrap()).collect();
        assert_eq!(first.iter().rev().copied().collect::<Vec<_>>(), again);
        for (&(a, b), s) in ranges.iter().zip(&sums) {
            assert_eq!(t.range_sum(a, b).unwrap(), *s);
            if d == Distribution::RandomWalk {
                assert_eq!(*s, first[a as usize..b as usize].iter().sum::<f64>());
            }
        }
        assert_eq!(t.stored_seeds(), stored);
    }
}

#[test]
fn report_json_has_the_contract_fields() {
    let r = check_marginal_theorem(Distribution::Gaussian, HashFamily::FastMixer, 8, 1, 9, 500, 0.01, 1).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in ["test", "params", "statistic", "critical", "pass"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["params"]["a"], 1);
}
