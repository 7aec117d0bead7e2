use dyasim::lsh::{bucket, collision_probability};
use dyasim::verify::{ks_critical, ks_statistic};
use dyasim::{collision_curve, GrwLshFunction};
use statrs::distribution::{ContinuousCDF, Normal};

/// `Pr[g(s) = g(q)]` for a `N(0, d)` raw-hash gap and `B` uniform on
/// `[0, W)`: `2 * int_0^W (1 - x/W) phi_d(x) dx`, by composite Simpson.
fn collision_quadrature(w: f64, d: f64) -> f64 {
    let sigma = d.sqrt();
    let pdf = |x: f64| (-(x * x) / (2.0 * d)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let f = |x: f64| (1.0 - x / w) * pdf(x);
    let n = 20_000;
    let h = w / n as f64;
    let mut s = f(0.0) + f(w);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

// W = 122, evaluated with 30-digit quadrature.
const COLLISION_W122: [(u64, f64); 6] = [
    (10, 0.979318585885080655),
    (100, 0.934599626163699561),
    (1000, 0.793192746472195849),
    (1022, 0.790931606284155424),
    (10000, 0.434257875416146435),
    (20000, 0.324300905359701081),
];

#[test]
fn closed_form_matches_quadrature() {
    for (d, want) in COLLISION_W122 {
        let q = collision_quadrature(122.0, d as f64);
        assert!((q - want).abs() < 1e-10, "{d}: {q}");
        assert!((collision_probability(122.0, d as f64) - want).abs() < 1e-10, "{d}");
    }
    assert_eq!(collision_probability(122.0, 0.0), 1.0);
}

#[test]
fn raw_hash_basics() {
    let h = GrwLshFunction::new(3, 16, 122.0, 7).unwrap();
    assert_eq!(h.raw_hash(&[0, 0, 0]).unwrap(), 0.0);
    assert!(h.offset() >= 0.0 && h.offset() < 122.0);
    assert!(h.raw_hash(&[0, 0]).is_err());
    assert!(h.raw_hash(&[0, 1 << 17, 0]).is_err());
    assert_eq!(h.raw_hash(&[0, 1 << 16, 0]).unwrap(), h.dsts()[1].range_sum(0, 1 << 16).unwrap());

    let p = [4000, 17, 65000];
    assert_eq!(h.raw_hash(&p).unwrap().to_bits(), h.raw_hash(&p).unwrap().to_bits());
    assert_eq!(h.lsh_value(&p).unwrap(), h.lsh_value(&p).unwrap());
    assert_eq!(
        h.lsh_value(&p).unwrap(),
        bucket(h.raw_hash(&p).unwrap(), h.offset(), h.width())
    );
}

#[test]
fn one_dimensional_differences_telescope() {
    let h = GrwLshFunction::new(1, 20, 122.0, 99).unwrap();
    for (a, b) in [(10u64, 3u64), (600_000, 12), (1 << 20, 5), (77, 77)] {
        let diff = h.raw_hash(&[a]).unwrap() - h.raw_hash(&[b]).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let sign = if a >= b { 1.0 } else { -1.0 };
        let want = sign * h.dsts()[0].range_sum(lo, hi).unwrap();
        let scale = h.raw_hash(&[a]).unwrap().abs() + h.raw_hash(&[b]).unwrap().abs() + 1.0;
        assert!((diff - want).abs() <= 1e-9 * scale, "{a} {b}");
    }
}

#[test]
fn bucket_floors_toward_negative_infinity() {
    assert_eq!(bucket(10.0, 5.0, 122.0), 0);
    assert_eq!(bucket(-130.0, 5.0, 122.0), -2);
    for (x, y) in [(10.0, 50.0), (-3.0, 100.0), (240.5, 240.0)] {
        let same = bucket(x, 5.0, 122.0) == bucket(y, 5.0, 122.0);
        for k in [-3.0, 1.0, 4.0] {
            let shift = k * 122.0;
            assert_eq!(bucket(x + shift, 5.0, 122.0) == bucket(y + shift, 5.0, 122.0), same);
        }
    }
}

#[test]
fn difference_is_gaussian_with_l1_variance() {
    let s = [689_808u64, 10, 500];
    let q = [690_830u64, 10, 500];
    let d1 = 1022.0;
    let diffs: Vec<f64> = (0..10_000u64)
        .map(|seed| {
            let h = GrwLshFunction::new(3, 20, 122.0, seed).unwrap();
            h.raw_hash(&s).unwrap() - h.raw_hash(&q).unwrap()
        })
        .collect();
    let n = Normal::new(0.0, f64::sqrt(d1)).unwrap();
    let d = ks_statistic(&diffs, |x| n.cdf(x)).unwrap();
    assert!(d <= ks_critical(0.01, diffs.len()), "{d}");
}

#[test]
fn collision_curve_tracks_the_oracle() {
    let distances: Vec<u64> = COLLISION_W122.iter().map(|p| p.0).collect();
    let mut all = vec![0];
    all.extend(&distances);
    let curve = collision_curve(20, 122.0, &all, 20_000, 4).unwrap();
    assert_eq!(curve[0].probability, 1.0);
    for (pt, (d, want)) in curve[1..].iter().zip(COLLISION_W122) {
        assert_eq!(pt.distance, d);
        let se = (want * (1.0 - want) / 20_000.0).sqrt();
        assert!((pt.probability - want).abs() <= 4.0 * se, "{d}: {} vs {want}", pt.probability);
    }
    for w in curve.windows(2) {
        assert!(w[1].probability <= w[0].probability + 3.0 * (w[0].stderr + w[1].stderr));
    }
    assert!(collision_curve(20, 122.0, &[5], 0, 1).is_err());
}

#[test]
fn construction_rejects_bad_parameters() {
    assert!(GrwLshFunction::new(0, 10, 122.0, 1).is_err());
    assert!(GrwLshFunction::new(1, 10, 0.0, 1).is_err());
    assert!(GrwLshFunction::new(1, 10, f64::NAN, 1).is_err());
}
