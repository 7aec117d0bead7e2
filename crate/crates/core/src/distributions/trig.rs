//! `sin` and `cos` of `2 pi v`. Multiples of a quarter turn are removed
//! exactly before the fdlibm kernel polynomials run on `[-pi/4, pi/4]`, which
//! keeps the result within an ulp of the libm value at a fraction of the cost.

use std::f64::consts::FRAC_PI_2;

const S1: f64 = -1.666_666_666_666_663_243_48e-01;
const S2: f64 = 8.333_333_333_322_489_461_24e-03;
const S3: f64 = -1.984_126_982_985_794_931_34e-04;
const S4: f64 = 2.755_731_370_707_006_767_89e-06;
const S5: f64 = -2.505_076_025_340_686_341_95e-08;
const S6: f64 = 1.589_690_995_211_550_102_21e-10;

const C1: f64 = 4.166_666_666_666_660_190_37e-02;
const C2: f64 = -1.388_888_888_887_410_957_49e-03;
const C3: f64 = 2.480_158_728_947_672_941_78e-05;
const C4: f64 = -2.755_731_435_139_066_330_35e-07;
const C5: f64 = 2.087_572_321_298_174_827_90e-09;
const C6: f64 = -1.135_964_755_778_819_482_65e-11;

#[inline(always)]
fn kernel_sin(x: f64) -> f64 {
    let z = x * x;
    let w = z * z;
    let r = S2 + z * (S3 + z * S4) + z * w * (S5 + z * S6);
    x + z * x * (S1 + z * r)
}

#[inline(always)]
fn kernel_cos(x: f64) -> f64 {
    let z = x * x;
    let w = z * z;
    let r = z * (C1 + z * (C2 + z * C3)) + w * w * (C4 + z * (C5 + z * C6));
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    w + (((1.0 - w) - hz) + z * r)
}

/// `(sin 2 pi v, cos 2 pi v)` for `|v| < 2^50`.
#[inline(always)]
pub fn sin_cos_2pi(v: f64) -> (f64, f64) {
    // Adding and removing 1.5 * 2^52 rounds to the nearest integer without a
    // libm call.
    const ROUNDER: f64 = 6_755_399_441_055_744.0;
    let t = 4.0 * v;
    let q = (t + ROUNDER) - ROUNDER;
    let x = (t - q) * FRAC_PI_2;
    let (s, c) = (kernel_sin(x).to_bits(), kernel_cos(x).to_bits());
    // Rotate by q quarter turns without branching: odd q swaps the pair, and
    // the sign bits follow the quadrant.
    let q = q as i64 as u64;
    let swap = 0u64.wrapping_sub(q & 1);
    let sin_bits = (s & !swap) | (c & swap);
    let cos_bits = (c & !swap) | (s & swap);
    let sin_sign = (q & 2) << 62;
    let cos_sign = (q.wrapping_add(1) & 2) << 62;
    (f64::from_bits(sin_bits ^ sin_sign), f64::from_bits(cos_bits ^ cos_sign))
}

#[inline(always)]
pub fn cos_2pi(v: f64) -> f64 {
    sin_cos_2pi(v).1
}

/// `tan(pi v)` for `|v| < 1/2`.
#[inline(always)]
pub fn tan_pi(v: f64) -> f64 {
    let (s, c) = sin_cos_2pi(0.5 * v);
    s / c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ulps(a: f64, b: f64) -> f64 {
        (a - b).abs() / (f64::EPSILON * b.abs().max(f64::MIN_POSITIVE))
    }

    #[test]
    fn agrees_with_libm() {
        let mut worst = 0.0f64;
        for i in 0..200_000u64 {
            let v = i as f64 / 200_000.0 + 1.37e-7;
            let (s, c) = sin_cos_2pi(v);
            let a = 2.0 * PI * v;
            worst = worst.max((s - a.sin()).abs()).max((c - a.cos()).abs());
        }
        assert!(worst < 1e-15, "{worst}");
    }

    #[test]
    fn exact_quarter_turns() {
        assert_eq!(sin_cos_2pi(0.0), (0.0, 1.0));
        assert_eq!(sin_cos_2pi(0.25), (1.0, -0.0));
        assert_eq!(sin_cos_2pi(0.5), (-0.0, -1.0));
        assert_eq!(sin_cos_2pi(0.75), (-1.0, 0.0));
        assert_eq!(sin_cos_2pi(-0.25).0, -1.0);
    }

    #[test]
    fn tangent_is_relatively_accurate_near_poles() {
        for v in [1e-9, 0.1, 0.25, 0.4, 0.49, 0.5 - 1e-6, 0.5 - 2f64.powi(-31)] {
            for sgn in [1.0, -1.0] {
                let got = tan_pi(sgn * v);
                // tan(pi v) = cot(pi (1/2 - v)), with 1/2 - v exact here.
                let want = sgn / (PI * (0.5 - v)).tan();
                let want = if v < 0.3 { sgn * (PI * v).tan() } else { want };
                assert!(ulps(got, want) < 8.0, "v={v} got={got} want={want}");
            }
        }
    }
}
