//! Binomial intervals and logical-error-rate conversions.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k_zero, k_all) = (k == 0, k == n);
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds at k = 0 and k = n are exact, not rounded
    let lo = if k_zero { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k_all { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Per-round rate `ε = (1 - (1 - 2P)^{1/t}) / 2`. The flag is set when
/// `P > 1/2`, in which case `ε` saturates at 1/2.
pub fn per_round_ler(p: f64, t: usize) -> (f64, bool) {
    assert!(t >= 1, "round count must be positive");
    if p > 0.5 {
        return (0.5, true);
    }
    if t == 1 {
        return (p, false);
    }
    let e = -(((1.0 - 2.0 * p).ln() / t as f64).exp_m1()) / 2.0;
    (if p == 0.5 { 0.5 } else { e }, false)
}

/// Total failure probability after `t` rounds at per-round rate `e`.
pub fn total_from_per_round(e: f64, t: usize) -> f64 {
    (1.0 - (1.0 - 2.0 * e).powi(t as i32)) / 2.0
}

/// A ratio of two rates with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Standard error of `ln ε` for a per-round rate estimated from `k` of `n`.
fn log_se(k: u64, n: u64, t: usize) -> f64 {
    let nf = n as f64;
    let p = k as f64 / nf;
    let (e, _) = per_round_ler(p, t);
    let sd_p = (p * (1.0 - p) / nf).sqrt();
    // dε/dP
    let slope = (1.0 - 2.0 * p).powf(1.0 / t as f64 - 1.0) / t as f64;
    slope * sd_p / e
}

/// Ratio of per-round rates `k1/n1` over `k2/n2`, both over `t` rounds, with
/// the interval from independent binomial errors propagated on the log scale.
/// `None` when the denominator rate is zero.
pub fn ratio_of_rates(k1: u64, n1: u64, k2: u64, n2: u64, t: usize) -> Option<Ratio> {
    if k2 == 0 || n1 == 0 || n2 == 0 {
        return None;
    }
    let (e1, _) = per_round_ler(k1 as f64 / n1 as f64, t);
    let (e2, _) = per_round_ler(k2 as f64 / n2 as f64, t);
    let ratio = e1 / e2;
    if k1 == 0 {
        // upper end from the Wilson bound of the numerator
        let (_, hi1) = wilson_interval(0, n1, Z95);
        return Some(Ratio { ratio: 0.0, lo: 0.0, hi: per_round_ler(hi1, t).0 / e2 });
    }
    let se = (log_se(k1, n1, t).powi(2) + log_se(k2, n2, t).powi(2)).sqrt();
    Some(Ratio { ratio, lo: ratio * (-Z95 * se).exp(), hi: ratio * (Z95 * se).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_round_fixed_points() {
        assert_eq!(per_round_ler(0.0, 7), (0.0, false));
        assert_eq!(per_round_ler(0.5, 4), (0.5, false));
        assert_eq!(per_round_ler(0.2, 1), (0.2, false));
        assert_eq!(per_round_ler(0.7, 3), (0.5, true));
    }

    #[test]
    fn per_round_round_trip() {
        let p = (1.0 - (1.0f64 - 0.2).powi(2)) / 2.0;
        assert!((p - 0.18).abs() < 1e-15);
        assert!((per_round_ler(p, 2).0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn wilson_reference_values() {
        // 10 of 100: centre (0.1 + z²/200)/(1 + z²/100)
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.055_229_137_060_675_09).abs() < 1e-12, "{}", lo);
        assert!((hi - 0.174_365_661_504_913_45).abs() < 1e-12, "{}", hi);
        let (lo, hi) = wilson_interval(0, 50, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.08);
    }

    #[test]
    fn equal_rates_ratio_one() {
        let r = ratio_of_rates(40, 1000, 40, 1000, 3).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-15);
        assert!(r.lo < 1.0 && r.hi > 1.0);
        assert!(ratio_of_rates(4, 1000, 0, 1000, 3).is_none());
    }
}
