//! Fixed-point big-integer evaluation of the twirled idle channel.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const F: u32 = 320;

fn one() -> BigInt {
    BigInt::one() << F
}

fn fix(x: &BigRational) -> BigInt {
    (x.numer() << F) / x.denom()
}

fn to_f64(x: &BigInt) -> f64 {
    BigRational::new(x.clone(), one()).to_f64().unwrap()
}

/// e^{-y} for y >= 0 in fixed point.
fn exp_neg(y: &BigInt) -> BigInt {
    let k = (y >> F).bits() as u32 + 24;
    let r = y >> k;
    let mut term = one();
    let mut sum = one();
    for n in 1..80u32 {
        term = -(&term * &r >> F) / BigInt::from(n);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum >> F;
    }
    sum
}

fn ratio(a: f64, b: f64) -> BigRational {
    BigRational::from_float(a).unwrap() / BigRational::from_float(b).unwrap()
}

/// (p_x, p_y, p_z) from the unsimplified closed forms
/// p_x = p_y = (1 - e^{-t/T1})/4, p_z = (1 - e^{-t/T2})/2 - (1 - e^{-t/T1})/4.
pub fn pta_reference(t: f64, t1: f64, t2: f64) -> (f64, f64, f64) {
    let a = one() - exp_neg(&fix(&ratio(t, t1)));
    let b = one() - exp_neg(&fix(&ratio(t, t2)));
    let pxy = &a >> 2u32;
    let pz = (&b >> 1u32) - &pxy;
    (to_f64(&pxy), to_f64(&pxy), to_f64(&pz))
}
