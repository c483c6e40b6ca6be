//! Small helpers for moving between big integers, exact rationals and floats.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Exact rational `num / den` from unsigned big integers.
pub fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// The exact binary value of a finite float as a rational.
///
/// Non-finite input maps to zero; callers validate ranges first.
pub fn from_f64(t: f64) -> BigRational {
    BigRational::from_float(t).unwrap_or_else(BigRational::zero)
}

/// Nearest float to an exact rational.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders a rational as `num/den`, or just `num` for integers.
pub fn display(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1u8) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Binomial coefficient C(n, k) as a big integer; zero when k > n.
pub fn binomial_coefficient(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u8);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Row `C(n, 0), ..., C(n, n)` of Pascal's triangle.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::from(1u8);
    row.push(c.clone());
    for x in 0..n {
        c = c * (n - x) / (x + 1);
        row.push(c.clone());
    }
    row
}
