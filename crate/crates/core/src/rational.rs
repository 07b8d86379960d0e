use alloc::format;
use alloc::string::String;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// `p/q` in lowest terms, denominator always printed.
pub fn to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (
            p.trim().parse::<BigInt>().ok()?,
            q.trim().parse::<BigInt>().ok()?,
        ),
        None => (s.parse::<BigInt>().ok()?, BigInt::from(1)),
    };
    if q.is_zero() {
        return None;
    }
    Some(Rational::new(p, q))
}

/// `floor(r)` clamped into `usize`; negative values give 0.
pub fn floor_usize(r: &Rational) -> usize {
    let f = r.floor().to_integer();
    if f < BigInt::zero() {
        0
    } else {
        f.to_usize().unwrap_or(usize::MAX)
    }
}
