//! Exact rational numbers and extended (valuation) rationals.
//!
//! All norms in this crate are powers of p recorded through their exponent,
//! so the basic scalar is an exact rational valuation. `Val` adjoins the
//! distinguished value `+inf` (valuation of zero).

use num_traits::{Signed, Zero};
use std::fmt;

pub type Rat = num_rational::Ratio<i64>;

/// Extended rational: a finite valuation or +infinity.
///
/// `Infinite` compares greater than every finite value, which is what the
/// derived `Ord` produces from the variant order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    Finite(Rat),
    Infinite,
}

impl Val {
    pub fn zero() -> Self {
        Val::Finite(Rat::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Val::Finite(Rat::from_integer(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Val::Finite(_))
    }

    pub fn finite(&self) -> Option<Rat> {
        match self {
            Val::Finite(r) => Some(*r),
            Val::Infinite => None,
        }
    }

    /// Valuation of a product: sum, absorbing to infinity.
    pub fn add(self, other: Val) -> Val {
        match (self, other) {
            (Val::Finite(a), Val::Finite(b)) => Val::Finite(a + b),
            _ => Val::Infinite,
        }
    }

    pub fn min(self, other: Val) -> Val {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn scale(self, c: Rat) -> Val {
        match self {
            Val::Finite(a) => Val::Finite(a * c),
            Val::Infinite => Val::Infinite,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Finite(r) => write!(f, "{}", format_rat(*r)),
            Val::Infinite => write!(f, "inf"),
        }
    }
}

/// Renders a rational as "a" or "a/b" (the external string form).
pub fn format_rat(r: Rat) -> String {
    if r.denom() == &1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses "a" or "a/b".
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<i64>().ok().map(Rat::from_integer),
        Some((a, b)) => {
            let num = a.trim().parse::<i64>().ok()?;
            let den = b.trim().parse::<i64>().ok()?;
            if den == 0 {
                None
            } else {
                Some(Rat::new(num, den))
            }
        }
    }
}

/// p-adic valuation of a nonzero integer.
pub fn vp_int(p: u64, n: i64) -> u32 {
    assert!(n != 0, "vp of zero");
    let mut n = n.unsigned_abs();
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// p-adic valuation of a nonzero rational.
pub fn vp_rat(p: u64, r: Rat) -> i64 {
    assert!(!r.is_zero());
    vp_int(p, *r.numer()) as i64 - vp_int(p, *r.denom()) as i64
}

/// p^k as a rational, for k of either sign.
pub fn p_pow(p: u64, k: i64) -> Rat {
    let mut n: i64 = 1;
    for _ in 0..k.unsigned_abs() {
        n = n.checked_mul(p as i64).expect("p-power overflow");
    }
    if k >= 0 {
        Rat::from_integer(n)
    } else {
        Rat::new(1, n)
    }
}

/// Fractional part in [0, 1).
pub fn frac_part(r: Rat) -> Rat {
    let fl = r.floor();
    r - fl
}

/// Integer floor of a rational.
pub fn floor_int(r: Rat) -> i64 {
    r.floor().to_integer()
}

/// True if the denominator of `r` divides p^m.
pub fn denom_divides_ppow(p: u64, m: u32, r: Rat) -> bool {
    let mut d = *r.denom() as u64;
    for _ in 0..m {
        if d == 1 {
            return true;
        }
        if d % p == 0 {
            d /= p;
        }
    }
    d == 1
}

/// Exponent l of the exact denominator p^l of `r` (None if not a p-power denominator).
pub fn denom_ppow_exp(p: u64, r: Rat) -> Option<u32> {
    let mut d = *r.denom() as u64;
    let mut l = 0;
    while d % p == 0 {
        d /= p;
        l += 1;
    }
    if d == 1 {
        Some(l)
    } else {
        None
    }
}

/// |r| as a rational.
pub fn abs_rat(r: Rat) -> Rat {
    r.abs()
}
