//! The imperfect series carrier Q_p[pi][T^±] truncated at a pi-degree bound,
//! and the Lie-algebra derivation d(gamma) computed two ways: by the
//! truncated log series and by the closed-form differential operators.
//!
//! Coefficients are exact rationals; their p-adic data (valuation, unit) is
//! derived on demand. d(gamma) only exists on this imperfect carrier:
//! the perfect characteristic-p elements intentionally have no such
//! operation.

use crate::error::{Error, Result};
use crate::gamma::GammaElem;
use crate::rat::Val;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Exponent of a series monomial pi^pi_deg * T^toric.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesExp {
    pub pi_deg: u32,
    pub toric: Vec<i64>,
}

/// A p-adic coefficient viewed as (valuation, unit mod p^prec); the external
/// presentation of the exact rationals stored internally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicCoeff {
    pub valuation: i64,
    pub unit: u64,
}

/// Truncated element of Q_p[pi][T1^±, ..., Tr^±] modulo pi^(degree_bound+1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesElem {
    pub p: u64,
    pub degree_bound: u32,
    pub rank: usize,
    terms: BTreeMap<SeriesExp, BigRational>,
}

fn vp_bigint(p: u64, n: &BigInt) -> i64 {
    assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    v
}

pub fn vp_bigrat(p: u64, r: &BigRational) -> i64 {
    vp_bigint(p, r.numer()) - vp_bigint(p, r.denom())
}

impl SeriesElem {
    pub fn zero(p: u64, degree_bound: u32, rank: usize) -> Self {
        SeriesElem {
            p,
            degree_bound,
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(p: u64, degree_bound: u32, rank: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (SeriesExp, BigRational)>,
    {
        let mut out = SeriesElem::zero(p, degree_bound, rank);
        for (e, c) in terms {
            out.accumulate(e, c);
        }
        out
    }

    fn accumulate(&mut self, e: SeriesExp, c: BigRational) {
        if c.is_zero() || e.pi_deg > self.degree_bound {
            return;
        }
        let entry = self
            .terms
            .entry(e)
            .or_insert_with(BigRational::zero);
        *entry += c;
        // drop exact zeros
        let dead: Vec<SeriesExp> = self
            .terms
            .iter()
            .filter(|(_, v)| v.is_zero())
            .map(|(k, _)| k.clone())
            .collect();
        for k in dead {
            self.terms.remove(&k);
        }
    }

    pub fn one(p: u64, degree_bound: u32, rank: usize) -> Self {
        SeriesElem::from_terms(
            p,
            degree_bound,
            rank,
            [(
                SeriesExp {
                    pi_deg: 0,
                    toric: vec![0; rank],
                },
                BigRational::one(),
            )],
        )
    }

    pub fn pi(p: u64, degree_bound: u32, rank: usize) -> Self {
        SeriesElem::from_terms(
            p,
            degree_bound,
            rank,
            [(
                SeriesExp {
                    pi_deg: 1,
                    toric: vec![0; rank],
                },
                BigRational::one(),
            )],
        )
    }

    pub fn toric(p: u64, degree_bound: u32, rank: usize, i: usize, e: i64) -> Self {
        let mut toric = vec![0i64; rank];
        toric[i] = e;
        SeriesElem::from_terms(
            p,
            degree_bound,
            rank,
            [(SeriesExp { pi_deg: 0, toric }, BigRational::one())],
        )
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SeriesExp, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn compatible(&self, other: &SeriesElem) -> Result<()> {
        if self.p != other.p || self.degree_bound != other.degree_bound || self.rank != other.rank
        {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &SeriesElem) -> Result<SeriesElem> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.accumulate(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> SeriesElem {
        SeriesElem {
            p: self.p,
            degree_bound: self.degree_bound,
            rank: self.rank,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &SeriesElem) -> Result<SeriesElem> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &SeriesElem) -> Result<SeriesElem> {
        self.compatible(other)?;
        let mut out = SeriesElem::zero(self.p, self.degree_bound, self.rank);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                if e1.pi_deg + e2.pi_deg > self.degree_bound {
                    continue;
                }
                let toric: Vec<i64> =
                    e1.toric.iter().zip(&e2.toric).map(|(a, b)| a + b).collect();
                out.accumulate(
                    SeriesExp {
                        pi_deg: e1.pi_deg + e2.pi_deg,
                        toric,
                    },
                    c1 * c2,
                );
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> SeriesElem {
        if c.is_zero() {
            return SeriesElem::zero(self.p, self.degree_bound, self.rank);
        }
        SeriesElem {
            p: self.p,
            degree_bound: self.degree_bound,
            rank: self.rank,
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Result<SeriesElem> {
        let mut acc = SeriesElem::one(self.p, self.degree_bound, self.rank);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Formal partial derivative in pi.
    pub fn d_pi(&self) -> SeriesElem {
        let mut out = SeriesElem::zero(self.p, self.degree_bound, self.rank);
        for (e, c) in &self.terms {
            if e.pi_deg > 0 {
                out.accumulate(
                    SeriesExp {
                        pi_deg: e.pi_deg - 1,
                        toric: e.toric.clone(),
                    },
                    c * BigRational::from_integer(BigInt::from(e.pi_deg)),
                );
            }
        }
        out
    }

    /// Formal T_i d/dT_i (logarithmic derivative times T_i).
    pub fn t_d_t(&self, i: usize) -> SeriesElem {
        let mut out = SeriesElem::zero(self.p, self.degree_bound, self.rank);
        for (e, c) in &self.terms {
            if e.toric[i] != 0 {
                out.accumulate(
                    e.clone(),
                    c * BigRational::from_integer(BigInt::from(e.toric[i])),
                );
            }
        }
        out
    }

    /// Minimum p-valuation over the coefficients.
    pub fn min_p_valuation(&self) -> Val {
        self.terms
            .values()
            .map(|c| Val::from_int(vp_bigrat(self.p, c)))
            .fold(Val::Infinite, Val::min)
    }

    /// External coefficient view: (valuation, unit mod p^prec).
    pub fn coeff_view(&self, e: &SeriesExp, prec: u32) -> Option<PadicCoeff> {
        let c = self.terms.get(e)?;
        let v = vp_bigrat(self.p, c);
        let pb = BigRational::from_integer(BigInt::from(self.p));
        let mut unit = c.clone();
        let scale = if v >= 0 {
            (0..v).fold(BigRational::one(), |a, _| a * &pb)
        } else {
            (0..-v).fold(BigRational::one(), |a, _| a / &pb)
        };
        unit /= scale;
        // unit is now a p-adic unit rational a/b; reduce mod p^prec
        let m = BigInt::from(self.p.pow(prec));
        let num = ((unit.numer() % &m) + &m) % &m;
        let den = ((unit.denom() % &m) + &m) % &m;
        let num_u: u64 = num.to_string().parse().ok()?;
        let den_u: u64 = den.to_string().parse().ok()?;
        let m_u = self.p.pow(prec);
        Some(PadicCoeff {
            valuation: v,
            unit: num_u * crate::gamma::inv_mod(den_u, m_u) % m_u,
        })
    }
}

/// log(1 + pi) truncated at the degree bound.
pub fn log_one_plus_pi(p: u64, degree_bound: u32, rank: usize) -> SeriesElem {
    let mut out = SeriesElem::zero(p, degree_bound, rank);
    for k in 1..=degree_bound {
        let sign = if k % 2 == 1 { 1 } else { -1 };
        out.accumulate(
            SeriesExp {
                pi_deg: k,
                toric: vec![0; rank],
            },
            BigRational::new(BigInt::from(sign), BigInt::from(k)),
        );
    }
    out
}

/// log of an integer congruent to 1 mod p^2, as an exact partial sum of the
/// p-adic logarithm with the stated number of terms.
pub fn log_unit(gamma0: u64, order: u32) -> BigRational {
    let x = BigRational::from_integer(BigInt::from(gamma0)) - BigRational::one();
    let mut acc = BigRational::zero();
    let mut pw = BigRational::one();
    for k in 1..=order {
        pw *= &x;
        let sign = if k % 2 == 1 { 1 } else { -1 };
        acc += &pw * BigRational::new(BigInt::from(sign), BigInt::from(k));
    }
    acc
}

/// Exact binomial coefficient C(n, k) for integer n of either sign.
fn binom_exact(n: i64, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k as i64 {
        acc *= BigRational::new(BigInt::from(n - i), BigInt::from(i + 1));
    }
    acc
}

/// The action of gamma on the series carrier:
/// gamma(1 + pi) = (1 + pi)^gamma0, gamma(T_i) = (1 + pi)^(nu_i) T_i,
/// with the truncated residues of gamma0 and nu read as exact integers.
pub fn gamma_act_series(g: &GammaElem, x: &SeriesElem) -> Result<SeriesElem> {
    if g.rank() != x.rank {
        return Err(Error::DimensionMismatch {
            expected: x.rank,
            got: g.rank(),
        });
    }
    let d = x.degree_bound;
    // (1+pi)^e - either exact (e >= 0 small) or a truncated binomial series
    let one_plus_pi_pow = |e: i64| -> SeriesElem {
        let mut out = SeriesElem::zero(x.p, d, x.rank);
        for k in 0..=d {
            let c = binom_exact(e, k);
            if !c.is_zero() {
                out.accumulate(
                    SeriesExp {
                        pi_deg: k,
                        toric: vec![0; x.rank],
                    },
                    c,
                );
            }
        }
        out
    };
    let gamma_pi = one_plus_pi_pow(g.gamma0 as i64).sub(&SeriesElem::one(x.p, d, x.rank))?;
    let mut out = SeriesElem::zero(x.p, d, x.rank);
    for (e, c) in &x.terms {
        let mut factor = SeriesElem::one(x.p, d, x.rank).scale(c);
        if e.pi_deg > 0 {
            factor = factor.mul(&gamma_pi.pow(e.pi_deg)?)?;
        }
        let pairing: i64 = e
            .toric
            .iter()
            .zip(&g.nu)
            .map(|(&w, &nu)| w * nu as i64)
            .sum();
        if pairing != 0 {
            factor = factor.mul(&one_plus_pi_pow(pairing))?;
        }
        let mono = SeriesElem::from_terms(
            x.p,
            d,
            x.rank,
            [(
                SeriesExp {
                    pi_deg: 0,
                    toric: e.toric.clone(),
                },
                BigRational::one(),
            )],
        );
        factor = factor.mul(&mono)?;
        out = out.add(&factor)?;
    }
    Ok(out)
}

/// The derivation d(gamma) by the truncated log series
/// sum_i (-1)^(i-1) (gamma - 1)^i (x) / i, together with the p-valuation of
/// the last term (the caller's handle on the tail).
pub fn dgamma(g: &GammaElem, x: &SeriesElem, order: u32) -> Result<(SeriesElem, Val)> {
    if !g.in_un(2) {
        return Err(Error::NotInConvergenceDomain);
    }
    let mut acc = SeriesElem::zero(x.p, x.degree_bound, x.rank);
    let mut iter = x.clone();
    let mut last = Val::Infinite;
    for i in 1..=order {
        iter = gamma_act_series(g, &iter)?.sub(&iter)?;
        let sign = if i % 2 == 1 { 1 } else { -1 };
        let term = iter.scale(&BigRational::new(BigInt::from(sign), BigInt::from(i)));
        last = term.min_p_valuation();
        acc = acc.add(&term)?;
    }
    Ok((acc, last))
}

/// Closed-form d(gamma) for pure elements:
/// d(gamma0) = log(gamma0) (1+pi) log(1+pi) d/dpi,
/// d(nu) = sum_i <nu, T_i> T_i log(1+pi) d/dT_i.
/// `log_order` controls the partial sum used for log(gamma0).
pub fn dgamma_closed_form(
    g: &GammaElem,
    x: &SeriesElem,
    log_order: u32,
) -> Result<SeriesElem> {
    if !g.in_un(2) {
        return Err(Error::NotInConvergenceDomain);
    }
    let pure_gamma0 = g.nu.iter().all(|&v| v == 0);
    let pure_nu = g.gamma0 == 1;
    if !pure_gamma0 && !pure_nu {
        return Err(Error::InvalidInput(
            "closed form applies to pure gamma0 or pure nu elements".into(),
        ));
    }
    let logpi = log_one_plus_pi(x.p, x.degree_bound, x.rank);
    if pure_gamma0 {
        let lg = log_unit(g.gamma0, log_order);
        let one_plus_pi = SeriesElem::one(x.p, x.degree_bound, x.rank)
            .add(&SeriesElem::pi(x.p, x.degree_bound, x.rank))?;
        one_plus_pi
            .mul(&logpi)?
            .mul(&x.d_pi())
            .map(|s| s.scale(&lg))
    } else {
        let mut acc = SeriesElem::zero(x.p, x.degree_bound, x.rank);
        for i in 0..x.rank {
            let part = x
                .t_d_t(i)
                .scale(&BigRational::from_integer(BigInt::from(g.nu[i])));
            acc = acc.add(&part)?;
        }
        acc.mul(&logpi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma0_elem(p: u64) -> GammaElem {
        GammaElem::new(p, 12, 1 + p * p, vec![0]).unwrap()
    }

    #[test]
    fn dgamma_of_constant_vanishes() {
        let p = 2;
        let one = SeriesElem::one(p, 8, 1);
        let (d, _) = dgamma(&gamma0_elem(p), &one, 6).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn dgamma_log_series_matches_closed_form_on_one_plus_pi() {
        let p = 2u64;
        let d = 8u32;
        let g = gamma0_elem(p);
        let x = SeriesElem::one(p, d, 1).add(&SeriesElem::pi(p, d, 1)).unwrap();
        let (series, _tail) = dgamma(&g, &x, 14).unwrap();
        let closed = dgamma_closed_form(&g, &x, 14).unwrap();
        let diff = series.sub(&closed).unwrap();
        // both are partial sums of the same p-adic limit
        assert!(diff.min_p_valuation() >= Val::from_int(10), "{:?}", diff.min_p_valuation());
    }

    #[test]
    fn dnu_matches_closed_form_on_toric_coordinate() {
        let p = 2u64;
        let d = 8u32;
        let g = GammaElem::new(p, 12, 1, vec![4]).unwrap(); // nu = p^2
        let x = SeriesElem::toric(p, d, 1, 0, 1);
        let (series, _) = dgamma(&g, &x, 14).unwrap();
        let closed = dgamma_closed_form(&g, &x, 14).unwrap();
        let diff = series.sub(&closed).unwrap();
        assert!(diff.min_p_valuation() >= Val::from_int(10), "{:?}", diff.min_p_valuation());
    }

    #[test]
    fn dgamma_rejects_outside_u2() {
        let p = 2u64;
        let g = GammaElem::new(p, 8, 3, vec![0]).unwrap(); // 3 = 1 + 2, only U_1
        let x = SeriesElem::pi(p, 6, 1);
        assert!(matches!(
            dgamma(&g, &x, 4),
            Err(Error::NotInConvergenceDomain)
        ));
    }

    #[test]
    fn leibniz_rule_for_dgamma() {
        let p = 2u64;
        let d = 8u32;
        let g = gamma0_elem(p);
        let x = SeriesElem::one(p, d, 1).add(&SeriesElem::pi(p, d, 1)).unwrap();
        let y = SeriesElem::pi(p, d, 1)
            .mul(&SeriesElem::toric(p, d, 1, 0, 2))
            .unwrap();
        let (dxy, _) = dgamma(&g, &x.mul(&y).unwrap(), 12).unwrap();
        let (dx, _) = dgamma(&g, &x, 12).unwrap();
        let (dy, _) = dgamma(&g, &y, 12).unwrap();
        let rhs = dx.mul(&y).unwrap().add(&x.mul(&dy).unwrap()).unwrap();
        let diff = dxy.sub(&rhs).unwrap();
        assert!(diff.min_p_valuation() >= Val::from_int(8), "{:?}", diff.min_p_valuation());
    }
}
