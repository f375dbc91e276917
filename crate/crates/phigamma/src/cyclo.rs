//! Truncated cyclotomic rings: Z\[zeta_{p^m}\]\[T^{±1/p^mden}\] mod p^N.
//!
//! This is the desk-scale model of the target of theta, restricted to q = p
//! so a single quotient polynomial Phi_{p^m} suffices. Zeta-exponents are
//! kept reduced against Phi_{p^m}; coefficients are residues mod p^N.

use crate::error::{Error, Result};
use crate::gamma::{pow_u64, GammaElem};
use crate::rat::{self, Rat, Val};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Exponent of a cyclotomic monomial: a power of zeta_{p^level} (reduced,
/// 0 <= zeta < phi(p^level)) and a toric fractional exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycloExp {
    pub zeta: u64,
    pub toric: Vec<Rat>,
}

/// Element of Z\[zeta_{p^level}\]\[T^(1/p^mden)\] / p^prec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycloElem {
    pub p: u64,
    pub level: u32,
    pub mden: u32,
    pub prec: u32,
    pub rank: usize,
    terms: BTreeMap<CycloExp, u64>,
}

/// phi(p^level): the degree of the reduced zeta-power basis.
pub fn cyclo_degree(p: u64, level: u32) -> u64 {
    if level == 0 {
        1
    } else {
        pow_u64(p, level - 1) * (p - 1)
    }
}

impl CycloElem {
    pub fn zero(p: u64, level: u32, mden: u32, prec: u32, rank: usize) -> Self {
        CycloElem {
            p,
            level,
            mden,
            prec,
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn modulus(&self) -> u64 {
        pow_u64(self.p, self.prec)
    }

    pub fn from_terms<I>(
        p: u64,
        level: u32,
        mden: u32,
        prec: u32,
        rank: usize,
        terms: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (CycloExp, u64)>,
    {
        let mut out = CycloElem::zero(p, level, mden, prec, rank);
        for (e, c) in terms {
            out.accumulate(e, c)?;
        }
        Ok(out)
    }

    /// Adds c * zeta^e.zeta * T^e.toric, reducing the zeta exponent.
    fn accumulate(&mut self, e: CycloExp, c: u64) -> Result<()> {
        let m = self.modulus();
        let c = c % m;
        if c == 0 {
            return Ok(());
        }
        if e.toric.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: e.toric.len(),
            });
        }
        for t in &e.toric {
            if !rat::denom_divides_ppow(self.p, self.mden, *t) {
                return Err(Error::PrecisionExhausted(
                    "toric denominator exceeds the mden budget".into(),
                ));
            }
        }
        let deg = cyclo_degree(self.p, self.level);
        let order = if self.level == 0 {
            1
        } else {
            pow_u64(self.p, self.level)
        };
        let zeta = e.zeta % order;
        if zeta < deg {
            let key = CycloExp {
                zeta,
                toric: e.toric,
            };
            let entry = self.terms.entry(key.clone()).or_insert(0);
            *entry = (*entry + c) % m;
            if *entry == 0 {
                self.terms.remove(&key);
            }
            return Ok(());
        }
        // zeta^(p-1)p^(level-1) = -sum_{i<p-1} zeta^(i p^(level-1))
        let step = pow_u64(self.p, self.level - 1);
        let reduced = zeta - (self.p - 1) * step;
        for i in 0..self.p - 1 {
            self.accumulate(
                CycloExp {
                    zeta: reduced + i * step,
                    toric: e.toric.clone(),
                },
                m - c,
            )?;
        }
        Ok(())
    }

    pub fn one(p: u64, level: u32, mden: u32, prec: u32, rank: usize) -> Self {
        let mut out = CycloElem::zero(p, level, mden, prec, rank);
        out.accumulate(
            CycloExp {
                zeta: 0,
                toric: vec![Rat::zero(); rank],
            },
            1,
        )
        .unwrap();
        out
    }

    pub fn from_u64(p: u64, level: u32, mden: u32, prec: u32, rank: usize, c: u64) -> Self {
        let mut out = CycloElem::zero(p, level, mden, prec, rank);
        out.accumulate(
            CycloExp {
                zeta: 0,
                toric: vec![Rat::zero(); rank],
            },
            c,
        )
        .unwrap();
        out
    }

    /// zeta_{p^j}^a (requires j <= level).
    pub fn zeta_power(
        p: u64,
        level: u32,
        mden: u32,
        prec: u32,
        rank: usize,
        j: u32,
        a: u64,
    ) -> Result<Self> {
        if j > level {
            return Err(Error::PrecisionExhausted(
                "root of unity level exceeds the ring level".into(),
            ));
        }
        let mut out = CycloElem::zero(p, level, mden, prec, rank);
        let lift = a % pow_u64(p, j) * pow_u64(p, level - j);
        out.accumulate(
            CycloExp {
                zeta: lift,
                toric: vec![Rat::zero(); rank],
            },
            1,
        )?;
        Ok(out)
    }

    /// T^v monomial.
    pub fn toric_monomial(&self, v: Vec<Rat>, c: u64) -> Result<Self> {
        let mut out = CycloElem::zero(self.p, self.level, self.mden, self.prec, self.rank);
        out.accumulate(CycloExp { zeta: 0, toric: v }, c)?;
        Ok(out)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CycloExp, &u64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn compatible(&self, other: &CycloElem) -> Result<()> {
        if self.p != other.p
            || self.level != other.level
            || self.mden != other.mden
            || self.prec != other.prec
            || self.rank != other.rank
        {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &CycloElem) -> Result<CycloElem> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.accumulate(e.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> CycloElem {
        let m = self.modulus();
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), (m - c) % m))
            .filter(|(_, c)| *c != 0)
            .collect();
        out
    }

    pub fn sub(&self, other: &CycloElem) -> Result<CycloElem> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CycloElem) -> Result<CycloElem> {
        self.compatible(other)?;
        let m = self.modulus();
        let mut out = CycloElem::zero(self.p, self.level, self.mden, self.prec, self.rank);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let c = ((*c1 as u128 * *c2 as u128) % m as u128) as u64;
                if c == 0 {
                    continue;
                }
                let toric: Vec<Rat> = e1
                    .toric
                    .iter()
                    .zip(&e2.toric)
                    .map(|(a, b)| *a + *b)
                    .collect();
                out.accumulate(
                    CycloExp {
                        zeta: e1.zeta + e2.zeta,
                        toric,
                    },
                    c,
                )?;
            }
        }
        Ok(out)
    }

    pub fn scalar_mul(&self, c: u64) -> CycloElem {
        let m = self.modulus();
        let c = c % m;
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(e, a)| (e.clone(), ((*a as u128 * c as u128) % m as u128) as u64))
            .filter(|(_, a)| *a != 0)
            .collect();
        out
    }

    pub fn pow(&self, e: u64) -> Result<CycloElem> {
        let mut acc = CycloElem::one(self.p, self.level, self.mden, self.prec, self.rank);
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

    /// Minimum p-valuation over the coefficients (+inf for the zero element,
    /// meaning only that the element vanishes mod p^prec).
    pub fn p_valuation(&self) -> Val {
        self.terms
            .values()
            .map(|&c| Val::from_int(rat::vp_int(self.p, c as i64) as i64))
            .fold(Val::Infinite, Val::min)
    }

    /// Some coefficient is a unit mod p.
    pub fn is_unit_candidate(&self) -> bool {
        self.terms.values().any(|&c| c % self.p != 0)
    }

    /// Exact division by p^k; all coefficients must vanish mod p^k, and the
    /// result carries precision prec - k.
    pub fn divide_by_p_pow(&self, k: u32) -> Result<CycloElem> {
        if k >= self.prec {
            return Err(Error::PrecisionExhausted(
                "division by p^k uses up all p-adic digits".into(),
            ));
        }
        let pk = pow_u64(self.p, k);
        let mut out = CycloElem::zero(self.p, self.level, self.mden, self.prec - k, self.rank);
        for (e, c) in &self.terms {
            if c % pk != 0 {
                return Err(Error::PrecisionExhausted(
                    "element is not divisible by p^k".into(),
                ));
            }
            out.accumulate(e.clone(), c / pk)?;
        }
        Ok(out)
    }

    /// Reinterpret at a higher cyclotomic level / denominator budget.
    pub fn raise(&self, level: u32, mden: u32) -> Result<CycloElem> {
        if level < self.level || mden < self.mden {
            return Err(Error::InvalidInput("raise cannot lower parameters".into()));
        }
        let scale = pow_u64(self.p, level - self.level);
        let mut out = CycloElem::zero(self.p, level, mden, self.prec, self.rank);
        for (e, c) in &self.terms {
            out.accumulate(
                CycloExp {
                    zeta: e.zeta * scale,
                    toric: e.toric.clone(),
                },
                *c,
            )?;
        }
        Ok(out)
    }

    /// Drop precision to `prec` digits.
    pub fn truncate_prec(&self, prec: u32) -> CycloElem {
        let m = pow_u64(self.p, prec);
        let mut out = CycloElem::zero(self.p, self.level, self.mden, prec, self.rank);
        for (e, c) in &self.terms {
            let c = c % m;
            if c != 0 {
                out.accumulate(e.clone(), c).unwrap();
            }
        }
        out
    }

    /// Monomial-wise exact p-th root of (self mod p), lifted at level+1 and
    /// mden+1: the p-th root in the residue ring is additive, so it is exact.
    pub fn pth_root_mod_p(&self, max_level: u32, max_mden: u32) -> Result<CycloElem> {
        if self.level + 1 > max_level || self.mden + 1 > max_mden {
            return Err(Error::PrecisionExhausted(
                "no level headroom for a p-th root".into(),
            ));
        }
        let mut out = CycloElem::zero(self.p, self.level + 1, self.mden + 1, self.prec, self.rank);
        for (e, c) in &self.terms {
            let cbar = c % self.p;
            if cbar == 0 {
                continue;
            }
            // (zeta_{p^(level+1)}^j)^p = zeta_{p^level}^j; coefficients of
            // F_p are their own p-th roots
            let toric: Vec<Rat> = e
                .toric
                .iter()
                .map(|t| *t / Rat::from_integer(self.p as i64))
                .collect();
            out.accumulate(
                CycloExp {
                    zeta: e.zeta,
                    toric,
                },
                cbar,
            )?;
        }
        Ok(out)
    }

    /// The semidirect action: gamma0 sends zeta to zeta^gamma0 and fixes T;
    /// nu sends T^v to zeta_{p^L}^<nu, p^L v> T^v.
    pub fn gamma_act(&self, g: &GammaElem) -> Result<CycloElem> {
        if g.rank() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: g.rank(),
            });
        }
        if g.prec < self.level {
            return Err(Error::InsufficientPadicPrecision);
        }
        if g.is_identity() {
            return Ok(self.clone());
        }
        let order = if self.level == 0 {
            1
        } else {
            pow_u64(self.p, self.level)
        };
        let gmod = g.modulus();
        let mut out = CycloElem::zero(self.p, self.level, self.mden, self.prec, self.rank);
        for (e, c) in &self.terms {
            // cyclotomic character on the zeta part
            let mut zeta = ((e.zeta as u128 * (g.gamma0 % order) as u128) % order as u128) as u64;
            // character pairing on the toric part
            let mut lmax = 0u32;
            for t in &e.toric {
                if !t.is_zero() {
                    lmax = lmax.max(
                        rat::denom_ppow_exp(self.p, *t).ok_or(Error::NonIntegralExponent)?,
                    );
                }
            }
            if lmax > 0 {
                if lmax > self.level {
                    return Err(Error::PrecisionExhausted(
                        "character level exceeds the zeta level".into(),
                    ));
                }
                let plm = pow_u64(self.p, lmax);
                let mut num: u64 = 0;
                for (t, &nu_i) in e.toric.iter().zip(&g.nu) {
                    let scaled = (*t * rat::p_pow(self.p, lmax as i64)).to_integer();
                    let s_mod = scaled.rem_euclid(gmod as i64) as u64;
                    num = (num + ((nu_i as u128 * s_mod as u128) % gmod as u128) as u64) % gmod;
                }
                // zeta_{p^lmax}^num = zeta_{p^level}^(num * p^(level-lmax))
                let shift = ((num % plm) as u128 * pow_u64(self.p, self.level - lmax) as u128
                    % order as u128) as u64;
                zeta = (zeta + shift) % order;
            }
            // integral toric exponents get the multiplier epsilon_0 = 1
            out.accumulate(
                CycloExp {
                    zeta,
                    toric: e.toric.clone(),
                },
                *c,
            )?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zp(p: u64, level: u32, prec: u32) -> CycloElem {
        CycloElem::zeta_power(p, level, 1, prec, 0, level, 1).unwrap()
    }

    #[test]
    fn cyclotomic_relation() {
        // 1 + zeta_2 = 0 at p = 2: zeta_2 = -1
        let z = zp(2, 1, 3);
        let one = CycloElem::one(2, 1, 1, 3, 0);
        assert!(z.add(&one).unwrap().is_zero());

        // sum of all p-th roots of unity vanishes at p = 3
        let z3 = zp(3, 1, 2);
        let mut acc = CycloElem::one(3, 1, 1, 2, 0);
        acc = acc.add(&z3).unwrap();
        acc = acc.add(&z3.mul(&z3).unwrap()).unwrap();
        assert!(acc.is_zero());
    }

    #[test]
    fn zeta_tower_compatible() {
        // zeta_{p^2}^p = zeta_p
        for p in [2u64, 3] {
            let z2 = zp(p, 2, 3);
            let z1 = CycloElem::zeta_power(p, 2, 1, 3, 0, 1, 1).unwrap();
            assert_eq!(z2.pow(p).unwrap(), z1);
        }
    }

    #[test]
    fn division_tracks_precision() {
        let x = CycloElem::from_u64(2, 1, 1, 4, 0, 12);
        let y = x.divide_by_p_pow(2).unwrap();
        assert_eq!(y.prec, 2);
        assert_eq!(y, CycloElem::from_u64(2, 1, 1, 2, 0, 3));
        assert!(CycloElem::from_u64(2, 1, 1, 4, 0, 3)
            .divide_by_p_pow(1)
            .is_err());
    }

    #[test]
    fn pth_root_examples() {
        // T -> T^(1/p)
        let p = 2;
        let ring = CycloElem::zero(p, 1, 1, 3, 1);
        let t = ring
            .toric_monomial(vec![Rat::from_integer(1)], 1)
            .unwrap();
        let r = t.pth_root_mod_p(3, 3).unwrap();
        let expect = CycloElem::zero(p, 2, 2, 3, 1)
            .toric_monomial(vec![Rat::new(1, 2)], 1)
            .unwrap();
        assert_eq!(r, expect);
        // root of zeta_p is zeta_{p^2} (p = 3 keeps the zeta basis visible)
        let z = zp(3, 1, 3);
        let rz = z.pth_root_mod_p(3, 3).unwrap();
        assert_eq!(rz, zp(3, 2, 3).raise(2, 2).unwrap());
        // at p = 2, zeta_2 reduces to -1 and its approximate root is 1:
        // the contract v_p(x^p - y) >= 1 still holds
        let z2 = zp(2, 1, 3);
        let r2 = z2.pth_root_mod_p(3, 3).unwrap();
        let diff = r2.pow(2).unwrap().sub(&z2.raise(2, 2).unwrap()).unwrap();
        assert!(diff.p_valuation() >= Val::from_int(1));
    }

    #[test]
    fn gamma_acts_by_cyclotomic_character() {
        // gamma0 = 1 + p^2 fixes zeta_p (exponent = 1 mod p)
        let p = 3u64;
        let g = GammaElem::new(p, 4, 1 + p * p, vec![]).unwrap();
        let z = zp(p, 1, 2);
        assert_eq!(z.gamma_act(&g).unwrap(), z);
        // but moves zeta_{p^2} to its (1+p^2) power = zeta^(1+p^2 mod p^2)
        let z2 = zp(p, 2, 2);
        let gz2 = z2.gamma_act(&g).unwrap();
        assert_eq!(gz2, z2); // 1 + 9 = 10 = 1 mod 9
    }

    #[test]
    fn nu_multiplies_fractional_monomials_by_roots_of_unity() {
        // nu with <nu, v> = 1 on T^(1/p): multiplier zeta_p
        let p = 2u64;
        let ring = CycloElem::zero(p, 1, 1, 3, 1);
        let t_half = ring.toric_monomial(vec![Rat::new(1, 2)], 1).unwrap();
        let g = GammaElem::new(p, 4, 1, vec![1]).unwrap();
        let acted = t_half.gamma_act(&g).unwrap();
        let zeta = CycloElem::zeta_power(p, 1, 1, 3, 1, 1, 1).unwrap();
        let expect = zeta.mul(&t_half).unwrap();
        assert_eq!(acted, expect);
    }
}
