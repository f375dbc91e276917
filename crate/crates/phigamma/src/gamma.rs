//! The group Gamma_N = Z_p^x ⋉ N_p at finite p-adic precision, its actions
//! on every carrier ring, and the Lie-algebra derivation with its closed-form
//! comparison.

use crate::charp::CharPElem;
use crate::cyclo::CycloElem;
use crate::error::{Error, Result};
use crate::rat::Val;
use crate::wittperiod::WittElem;

/// An element (nu, gamma0) of Z_p^x ⋉ N_p, truncated mod p^prec.
///
/// The composition law (nu1, g1)(nu2, g2) = (nu1 + g1 nu2, g1 g2) is the one
/// that makes the ring action a homomorphism; it is verified against the
/// action in tests rather than assumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaElem {
    pub p: u64,
    pub prec: u32,
    pub gamma0: u64,
    pub nu: Vec<u64>,
}

pub fn pow_u64(p: u64, e: u32) -> u64 {
    p.checked_pow(e).expect("modulus overflow")
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Inverse of a unit mod p^prec.
pub fn inv_mod(a: u64, m: u64) -> u64 {
    // extended Euclid
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert!(r0 == 1, "not a unit");
    t0.rem_euclid(m as i128) as u64
}

impl GammaElem {
    pub fn new(p: u64, prec: u32, gamma0: u64, nu: Vec<u64>) -> Result<Self> {
        let m = pow_u64(p, prec);
        if gamma0 % p == 0 {
            return Err(Error::NotAUnit);
        }
        Ok(GammaElem {
            p,
            prec,
            gamma0: gamma0 % m,
            nu: nu.into_iter().map(|x| x % m).collect(),
        })
    }

    pub fn identity(p: u64, prec: u32, rank: usize) -> Self {
        GammaElem {
            p,
            prec,
            gamma0: 1,
            nu: vec![0; rank],
        }
    }

    pub fn modulus(&self) -> u64 {
        pow_u64(self.p, self.prec)
    }

    pub fn rank(&self) -> usize {
        self.nu.len()
    }

    pub fn is_identity(&self) -> bool {
        self.gamma0 == 1 && self.nu.iter().all(|&x| x == 0)
    }

    /// Membership in U_n = (1 + p^n Z_p) ⋉ p^n N_p, decided on truncations.
    pub fn in_un(&self, n: u32) -> bool {
        if n >= self.prec {
            return false; // cannot certify at this precision
        }
        let pn = pow_u64(self.p, n);
        self.gamma0 % pn == 1 % pn && self.nu.iter().all(|&x| x % pn == 0)
    }

    pub fn compose(&self, other: &GammaElem) -> Result<GammaElem> {
        if self.p != other.p || self.prec != other.prec || self.rank() != other.rank() {
            return Err(Error::PrecisionMismatch);
        }
        let m = self.modulus();
        let nu = self
            .nu
            .iter()
            .zip(&other.nu)
            .map(|(&a, &b)| (a + mul_mod(self.gamma0, b, m)) % m)
            .collect();
        Ok(GammaElem {
            p: self.p,
            prec: self.prec,
            gamma0: mul_mod(self.gamma0, other.gamma0, m),
            nu,
        })
    }

    pub fn inverse(&self) -> GammaElem {
        let m = self.modulus();
        let g_inv = inv_mod(self.gamma0, m);
        let nu = self
            .nu
            .iter()
            .map(|&a| mul_mod(m - a % m, g_inv, m) % m)
            .collect();
        GammaElem {
            p: self.p,
            prec: self.prec,
            gamma0: g_inv,
            nu,
        }
    }

    pub fn pow(&self, e: u64) -> GammaElem {
        let mut acc = GammaElem::identity(self.p, self.prec, self.rank());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base).unwrap();
            }
            base = base.compose(&base).unwrap();
            e >>= 1;
        }
        acc
    }

    /// The standard topological generators of U_n: 1 + p^n and p^n e_i.
    pub fn un_generators(p: u64, prec: u32, rank: usize, n: u32) -> Vec<GammaElem> {
        let m = pow_u64(p, prec);
        let pn = pow_u64(p, n) % m;
        let mut out = vec![GammaElem {
            p,
            prec,
            gamma0: (1 + pn) % m,
            nu: vec![0; rank],
        }];
        for i in 0..rank {
            let mut nu = vec![0; rank];
            nu[i] = pn;
            out.push(GammaElem {
                p,
                prec,
                gamma0: 1,
                nu,
            });
        }
        out
    }
}

mod series;
pub use series::{dgamma, dgamma_closed_form, gamma_act_series, vp_bigrat, PadicCoeff, SeriesElem, SeriesExp};

/// Carriers on which a GammaElem can act.
pub enum Carrier {
    CharP(CharPElem),
    Witt(WittElem),
    Cyclo(CycloElem),
    Series(SeriesElem),
}

/// Action on any period-ring carrier. Witt vectors are acted on
/// component-wise (Witt functoriality), the cyclotomic side through the
/// cyclotomic character and the character pairing on toric exponents.
pub fn act_period(g: &GammaElem, x: &Carrier) -> Result<Carrier> {
    match x {
        Carrier::CharP(e) => Ok(Carrier::CharP(crate::charp::gamma_act_charp(g, e)?)),
        Carrier::Witt(w) => Ok(Carrier::Witt(w.gamma_act(g)?)),
        Carrier::Cyclo(c) => Ok(Carrier::Cyclo(c.gamma_act(g)?)),
        Carrier::Series(s) => Ok(Carrier::Series(series::gamma_act_series(g, s)?)),
    }
}

/// One deviation record from an equivariance batch.
#[derive(Clone, Debug)]
pub struct EquivarianceLine {
    pub label: String,
    pub deviation: Val,
}

/// Report of a batch equivariance check; `min_deviation` must sit at or above
/// the relevant precision floor for the identities to hold at truncation.
#[derive(Clone, Debug)]
pub struct EquivarianceReport {
    pub lines: Vec<EquivarianceLine>,
    pub min_deviation: Val,
}

impl EquivarianceReport {
    pub fn from_lines(lines: Vec<EquivarianceLine>) -> Self {
        let min_deviation = lines
            .iter()
            .map(|l| l.deviation)
            .fold(Val::Infinite, Val::min);
        EquivarianceReport {
            lines,
            min_deviation,
        }
    }
}

/// Checks phi ∘ gamma = gamma ∘ phi on a batch of characteristic-p samples
/// and theta ∘ gamma = gamma ∘ theta on Witt samples; returns the deviations.
pub fn check_equivariance(
    charp_pairs: &[(GammaElem, CharPElem)],
    theta_pairs: &[(GammaElem, WittElem, u32)],
) -> Result<EquivarianceReport> {
    let mut lines = Vec::new();
    for (i, (g, x)) in charp_pairs.iter().enumerate() {
        let a = crate::charp::frobenius(&crate::charp::gamma_act_charp(g, x)?, false)?;
        let b = crate::charp::gamma_act_charp(g, &crate::charp::frobenius(x, false)?)?;
        let d = a.sub(&b)?;
        lines.push(EquivarianceLine {
            label: format!("phi-gamma[{i}]"),
            deviation: d.valuation_with_floor(),
        });
    }
    for (i, (g, w, n)) in theta_pairs.iter().enumerate() {
        let lhs = crate::wittperiod::theta_eval(&w.gamma_act(g)?, *n)?;
        let rhs = crate::wittperiod::theta_eval(w, *n)?.gamma_act(g)?;
        let d = lhs.sub(&rhs)?;
        lines.push(EquivarianceLine {
            label: format!("theta-gamma[{i}]"),
            deviation: d.p_valuation(),
        });
    }
    Ok(EquivarianceReport::from_lines(lines))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_identity_and_inverse() {
        let g = GammaElem::new(2, 4, 5, vec![4, 0]).unwrap();
        let id = GammaElem::identity(2, 4, 2);
        assert_eq!(g.compose(&id).unwrap(), g);
        assert_eq!(id.compose(&g).unwrap(), g);
        let inv = g.inverse();
        assert!(g.compose(&inv).unwrap().is_identity());
        assert!(inv.compose(&g).unwrap().is_identity());
    }

    #[test]
    fn compose_law_matches_derived_example() {
        // (0, g) * (nu, 1) = (g nu, g)
        let p = 3;
        let g = GammaElem::new(p, 3, 4, vec![0]).unwrap();
        let n = GammaElem::new(p, 3, 1, vec![5]).unwrap();
        let c = g.compose(&n).unwrap();
        assert_eq!(c.gamma0, 4);
        assert_eq!(c.nu, vec![20 % 27]);
    }

    #[test]
    fn group_axioms_exhaustive_mod_p2() {
        // all of Gamma at precision 2, p = 2, rank 1: gamma0 in {1,3}, nu in {0..3}
        let p = 2;
        let elems: Vec<GammaElem> = [1u64, 3]
            .iter()
            .flat_map(|&g0| (0..4u64).map(move |nu| GammaElem::new(p, 2, g0, vec![nu]).unwrap()))
            .collect();
        for a in &elems {
            for b in &elems {
                for c in &elems {
                    let ab_c = a.compose(b).unwrap().compose(c).unwrap();
                    let a_bc = a.compose(&b.compose(c).unwrap()).unwrap();
                    assert_eq!(ab_c, a_bc);
                }
            }
        }
        for a in &elems {
            assert!(a.compose(&a.inverse()).unwrap().is_identity());
        }
    }

    #[test]
    fn un_membership() {
        let g = GammaElem::new(2, 5, 5, vec![4]).unwrap(); // 5 = 1 + 4
        assert!(g.in_un(2));
        assert!(!g.in_un(3));
        let h = GammaElem::new(2, 5, 3, vec![0]).unwrap();
        assert!(h.in_un(1));
        assert!(!h.in_un(2));
    }
}
