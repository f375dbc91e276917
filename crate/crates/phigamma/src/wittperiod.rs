//! Truncated Witt vectors over the characteristic-p coefficient rings (the
//! period rings of type A-tilde at finite length), Teichmuller lifts, the
//! Witt Frobenius, the theta map into cyclotomic rings, the special elements
//! pi, z, t, t_d, controlled imperfect lifts, and approximate p-th roots.
//!
//! Convention: a WittElem stores Witt coordinates (c_0, ..., c_{n-1}); as a
//! sum of shifted Teichmullers this is sum_i p^i [c_i^(p^-i)], so the i-th
//! Teichmuller digit is the p^i-th root of the i-th coordinate.

use crate::charp::{self, CharPElem, FracExp, PrecisionWindow};
use crate::cyclo::CycloElem;
use crate::error::{Error, Result};
use crate::gamma::{pow_u64, GammaElem};
use crate::rat::{self, Rat, Val};
use crate::witt::{self, WittCoeffRing};
use num_traits::{Signed, Zero};

struct CharPRing<'a>(&'a PrecisionWindow);

impl WittCoeffRing for CharPRing<'_> {
    type Elem = CharPElem;
    fn zero(&self) -> CharPElem {
        CharPElem::zero(self.0)
    }
    fn one(&self) -> CharPElem {
        CharPElem::one(self.0)
    }
    fn add(&self, a: &CharPElem, b: &CharPElem) -> Result<CharPElem> {
        a.add(b)
    }
    fn mul(&self, a: &CharPElem, b: &CharPElem) -> Result<CharPElem> {
        a.mul(b)
    }
    fn scalar(&self, c: u64) -> CharPElem {
        CharPElem::constant(self.0, self.0.fq().from_prime_field(c))
    }
    fn pth_power(&self, a: &CharPElem) -> Result<CharPElem> {
        charp::frobenius(a, false)
    }
    fn is_zero(&self, a: &CharPElem) -> bool {
        a.is_zero()
    }
}

/// Length-n Witt vector over a truncated characteristic-p ring.
#[derive(Clone, Debug, PartialEq)]
pub struct WittElem {
    pub components: Vec<CharPElem>,
}

impl WittElem {
    pub fn zero(window: &PrecisionWindow, n: usize) -> Self {
        WittElem {
            components: vec![CharPElem::zero(window); n],
        }
    }

    pub fn one(window: &PrecisionWindow, n: usize) -> Self {
        let mut w = WittElem::zero(window, n);
        w.components[0] = CharPElem::one(window);
        w
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn window(&self) -> &PrecisionWindow {
        &self.components[0].window
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.components.iter().all(|c| c.is_zero_at_precision())
    }

    fn check(&self, other: &WittElem) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch);
        }
        if self.window() != other.window() {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &WittElem) -> Result<WittElem> {
        self.check(other)?;
        let w = self.window().clone();
        let ring = CharPRing(&w);
        Ok(WittElem {
            components: witt::witt_add_generic(&ring, w.p, &self.components, &other.components)?,
        })
    }

    pub fn mul(&self, other: &WittElem) -> Result<WittElem> {
        self.check(other)?;
        let w = self.window().clone();
        let ring = CharPRing(&w);
        Ok(WittElem {
            components: witt::witt_mul_generic(&ring, w.p, &self.components, &other.components)?,
        })
    }

    pub fn neg(&self) -> Result<WittElem> {
        let w = self.window().clone();
        let ring = CharPRing(&w);
        Ok(WittElem {
            components: witt::witt_neg_generic(&ring, w.p, &self.components)?,
        })
    }

    pub fn sub(&self, other: &WittElem) -> Result<WittElem> {
        self.add(&other.neg()?)
    }

    pub fn pow(&self, e: u32) -> Result<WittElem> {
        let w = self.window().clone();
        let mut acc = WittElem::one(&w, self.len());
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

    /// The image of the integer `v` under Z -> W_n.
    pub fn from_u64(window: &PrecisionWindow, n: usize, mut v: u64) -> Result<WittElem> {
        v %= pow_u64(window.p, n as u32);
        let mut acc = WittElem::zero(window, n);
        let mut base = WittElem::one(window, n);
        while v > 0 {
            if v & 1 == 1 {
                acc = acc.add(&base)?;
            }
            v >>= 1;
            if v > 0 {
                base = base.add(&base)?;
            }
        }
        Ok(acc)
    }

    /// Multiplicative section: components (x, 0, ..., 0).
    pub fn teichmuller(x: &CharPElem, n: usize) -> WittElem {
        let mut w = WittElem::zero(&x.window, n);
        w.components[0] = x.clone();
        w
    }

    /// phi(sum p^i \[x_i\]) = sum p^i \[x_i^p\]: the p-power map on every
    /// coordinate. The inverse needs denominator headroom.
    pub fn frobenius(&self, inverse: bool) -> Result<WittElem> {
        Ok(WittElem {
            components: self
                .components
                .iter()
                .map(|c| charp::frobenius(c, inverse))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Verschiebung: shift coordinates right, dropping the top one.
    pub fn verschiebung(&self) -> WittElem {
        let w = self.window().clone();
        let mut comps = vec![CharPElem::zero(&w)];
        comps.extend(self.components[..self.len() - 1].iter().cloned());
        WittElem { components: comps }
    }

    /// Component-wise semidirect action (Witt functoriality).
    pub fn gamma_act(&self, g: &GammaElem) -> Result<WittElem> {
        Ok(WittElem {
            components: self
                .components
                .iter()
                .map(|c| charp::gamma_act_charp(g, c))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Weighted Gauss valuation at radius r:
    /// min_i (i + r * v(c_i) / p^i), using certified lower bounds for
    /// truncated digits.
    pub fn gauss_valuation(&self, r: Rat) -> Val {
        let p = self.window().p;
        let mut best = Val::Infinite;
        for (i, c) in self.components.iter().enumerate() {
            let vi = match c.valuation_with_floor() {
                Val::Infinite => continue,
                Val::Finite(v) => v,
            };
            let term = Rat::from_integer(i as i64) + r * vi * rat::p_pow(p, -(i as i64));
            best = best.min(Val::Finite(term));
        }
        best
    }
}

/// omega(c): the Teichmuller lift of a prime-field residue mod p^prec.
pub fn teichmuller_residue(p: u64, c: u64, prec: u32) -> u64 {
    let m = pow_u64(p, prec);
    let mut t = c % m;
    for _ in 0..prec {
        // t -> t^p stabilizes on the Teichmuller representative
        let mut acc: u64 = 1;
        for _ in 0..p {
            acc = ((acc as u128 * t as u128) % m as u128) as u64;
        }
        t = acc;
    }
    t
}

/// theta: W(o)-at-length-n -> o_{A_inf} mod p^N. Needs q = p. The i-th
/// coordinate c_i contributes p^i (ell(c_i^(p^(1-N-i))))^(p^(N-1+i)), where
/// ell lifts pibar^(a/p^j) to (eps_j - 1)^a and s^v to T^v monomial-wise.
pub fn theta_eval(x: &WittElem, n_target: u32) -> Result<CycloElem> {
    let w = x.window();
    if w.f != 1 {
        return Err(Error::UnsupportedCoefficientField);
    }
    if (n_target as usize) > x.len() {
        return Err(Error::PrecisionExhausted(
            "target precision exceeds the Witt length".into(),
        ));
    }
    let p = w.p;
    let level = w.mden + n_target - 1 + (x.len() as u32 - 1);
    let mden_cy = w.mden + n_target - 1 + (x.len() as u32 - 1);
    let mut acc = CycloElem::zero(p, level, mden_cy, n_target, w.rank);
    for (i, c) in x.components.iter().enumerate() {
        if c.is_zero_at_precision() && c.error_floor == Val::Infinite {
            continue;
        }
        // truncation below the floor must be invisible mod p^N
        if let Val::Finite(fl) = c.error_floor {
            let visible = fl * Rat::new(p as i64 - 1, p as i64) * rat::p_pow(p, -(i as i64));
            if visible < Rat::from_integer(n_target as i64 - i as i64) {
                return Err(Error::PrecisionExhausted(
                    "digit truncation is visible at the target precision".into(),
                ));
            }
        }
        let shift = n_target as i64 - 1 + i as i64; // root exponent p^shift
        let mut lift = CycloElem::zero(p, level, mden_cy, n_target, w.rank);
        for (e, coeff) in c.terms() {
            if e.pibar.is_negative() {
                return Err(Error::InvalidInput(
                    "theta requires nonnegative pibar exponents".into(),
                ));
            }
            // pibar exponent a / p^shift = a' / p^j in lowest terms
            let scaled = e.pibar * rat::p_pow(p, -shift);
            let j = rat::denom_ppow_exp(p, scaled).ok_or(Error::NonIntegralExponent)?;
            let a = (scaled * rat::p_pow(p, j as i64)).to_integer() as u64;
            if j > level {
                return Err(Error::PrecisionExhausted(
                    "cyclotomic level headroom exhausted".into(),
                ));
            }
            // (eps_j - 1)^a
            let eps = CycloElem::zeta_power(p, level, mden_cy, n_target, w.rank, j, 1)?;
            let base = eps.sub(&CycloElem::one(p, level, mden_cy, n_target, w.rank))?;
            let mut term = base.pow(a)?;
            // toric part
            let toric: Vec<Rat> = e.toric.iter().map(|t| *t * rat::p_pow(p, -shift)).collect();
            if toric.iter().any(|t| !t.is_zero()) {
                let mono = term.toric_monomial(toric, 1)?;
                term = term.mul(&mono)?;
            }
            // Teichmuller coefficient
            let cres = teichmuller_residue(p, coeff.first().copied().unwrap_or(0), n_target);
            term = term.scalar_mul(cres);
            lift = lift.add(&term)?;
        }
        // theta([x_i]) = ell(x_i^(p^(1-N)))^(p^(N-1)), and x_i^(p^(1-N)) is
        // c_i^(p^(1-N-i)), which is what `shift` scaled the exponents by
        let mut theta_digit = lift.pow(pow_u64(p, n_target - 1))?;
        theta_digit = theta_digit.scalar_mul(pow_u64(p, i as u32));
        acc = acc.add(&theta_digit)?;
    }
    Ok(acc)
}

/// A period scalar p^p_power * unit_part, the bookkeeping form for elements
/// of the p-inverted rings.
#[derive(Clone, Debug)]
pub struct PeriodScalar {
    pub p_power: i64,
    pub unit_part: PeriodUnit,
}

#[derive(Clone, Debug)]
pub enum PeriodUnit {
    Witt(WittElem),
    Cyclo(CycloElem),
}

/// Truncated t_d, kept as a numerator/denominator pair of Witt products so
/// identities can be checked in cross-multiplied form.
#[derive(Clone, Debug)]
pub struct TdPair {
    pub d: u32,
    pub order: u32,
    pub numerator: WittElem,
    pub denominator: WittElem,
}

#[derive(Clone, Debug)]
pub enum SpecialElem {
    Pi(WittElem),
    Z(WittElem),
    T(PeriodScalar),
    Td(TdPair),
}

/// pi = [1 + pibar] - 1.
pub fn special_pi(window: &PrecisionWindow, n: usize) -> Result<WittElem> {
    let one_plus = CharPElem::one(window).add(&CharPElem::pibar(window))?;
    WittElem::teichmuller(&one_plus, n).sub(&WittElem::one(window, n))
}

/// z = sum_{i=0}^{p-1} [(1 + pibar)^(i/p)]: the degree-1 generator of
/// ker(theta). Needs mden >= 1.
pub fn special_z(window: &PrecisionWindow, n: usize) -> Result<WittElem> {
    if window.mden < 1 {
        return Err(Error::PrecisionExhausted(
            "z needs denominator budget mden >= 1".into(),
        ));
    }
    let mut acc = WittElem::zero(window, n);
    for i in 0..window.p {
        let root = charp::one_plus_pibar_root_pow(window, i as i64, 1)?;
        acc = acc.add(&WittElem::teichmuller(&root, n))?;
    }
    Ok(acc)
}

/// y_j = phi^j(pi) = [(1+pibar)^(p^j)] - 1 (exact Teichmuller form).
pub fn phi_iterate_of_pi(window: &PrecisionWindow, n: usize, j: u32) -> Result<WittElem> {
    let e = pow_u64(window.p, j) as i64;
    let t = charp::one_plus_pibar_exact_pow(window, Rat::from_integer(e))?;
    WittElem::teichmuller(&t, n).sub(&WittElem::one(window, n))
}

/// Truncated t = log(1 + pi) = sum_{i=1}^order (-1)^(i-1) pi^i / i, as
/// p^(-v) times a Witt element with v = v_p(lcm(1..order)).
pub fn special_t(window: &PrecisionWindow, n: usize, order: u32) -> Result<PeriodScalar> {
    if order == 0 {
        return Err(Error::InvalidInput("t needs a positive series order".into()));
    }
    let p = window.p;
    let v = (order as f64).log(p as f64) as u32; // floor(log_p(order))
    let v = if pow_u64(p, v + 1) <= order as u64 { v + 1 } else { v };
    let pi = special_pi(window, n)?;
    let modulus = pow_u64(p, n as u32);
    let mut acc = WittElem::zero(window, n);
    let mut pi_pow = WittElem::one(window, n);
    for i in 1..=order {
        pi_pow = pi_pow.mul(&pi)?;
        // coefficient (-1)^(i-1) p^v / i as a scalar in Z/p^n
        let vi = rat::vp_int(p, i as i64);
        let unit = (i as u64) / pow_u64(p, vi);
        let mut coeff = pow_u64(p, v - vi) % modulus;
        coeff = ((coeff as u128 * crate::gamma::inv_mod(unit % modulus, modulus) as u128)
            % modulus as u128) as u64;
        if i % 2 == 0 {
            coeff = (modulus - coeff) % modulus;
        }
        let scalar = WittElem::from_u64(window, n, coeff)?;
        acc = acc.add(&pi_pow.mul(&scalar)?)?;
    }
    Ok(PeriodScalar {
        p_power: -(v as i64),
        unit_part: PeriodUnit::Witt(acc),
    })
}

/// Truncated t_d = prod_{i=1}^order y_{di} / y_{di-1} as a fraction pair.
pub fn special_td(window: &PrecisionWindow, n: usize, d: u32, order: u32) -> Result<TdPair> {
    if d == 0 || order == 0 {
        return Err(Error::InvalidInput("t_d needs d, order >= 1".into()));
    }
    let mut num = WittElem::one(window, n);
    let mut den = WittElem::one(window, n);
    for i in 1..=order {
        num = num.mul(&phi_iterate_of_pi(window, n, d * i)?)?;
        den = den.mul(&phi_iterate_of_pi(window, n, d * i - 1)?)?;
    }
    Ok(TdPair {
        d,
        order,
        numerator: num,
        denominator: den,
    })
}

/// The cross-multiplied functional equation of the truncated t_d:
/// phi^d(N) * D * y_d * y_{d(order+1)-1}  =  N * phi^d(D) * y_{d-1} * y_{d(order+1)},
/// exact at truncation. Returns the valuation of the difference at r = 1.
pub fn td_functional_equation_defect(window: &PrecisionWindow, td: &TdPair) -> Result<Val> {
    let n = td.numerator.len();
    let mut lhs = td.numerator.clone();
    for _ in 0..td.d {
        lhs = lhs.frobenius(false)?;
    }
    let mut phid_den = td.denominator.clone();
    for _ in 0..td.d {
        phid_den = phid_den.frobenius(false)?;
    }
    let lhs = lhs
        .mul(&td.denominator)?
        .mul(&phi_iterate_of_pi(window, n, td.d)?)?
        .mul(&phi_iterate_of_pi(window, n, td.d * (td.order + 1) - 1)?)?;
    let rhs = td
        .numerator
        .mul(&phid_den)?
        .mul(&phi_iterate_of_pi(window, n, td.d - 1)?)?
        .mul(&phi_iterate_of_pi(window, n, td.d * (td.order + 1))?)?;
    Ok(lhs.sub(&rhs)?.gauss_valuation(Rat::from_integer(1)))
}

/// Outcome of the controlled imperfect lift.
#[derive(Clone, Debug)]
pub struct LiftResult {
    pub lift: WittElem,
    /// x - \[xbar\], for the certification of the weighted inequality.
    pub difference: WittElem,
    pub vr_lift: Val,
    pub vr_difference: Val,
}

/// Naive monomial-basis lift of an integer-exponent element: Teichmuller
/// coefficients on the basis pi^a T^v. The r-weighted inequality
/// v_r(x - \[xbar\]) >= v_r(x) + 1/2 is certified against the measured r0.
pub fn imperfect_lift(
    xbar: &CharPElem,
    n: usize,
    r: Rat,
    r0: Rat,
) -> Result<LiftResult> {
    if r > r0 {
        return Err(Error::RadiusTooLarge {
            r0: rat::format_rat(r0),
        });
    }
    if !xbar.has_only_integral_exponents() {
        return Err(Error::NonIntegralExponent);
    }
    let w = &xbar.window;
    let fq = w.fq();
    let pi = special_pi(w, n)?;
    let mut acc = WittElem::zero(w, n);
    for (e, c) in xbar.terms() {
        let a = e.pibar.to_integer();
        if a < 0 {
            return Err(Error::InvalidInput(
                "imperfect lift needs nonnegative pibar exponents".into(),
            ));
        }
        let coeff = CharPElem::constant(w, c.clone());
        let mono = CharPElem::monomial(
            w,
            FracExp {
                pibar: Rat::zero(),
                toric: e.toric.clone(),
            },
            fq.one(),
        )?;
        let term = WittElem::teichmuller(&coeff.mul(&mono)?, n).mul(&pi.pow(a as u32)?)?;
        acc = acc.add(&term)?;
    }
    let teich = WittElem::teichmuller(xbar, n);
    let difference = acc.sub(&teich)?;
    Ok(LiftResult {
        vr_lift: acc.gauss_valuation(r),
        vr_difference: difference.gauss_valuation(r),
        lift: acc,
        difference,
    })
}

/// Largest radius from a fixed grid at which the lift inequality holds on
/// the window's generator set; stored in run configurations.
pub fn measure_lift_r0(window: &PrecisionWindow, n: usize) -> Result<Rat> {
    let mut gens = vec![
        CharPElem::one(window).add(&CharPElem::pibar(window))?,
        CharPElem::pibar(window),
        CharPElem::pibar(window)
            .add(&CharPElem::pibar_pow(window, Rat::from_integer(2))?)?,
    ];
    for i in 0..window.rank {
        let s = CharPElem::toric_pow(window, i, Rat::from_integer(1))?;
        gens.push(s.clone());
        gens.push(CharPElem::one(window).add(&s.mul(&CharPElem::pibar(window))?)?);
    }
    let half = Rat::new(1, 2);
    'radius: for r in [
        Rat::from_integer(2),
        Rat::from_integer(1),
        Rat::new(1, 2),
        Rat::new(1, 4),
        Rat::new(1, 8),
        Rat::new(1, 16),
    ] {
        for g in &gens {
            let res = imperfect_lift(g, n, r, r)?;
            let ok = match (res.vr_difference, res.vr_lift) {
                (Val::Infinite, _) => true,
                (Val::Finite(d), Val::Finite(l)) => d >= l + half,
                (Val::Finite(_), Val::Infinite) => false,
            };
            if !ok {
                continue 'radius;
            }
        }
        return Ok(r);
    }
    Err(Error::RadiusTooLarge {
        r0: "no grid radius satisfies the lift inequality".into(),
    })
}

/// Approximate p-th root of a unit y: the exact root of y mod p, lifted
/// monomial-wise with level and denominator headroom. Satisfies
/// v_p(x^p - y) >= 1; by the ultrametric root bound the result is then
/// within valuation 1/p of any exact root, which is recorded as the
/// certificate rather than re-verified.
pub fn approx_pth_root(y: &CycloElem, max_level: u32, max_mden: u32) -> Result<CycloElem> {
    if !y.is_unit_candidate() {
        return Err(Error::NotAUnit);
    }
    y.pth_root_mod_p(max_level, max_mden)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn win(p: u64, mden: u32) -> PrecisionWindow {
        PrecisionWindow::basic(p, mden, -4, 16, 1)
    }

    #[test]
    fn teichmuller_multiplicativity() {
        let w = win(2, 2);
        let x = CharPElem::pibar(&w);
        let y = CharPElem::pibar_pow(&w, Rat::new(1, 2)).unwrap();
        let lhs = WittElem::teichmuller(&x, 3)
            .mul(&WittElem::teichmuller(&y, 3))
            .unwrap();
        let rhs = WittElem::teichmuller(&x.mul(&y).unwrap(), 3);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn frobenius_of_pi() {
        // phi(pi) = [(1+pibar)^p] - 1
        let w = win(2, 2);
        let pi = special_pi(&w, 3).unwrap();
        let lhs = pi.frobenius(false).unwrap();
        let rhs = phi_iterate_of_pi(&w, 3, 1).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn phi_verschiebung_is_p() {
        let w = win(2, 2);
        let x = WittElem::teichmuller(&CharPElem::pibar(&w), 3)
            .add(&WittElem::one(&w, 3))
            .unwrap();
        let pv = x.verschiebung().frobenius(false).unwrap();
        let px = x.mul(&WittElem::from_u64(&w, 3, 2).unwrap()).unwrap();
        assert_eq!(pv, px);
    }

    #[test]
    fn frobenius_bijective_on_exact_elements() {
        let w = win(3, 2);
        let x = WittElem::teichmuller(&CharPElem::pibar_pow(&w, Rat::new(1, 3)).unwrap(), 2)
            .add(&WittElem::one(&w, 2))
            .unwrap();
        let round = x.frobenius(false).unwrap().frobenius(true).unwrap();
        assert_eq!(round, x);
    }

    #[test]
    fn theta_of_teichmuller_root_is_zeta() {
        for p in [2u64, 3] {
            let w = win(p, 2);
            let root = charp::one_plus_pibar_root_pow(&w, 1, 1).unwrap(); // (1+pibar)^(1/p)
            let x = WittElem::teichmuller(&root, 2);
            let th = theta_eval(&x, 2).unwrap();
            let zeta = CycloElem::zeta_power(p, th.level, th.mden, 2, 1, 1, 1).unwrap();
            assert_eq!(th, zeta);
        }
    }

    #[test]
    fn theta_kernel_contains_z() {
        for p in [2u64, 3] {
            for n in [2u32, 3] {
                let w = win(p, 2);
                let z = special_z(&w, n as usize).unwrap();
                let th = theta_eval(&z, n).unwrap();
                assert!(th.is_zero(), "theta(z) != 0 for p={p}, N={n}");
            }
        }
    }

    #[test]
    fn theta_of_pi_vanishes() {
        let w = win(2, 2);
        let pi = special_pi(&w, 2).unwrap();
        let th = theta_eval(&pi, 2).unwrap();
        assert!(th.is_zero());
    }

    #[test]
    fn theta_is_multiplicative_on_teichmullers() {
        let w = win(2, 2);
        let a = charp::one_plus_pibar_root_pow(&w, 1, 1).unwrap();
        let b = CharPElem::pibar_pow(&w, Rat::new(1, 2)).unwrap();
        let ta = theta_eval(&WittElem::teichmuller(&a, 2), 2).unwrap();
        let tb = theta_eval(&WittElem::teichmuller(&b, 2), 2).unwrap();
        let tab = theta_eval(&WittElem::teichmuller(&a.mul(&b).unwrap(), 2), 2).unwrap();
        assert_eq!(ta.mul(&tb).unwrap(), tab);
    }

    #[test]
    fn t_functional_equation_at_truncation() {
        // v(phi(t) - p t) >= order * p/(p-1) - v_p(order!) at p = 2
        let p = 2u64;
        let order = 8u32;
        let w = PrecisionWindow::basic(p, 1, -4, 40, 0);
        let t = special_t(&w, 3, order).unwrap();
        let PeriodUnit::Witt(u) = &t.unit_part else {
            panic!("t is Witt-valued")
        };
        let phi_u = u.frobenius(false).unwrap();
        let pu = u.mul(&WittElem::from_u64(&w, 3, p).unwrap()).unwrap();
        let defect = phi_u.sub(&pu).unwrap();
        let v = defect.gauss_valuation(Rat::from_integer(1));
        // derived tail bound, shifted by the p_power normalization
        let vp_fact: i64 = (1..=order as i64).map(|i| rat::vp_int(p, i) as i64).sum();
        let bound = Rat::from_integer(order as i64) * Rat::new(p as i64, p as i64 - 1)
            - Rat::from_integer(vp_fact)
            + Rat::from_integer(t.p_power); // defect above is p^(-p_power) * (phi(t) - pt)
        match v {
            Val::Infinite => {}
            Val::Finite(v) => assert!(v >= bound, "defect valuation {v} < bound {bound}"),
        }
    }

    #[test]
    fn td_cross_multiplied_identity() {
        let p = 2u64;
        for d in [1u32, 2] {
            let w = PrecisionWindow::basic(p, 1, -4, 300, 0);
            let td = special_td(&w, 2, d, 2).unwrap();
            let defect = td_functional_equation_defect(&w, &td).unwrap();
            assert_eq!(defect, Val::Infinite, "t_{d} identity fails");
        }
    }

    #[test]
    fn imperfect_lift_examples() {
        let w = win(2, 2);
        // toric coordinate lifts to its Teichmuller exactly
        let t = CharPElem::toric_pow(&w, 0, Rat::from_integer(1)).unwrap();
        let res = imperfect_lift(&t, 3, Rat::new(1, 2), Rat::from_integer(2)).unwrap();
        assert!(res.difference.is_zero());
        // 1 + pibar lifts to 1 + pi = [1 + pibar] exactly
        let x = CharPElem::one(&w).add(&CharPElem::pibar(&w)).unwrap();
        let res = imperfect_lift(&x, 3, Rat::new(1, 2), Rat::from_integer(2)).unwrap();
        assert!(res.difference.is_zero());
        // pibar + pibar^2 reduces back mod p and satisfies the inequality
        let y = CharPElem::pibar(&w)
            .add(&CharPElem::pibar_pow(&w, Rat::from_integer(2)).unwrap())
            .unwrap();
        let r0 = measure_lift_r0(&w, 3).unwrap();
        let res = imperfect_lift(&y, 3, r0, r0).unwrap();
        assert_eq!(res.lift.components[0], y); // reduction mod p roundtrip
        match (res.vr_difference, res.vr_lift) {
            (Val::Infinite, _) => {}
            (Val::Finite(d), Val::Finite(l)) => assert!(d >= l + Rat::new(1, 2)),
            _ => panic!("lift valuation missing"),
        }
        // fractional exponents are rejected
        let frac = CharPElem::pibar_pow(&w, Rat::new(1, 2)).unwrap();
        assert!(matches!(
            imperfect_lift(&frac, 3, Rat::new(1, 2), Rat::from_integer(2)),
            Err(Error::NonIntegralExponent)
        ));
    }

    #[test]
    fn approx_root_examples() {
        let p = 2u64;
        // y = 1 + p: root 1, v_p(1 - y) = 1
        let y = CycloElem::from_u64(p, 1, 1, 3, 0, 1 + p);
        let x = approx_pth_root(&y, 3, 3).unwrap();
        let diff = x
            .pow(p)
            .unwrap()
            .sub(&y.raise(x.level, x.mden).unwrap())
            .unwrap();
        assert!(diff.p_valuation() >= Val::from_int(1));
        // y = T: exact root T^(1/p)
        let ring = CycloElem::zero(p, 1, 1, 3, 1);
        let t = ring.toric_monomial(vec![Rat::from_integer(1)], 1).unwrap();
        let rt = approx_pth_root(&t, 3, 3).unwrap();
        let diff = rt
            .pow(p)
            .unwrap()
            .sub(&t.raise(rt.level, rt.mden).unwrap())
            .unwrap();
        assert!(diff.is_zero());
        // non-units are rejected
        let bad = CycloElem::from_u64(p, 1, 1, 3, 0, p);
        assert!(matches!(
            approx_pth_root(&bad, 3, 3),
            Err(Error::NotAUnit)
        ));
    }

    #[test]
    fn z_is_primitive_of_degree_one() {
        // digit extraction: the 0th coordinate is topologically nilpotent
        // (positive valuation) and the 1st coordinate is a unit, so
        // z = p * (unit) + [small] as the kernel generator must be
        for p in [2u64, 3] {
            let w = win(p, 1);
            let z = special_z(&w, 2).unwrap();
            let v0 = z.components[0].valuation();
            assert!(v0 > Val::zero(), "0th digit must be small, got {v0:?}");
            let v1 = z.components[1].valuation();
            assert_eq!(v1, Val::zero(), "1st digit must be a unit");
        }
    }
}
