//! The characteristic-p coefficient world: truncated perfect closures of
//! F_q((pibar))\[M_sigma\] with weighted Gauss valuations, Frobenius, binomial
//! series, the Gamma_N action, and the mu-class decomposition.
//!
//! Elements are finite sums of monomials c * pibar^a * s^v with fractional
//! exponents (denominators dividing p^mden) inside a hard exponent window.
//! Truncation is recorded as an explicit `error_floor` valuation: below the
//! floor the element is exact, at or above it nothing is claimed. The
//! valuation normalization fixes v(pibar) = p/(p-1) and v(s) = weight(s),
//! so every norm is an exact power of p.

use crate::error::{Error, Result};
use crate::ff::{FqCtx, FqElem};
use crate::gamma::GammaElem;
use crate::rat::{self, Rat, Val};
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

/// Precision bookkeeping for one coefficient ring: prime, residue field,
/// denominator budget, pibar-exponent window, toric numerator bound, and the
/// frame weight used by the Gauss valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecisionWindow {
    pub p: u64,
    pub f: u32,
    pub mden: u32,
    pub pibar_lo: Rat,
    pub pibar_hi: Rat,
    pub toric_bound: i64,
    pub rank: usize,
    pub weight: Vec<Rat>,
}

impl PrecisionWindow {
    pub fn new(
        p: u64,
        f: u32,
        mden: u32,
        pibar_lo: Rat,
        pibar_hi: Rat,
        toric_bound: i64,
        weight: Vec<Rat>,
    ) -> Result<Self> {
        if pibar_lo > pibar_hi {
            return Err(Error::InvalidInput("pibar_lo > pibar_hi".into()));
        }
        Ok(PrecisionWindow {
            p,
            f,
            mden,
            pibar_lo,
            pibar_hi,
            toric_bound,
            rank: weight.len(),
            weight,
        })
    }

    /// Window over F_p with zero weights, rank `rank`, integer box [lo, hi].
    pub fn basic(p: u64, mden: u32, lo: i64, hi: i64, rank: usize) -> Self {
        PrecisionWindow {
            p,
            f: 1,
            mden,
            pibar_lo: Rat::from_integer(lo),
            pibar_hi: Rat::from_integer(hi),
            toric_bound: 64,
            rank,
            weight: vec![Rat::zero(); rank],
        }
    }

    pub fn fq(&self) -> FqCtx {
        FqCtx::new(self.p, self.f as usize)
    }

    /// v(pibar) = p/(p-1).
    pub fn pibar_val(&self) -> Rat {
        Rat::new(self.p as i64, self.p as i64 - 1)
    }

    /// Valuation of the monomial with the given exponent.
    pub fn exp_val(&self, e: &FracExp) -> Rat {
        let mut v = e.pibar * self.pibar_val();
        for (t, w) in e.toric.iter().zip(&self.weight) {
            v += *t * *w;
        }
        v
    }

    fn check_denominators(&self, e: &FracExp) -> bool {
        rat::denom_divides_ppow(self.p, self.mden, e.pibar)
            && e.toric
                .iter()
                .all(|t| rat::denom_divides_ppow(self.p, self.mden, *t))
    }

    fn toric_ok(&self, e: &FracExp) -> bool {
        let scale = rat::p_pow(self.p, self.mden as i64);
        e.toric.iter().all(|t| {
            let scaled = *t * scale;
            scaled.is_integer() && scaled.numer().abs() <= self.toric_bound
        })
    }
}

/// Exponent of a monomial pibar^pibar * s^toric.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FracExp {
    pub pibar: Rat,
    pub toric: Vec<Rat>,
}

impl FracExp {
    pub fn pibar_only(a: Rat, rank: usize) -> Self {
        FracExp {
            pibar: a,
            toric: vec![Rat::zero(); rank],
        }
    }

    pub fn is_integral(&self) -> bool {
        self.pibar.is_integer() && self.toric.iter().all(|t| t.is_integer())
    }

    fn mul(&self, other: &FracExp) -> FracExp {
        FracExp {
            pibar: self.pibar + other.pibar,
            toric: self
                .toric
                .iter()
                .zip(&other.toric)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    fn scale(&self, c: Rat) -> FracExp {
        FracExp {
            pibar: self.pibar * c,
            toric: self.toric.iter().map(|t| *t * c).collect(),
        }
    }
}

/// Residue class of an exponent: the (1+pibar)-exponent mod Z and the toric
/// exponents mod Z. The trivial class (0, 0) indexes the imperfect subring.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MuClass {
    pub e_class: Rat,
    pub toric_class: Vec<Rat>,
}

impl MuClass {
    pub fn trivial(rank: usize) -> Self {
        MuClass {
            e_class: Rat::zero(),
            toric_class: vec![Rat::zero(); rank],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.e_class.is_zero() && self.toric_class.iter().all(|t| t.is_zero())
    }

    /// Image of the class under Frobenius (multiplication by p mod Z).
    pub fn times_p(&self, p: u64) -> MuClass {
        let p = Rat::from_integer(p as i64);
        MuClass {
            e_class: rat::frac_part(self.e_class * p),
            toric_class: self
                .toric_class
                .iter()
                .map(|t| rat::frac_part(*t * p))
                .collect(),
        }
    }
}

/// Truncated element of the perfect closure of F_q((pibar))\[M_sigma\].
#[derive(Clone, Debug, PartialEq)]
pub struct CharPElem {
    pub window: PrecisionWindow,
    terms: BTreeMap<FracExp, FqElem>,
    pub error_floor: Val,
}

impl CharPElem {
    pub fn zero(window: &PrecisionWindow) -> Self {
        CharPElem {
            window: window.clone(),
            terms: BTreeMap::new(),
            error_floor: Val::Infinite,
        }
    }

    pub fn from_terms<I>(window: &PrecisionWindow, terms: I, floor: Val) -> Result<Self>
    where
        I: IntoIterator<Item = (FracExp, FqElem)>,
    {
        let fq = window.fq();
        let mut map: BTreeMap<FracExp, FqElem> = BTreeMap::new();
        for (e, c) in terms {
            if fq.is_zero(&c) {
                continue;
            }
            let entry = map.entry(e).or_insert_with(|| fq.zero());
            *entry = fq.add(entry, &c);
        }
        normalize(window, map, floor)
    }

    pub fn constant(window: &PrecisionWindow, c: FqElem) -> Self {
        CharPElem::from_terms(
            window,
            [(FracExp::pibar_only(Rat::zero(), window.rank), c)],
            Val::Infinite,
        )
        .expect("constant in window")
    }

    pub fn one(window: &PrecisionWindow) -> Self {
        CharPElem::constant(window, window.fq().one())
    }

    pub fn monomial(window: &PrecisionWindow, e: FracExp, c: FqElem) -> Result<Self> {
        CharPElem::from_terms(window, [(e, c)], Val::Infinite)
    }

    /// pibar^a.
    pub fn pibar_pow(window: &PrecisionWindow, a: Rat) -> Result<Self> {
        CharPElem::monomial(window, FracExp::pibar_only(a, window.rank), window.fq().one())
    }

    pub fn pibar(window: &PrecisionWindow) -> Self {
        CharPElem::pibar_pow(window, Rat::from_integer(1)).expect("pibar in window")
    }

    /// s_i^e.
    pub fn toric_pow(window: &PrecisionWindow, i: usize, e: Rat) -> Result<Self> {
        let mut toric = vec![Rat::zero(); window.rank];
        toric[i] = e;
        CharPElem::monomial(
            window,
            FracExp {
                pibar: Rat::zero(),
                toric,
            },
            window.fq().one(),
        )
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FracExp, &FqElem)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.error_floor == Val::Infinite
    }

    /// No stored terms (possibly undetermined below the floor).
    pub fn is_zero_at_precision(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.error_floor == Val::Infinite
    }

    /// Weighted Gauss valuation of the stored terms (+inf when none).
    pub fn valuation(&self) -> Val {
        self.terms
            .keys()
            .map(|e| Val::Finite(self.window.exp_val(e)))
            .fold(Val::Infinite, Val::min)
    }

    /// min(valuation, error_floor): the certified lower bound for this
    /// element viewed as "stored terms plus unknown tail".
    pub fn valuation_with_floor(&self) -> Val {
        self.valuation().min(self.error_floor)
    }

    pub fn has_only_integral_exponents(&self) -> bool {
        self.terms.keys().all(|e| e.is_integral())
    }

    pub fn coeff(&self, e: &FracExp) -> FqElem {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn add(&self, other: &CharPElem) -> Result<CharPElem> {
        if self.window != other.window {
            return Err(Error::WindowMismatch);
        }
        let fq = self.window.fq();
        let mut map = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = map.entry(e.clone()).or_insert_with(|| fq.zero());
            *entry = fq.add(entry, c);
        }
        normalize(&self.window, map, self.error_floor.min(other.error_floor))
    }

    pub fn neg(&self) -> CharPElem {
        let fq = self.window.fq();
        CharPElem {
            window: self.window.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), fq.neg(c)))
                .collect(),
            error_floor: self.error_floor,
        }
    }

    pub fn sub(&self, other: &CharPElem) -> Result<CharPElem> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CharPElem) -> Result<CharPElem> {
        if self.window != other.window {
            return Err(Error::WindowMismatch);
        }
        let fq = self.window.fq();
        let vx = self.valuation();
        let vy = other.valuation();
        let floor = (vx.add(other.error_floor))
            .min(self.error_floor.add(vy))
            .min(self.error_floor.add(other.error_floor));
        let mut map: BTreeMap<FracExp, FqElem> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let c = fq.mul(c1, c2);
                if fq.is_zero(&c) {
                    continue;
                }
                let e = e1.mul(e2);
                let entry = map.entry(e).or_insert_with(|| fq.zero());
                *entry = fq.add(entry, &c);
            }
        }
        normalize(&self.window, map, floor)
    }

    pub fn scalar_mul(&self, c: &FqElem) -> CharPElem {
        let fq = self.window.fq();
        if fq.is_zero(c) {
            return CharPElem {
                window: self.window.clone(),
                terms: BTreeMap::new(),
                error_floor: self.error_floor,
            };
        }
        CharPElem {
            window: self.window.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, a)| (e.clone(), fq.mul(a, c)))
                .filter(|(_, a)| !fq.is_zero(a))
                .collect(),
            error_floor: self.error_floor,
        }
    }

    pub fn pow(&self, e: u32) -> Result<CharPElem> {
        let mut acc = CharPElem::one(&self.window);
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

    /// Integer power of either sign (negative powers invert first).
    pub fn pow_i64(&self, e: i64) -> Result<CharPElem> {
        if e >= 0 {
            self.pow(e as u32)
        } else {
            self.invert()?.pow((-e) as u32)
        }
    }

    /// Inverse of an element with a strictly dominant term, by geometric
    /// series around the dominant monomial.
    pub fn invert(&self) -> Result<CharPElem> {
        let fq = self.window.fq();
        let lead = self
            .terms
            .iter()
            .min_by(|(e1, _), (e2, _)| {
                self.window
                    .exp_val(e1)
                    .cmp(&self.window.exp_val(e2))
            })
            .ok_or(Error::NotInvertible)?;
        let vlead = self.window.exp_val(lead.0);
        if Val::Finite(vlead) >= self.error_floor {
            return Err(Error::NotInvertible);
        }
        let strict = self
            .terms
            .iter()
            .filter(|(e, _)| self.window.exp_val(e) == vlead)
            .count()
            == 1;
        if !strict {
            return Err(Error::NotInvertible);
        }
        let lead_exp = lead.0.clone();
        let lead_coeff = lead.1.clone();
        let m_inv = CharPElem::monomial(
            &self.window,
            lead_exp.scale(Rat::from_integer(-1)),
            fq.inv(&lead_coeff)?,
        )?;
        // r = m^-1 x - 1 has strictly positive valuation
        let one = CharPElem::one(&self.window);
        let r = m_inv.mul(self)?.sub(&one)?;
        let inv_floor = self
            .error_floor
            .add(Val::Finite(-vlead))
            .add(Val::Finite(-vlead));
        let mut acc = one.clone();
        let mut powr = one;
        for _ in 0..512 {
            powr = powr.mul(&r.neg())?;
            if powr.is_zero_at_precision() {
                break;
            }
            acc = acc.add(&powr)?;
        }
        if !powr.is_zero_at_precision() {
            return Err(Error::PrecisionExhausted(
                "geometric inversion did not terminate in the window".into(),
            ));
        }
        let out = acc.mul(&m_inv)?;
        let floor = out.error_floor.min(inv_floor);
        normalize(&out.window.clone(), out.terms, floor)
    }
}

fn normalize(
    window: &PrecisionWindow,
    map: BTreeMap<FracExp, FqElem>,
    mut floor: Val,
) -> Result<CharPElem> {
    let fq = window.fq();
    let mut kept: BTreeMap<FracExp, FqElem> = BTreeMap::new();
    for (e, c) in map {
        if fq.is_zero(&c) {
            continue;
        }
        if !window.check_denominators(&e) {
            return Err(Error::PrecisionExhausted(
                "exponent denominator exceeds the mden budget".into(),
            ));
        }
        if e.pibar < window.pibar_lo {
            return Err(Error::WindowUnderflow);
        }
        if !window.toric_ok(&e) {
            return Err(Error::ToricOverflow);
        }
        if e.pibar > window.pibar_hi {
            floor = floor.min(Val::Finite(window.exp_val(&e)));
            continue;
        }
        kept.insert(e, c);
    }
    // the floor may sit below stored terms; drop what it swallows
    let final_terms: BTreeMap<FracExp, FqElem> = kept
        .into_iter()
        .filter(|(e, _)| Val::Finite(window.exp_val(e)) < floor)
        .collect();
    Ok(CharPElem {
        window: window.clone(),
        terms: final_terms,
        error_floor: floor,
    })
}

/// Frobenius x -> x^p (exponents scale by p, coefficients by the p-power
/// map); `inverse` applies the two-sided inverse, which needs denominator
/// headroom within mden.
pub fn frobenius(x: &CharPElem, inverse: bool) -> Result<CharPElem> {
    let w = &x.window;
    let fq = w.fq();
    let p = Rat::from_integer(w.p as i64);
    let scale = if inverse { p.recip() } else { p };
    let mut map = BTreeMap::new();
    for (e, c) in &x.terms {
        let e2 = e.scale(scale);
        if inverse && !w.check_denominators(&e2) {
            return Err(Error::PrecisionExhausted(
                "frobenius inverse exceeds the mden budget".into(),
            ));
        }
        let c2 = if inverse {
            fq.frobenius_inv(c)
        } else {
            fq.frobenius(c)
        };
        map.insert(e2, c2);
    }
    normalize(w, map, x.error_floor.scale(scale))
}

/// C(n, k) mod p for ordinary nonnegative integers via Lucas' theorem.
pub fn binom_lucas(p: u64, mut n: u64, mut k: u64) -> u64 {
    let small = |a: u64, b: u64| -> u64 {
        if b > a {
            return 0;
        }
        let mut num = 1u64;
        let mut den = 1u64;
        for i in 0..b {
            num = num * ((a - i) % p) % p;
            den = den * ((i + 1) % p) % p;
        }
        num * crate::gamma::inv_mod(den.max(1), p) % p
    };
    let mut out = 1;
    while n > 0 || k > 0 {
        out = out * small(n % p, k % p) % p;
        if out == 0 {
            return 0;
        }
        n /= p;
        k /= p;
    }
    out
}

/// C(n, k) mod p for n of either sign: for n < 0 this is (-1)^k C(-n+k-1, k).
pub fn binom_int(p: u64, n: i64, k: u64) -> u64 {
    if n >= 0 {
        binom_lucas(p, n as u64, k)
    } else {
        let c = binom_lucas(p, (-n) as u64 + k - 1, k);
        if k % 2 == 0 {
            c
        } else {
            (p - c) % p
        }
    }
}

/// C(a, k) mod p for a p-adic integer a known mod p^prec.
///
/// Fails with `InsufficientPadicPrecision` when some factor a - i vanishes
/// at the working precision, leaving its valuation undetermined.
pub fn binom_padic(p: u64, a_res: u64, prec: u32, k: u64) -> Result<u64> {
    if k == 0 {
        return Ok(1);
    }
    let m = crate::gamma::pow_u64(p, prec);
    let mut v_num: u64 = 0; // lower bound when a factor is masked
    let mut u_num: u64 = 1;
    let mut masked = false;
    for i in 0..k {
        let f = (a_res % m + m - i % m) % m;
        if f == 0 {
            // the factor's valuation is only known to be >= prec
            masked = true;
            v_num += prec as u64;
            continue;
        }
        let mut ff = f;
        while ff % p == 0 {
            ff /= p;
            v_num += 1;
        }
        u_num = u_num * (ff % p) % p;
    }
    // valuation and unit of k!
    let mut v_den: u64 = 0;
    let mut u_den: u64 = 1;
    for j in 1..=k {
        let mut jj = j;
        while jj % p == 0 {
            jj /= p;
            v_den += 1;
        }
        u_den = u_den * (jj % p) % p;
    }
    if v_num > v_den {
        Ok(0) // holds even with masked factors: the bound already wins
    } else if masked {
        Err(Error::InsufficientPadicPrecision)
    } else if v_num == v_den {
        Ok(u_num * crate::gamma::inv_mod(u_den, p) % p)
    } else {
        Err(Error::InvalidInput(
            "binomial with negative p-valuation".into(),
        ))
    }
}

/// (1 + pibar)^a for a p-adic integer a given mod p^prec, as a pibar-series
/// truncated at `degree_bound` with error floor (degree_bound+1) * p/(p-1).
pub fn binomial_expand(
    window: &PrecisionWindow,
    a_res: u64,
    prec: u32,
    degree_bound: u32,
) -> Result<CharPElem> {
    let fq = window.fq();
    let m = crate::gamma::pow_u64(window.p, prec);
    let mut terms = Vec::new();
    for k in 0..=degree_bound as u64 {
        let c = binom_padic(window.p, a_res, prec, k)?;
        if c != 0 {
            terms.push((
                FracExp::pibar_only(Rat::from_integer(k as i64), window.rank),
                fq.from_prime_field(c),
            ));
        }
    }
    // The first coefficient that can be nonzero beyond the expansion sits at
    // pibar-degree p^v(a) (the leading digit of a); everything below that is
    // a determined zero.
    let vres = if a_res % m == 0 {
        prec
    } else {
        crate::rat::vp_int(window.p, (a_res % m) as i64)
    };
    let k0: i64 = if vres >= 32 {
        i64::MAX / 4
    } else {
        crate::gamma::pow_u64(window.p, vres) as i64
    };
    let first_unknown = (degree_bound as i64 + 1).max(k0);
    let floor = Val::Finite(Rat::from_integer(first_unknown) * window.pibar_val());
    CharPElem::from_terms(window, terms, floor)
}

/// (1 + pibar^(1/p^l))^n for an ordinary integer n of either sign.
/// Nonnegative n expands exactly; negative n is a binomial series truncated
/// by the window (with the floor recorded).
pub fn one_plus_pibar_root_pow(window: &PrecisionWindow, n: i64, l: u32) -> Result<CharPElem> {
    if l > window.mden {
        return Err(Error::PrecisionExhausted(
            "root level exceeds the mden budget".into(),
        ));
    }
    let fq = window.fq();
    let step = rat::p_pow(window.p, -(l as i64));
    let kmax = rat::floor_int(window.pibar_hi / step).max(0);
    if n >= 0 {
        let mut terms = Vec::new();
        for k in 0..=(n as u64).min(kmax as u64) {
            let c = binom_lucas(window.p, n as u64, k);
            if c != 0 {
                terms.push((
                    FracExp::pibar_only(step * Rat::from_integer(k as i64), window.rank),
                    fq.from_prime_field(c),
                ));
            }
        }
        let floor = if n as i64 <= kmax {
            Val::Infinite // exact expansion fits the window
        } else {
            Val::Finite(step * Rat::from_integer(kmax + 1) * window.pibar_val())
        };
        CharPElem::from_terms(window, terms, floor)
    } else {
        let mut terms = Vec::new();
        for k in 0..=(kmax as u64) {
            let c = binom_int(window.p, n, k);
            if c != 0 {
                terms.push((
                    FracExp::pibar_only(step * Rat::from_integer(k as i64), window.rank),
                    fq.from_prime_field(c),
                ));
            }
        }
        let floor = Val::Finite(step * Rat::from_integer(kmax + 1) * window.pibar_val());
        CharPElem::from_terms(window, terms, floor)
    }
}

/// (1 + pibar)^t for exact t in Z[1/p] (any sign): write t = n / p^l in
/// lowest terms and expand (1 + pibar^(1/p^l))^n.
pub fn one_plus_pibar_exact_pow(window: &PrecisionWindow, t: Rat) -> Result<CharPElem> {
    let l = rat::denom_ppow_exp(window.p, t)
        .ok_or_else(|| Error::InvalidInput("exponent denominator is not a p-power".into()))?;
    let n = (t * rat::p_pow(window.p, l as i64)).to_integer();
    one_plus_pibar_root_pow(window, n, l)
}

/// (1 + pibar)^(frac + m) where frac is exact with denominator p^l and m is
/// a p-adic integer residue mod p^prec.
pub fn one_plus_pibar_mixed_pow(
    window: &PrecisionWindow,
    frac: Rat,
    m_res: u64,
    prec: u32,
) -> Result<CharPElem> {
    let d = rat::floor_int(window.pibar_hi).max(0) as u32;
    let series = binomial_expand(window, m_res, prec, d)?;
    if frac.is_zero() {
        return Ok(series);
    }
    let fr = one_plus_pibar_exact_pow(window, frac)?;
    fr.mul(&series)
}

/// The semidirect action on a truncated element:
/// gamma(1 + pibar) = (1 + pibar)^gamma0 and gamma(s) = (1+pibar)^<nu,s> s,
/// extended to fractional exponents through the perfect structure.
pub fn gamma_act_charp(g: &GammaElem, x: &CharPElem) -> Result<CharPElem> {
    let w = &x.window;
    if g.rank() != w.rank {
        return Err(Error::DimensionMismatch {
            expected: w.rank,
            got: g.rank(),
        });
    }
    if g.is_identity() {
        return Ok(x.clone());
    }
    let fq = w.fq();
    let p = w.p;
    let modulus = g.modulus();

    // gamma(pibar^(1/p^l)) per root level, cached across terms
    let mut pibar_images: BTreeMap<u32, CharPElem> = BTreeMap::new();

    let mut acc = CharPElem::zero(w);
    for (e, c) in &x.terms {
        let mut factor = CharPElem::constant(w, c.clone());
        if !e.pibar.is_zero() {
            let l = rat::denom_ppow_exp(p, e.pibar).ok_or(Error::NonIntegralExponent)?;
            let j = (e.pibar * rat::p_pow(p, l as i64)).to_integer();
            if !pibar_images.contains_key(&l) {
                if g.prec < l {
                    return Err(Error::InsufficientPadicPrecision);
                }
                let pl = crate::gamma::pow_u64(p, l);
                let r = g.gamma0 % pl;
                let m_res = ((g.gamma0 - r) / pl) % (modulus / pl).max(1);
                let frac = Rat::new(r as i64, pl as i64);
                let img = one_plus_pibar_mixed_pow(w, frac, m_res, g.prec - l)?
                    .sub(&CharPElem::one(w))?;
                pibar_images.insert(l, img);
            }
            let base = pibar_images.get(&l).unwrap();
            factor = factor.mul(&base.pow_i64(j)?)?;
        }
        if e.toric.iter().any(|t| !t.is_zero()) {
            let mut lmax = 0u32;
            for t in &e.toric {
                if !t.is_zero() {
                    lmax = lmax.max(rat::denom_ppow_exp(p, *t).ok_or(Error::NonIntegralExponent)?);
                }
            }
            if g.prec < lmax {
                return Err(Error::InsufficientPadicPrecision);
            }
            let plm = crate::gamma::pow_u64(p, lmax);
            // numerator of <nu, v> over the common denominator p^lmax
            let mut num: u64 = 0;
            for (t, &nu_i) in e.toric.iter().zip(&g.nu) {
                let scaled = (*t * rat::p_pow(p, lmax as i64)).to_integer();
                let s_mod = scaled.rem_euclid(modulus as i64) as u64;
                num = (num + ((nu_i as u128 * s_mod as u128) % modulus as u128) as u64) % modulus;
            }
            let r = num % plm;
            let m_res = ((num - r) / plm) % (modulus / plm).max(1);
            let frac = Rat::new(r as i64, plm as i64);
            let mult = one_plus_pibar_mixed_pow(w, frac, m_res, g.prec - lmax)?;
            factor = factor.mul(&mult)?;
            let mono = CharPElem::monomial(
                w,
                FracExp {
                    pibar: Rat::zero(),
                    toric: e.toric.clone(),
                },
                fq.one(),
            )?;
            factor = factor.mul(&mono)?;
        }
        acc = acc.add(&factor)?;
    }
    let floor = acc.error_floor.min(x.error_floor);
    normalize(w, acc.terms, floor)
}

/// Decomposition into mu-class components. The components sum to the input
/// exactly; only the fractional part of each pibar-exponent is converted to
/// the (1+pibar)-basis (via the exact identity
/// pibar^(r/p^l) = ((1+pibar)^(1/p^l) - 1)^r) and converted back on output,
/// so storage stays in the pibar-monomial basis.
pub fn mu_decompose(x: &CharPElem) -> Result<Vec<(MuClass, CharPElem)>> {
    let w = &x.window;
    let fq = w.fq();
    let p = w.p;
    let mut components: BTreeMap<MuClass, BTreeMap<FracExp, FqElem>> = BTreeMap::new();

    for (e, c) in &x.terms {
        let frac = rat::frac_part(e.pibar);
        let whole = e.pibar - frac; // integer part, any sign
        let toric_class: Vec<Rat> = e.toric.iter().map(|t| rat::frac_part(*t)).collect();
        let l = rat::denom_ppow_exp(p, frac).expect("window-checked denominator");
        let pl = crate::gamma::pow_u64(p, l) as i64;
        let fnum = (frac * Rat::from_integer(pl)).to_integer() as u64;
        // pibar^(fnum/p^l) = sum_k C(fnum,k) (-1)^(fnum-k) (1+pibar)^(k/p^l)
        for k in 0..=fnum {
            let mut coeff = binom_lucas(p, fnum, k);
            if coeff == 0 {
                continue;
            }
            if (fnum - k) % 2 == 1 {
                coeff = (p - coeff) % p;
            }
            let e_exp = Rat::new(k as i64, pl);
            let class = MuClass {
                e_class: rat::frac_part(e_exp),
                toric_class: toric_class.clone(),
            };
            // back to the pibar basis: (1+pibar)^(k/p^l) = (1+pibar^(1/p^l))^k
            let slot = components.entry(class).or_default();
            for t in 0..=k {
                let b = binom_lucas(p, k, t);
                if b == 0 {
                    continue;
                }
                let scalar = fq.mul(c, &fq.from_prime_field(coeff * b % p));
                let exp = FracExp {
                    pibar: whole + Rat::new(t as i64, pl),
                    toric: e.toric.clone(),
                };
                let entry = slot.entry(exp).or_insert_with(|| fq.zero());
                *entry = fq.add(entry, &scalar);
            }
        }
    }

    let mut out = Vec::new();
    for (class, map) in components {
        let elem = normalize(w, map, x.error_floor)?;
        if !elem.is_zero_at_precision() {
            out.push((class, elem));
        }
    }
    if out.is_empty() && x.error_floor != Val::Infinite {
        // keep the floor visible on the trivial class
        out.push((
            MuClass::trivial(w.rank),
            CharPElem {
                window: w.clone(),
                terms: BTreeMap::new(),
                error_floor: x.error_floor,
            },
        ));
    }
    Ok(out)
}

/// Projection onto the classes selected by the predicate.
pub fn mu_project<F: Fn(&MuClass) -> bool>(x: &CharPElem, keep: F) -> Result<CharPElem> {
    let mut acc = CharPElem {
        window: x.window.clone(),
        terms: BTreeMap::new(),
        error_floor: x.error_floor,
    };
    for (class, comp) in mu_decompose(x)? {
        if keep(&class) {
            acc = acc.add(&comp)?;
        }
    }
    Ok(acc)
}

/// Deterministic integer-exponent sample elements of the imperfect subring,
/// used by the analyticity measurements.
pub fn standard_samples(window: &PrecisionWindow) -> Vec<CharPElem> {
    let mut out = Vec::new();
    let one = CharPElem::one(window);
    let pibar = CharPElem::pibar(window);
    out.push(one.add(&pibar).unwrap());
    out.push(pibar.clone());
    for i in 0..window.rank {
        let s = CharPElem::toric_pow(window, i, Rat::from_integer(1)).unwrap();
        out.push(s.clone());
        out.push(pibar.mul(&s).unwrap());
        out.push(one.add(&s.mul(&s).unwrap()).unwrap());
    }
    out.push(pibar.mul(&pibar).unwrap().add(&pibar).unwrap());
    out
}

/// Measured analyticity exponent of the U_n-action: min over samples x and
/// the standard generators g of U_n of v(g(x) - x) - v(x). Constants
/// contribute +inf.
pub fn gamma_bound(window: &PrecisionWindow, n: u32, samples: &[CharPElem]) -> Result<Val> {
    let prec = n + window.mden + 10;
    let gens = GammaElem::un_generators(window.p, prec, window.rank, n);
    let mut best = Val::Infinite;
    let mut best_visible = true;
    for g in &gens {
        for x in samples {
            let gx = gamma_act_charp(g, x)?;
            let d = gx.sub(x)?;
            let visible = !d.is_zero_at_precision();
            let dval = d.valuation_with_floor();
            if dval == Val::Infinite {
                continue; // exact fixed point
            }
            let gain = match (dval, x.valuation()) {
                (Val::Finite(a), Val::Finite(b)) => Val::Finite(a - b),
                _ => Val::Infinite,
            };
            if gain < best {
                best = gain;
                best_visible = visible;
            }
        }
    }
    if !best_visible {
        // the reported minimum would come from a difference hidden below a
        // truncation floor, so the measurement is inconclusive
        return Err(Error::PrecisionExhausted(
            "difference is masked by truncation".into(),
        ));
    }
    Ok(best)
}

/// Uniformly random element inside the window, for property batteries.
pub fn random_element<R: rand::Rng>(
    window: &PrecisionWindow,
    rng: &mut R,
    nterms: usize,
    allow_fractional: bool,
) -> CharPElem {
    let fq = window.fq();
    let lo = rat::floor_int(window.pibar_lo).max(0);
    let hi = rat::floor_int(window.pibar_hi);
    let denmax = if allow_fractional { window.mden } else { 0 };
    let mut terms = Vec::new();
    let pm = rat::p_pow(window.p, window.mden as i64);
    for _ in 0..nterms {
        let l = rng.gen_range(0..=denmax);
        let pl = crate::gamma::pow_u64(window.p, l) as i64;
        let pibar = Rat::new(rng.gen_range(lo * pl..=(hi * pl).max(lo * pl + 1)), pl);
        let toric: Vec<Rat> = (0..window.rank)
            .map(|_| {
                let l2 = rng.gen_range(0..=denmax);
                let pl2 = crate::gamma::pow_u64(window.p, l2) as i64;
                // keep the numerator inside the window's toric budget
                let cap = (2 * pl2).min((Rat::new(window.toric_bound * pl2, 1) / pm).to_integer());
                Rat::new(rng.gen_range(-cap..=cap.max(1)), pl2)
            })
            .collect();
        let c = fq.random(rng);
        terms.push((FracExp { pibar, toric }, c));
    }
    CharPElem::from_terms(window, terms, Val::Infinite).expect("random element in window")
}
