//! Universal Witt-vector arithmetic at finite length.
//!
//! The sum/product/negation polynomials are generated once per (p, n) by
//! solving the ghost-component identities over Q, checked for integrality,
//! reduced mod p (legitimate because every coefficient ring here has
//! characteristic p), and cached. Evaluation is generic over any
//! characteristic-p coefficient ring.

use crate::error::{Error, Result};
use crate::ff::{FqCtx, FqElem};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

/// Default cap on Witt length; generation cost grows fast in n.
pub const MAX_WITT_LENGTH: usize = 4;

type Mono = Vec<u32>;
type QPoly = BTreeMap<Mono, BigRational>;

/// A universal polynomial with coefficients reduced mod p, in `nvars`
/// variables (sparse monomial list).
#[derive(Clone, Debug)]
pub struct ModPoly {
    pub nvars: usize,
    pub terms: Vec<(Mono, u64)>,
}

/// The universal polynomials for W_n: sum_i, prod_i, neg_i in terms of the
/// coordinates x_0..x_{n-1}, y_0..y_{n-1} (neg uses only the x block).
#[derive(Clone, Debug)]
pub struct WittPolys {
    pub p: u64,
    pub n: usize,
    pub sum: Vec<ModPoly>,
    pub prod: Vec<ModPoly>,
    pub neg: Vec<ModPoly>,
}

static POLY_CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<WittPolys>>>> = OnceLock::new();

pub fn witt_polys(p: u64, n: usize) -> Result<Arc<WittPolys>> {
    if n == 0 || n > MAX_WITT_LENGTH {
        return Err(Error::InvalidInput(format!(
            "witt length {n} outside 1..={MAX_WITT_LENGTH}"
        )));
    }
    let cache = POLY_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(w) = guard.get(&(p, n)) {
        return Ok(w.clone());
    }
    let w = Arc::new(generate(p, n));
    guard.insert((p, n), w.clone());
    Ok(w)
}

fn qp_zero() -> QPoly {
    BTreeMap::new()
}

fn qp_var(nvars: usize, i: usize) -> QPoly {
    let mut m = vec![0u32; nvars];
    m[i] = 1;
    let mut p = qp_zero();
    p.insert(m, BigRational::one());
    p
}

fn qp_add(a: &QPoly, b: &QPoly) -> QPoly {
    let mut out = a.clone();
    for (m, c) in b {
        let e = out.entry(m.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            out.remove(m);
        }
    }
    out
}

fn qp_scale(a: &QPoly, c: &BigRational) -> QPoly {
    if c.is_zero() {
        return qp_zero();
    }
    a.iter().map(|(m, x)| (m.clone(), x * c)).collect()
}

fn qp_mul(a: &QPoly, b: &QPoly) -> QPoly {
    let mut out = qp_zero();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m: Mono = ma.iter().zip(mb).map(|(&x, &y)| x + y).collect();
            let e = out.entry(m).or_insert_with(BigRational::zero);
            *e += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn qp_pow(a: &QPoly, e: u32) -> QPoly {
    let mut acc: Option<QPoly> = None;
    let mut base = a.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(x) => qp_mul(&x, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = qp_mul(&base, &base);
        }
    }
    acc.unwrap_or_else(|| {
        let mut one = qp_zero();
        one.insert(vec![0; a.keys().next().map_or(0, |m| m.len())], BigRational::one());
        one
    })
}

/// Ghost component w_i over the variable block starting at `offset`.
fn ghost(p: u64, nvars: usize, offset: usize, i: usize) -> QPoly {
    let mut acc = qp_zero();
    let mut pj = BigInt::one();
    for j in 0..=i {
        let v = qp_var(nvars, offset + j);
        let pw = qp_pow(&v, (p as u32).pow((i - j) as u32));
        acc = qp_add(&acc, &qp_scale(&pw, &BigRational::from_integer(pj.clone())));
        pj *= p;
    }
    acc
}

fn reduce_mod_p(p: u64, poly: &QPoly, nvars: usize) -> ModPoly {
    let pp = BigInt::from(p);
    let mut terms = Vec::new();
    for (m, c) in poly {
        assert!(
            c.denom().is_one() || (-c).denom().is_one(),
            "universal polynomial coefficient is not integral"
        );
        let num = c.numer();
        let r = ((num % &pp) + &pp) % &pp;
        let r64: u64 = r.to_string().parse().unwrap();
        if r64 != 0 {
            terms.push((m.clone(), r64));
        }
    }
    ModPoly { nvars, terms }
}

fn generate(p: u64, n: usize) -> WittPolys {
    let nvars = 2 * n;
    let pbig = BigRational::from_integer(BigInt::from(p));

    // S_i = (w_i(x) + w_i(y) - sum_{j<i} p^j S_j^{p^(i-j)}) / p^i
    let mut sums: Vec<QPoly> = Vec::new();
    for i in 0..n {
        let mut rhs = qp_add(&ghost(p, nvars, 0, i), &ghost(p, nvars, n, i));
        let mut pj = BigRational::one();
        for (j, s) in sums.iter().enumerate().take(i) {
            let pw = qp_pow(s, (p as u32).pow((i - j) as u32));
            rhs = qp_add(&rhs, &qp_scale(&pw, &-pj.clone()));
            pj *= &pbig;
        }
        let pi = (0..i).fold(BigRational::one(), |a, _| a * &pbig);
        sums.push(qp_scale(&rhs, &pi.recip()));
    }

    // P_i = (w_i(x) w_i(y) - sum_{j<i} p^j P_j^{p^(i-j)}) / p^i
    let mut prods: Vec<QPoly> = Vec::new();
    for i in 0..n {
        let mut rhs = qp_mul(&ghost(p, nvars, 0, i), &ghost(p, nvars, n, i));
        let mut pj = BigRational::one();
        for (j, q) in prods.iter().enumerate().take(i) {
            let pw = qp_pow(q, (p as u32).pow((i - j) as u32));
            rhs = qp_add(&rhs, &qp_scale(&pw, &-pj.clone()));
            pj *= &pbig;
        }
        let pi = (0..i).fold(BigRational::one(), |a, _| a * &pbig);
        prods.push(qp_scale(&rhs, &pi.recip()));
    }

    // N_i = (-w_i(x) - sum_{j<i} p^j N_j^{p^(i-j)}) / p^i
    let mut negs: Vec<QPoly> = Vec::new();
    for i in 0..n {
        let mut rhs = qp_scale(&ghost(p, nvars, 0, i), &-BigRational::one());
        let mut pj = BigRational::one();
        for (j, q) in negs.iter().enumerate().take(i) {
            let pw = qp_pow(q, (p as u32).pow((i - j) as u32));
            rhs = qp_add(&rhs, &qp_scale(&pw, &-pj.clone()));
            pj *= &pbig;
        }
        let pi = (0..i).fold(BigRational::one(), |a, _| a * &pbig);
        negs.push(qp_scale(&rhs, &pi.recip()));
    }

    WittPolys {
        p,
        n,
        sum: sums.iter().map(|s| reduce_mod_p(p, s, nvars)).collect(),
        prod: prods.iter().map(|s| reduce_mod_p(p, s, nvars)).collect(),
        neg: negs.iter().map(|s| reduce_mod_p(p, s, nvars)).collect(),
    }
}

/// A characteristic-p coefficient ring in which Witt coordinates live.
pub trait WittCoeffRing {
    type Elem: Clone + PartialEq;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    /// Image of a prime-field residue.
    fn scalar(&self, c: u64) -> Self::Elem;
    /// x -> x^p.
    fn pth_power(&self, a: &Self::Elem) -> Result<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
}

/// Evaluates a reduced universal polynomial on the concatenated variable
/// assignment (x-block then y-block).
pub fn eval_modpoly<R: WittCoeffRing>(ring: &R, poly: &ModPoly, vars: &[R::Elem]) -> Result<R::Elem> {
    assert_eq!(vars.len(), poly.nvars);
    // precompute powers per variable
    let mut maxdeg = vec![0u32; poly.nvars];
    for (m, _) in &poly.terms {
        for (i, &e) in m.iter().enumerate() {
            maxdeg[i] = maxdeg[i].max(e);
        }
    }
    let mut powers: Vec<Vec<R::Elem>> = Vec::with_capacity(poly.nvars);
    for (i, v) in vars.iter().enumerate() {
        let mut ps = vec![ring.one()];
        for k in 1..=maxdeg[i] as usize {
            let prev = ps[k - 1].clone();
            ps.push(ring.mul(&prev, v)?);
        }
        powers.push(ps);
    }
    let mut acc = ring.zero();
    for (m, c) in &poly.terms {
        let mut t = ring.scalar(*c);
        for (i, &e) in m.iter().enumerate() {
            if e > 0 {
                if ring.is_zero(&powers[i][e as usize]) {
                    t = ring.zero();
                    break;
                }
                t = ring.mul(&t, &powers[i][e as usize])?;
            }
        }
        acc = ring.add(&acc, &t)?;
    }
    Ok(acc)
}

pub fn witt_add_generic<R: WittCoeffRing>(
    ring: &R,
    p: u64,
    x: &[R::Elem],
    y: &[R::Elem],
) -> Result<Vec<R::Elem>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch);
    }
    let polys = witt_polys(p, n)?;
    let vars: Vec<R::Elem> = x.iter().chain(y.iter()).cloned().collect();
    polys
        .sum
        .iter()
        .map(|s| eval_modpoly(ring, s, &vars))
        .collect()
}

pub fn witt_mul_generic<R: WittCoeffRing>(
    ring: &R,
    p: u64,
    x: &[R::Elem],
    y: &[R::Elem],
) -> Result<Vec<R::Elem>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch);
    }
    let polys = witt_polys(p, n)?;
    let vars: Vec<R::Elem> = x.iter().chain(y.iter()).cloned().collect();
    polys
        .prod
        .iter()
        .map(|s| eval_modpoly(ring, s, &vars))
        .collect()
}

pub fn witt_neg_generic<R: WittCoeffRing>(ring: &R, p: u64, x: &[R::Elem]) -> Result<Vec<R::Elem>> {
    let n = x.len();
    let polys = witt_polys(p, n)?;
    // neg polynomials use only the x block; pad with zeros
    let mut vars: Vec<R::Elem> = x.to_vec();
    vars.extend(std::iter::repeat(ring.zero()).take(n));
    polys
        .neg
        .iter()
        .map(|s| eval_modpoly(ring, s, &vars))
        .collect()
}

impl WittCoeffRing for FqCtx {
    type Elem = FqElem;
    fn zero(&self) -> FqElem {
        FqCtx::zero(self)
    }
    fn one(&self) -> FqElem {
        FqCtx::one(self)
    }
    fn add(&self, a: &FqElem, b: &FqElem) -> Result<FqElem> {
        Ok(FqCtx::add(self, a, b))
    }
    fn mul(&self, a: &FqElem, b: &FqElem) -> Result<FqElem> {
        Ok(FqCtx::mul(self, a, b))
    }
    fn scalar(&self, c: u64) -> FqElem {
        self.from_prime_field(c)
    }
    fn pth_power(&self, a: &FqElem) -> Result<FqElem> {
        Ok(self.frobenius(a))
    }
    fn is_zero(&self, a: &FqElem) -> bool {
        FqCtx::is_zero(self, a)
    }
}

/// A scalar Witt vector: an element of W_n(F_q), used as the coefficient
/// base for phi-modules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WittScalar {
    pub p: u64,
    pub deg: usize,
    pub comps: Vec<FqElem>,
}

impl WittScalar {
    pub fn ctx(&self) -> FqCtx {
        FqCtx::new(self.p, self.deg)
    }

    pub fn zero(p: u64, deg: usize, n: usize) -> Self {
        WittScalar {
            p,
            deg,
            comps: vec![vec![]; n],
        }
    }

    pub fn one(p: u64, deg: usize, n: usize) -> Self {
        let mut w = WittScalar::zero(p, deg, n);
        w.comps[0] = vec![1];
        w
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn teichmuller(p: u64, deg: usize, n: usize, c: FqElem) -> Self {
        let mut w = WittScalar::zero(p, deg, n);
        w.comps[0] = c;
        w
    }

    pub fn is_zero(&self) -> bool {
        let fq = self.ctx();
        self.comps.iter().all(|c| fq.is_zero(c))
    }

    pub fn is_unit(&self) -> bool {
        !self.ctx().is_zero(&self.comps[0])
    }

    pub fn add(&self, other: &WittScalar) -> Result<WittScalar> {
        let fq = self.ctx();
        Ok(WittScalar {
            p: self.p,
            deg: self.deg,
            comps: witt_add_generic(&fq, self.p, &self.comps, &other.comps)?,
        })
    }

    pub fn mul(&self, other: &WittScalar) -> Result<WittScalar> {
        let fq = self.ctx();
        Ok(WittScalar {
            p: self.p,
            deg: self.deg,
            comps: witt_mul_generic(&fq, self.p, &self.comps, &other.comps)?,
        })
    }

    pub fn neg(&self) -> Result<WittScalar> {
        let fq = self.ctx();
        Ok(WittScalar {
            p: self.p,
            deg: self.deg,
            comps: witt_neg_generic(&fq, self.p, &self.comps)?,
        })
    }

    pub fn sub(&self, other: &WittScalar) -> Result<WittScalar> {
        self.add(&other.neg()?)
    }

    pub fn from_u64(p: u64, deg: usize, n: usize, mut v: u64) -> Result<WittScalar> {
        v %= p.pow(n as u32);
        let one = WittScalar::one(p, deg, n);
        let mut acc = WittScalar::zero(p, deg, n);
        let mut base = one;
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

    /// Witt-vector Frobenius: the p-power map on each coordinate.
    pub fn frobenius(&self) -> WittScalar {
        let fq = self.ctx();
        WittScalar {
            p: self.p,
            deg: self.deg,
            comps: self.comps.iter().map(|c| fq.frobenius(c)).collect(),
        }
    }

    /// Inverse of a unit by Newton iteration y <- y(2 - xy).
    pub fn inv(&self) -> Result<WittScalar> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let fq = self.ctx();
        let n = self.len();
        let mut y = WittScalar::teichmuller(self.p, self.deg, n, fq.inv(&self.comps[0])?);
        let two = WittScalar::from_u64(self.p, self.deg, n, 2)?;
        for _ in 0..n + 2 {
            let xy = self.mul(&y)?;
            y = y.mul(&two.sub(&xy)?)?;
        }
        let check = self.mul(&y)?;
        if check != WittScalar::one(self.p, self.deg, n) {
            return Err(Error::NotAUnit);
        }
        Ok(y)
    }

    /// Embeds into W_n over a larger residue field.
    pub fn embed(&self, big_deg: usize) -> Result<WittScalar> {
        let small = self.ctx();
        let big = FqCtx::new(self.p, big_deg);
        Ok(WittScalar {
            p: self.p,
            deg: big_deg,
            comps: self
                .comps
                .iter()
                .map(|c| small.embed(c, &big))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// The image of this scalar under W_n(F_p) = Z/p^n, when deg = 1.
    /// Computed by matching against the additive enumeration of multiples
    /// of 1; used by the exhaustive arithmetic oracle.
    pub fn to_residue(&self) -> Result<u64> {
        if self.deg != 1 {
            return Err(Error::UnsupportedCoefficientField);
        }
        let n = self.len();
        let max = self.p.pow(n as u32);
        let mut acc = WittScalar::zero(self.p, 1, n);
        let one = WittScalar::one(self.p, 1, n);
        for k in 0..max {
            if acc == *self {
                return Ok(k);
            }
            acc = acc.add(&one)?;
        }
        Err(Error::InvalidInput("residue enumeration failed".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghost_identities_hold_mod_p_small() {
        // [1] + [1] in W_2(F_2) is (0, 1), i.e. 2 in Z/4
        let one = WittScalar::one(2, 1, 2);
        let two = one.add(&one).unwrap();
        assert_eq!(two.comps, vec![vec![], vec![1]]);
        assert_eq!(two.to_residue().unwrap(), 2);
    }

    #[test]
    fn wn_fp_matches_zpn() {
        for (p, n) in [(2u64, 2usize), (2, 3), (3, 2)] {
            let max = p.pow(n as u32);
            let elems: Vec<WittScalar> = (0..max)
                .map(|k| WittScalar::from_u64(p, 1, n, k).unwrap())
                .collect();
            for a in 0..max {
                for b in 0..max {
                    let s = elems[a as usize].add(&elems[b as usize]).unwrap();
                    assert_eq!(s, elems[((a + b) % max) as usize], "add {a}+{b} mod {max}");
                    let m = elems[a as usize].mul(&elems[b as usize]).unwrap();
                    assert_eq!(m, elems[((a * b) % max) as usize], "mul {a}*{b} mod {max}");
                }
            }
        }
    }

    #[test]
    fn teichmuller_multiplicative() {
        let f4 = FqCtx::new(2, 2);
        for a in 0..4u64 {
            for b in 0..4u64 {
                let x = f4.from_index(a);
                let y = f4.from_index(b);
                let tx = WittScalar::teichmuller(2, 2, 3, x.clone());
                let ty = WittScalar::teichmuller(2, 2, 3, y.clone());
                let txy = WittScalar::teichmuller(2, 2, 3, f4.mul(&x, &y));
                assert_eq!(tx.mul(&ty).unwrap(), txy);
            }
        }
    }

    #[test]
    fn negation_and_subtraction() {
        for (p, n) in [(2u64, 3usize), (3, 2)] {
            let max = p.pow(n as u32);
            for a in 0..max {
                let x = WittScalar::from_u64(p, 1, n, a).unwrap();
                let nx = x.neg().unwrap();
                assert!(x.add(&nx).unwrap().is_zero());
                assert_eq!(nx.to_residue().unwrap(), (max - a) % max);
            }
        }
    }

    #[test]
    fn unit_inverse() {
        let x = WittScalar::from_u64(3, 1, 3, 5).unwrap();
        let y = x.inv().unwrap();
        assert_eq!(y.to_residue().unwrap(), 11); // 5 * 11 = 55 = 1 mod 27
        assert!(WittScalar::from_u64(2, 1, 2, 2).unwrap().inv().is_err());
    }

    #[test]
    fn w3_f3_matches_z27_spotwise() {
        for (a, b) in [(5u64, 7u64), (13, 22), (26, 26)] {
            let x = WittScalar::from_u64(3, 1, 3, a).unwrap();
            let y = WittScalar::from_u64(3, 1, 3, b).unwrap();
            assert_eq!(x.add(&y).unwrap().to_residue().unwrap(), (a + b) % 27);
            assert_eq!(x.mul(&y).unwrap().to_residue().unwrap(), (a * b) % 27);
        }
    }

    #[test]
    fn length_four_polynomials_generate_and_compute() {
        // the default cap allows n = 4; spot-check W_4(F_2) = Z/16
        let one = WittScalar::one(2, 1, 4);
        let mut acc = WittScalar::zero(2, 1, 4);
        for _ in 0..16 {
            acc = acc.add(&one).unwrap();
        }
        assert!(acc.is_zero(), "16 * 1 = 0 in Z/16");
        let five = WittScalar::from_u64(2, 1, 4, 5).unwrap();
        let three = WittScalar::from_u64(2, 1, 4, 3).unwrap();
        assert_eq!(five.mul(&three).unwrap().to_residue().unwrap(), 15);
        assert!(witt_polys(2, 5).is_err());
    }

    #[test]
    fn frobenius_on_w2_f4() {
        let f4 = FqCtx::new(2, 2);
        let w = vec![0u64, 1]; // the generator omega
        let x = WittScalar::teichmuller(2, 2, 2, w.clone());
        let fx = x.frobenius();
        assert_eq!(fx.comps[0], f4.mul(&w, &w));
    }
}
