//! Small finite fields F_{p^m} for desk-scale coefficient arithmetic.
//!
//! Elements are little-endian coefficient vectors modulo a canonical monic
//! irreducible (the first one in base-p enumeration order, so a given (p, m)
//! names the same field in every run). Subfield embeddings are found by root
//! search and cached.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

pub type FqElem = Vec<u64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqCtx {
    pub p: u64,
    pub deg: usize,
    pub modulus: Vec<u64>, // monic, length deg + 1
}

static IRRED_CACHE: OnceLock<Mutex<HashMap<(u64, usize), Vec<u64>>>> = OnceLock::new();
static EMBED_CACHE: OnceLock<Mutex<HashMap<(u64, usize, usize), FqElem>>> = OnceLock::new();

impl FqCtx {
    pub fn new(p: u64, deg: usize) -> Self {
        assert!(deg >= 1);
        let cache = IRRED_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let modulus = {
            let mut guard = cache.lock().unwrap();
            guard
                .entry((p, deg))
                .or_insert_with(|| find_irreducible(p, deg))
                .clone()
        };
        FqCtx { p, deg, modulus }
    }

    pub fn q(&self) -> u64 {
        self.p.pow(self.deg as u32)
    }

    pub fn zero(&self) -> FqElem {
        vec![]
    }

    pub fn one(&self) -> FqElem {
        vec![1]
    }

    pub fn from_u64(&self, n: u64) -> FqElem {
        trim(vec![n % self.p])
    }

    /// Element with the given base-p expansion index, in enumeration order.
    pub fn from_index(&self, mut k: u64) -> FqElem {
        let mut c = Vec::new();
        for _ in 0..self.deg {
            c.push(k % self.p);
            k /= self.p;
        }
        trim(c)
    }

    pub fn is_zero(&self, x: &FqElem) -> bool {
        x.iter().all(|&c| c == 0)
    }

    pub fn add(&self, x: &FqElem, y: &FqElem) -> FqElem {
        let n = x.len().max(y.len());
        let mut out = vec![0; n];
        for i in 0..n {
            let a = x.get(i).copied().unwrap_or(0);
            let b = y.get(i).copied().unwrap_or(0);
            out[i] = (a + b) % self.p;
        }
        trim(out)
    }

    pub fn neg(&self, x: &FqElem) -> FqElem {
        trim(x.iter().map(|&c| (self.p - c) % self.p).collect())
    }

    pub fn sub(&self, x: &FqElem, y: &FqElem) -> FqElem {
        self.add(x, &self.neg(y))
    }

    pub fn mul(&self, x: &FqElem, y: &FqElem) -> FqElem {
        if self.is_zero(x) || self.is_zero(y) {
            return vec![];
        }
        let mut prod = vec![0u64; x.len() + y.len() - 1];
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % self.p;
            }
        }
        self.reduce(prod)
    }

    fn reduce(&self, mut f: Vec<u64>) -> FqElem {
        while f.len() > self.deg {
            let top = f.len() - 1;
            let c = f[top];
            if c != 0 {
                let shift = top - self.deg;
                for i in 0..self.deg {
                    let m = self.modulus[i];
                    if m != 0 {
                        let sub = (c * m) % self.p;
                        f[shift + i] = (f[shift + i] + self.p * self.p - sub) % self.p;
                    }
                }
            }
            f.pop();
        }
        trim(f)
    }

    pub fn pow(&self, x: &FqElem, mut e: u64) -> FqElem {
        let mut base = x.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, x: &FqElem) -> Result<FqElem> {
        if self.is_zero(x) {
            return Err(Error::NotAUnit);
        }
        // x^(q-2)
        Ok(self.pow(x, self.q() - 2))
    }

    /// Absolute Frobenius x -> x^p.
    pub fn frobenius(&self, x: &FqElem) -> FqElem {
        self.pow(x, self.p)
    }

    /// Inverse of the absolute Frobenius (p^(deg-1)-power map).
    pub fn frobenius_inv(&self, x: &FqElem) -> FqElem {
        self.pow(x, self.p.pow(self.deg as u32 - 1))
    }

    /// Image of a prime-field residue.
    pub fn from_prime_field(&self, c: u64) -> FqElem {
        self.from_u64(c)
    }

    /// Embedding into a larger field of the same characteristic; the image of
    /// the canonical generator is cached per (p, deg, big.deg).
    pub fn embed(&self, x: &FqElem, big: &FqCtx) -> Result<FqElem> {
        assert_eq!(self.p, big.p);
        if self.deg == big.deg {
            return Ok(x.clone());
        }
        if big.deg % self.deg != 0 {
            return Err(Error::InvalidInput(format!(
                "no embedding F_{}^{} -> F_{}^{}",
                self.p, self.deg, big.p, big.deg
            )));
        }
        let root = self.embedding_root(big)?;
        // x = sum c_i alpha^i maps to sum c_i root^i
        let mut acc = big.zero();
        let mut pw = big.one();
        for &c in x {
            if c != 0 {
                acc = big.add(&acc, &big.mul(&big.from_u64(c), &pw));
            }
            pw = big.mul(&pw, &root);
        }
        Ok(acc)
    }

    fn embedding_root(&self, big: &FqCtx) -> Result<FqElem> {
        let cache = EMBED_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (self.p, self.deg, big.deg);
        if let Some(r) = cache.lock().unwrap().get(&key) {
            return Ok(r.clone());
        }
        // the copy of F_{p^deg} inside the big field is the kernel of
        // frobenius^deg - id as an F_p-linear map; enumerate only it
        let dim = big.deg;
        let mut columns: Vec<Vec<i128>> = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut e = vec![0u64; dim];
            e[j] = 1;
            let mut img = trim(e.clone());
            for _ in 0..self.deg {
                img = big.frobenius(&img);
            }
            let mut col = vec![0i128; dim];
            for (i, c) in img.iter().enumerate() {
                col[i] = *c as i128;
            }
            col[j] -= 1;
            columns.push(col);
        }
        let rows: Vec<Vec<i128>> = (0..dim)
            .map(|r| columns.iter().map(|c| c[r].rem_euclid(self.p as i128)).collect())
            .collect();
        let kernel = crate::linalg::kernel_mod(&crate::linalg::IMat::from_rows(&rows), self.p as i128);
        // span the subfield and test each element against the modulus
        let basis: Vec<FqElem> = kernel
            .iter()
            .map(|v| trim(v.iter().map(|&x| x.rem_euclid(self.p as i128) as u64).collect()))
            .filter(|v| !big.is_zero(v))
            .collect();
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![big.zero()];
        seen.insert(big.zero());
        while let Some(x) = stack.pop() {
            if self.eval_modulus_in(big, &x) {
                cache.lock().unwrap().insert(key, x.clone());
                return Ok(x);
            }
            if seen.len() <= self.q() as usize * 2 {
                for b in &basis {
                    for c in 1..self.p {
                        let y = big.add(&x, &big.mul(b, &big.from_u64(c)));
                        if seen.insert(y.clone()) {
                            stack.push(y);
                        }
                    }
                }
            }
        }
        Err(Error::InvalidInput("embedding root not found".into()))
    }

    fn eval_modulus_in(&self, big: &FqCtx, x: &FqElem) -> bool {
        let mut acc = big.zero();
        for &c in self.modulus.iter().rev() {
            acc = big.mul(&acc, x);
            acc = big.add(&acc, &big.from_u64(c));
        }
        big.is_zero(&acc)
    }

    pub fn random<R: rand::Rng>(&self, rng: &mut R) -> FqElem {
        trim((0..self.deg).map(|_| rng.gen_range(0..self.p)).collect())
    }

    pub fn format(&self, x: &FqElem) -> String {
        if self.is_zero(x) {
            return "0".into();
        }
        if self.deg == 1 {
            return format!("{}", x[0]);
        }
        let parts: Vec<String> = x
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match i {
                0 => format!("{c}"),
                1 if c == 1 => "w".into(),
                1 => format!("{c}*w"),
                _ if c == 1 => format!("w^{i}"),
                _ => format!("{c}*w^{i}"),
            })
            .collect();
        parts.join("+")
    }
}

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn find_irreducible(p: u64, deg: usize) -> Vec<u64> {
    if deg == 1 {
        return vec![0, 1]; // the polynomial x
    }
    let total = p.pow(deg as u32);
    'cand: for k in 0..total {
        let mut f = Vec::with_capacity(deg + 1);
        let mut kk = k;
        for _ in 0..deg {
            f.push(kk % p);
            kk /= p;
        }
        f.push(1);
        // trial division by monic polynomials of degree 1..=deg/2
        for d in 1..=deg / 2 {
            for m in 0..p.pow(d as u32) {
                let mut g = Vec::with_capacity(d + 1);
                let mut mm = m;
                for _ in 0..d {
                    g.push(mm % p);
                    mm /= p;
                }
                g.push(1);
                if poly_divides(p, &g, &f) {
                    continue 'cand;
                }
            }
        }
        return f;
    }
    unreachable!("irreducible polynomial exists for every degree");
}

fn poly_divides(p: u64, g: &[u64], f: &[u64]) -> bool {
    let mut r: Vec<u64> = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap();
        if lead != 0 {
            let shift = r.len() - 1 - dg;
            for i in 0..=dg {
                let sub = (lead * g[i]) % p;
                r[shift + i] = (r[shift + i] + p * p - sub) % p;
            }
        }
        r.pop();
    }
    r.iter().all(|&c| c == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_field_laws() {
        let f4 = FqCtx::new(2, 2);
        assert_eq!(f4.modulus, vec![1, 1, 1]); // w^2 + w + 1
        let w = vec![0, 1];
        let w2 = f4.mul(&w, &w);
        assert_eq!(w2, f4.add(&w, &f4.one())); // w^2 = w + 1
        assert_eq!(f4.pow(&w, 3), f4.one());
        let inv = f4.inv(&w).unwrap();
        assert_eq!(f4.mul(&w, &inv), f4.one());
    }

    #[test]
    fn frobenius_inverse_roundtrip() {
        for (p, d) in [(2u64, 3usize), (3, 2)] {
            let f = FqCtx::new(p, d);
            for k in 0..f.q() {
                let x = f.from_index(k);
                assert_eq!(f.frobenius_inv(&f.frobenius(&x)), x);
            }
        }
    }

    #[test]
    fn embedding_is_ring_hom() {
        let f4 = FqCtx::new(2, 2);
        let f16 = FqCtx::new(2, 4);
        for a in 0..4u64 {
            for b in 0..4u64 {
                let x = f4.from_index(a);
                let y = f4.from_index(b);
                let ex = f4.embed(&x, &f16).unwrap();
                let ey = f4.embed(&y, &f16).unwrap();
                assert_eq!(f4.embed(&f4.mul(&x, &y), &f16).unwrap(), f16.mul(&ex, &ey));
                assert_eq!(f4.embed(&f4.add(&x, &y), &f16).unwrap(), f16.add(&ex, &ey));
            }
        }
    }

    #[test]
    fn f9_inverses() {
        let f9 = FqCtx::new(3, 2);
        for k in 1..9u64 {
            let x = f9.from_index(k);
            if f9.is_zero(&x) {
                continue;
            }
            assert_eq!(f9.mul(&x, &f9.inv(&x).unwrap()), f9.one());
        }
    }
}
