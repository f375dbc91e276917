//! Exact integer linear algebra: Smith normal form, kernels, and solvers.
//!
//! Shared by the cone combinatorics (dual cones, lattice kernels, splittings)
//! and by the Koszul homology worker. Entries are i128; inputs are desk scale.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMat {
    pub nrows: usize,
    pub ncols: usize,
    a: Vec<i128>,
}

impl IMat {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        IMat {
            nrows,
            ncols,
            a: vec![0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i128>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = IMat::zero(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), ncols, "ragged rows");
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> Vec<i128> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    pub fn col(&self, j: usize) -> Vec<i128> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> IMat {
        let mut t = IMat::zero(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.ncols, other.nrows);
        let mut m = IMat::zero(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let s = self[(i, k)];
                if s == 0 {
                    continue;
                }
                for j in 0..other.ncols {
                    m[(i, j)] += s * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[i128]) -> Vec<i128> {
        assert_eq!(self.ncols, x.len());
        (0..self.nrows)
            .map(|i| (0..self.ncols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.ncols {
            let t = self[(i, k)];
            self[(i, k)] = self[(j, k)];
            self[(j, k)] = t;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.nrows {
            let t = self[(k, i)];
            self[(k, i)] = self[(k, j)];
            self[(k, j)] = t;
        }
    }

    /// row[i] += c * row[j]
    fn add_row(&mut self, i: usize, j: usize, c: i128) {
        for k in 0..self.ncols {
            let t = self[(j, k)];
            self[(i, k)] += c * t;
        }
    }

    fn add_col(&mut self, i: usize, j: usize, c: i128) {
        for k in 0..self.nrows {
            let t = self[(k, j)];
            self[(k, i)] += c * t;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.ncols {
            self[(i, k)] = -self[(i, k)];
        }
    }

}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = i128;
    fn index(&self, (i, j): (usize, usize)) -> &i128 {
        &self.a[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i128 {
        &mut self.a[i * self.ncols + j]
    }
}

/// Smith normal form: u * a * v = s with u, v unimodular and s diagonal with
/// s_1 | s_2 | ... (diagonal entries nonnegative).
pub struct Snf {
    pub s: IMat,
    pub u: IMat,
    pub v: IMat,
    pub rank: usize,
}

pub fn snf(a: &IMat) -> Snf {
    let mut s = a.clone();
    let mut u = IMat::identity(a.nrows);
    let mut v = IMat::identity(a.ncols);
    let n = a.nrows.min(a.ncols);
    let mut t = 0;
    while t < n {
        // find smallest nonzero pivot in the remaining block
        let mut piv: Option<(usize, usize)> = None;
        for i in t..s.nrows {
            for j in t..s.ncols {
                if s[(i, j)] != 0
                    && piv.map_or(true, |(pi, pj)| s[(i, j)].abs() < s[(pi, pj)].abs())
                {
                    piv = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = piv else { break };
        s.swap_rows(t, pi);
        u.swap_rows(t, pi);
        s.swap_cols(t, pj);
        v.swap_cols(t, pj);

        // clear row and column t; restart whenever a remainder appears
        loop {
            let mut dirty = false;
            for i in t + 1..s.nrows {
                if s[(i, t)] != 0 {
                    let q = div_round(s[(i, t)], s[(t, t)]);
                    s.add_row(i, t, -q);
                    u.add_row(i, t, -q);
                    if s[(i, t)] != 0 {
                        s.swap_rows(t, i);
                        u.swap_rows(t, i);
                        dirty = true;
                    }
                }
            }
            for j in t + 1..s.ncols {
                if s[(t, j)] != 0 {
                    let q = div_round(s[(t, j)], s[(t, t)]);
                    s.add_col(j, t, -q);
                    v.add_col(j, t, -q);
                    if s[(t, j)] != 0 {
                        s.swap_cols(t, j);
                        v.swap_cols(t, j);
                        dirty = true;
                    }
                }
            }
            if !dirty {
                break;
            }
        }

        // divisibility fix: pivot must divide the rest of the block
        let mut redo = false;
        'outer: for i in t + 1..s.nrows {
            for j in t + 1..s.ncols {
                if s[(i, j)] % s[(t, t)] != 0 {
                    s.add_row(t, i, 1);
                    u.add_row(t, i, 1);
                    redo = true;
                    break 'outer;
                }
            }
        }
        if redo {
            continue;
        }
        if s[(t, t)] < 0 {
            s.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    let rank = (0..n).take_while(|&i| s[(i, i)] != 0).count();
    Snf { s, u, v, rank }
}

/// Rounded division minimizing |a - q*b|.
fn div_round(a: i128, b: i128) -> i128 {
    let q = a / b;
    let r = a - q * b;
    if 2 * r.abs() > b.abs() {
        if (r > 0) == (b > 0) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Saturated basis of the right kernel {x : a x = 0}.
pub fn kernel_basis(a: &IMat) -> Vec<Vec<i128>> {
    if a.nrows == 0 {
        return (0..a.ncols)
            .map(|j| {
                let mut e = vec![0; a.ncols];
                e[j] = 1;
                e
            })
            .collect();
    }
    let f = snf(a);
    (f.rank..a.ncols).map(|j| f.v.col(j)).collect()
}

/// Integer solution of a x = b, if one exists.
pub fn solve(a: &IMat, b: &[i128]) -> Option<Vec<i128>> {
    assert_eq!(a.nrows, b.len());
    let f = snf(a);
    let y = f.u.mul_vec(b);
    let mut xp = vec![0i128; a.ncols];
    for i in 0..a.nrows {
        if i < f.rank {
            let d = f.s[(i, i)];
            if y[i] % d != 0 {
                return None;
            }
            xp[i] = y[i] / d;
        } else if y[i] != 0 {
            return None;
        }
    }
    Some(f.v.mul_vec(&xp))
}

/// All invariant factors of coker(a) as a quotient of Z^nrows (1s omitted,
/// 0 for free summands).
pub fn cokernel_invariants(a: &IMat) -> Vec<i128> {
    let f = snf(a);
    let mut out = Vec::new();
    for i in 0..a.nrows {
        let d = if i < f.rank { f.s[(i, i)] } else { 0 };
        if d != 1 {
            out.push(d);
        }
    }
    out
}

/// True when the square matrix has determinant +-1.
pub fn is_unimodular(a: &IMat) -> bool {
    if a.nrows != a.ncols {
        return false;
    }
    let f = snf(a);
    f.rank == a.nrows && (0..a.nrows).all(|i| f.s[(i, i)] == 1)
}

/// Divides out the gcd of the coordinates (primitive vector, zero stays zero).
pub fn primitive(v: &[i128]) -> Vec<i128> {
    let mut g = 0i128;
    for &x in v {
        g = gcd(g, x.abs());
    }
    if g <= 1 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / g).collect()
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Generators of {x mod m : a x = 0 mod m} as vectors over Z/m, for m a
/// prime power. Diagonalization happens entirely mod m (local SNF with
/// minimal-valuation pivots), so entries never grow.
pub fn kernel_mod(a: &IMat, m: i128) -> Vec<Vec<i128>> {
    let n = a.ncols;
    let mut s = IMat::zero(a.nrows, a.ncols);
    for i in 0..a.nrows {
        for j in 0..a.ncols {
            s[(i, j)] = a[(i, j)].rem_euclid(m);
        }
    }
    let mut v = IMat::identity(n);
    // valuation of x in the local ring Z/m: number of times the radical
    // divides it; units are the entries with gcd(x, m) == 1
    let val = |x: i128| -> u32 {
        if x == 0 {
            return u32::MAX;
        }
        let mut g = 1i128;
        let mut k = 0u32;
        loop {
            let d = gcd(x / g, m);
            if d == 1 {
                return k;
            }
            g *= smallest_prime_factor(m);
            k += 1;
            if g > m {
                return k;
            }
        }
    };
    let t_max = a.nrows.min(n);
    let mut t = 0;
    while t < t_max {
        // minimal-valuation pivot in the remaining block
        let mut piv: Option<(usize, usize, u32)> = None;
        for i in t..s.nrows {
            for j in t..n {
                let w = val(s[(i, j)]);
                if w != u32::MAX && piv.map_or(true, |(_, _, pw)| w < pw) {
                    piv = Some((i, j, w));
                }
            }
        }
        let Some((pi, pj, _)) = piv else { break };
        s.swap_rows(t, pi);
        s.swap_cols(t, pj);
        v.swap_cols(t, pj);
        // clear column and row: the pivot divides every remaining entry of
        // its row/column up to a unit, so one subtraction round suffices
        for i in t + 1..s.nrows {
            if s[(i, t)] != 0 {
                let q = modular_quotient(s[(i, t)], s[(t, t)], m);
                for j in 0..n {
                    let sub = (q * s[(t, j)]).rem_euclid(m);
                    s[(i, j)] = (s[(i, j)] - sub).rem_euclid(m);
                }
            }
        }
        for j in t + 1..n {
            if s[(t, j)] != 0 {
                let q = modular_quotient(s[(t, j)], s[(t, t)], m);
                for i in 0..s.nrows {
                    let sub = (q * s[(i, t)]).rem_euclid(m);
                    s[(i, j)] = (s[(i, j)] - sub).rem_euclid(m);
                }
                for i in 0..n {
                    let sub = (q * v[(i, t)]).rem_euclid(m);
                    v[(i, j)] = (v[(i, j)] - sub).rem_euclid(m);
                }
            }
        }
        t += 1;
    }
    let mut gens = Vec::new();
    for j in 0..n {
        let d = if j < t_max { s[(j, j)].rem_euclid(m) } else { 0 };
        let step = if d == 0 { 1 } else { m / gcd(d, m) };
        if step % m == 0 && d != 0 {
            continue; // only the zero solution in this coordinate
        }
        let col = v.col(j);
        gens.push(col.iter().map(|&x| (x * step).rem_euclid(m)).collect());
    }
    gens
}

fn smallest_prime_factor(m: i128) -> i128 {
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            return d;
        }
        d += 1;
    }
    m
}

/// q with x = q * piv mod m, valid when val(piv) <= val(x) in Z/m.
fn modular_quotient(x: i128, piv: i128, m: i128) -> i128 {
    let g = gcd(piv, m);
    debug_assert_eq!(x.rem_euclid(g), 0, "pivot does not divide entry mod m");
    let unit = (piv / g).rem_euclid(m);
    let unit_inv = inverse_mod(unit, m);
    ((x / g).rem_euclid(m) * unit_inv).rem_euclid(m)
}

fn inverse_mod(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert!(r0 == 1, "not a unit mod m");
    t0.rem_euclid(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_snf(a: &IMat) {
        let f = snf(a);
        assert!(is_unimodular(&f.u));
        assert!(is_unimodular(&f.v));
        assert_eq!(f.u.mul(a).mul(&f.v), f.s);
        for i in 0..f.rank.saturating_sub(1) {
            assert_eq!(f.s[(i + 1, i + 1)] % f.s[(i, i)], 0);
        }
    }

    #[test]
    fn snf_small() {
        let a = IMat::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        check_snf(&a);
        let f = snf(&a);
        assert_eq!(
            (f.s[(0, 0)], f.s[(1, 1)], f.s[(2, 2)]),
            (2, 2, 156) // det = 2*2*156 = 624
        );
    }

    #[test]
    fn snf_random_shapes() {
        let mut seed = 9u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as i128 % 7) - 3
        };
        for nr in 1..4 {
            for nc in 1..4 {
                for _ in 0..20 {
                    let rows: Vec<Vec<i128>> =
                        (0..nr).map(|_| (0..nc).map(|_| next()).collect()).collect();
                    check_snf(&IMat::from_rows(&rows));
                }
            }
        }
    }

    #[test]
    fn kernel_and_solve() {
        let a = IMat::from_rows(&[vec![1, 2, 3], vec![2, 4, 6]]);
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(a.mul_vec(v), vec![0, 0]);
        }
        let b = IMat::from_rows(&[vec![2, 0], vec![0, 3]]);
        assert_eq!(solve(&b, &[4, 9]), Some(vec![2, 3]));
        assert_eq!(solve(&b, &[1, 0]), None);
    }

    #[test]
    fn kernel_saturated() {
        // kernel of (1 2) is generated by (2, -1), not a multiple
        let a = IMat::from_rows(&[vec![1, 2]]);
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 1);
        assert_eq!(primitive(&k[0]), k[0]);
    }

    #[test]
    fn kernel_mod_matches_bruteforce() {
        // exhaustive oracle over Z/8 and Z/9 on random 2x3 matrices
        let mut seed = 41u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as i128 % 9
        };
        for &m in &[8i128, 9] {
            for _ in 0..20 {
                let a = IMat::from_rows(&[
                    vec![next(), next(), next()],
                    vec![next(), next(), next()],
                ]);
                let gens = kernel_mod(&a, m);
                // every generator solves the system
                for g in &gens {
                    let img = a.mul_vec(g);
                    assert!(img.iter().all(|&x| x.rem_euclid(m) == 0));
                }
                // every brute-force solution is a Z/m combination of gens
                let span: std::collections::BTreeSet<Vec<i128>> = {
                    let mut out = std::collections::BTreeSet::new();
                    out.insert(vec![0, 0, 0]);
                    // close under generator addition
                    let mut frontier: Vec<Vec<i128>> = vec![vec![0, 0, 0]];
                    while let Some(v) = frontier.pop() {
                        for g in &gens {
                            let w: Vec<i128> = v
                                .iter()
                                .zip(g)
                                .map(|(&x, &y)| (x + y).rem_euclid(m))
                                .collect();
                            if out.insert(w.clone()) {
                                frontier.push(w);
                            }
                        }
                    }
                    out
                };
                for x0 in 0..m {
                    for x1 in 0..m {
                        for x2 in 0..m {
                            let x = vec![x0, x1, x2];
                            let img = a.mul_vec(&x);
                            if img.iter().all(|&v| v.rem_euclid(m) == 0) {
                                assert!(span.contains(&x), "missed solution {x:?} mod {m}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_mod_small() {
        // x = 2 mod 4 solves 2x = 0 mod 4
        let a = IMat::from_rows(&[vec![2]]);
        let gens = kernel_mod(&a, 4);
        assert!(gens.iter().any(|g| g == &vec![2]));
        for g in gens {
            assert_eq!((2 * g[0]).rem_euclid(4), 0);
        }
    }

    #[test]
    fn cokernel() {
        let a = IMat::from_rows(&[vec![2, 0], vec![0, 1]]);
        assert_eq!(cokernel_invariants(&a), vec![2]);
    }
}
