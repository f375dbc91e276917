//! Lattice and cone combinatorics underlying toric frames: dual cones,
//! Hilbert bases, toric morphisms and refinements, framed graphs, weighted
//! Gauss valuations, and tropicalization.
//!
//! Cones are rational polyhedral, given by primitive integer generators.
//! Everything is exact; ranks are desk scale (<= 6 by default).

use crate::error::{Error, Result};
use crate::linalg::{self, IMat};
use crate::rat::{Rat, Val};
use num_traits::Zero;
use std::collections::BTreeSet;

/// Default cap on lattice rank for enumerative algorithms.
pub const DEFAULT_RANK_BOUND: usize = 6;
/// Default coordinate box for Hilbert-basis enumeration.
pub const DEFAULT_HILBERT_BOX: i64 = 8;

/// The ambient finite free Z-module N (or its dual), identified with Z^rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub rank: usize,
}

impl Lattice {
    pub fn new(rank: usize) -> Self {
        Lattice { rank }
    }
}

/// A rational polyhedral cone, stored by its primitive generators
/// (duplicates removed, sorted). The zero cone has an empty generator list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cone {
    pub lattice: Lattice,
    pub generators: Vec<Vec<i64>>,
}

impl Cone {
    pub fn new(lattice: Lattice, generators: Vec<Vec<i64>>) -> Result<Self> {
        let mut gens = BTreeSet::new();
        for g in generators {
            if g.len() != lattice.rank {
                return Err(Error::DimensionMismatch {
                    expected: lattice.rank,
                    got: g.len(),
                });
            }
            if g.iter().all(|&x| x == 0) {
                continue;
            }
            let prim = linalg::primitive(&g.iter().map(|&x| x as i128).collect::<Vec<_>>());
            gens.insert(prim.iter().map(|&x| x as i64).collect::<Vec<i64>>());
        }
        Ok(Cone {
            lattice,
            generators: gens.into_iter().collect(),
        })
    }

    pub fn zero(lattice: Lattice) -> Self {
        Cone {
            lattice,
            generators: vec![],
        }
    }

    pub fn orthant(rank: usize) -> Self {
        let gens = (0..rank)
            .map(|i| {
                let mut e = vec![0i64; rank];
                e[i] = 1;
                e
            })
            .collect();
        Cone {
            lattice: Lattice::new(rank),
            generators: gens,
        }
    }

    /// Full space: generated by +-e_i.
    pub fn full(rank: usize) -> Self {
        let mut gens = Vec::new();
        for i in 0..rank {
            let mut e = vec![0i64; rank];
            e[i] = 1;
            gens.push(e.clone());
            e[i] = -1;
            gens.push(e);
        }
        Cone::new(Lattice::new(rank), gens).unwrap()
    }

    /// Halfspace description: the generators of the dual cone.
    pub fn halfspaces(&self) -> Vec<Vec<i64>> {
        dual_cone(self).generators
    }

    /// Membership in the (closed, real) cone, given its halfspaces.
    pub fn contains_with(&self, halfspaces: &[Vec<i64>], x: &[i64]) -> bool {
        halfspaces.iter().all(|h| dot(h, x) >= 0)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.contains_with(&self.halfspaces(), x)
    }

    /// True when the cone meets its negative only in 0.
    pub fn is_strongly_convex(&self) -> bool {
        let hs = self.halfspaces();
        self.generators
            .iter()
            .all(|g| !self.contains_with(&hs, &neg(g)))
    }

    pub fn is_full_space(&self) -> bool {
        self.halfspaces().is_empty() || cone_eq(self, &Cone::full(self.lattice.rank))
    }

    /// Direct sum inside the direct-sum lattice.
    pub fn direct_sum(&self, other: &Cone) -> Cone {
        let r1 = self.lattice.rank;
        let r2 = other.lattice.rank;
        let mut gens = Vec::new();
        for g in &self.generators {
            let mut v = g.clone();
            v.extend(std::iter::repeat(0).take(r2));
            gens.push(v);
        }
        for g in &other.generators {
            let mut v = vec![0i64; r1];
            v.extend_from_slice(g);
            gens.push(v);
        }
        Cone::new(Lattice::new(r1 + r2), gens).unwrap()
    }
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x as i128 * y as i128)
        .sum()
}

fn neg(v: &[i64]) -> Vec<i64> {
    v.iter().map(|&x| -x).collect()
}

fn to_i128(v: &[i64]) -> Vec<i128> {
    v.iter().map(|&x| x as i128).collect()
}

fn to_i64(v: &[i128]) -> Vec<i64> {
    v.iter()
        .map(|&x| i64::try_from(x).expect("coordinate overflow"))
        .collect()
}

/// The dual cone: all functionals nonnegative on `c`.
///
/// Computed exactly by enumerating minimal proper faces of the halfspace
/// intersection {x : <x, g> >= 0}: the lineality space is the kernel of the
/// generator matrix, and each extreme ray is cut out by a rank-(n-k-1)
/// subset of active constraints.
pub fn dual_cone(c: &Cone) -> Cone {
    let n = c.lattice.rank;
    if n == 0 {
        return Cone::zero(c.lattice);
    }
    if c.generators.is_empty() {
        return Cone::full(n);
    }
    let a = IMat::from_rows(
        &c.generators
            .iter()
            .map(|g| to_i128(g))
            .collect::<Vec<_>>(),
    );
    let lin = linalg::kernel_basis(&a); // lineality of the dual
    let k = lin.len();
    let mut gens: BTreeSet<Vec<i64>> = BTreeSet::new();
    for v in &lin {
        gens.insert(to_i64(&linalg::primitive(v)));
        gens.insert(to_i64(&linalg::primitive(&v.iter().map(|&x| -x).collect::<Vec<_>>())));
    }
    let r = n - k - 1;
    let m = c.generators.len();
    for subset in subsets_of_size(m, r) {
        let rows: Vec<Vec<i128>> = subset.iter().map(|&i| to_i128(&c.generators[i])).collect();
        let ker = if rows.is_empty() {
            linalg::kernel_basis(&IMat::zero(0, n))
        } else {
            linalg::kernel_basis(&IMat::from_rows(&rows))
        };
        if ker.len() != k + 1 {
            continue;
        }
        // pick a kernel vector independent of the lineality space
        let mut w: Option<Vec<i128>> = None;
        for cand in &ker {
            let mut stack: Vec<Vec<i128>> = lin.clone();
            stack.push(cand.clone());
            let rank = linalg::snf(&IMat::from_rows(&stack)).rank;
            if rank == k + 1 {
                w = Some(cand.clone());
                break;
            }
        }
        let Some(mut w) = w else { continue };
        let av = a.mul_vec(&w);
        if av.iter().all(|&x| x <= 0) {
            w = w.iter().map(|&x| -x).collect();
        } else if !av.iter().all(|&x| x >= 0) {
            continue; // not a face direction
        }
        let w = reduce_mod_span(&w, &lin);
        gens.insert(to_i64(&linalg::primitive(&w)));
    }
    Cone {
        lattice: c.lattice,
        generators: gens.into_iter().filter(|g| g.iter().any(|&x| x != 0)).collect(),
    }
}

/// Canonical representative of `w` modulo the rational span of `basis`
/// (Gaussian reduction, then cleared to a primitive integer vector).
fn reduce_mod_span(w: &[i128], basis: &[Vec<i128>]) -> Vec<i128> {
    if basis.is_empty() {
        return w.to_vec();
    }
    let n = w.len();
    let mut rows: Vec<Vec<Rat>> = basis
        .iter()
        .map(|b| b.iter().map(|&x| Rat::from_integer(x as i64)).collect())
        .collect();
    let mut v: Vec<Rat> = w.iter().map(|&x| Rat::from_integer(x as i64)).collect();
    let mut pivot_col = 0;
    for r in 0..rows.len() {
        // echelonize
        let mut found = None;
        'search: for col in pivot_col..n {
            for i in r..rows.len() {
                if !rows[i][col].is_zero() {
                    found = Some((i, col));
                    break 'search;
                }
            }
        }
        let Some((i, col)) = found else { break };
        rows.swap(r, i);
        let lead = rows[r][col];
        for x in rows[r].iter_mut() {
            *x = *x / lead;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col];
                for j in 0..n {
                    let s = rows[r][j];
                    rows[i][j] = rows[i][j] - f * s;
                }
            }
        }
        if !v[col].is_zero() {
            let f = v[col];
            for j in 0..n {
                v[j] = v[j] - f * rows[r][j];
            }
        }
        pivot_col = col + 1;
    }
    // clear denominators
    let mut den: i128 = 1;
    for x in &v {
        den = den / linalg::gcd(den, *x.denom() as i128) * (*x.denom() as i128);
    }
    let ints: Vec<i128> = v
        .iter()
        .map(|x| (*x.numer() as i128) * (den / (*x.denom() as i128)))
        .collect();
    linalg::primitive(&ints)
}

fn subsets_of_size(m: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        // next combination
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Equality of cones as subsets of R^n.
pub fn cone_eq(a: &Cone, b: &Cone) -> bool {
    let ha = a.halfspaces();
    let hb = b.halfspaces();
    a.generators.iter().all(|g| b.contains_with(&hb, g))
        && b.generators.iter().all(|g| a.contains_with(&ha, g))
}

/// Intersection of two cones in the same lattice.
pub fn intersect(a: &Cone, b: &Cone) -> Cone {
    let mut hs = a.halfspaces();
    hs.extend(b.halfspaces());
    let h = Cone::new(a.lattice, hs).unwrap();
    dual_cone(&h)
}

/// True when `f` is a face of `c` (intersection with a supporting hyperplane).
pub fn is_face(f: &Cone, c: &Cone) -> bool {
    let hc = c.halfspaces();
    if !f.generators.iter().all(|g| c.contains_with(&hc, g)) {
        return false;
    }
    // supporting functional: sum of the halfspaces of c vanishing on f
    let zero_on_f: Vec<&Vec<i64>> = hc
        .iter()
        .filter(|h| f.generators.iter().all(|g| dot(h, g) == 0))
        .collect();
    let mut hstar = vec![0i64; c.lattice.rank];
    for h in &zero_on_f {
        for (i, &x) in h.iter().enumerate() {
            hstar[i] += x;
        }
    }
    // candidate face: c cut by hstar = 0
    let mut hs = hc.clone();
    hs.push(hstar.clone());
    hs.push(neg(&hstar));
    let cand = dual_cone(&Cone::new(c.lattice, hs).unwrap());
    cone_eq(&cand, f)
}

/// A toric monoid: the lattice points of `cone` with their minimal
/// generating set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToricMonoid {
    pub lattice: Lattice,
    pub hilbert_basis: Vec<Vec<i64>>,
    pub cone: Cone,
}

/// Minimal generating set of cone ∩ Z^rank by bounded enumeration plus an
/// irreducibility sieve. Non-pointed cones are handled by splitting off the
/// unit lattice (cone ∩ -cone ∩ Z^rank) and sieving in the quotient.
pub fn hilbert_basis(c: &Cone) -> Result<ToricMonoid> {
    hilbert_basis_with(c, DEFAULT_HILBERT_BOX, DEFAULT_RANK_BOUND)
}

pub fn hilbert_basis_with(c: &Cone, boxbound: i64, rank_bound: usize) -> Result<ToricMonoid> {
    let n = c.lattice.rank;
    if n > rank_bound {
        return Err(Error::DimensionTooLarge {
            rank: n,
            bound: rank_bound,
        });
    }
    let hs = c.halfspaces();
    let unit_basis = if hs.is_empty() {
        // full space
        linalg::kernel_basis(&IMat::zero(0, n))
    } else {
        linalg::kernel_basis(&IMat::from_rows(
            &hs.iter().map(|h| to_i128(h)).collect::<Vec<_>>(),
        ))
    };
    let k = unit_basis.len();

    let mut basis: BTreeSet<Vec<i64>> = BTreeSet::new();
    for u in &unit_basis {
        basis.insert(to_i64(u));
        basis.insert(to_i64(&u.iter().map(|&x| -x).collect::<Vec<_>>()));
    }

    if k < n {
        // quotient coordinates: last n-k rows of U from the SNF of the
        // unit-basis column matrix (U^-1's first k columns span the units)
        let proj: Option<IMat> = if k == 0 {
            None
        } else {
            let cols: Vec<Vec<i128>> = (0..n)
                .map(|i| unit_basis.iter().map(|u| u[i]).collect())
                .collect();
            let f = linalg::snf(&IMat::from_rows(&cols));
            Some(f.u)
        };
        let project = |x: &[i64]| -> Vec<i128> {
            let xi = to_i128(x);
            match &proj {
                None => xi,
                Some(u) => u.mul_vec(&xi)[k..].to_vec(),
            }
        };

        // lattice points of the cone in the box
        let mut points: Vec<Vec<i64>> = Vec::new();
        let mut cur = vec![-boxbound; n];
        'enumerate: loop {
            if cur.iter().any(|&x| x != 0) && c.contains_with(&hs, &cur) {
                points.push(cur.clone());
            }
            for i in 0..n {
                if cur[i] < boxbound {
                    cur[i] += 1;
                    continue 'enumerate;
                }
                cur[i] = -boxbound;
            }
            break;
        }

        let images: BTreeSet<Vec<i128>> = points
            .iter()
            .map(|x| project(x))
            .filter(|q| q.iter().any(|&x| x != 0))
            .collect();
        // sieve in the quotient: q is irreducible iff it is not a sum of two
        // nonzero image points
        let mut irreducible: Vec<Vec<i128>> = Vec::new();
        for q in &images {
            let reducible = images.iter().any(|q1| {
                let q2: Vec<i128> = q.iter().zip(q1).map(|(&a, &b)| a - b).collect();
                q2.iter().any(|&x| x != 0) && images.contains(&q2)
            });
            if !reducible {
                irreducible.push(q.clone());
            }
        }
        // lift: first box point (sorted order) in each irreducible class
        points.sort();
        for q in irreducible {
            if let Some(lift) = points.iter().find(|x| project(x) == q) {
                basis.insert(lift.clone());
            }
        }
    }

    Ok(ToricMonoid {
        lattice: c.lattice,
        hilbert_basis: basis.into_iter().collect(),
        cone: c.clone(),
    })
}

impl ToricMonoid {
    /// Brute-force generation check: every lattice point of the cone with
    /// coordinates in the box is a nonnegative integer combination of the
    /// basis. Only meaningful for pointed cones.
    pub fn generates_box(&self, boxbound: i64) -> bool {
        let n = self.lattice.rank;
        let hs = self.cone.halfspaces();
        // functional positive on the cone minus 0: sum of halfspaces
        let mut ell = vec![0i128; n];
        for h in &hs {
            for (i, &x) in h.iter().enumerate() {
                ell[i] += x as i128;
            }
        }
        let mut points: Vec<Vec<i64>> = Vec::new();
        let mut cur = vec![-boxbound; n];
        'enumerate: loop {
            if self.cone.contains_with(&hs, &cur) {
                points.push(cur.clone());
            }
            for i in 0..n {
                if cur[i] < boxbound {
                    cur[i] += 1;
                    continue 'enumerate;
                }
                cur[i] = -boxbound;
            }
            break;
        }
        let key = |x: &[i64]| -> i128 { x.iter().zip(&ell).map(|(&a, &b)| a as i128 * b).sum() };
        points.sort_by_key(|x| key(x));
        let mut reachable: BTreeSet<Vec<i64>> = BTreeSet::new();
        for x in &points {
            if x.iter().all(|&c| c == 0) {
                reachable.insert(x.clone());
                continue;
            }
            let ok = self.hilbert_basis.iter().any(|b| {
                let rest: Vec<i64> = x.iter().zip(b).map(|(&a, &c)| a - c).collect();
                reachable.contains(&rest)
            });
            if ok {
                reachable.insert(x.clone());
            } else {
                return false;
            }
        }
        true
    }
}

/// The combinatorial shadow of a toric frame: a monoid, a weight vector, and
/// coordinate labels. `boundary_free` means the monoid is a full lattice
/// (every coordinate invertible).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub monoid: ToricMonoid,
    pub weight: Vec<Rat>,
    pub coordinate_names: Vec<String>,
    pub boundary_free: bool,
}

impl Frame {
    pub fn new(monoid: ToricMonoid, weight: Vec<Rat>, coordinate_names: Vec<String>) -> Result<Self> {
        if weight.len() != monoid.lattice.rank {
            return Err(Error::DimensionMismatch {
                expected: monoid.lattice.rank,
                got: weight.len(),
            });
        }
        let boundary_free = monoid.cone.is_full_space();
        Ok(Frame {
            monoid,
            weight,
            coordinate_names,
            boundary_free,
        })
    }

    /// Frame over sigma = orthant (monoid = polynomial coordinates).
    pub fn affine(rank: usize, weight: Vec<Rat>) -> Result<Self> {
        let sigma = Cone::orthant(rank);
        let m = hilbert_basis(&dual_cone(&sigma))?;
        let names = (0..rank).map(|i| format!("T{}", i + 1)).collect();
        Frame::new(m, weight, names)
    }

    /// Frame over sigma = 0 (Laurent coordinates; boundary-free).
    pub fn laurent(rank: usize, weight: Vec<Rat>) -> Result<Self> {
        let m = hilbert_basis(&Cone::full(rank))?;
        let names = (0..rank).map(|i| format!("T{}", i + 1)).collect();
        Frame::new(m, weight, names)
    }
}

/// A lattice map that carries a designated source cone into a target cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToricMap {
    pub source: Lattice,
    pub target: Lattice,
    /// target.rank x source.rank integer matrix.
    pub matrix: Vec<Vec<i64>>,
}

impl ToricMap {
    pub fn new(source: Lattice, target: Lattice, matrix: Vec<Vec<i64>>) -> Result<Self> {
        if matrix.len() != target.rank || matrix.iter().any(|r| r.len() != source.rank) {
            return Err(Error::DimensionMismatch {
                expected: target.rank * source.rank,
                got: matrix.len(),
            });
        }
        Ok(ToricMap {
            source,
            target,
            matrix,
        })
    }

    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        self.matrix
            .iter()
            .map(|row| dot(row, x) as i64)
            .collect()
    }

    /// Transpose, acting on functionals (pullback of monomials).
    pub fn transpose_apply(&self, y: &[i64]) -> Vec<i64> {
        (0..self.source.rank)
            .map(|j| {
                self.matrix
                    .iter()
                    .zip(y)
                    .map(|(row, &c)| row[j] as i128 * c as i128)
                    .sum::<i128>() as i64
            })
            .collect()
    }
}

/// Witness data for a toric refinement: the generators of the complementary
/// toric monoid T in M_source = M_target ⊕ T.
pub type SplittingWitness = Vec<Vec<i64>>;

/// Decides whether `m` (mapping the source frame's sigma into the target's)
/// presents the source as a toric refinement of the target, i.e. whether the
/// pullback admits a monoid splitting M_src ≅ M_tgt ⊕ T. Returns the
/// generators of T on success.
pub fn is_toric_refinement(
    m: &ToricMap,
    source_frame: &Frame,
    target_frame: &Frame,
) -> Result<Option<SplittingWitness>> {
    let ns = source_frame.monoid.lattice.rank;
    let nt = target_frame.monoid.lattice.rank;
    if m.source.rank != ns || m.target.rank != nt {
        return Err(Error::DimensionMismatch {
            expected: ns,
            got: m.source.rank,
        });
    }
    // cone condition: m carries sigma_src into sigma_tgt. The sigma
    // generators are the halfspaces of the monoid cone (= sigma^vee).
    let sigma_src = source_frame.monoid.cone.halfspaces();
    let tgt_monoid_hs = target_frame.monoid.cone.halfspaces(); // = sigma_tgt gens
    for g in &sigma_src {
        let img = m.apply(g);
        // membership in sigma_tgt = dual of the target monoid cone
        if !target_frame
            .monoid
            .cone
            .generators
            .iter()
            .all(|c| dot(c, &img) >= 0)
        {
            return Err(Error::IncompatibleCones);
        }
    }

    // transpose as a matrix: columns = images of the dual basis
    let mt_cols: Vec<Vec<i128>> = (0..nt)
        .map(|i| {
            let mut e = vec![0i64; nt];
            e[i] = 1;
            to_i128(&m.transpose_apply(&e))
        })
        .collect();
    let mt_mat = {
        // ns x nt matrix with the given columns
        let rows: Vec<Vec<i128>> = (0..ns)
            .map(|r| mt_cols.iter().map(|c| c[r]).collect())
            .collect();
        IMat::from_rows(&rows)
    };
    if linalg::snf(&mt_mat).rank != nt {
        return Ok(None); // pullback not injective: no splitting
    }

    let hb_src = &source_frame.monoid.hilbert_basis;
    let hb_tgt = &target_frame.monoid.hilbert_basis;

    // partition the source basis into pulled-back target generators and T
    let mut pulled: BTreeSet<Vec<i64>> = BTreeSet::new();
    for h in hb_src {
        if let Some(y) = linalg::solve(&mt_mat, &to_i128(h)) {
            let y64 = to_i64(&y);
            let in_target = target_frame
                .monoid
                .cone
                .contains_with(&tgt_monoid_hs, &y64);
            if in_target {
                pulled.insert(h.clone());
            }
        }
    }
    let image_of_tgt: BTreeSet<Vec<i64>> =
        hb_tgt.iter().map(|y| m.transpose_apply(y)).collect();
    if pulled != image_of_tgt {
        return Ok(None);
    }
    let t_gens: Vec<Vec<i64>> = hb_src.iter().filter(|h| !pulled.contains(*h)).cloned().collect();

    // group-level direct sum: Z^ns = im(m^T) ⊕ span(T)
    let mut cols: Vec<Vec<i128>> = mt_cols.clone();
    for t in &t_gens {
        cols.push(to_i128(t));
    }
    let stacked = {
        let rows: Vec<Vec<i128>> = (0..ns)
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect();
        IMat::from_rows(&rows)
    };
    let t_mat = {
        let rows: Vec<Vec<i128>> = (0..ns)
            .map(|r| t_gens.iter().map(|t| t[r] as i128).collect())
            .collect();
        IMat::from_rows(&rows)
    };
    let rank_t = if t_gens.is_empty() {
        0
    } else {
        linalg::snf(&t_mat).rank
    };
    let f = linalg::snf(&stacked);
    if f.rank != ns || nt + rank_t != ns {
        return Ok(None);
    }
    if !linalg::cokernel_invariants(&stacked).is_empty() {
        return Ok(None); // sum is a proper sublattice
    }

    // componentwise check on box points: every source monoid point splits as
    // (pullback of a target point) + (point of cone(T)); uniqueness comes
    // from the group direct sum.
    let t_cone = Cone::new(Lattice::new(ns), t_gens.clone())?;
    let t_hs = t_cone.halfspaces();
    let src_hs = source_frame.monoid.cone.halfspaces();
    let boxbound = 4i64;
    let mut cur = vec![-boxbound; ns];
    'enumerate: loop {
        if source_frame.monoid.cone.contains_with(&src_hs, &cur) {
            // unique rational split coordinates: solve stacked * c = x
            let x = to_i128(&cur);
            match linalg::solve(&stacked, &x) {
                None => return Ok(None),
                Some(cvec) => {
                    let y = to_i64(&cvec[..nt].to_vec());
                    if !target_frame.monoid.cone.contains_with(&tgt_monoid_hs, &y) {
                        return Ok(None);
                    }
                    // t-part in ambient coordinates
                    let mut t_part = vec![0i128; ns];
                    for (j, t) in t_gens.iter().enumerate() {
                        for i in 0..ns {
                            t_part[i] += cvec[nt + j] * t[i] as i128;
                        }
                    }
                    let t64 = to_i64(&t_part);
                    if !t_cone.contains_with(&t_hs, &t64) {
                        return Ok(None);
                    }
                }
            }
        }
        for i in 0..ns {
            if cur[i] < boxbound {
                cur[i] += 1;
                continue 'enumerate;
            }
            cur[i] = -boxbound;
        }
        break;
    }

    Ok(Some(t_gens))
}

/// The framed graph of a pair of frames: the product frame over
/// sigma_1 ⊕ sigma_2 together with the two projections.
pub fn framed_graph(f1: &Frame, f2: &Frame) -> Result<(Frame, ToricMap, ToricMap)> {
    let r1 = f1.monoid.lattice.rank;
    let r2 = f2.monoid.lattice.rank;
    // dual of a direct sum is the product of duals; the Hilbert basis of a
    // product monoid is the union of the embedded bases
    let cone3 = f1.monoid.cone.direct_sum(&f2.monoid.cone);
    let mut hb = Vec::new();
    for b in &f1.monoid.hilbert_basis {
        let mut v = b.clone();
        v.extend(std::iter::repeat(0).take(r2));
        hb.push(v);
    }
    for b in &f2.monoid.hilbert_basis {
        let mut v = vec![0i64; r1];
        v.extend_from_slice(b);
        hb.push(v);
    }
    hb.sort();
    let monoid = ToricMonoid {
        lattice: Lattice::new(r1 + r2),
        hilbert_basis: hb,
        cone: cone3,
    };
    let mut weight = f1.weight.clone();
    weight.extend_from_slice(&f2.weight);
    let mut names = f1.coordinate_names.clone();
    names.extend(f2.coordinate_names.iter().cloned());
    let frame = Frame::new(monoid, weight, names)?;

    let proj = |keep_first: bool| -> ToricMap {
        let (rows, rank_out) = if keep_first { (0..r1, r1) } else { (r1..r1 + r2, r2) };
        let matrix: Vec<Vec<i64>> = rows
            .map(|i| {
                let mut row = vec![0i64; r1 + r2];
                row[i] = 1;
                row
            })
            .collect();
        ToricMap {
            source: Lattice::new(r1 + r2),
            target: Lattice::new(rank_out),
            matrix,
        }
    };
    Ok((frame, proj(true), proj(false)))
}

/// Tropicalization of a monomial at the weighted Gauss point: the value of
/// the weight on the exponent, in base-p logarithm (an exact rational).
pub fn tropicalize(frame: &Frame, s: &[i64]) -> Result<Rat> {
    if s.len() != frame.weight.len() {
        return Err(Error::DimensionMismatch {
            expected: frame.weight.len(),
            got: s.len(),
        });
    }
    Ok(s.iter()
        .zip(&frame.weight)
        .map(|(&a, w)| Rat::from_integer(a) * *w)
        .sum())
}

/// Weighted Gauss valuation of an element with the given monomial support:
/// min over the support of the weight pairing (+inf for the zero element).
pub fn gauss_valuation(support: &[Vec<i64>], weight: &[Rat]) -> Result<Val> {
    let mut best = Val::Infinite;
    for s in support {
        if s.len() != weight.len() {
            return Err(Error::DimensionMismatch {
                expected: weight.len(),
                got: s.len(),
            });
        }
        let v: Rat = s
            .iter()
            .zip(weight)
            .map(|(&a, w)| Rat::from_integer(a) * *w)
            .sum();
        best = best.min(Val::Finite(v));
    }
    Ok(best)
}
