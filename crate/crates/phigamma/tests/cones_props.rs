//! Property batteries for the cone combinatorics.

use phigamma::cones::{
    self, dual_cone, framed_graph, hilbert_basis, is_toric_refinement, Cone, Frame, Lattice,
};
use phigamma::rat::{Rat, Val};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame_pool() -> Vec<Frame> {
    let mut out = vec![
        Frame::affine(1, vec![Rat::new(1, 2)]).unwrap(),
        Frame::affine(2, vec![Rat::from_integer(0); 2]).unwrap(),
        Frame::laurent(1, vec![Rat::from_integer(1)]).unwrap(),
        Frame::laurent(2, vec![Rat::from_integer(0); 2]).unwrap(),
    ];
    // a slanted strongly convex frame
    let sigma = Cone::new(Lattice::new(2), vec![vec![1, 0], vec![1, 2]]).unwrap();
    let monoid = hilbert_basis(&dual_cone(&sigma)).unwrap();
    out.push(Frame::new(monoid, vec![Rat::from_integer(0); 2], vec!["a".into(), "b".into()]).unwrap());
    out
}

#[test]
fn framed_graph_projections_are_refinements() {
    let pool = frame_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let f1 = &pool[rng.gen_range(0..pool.len())];
        let f2 = &pool[rng.gen_range(0..pool.len())];
        let (graph, p1, p2) = framed_graph(f1, f2).unwrap();
        assert!(
            is_toric_refinement(&p1, &graph, f1).unwrap().is_some(),
            "projection to the first factor must split"
        );
        assert!(
            is_toric_refinement(&p2, &graph, f2).unwrap().is_some(),
            "projection to the second factor must split"
        );
    }
}

#[test]
fn gauss_valuation_is_a_valuation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let weight = vec![Rat::new(1, 2), Rat::from_integer(2)];
    for _ in 0..200 {
        let a: Vec<i64> = (0..2).map(|_| rng.gen_range(-5..=5)).collect();
        let b: Vec<i64> = (0..2).map(|_| rng.gen_range(-5..=5)).collect();
        // monomials multiply by adding exponents
        let va = cones::gauss_valuation(std::slice::from_ref(&a), &weight).unwrap();
        let vb = cones::gauss_valuation(std::slice::from_ref(&b), &weight).unwrap();
        let prod: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let vp = cones::gauss_valuation(std::slice::from_ref(&prod), &weight).unwrap();
        assert_eq!(vp, va.add(vb));
        // sums have valuation at least the min of the supports
        let vsum = cones::gauss_valuation(&[a.clone(), b.clone()], &weight).unwrap();
        assert!(vsum >= va.min(vb));
        assert_eq!(vsum, va.min(vb)); // max-norm is attained on the support
    }
    assert_eq!(
        cones::gauss_valuation(&[], &weight).unwrap(),
        Val::Infinite
    );
}

#[test]
fn hilbert_basis_idempotent_under_saturation() {
    for (cone, _) in phigamma::suite::cone_catalog() {
        let saturated = dual_cone(&dual_cone(&cone));
        let a = hilbert_basis(&cone).unwrap().hilbert_basis;
        let b = hilbert_basis(&saturated).unwrap().hilbert_basis;
        assert_eq!(a, b, "saturation changed the basis of {:?}", cone.generators);
    }
}

#[test]
fn hilbert_basis_irreducible_and_generating() {
    for (cone, _) in phigamma::suite::cone_catalog() {
        let m = hilbert_basis(&cone).unwrap();
        if cone.is_strongly_convex() && !m.hilbert_basis.is_empty() {
            assert!(m.generates_box(6), "{:?} fails generation", cone.generators);
            // pairwise irreducibility: no basis element is the sum of two others
            let hs = cone.halfspaces();
            for x in &m.hilbert_basis {
                for y in &m.hilbert_basis {
                    let rest: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                    if rest.iter().any(|&c| c != 0) && rest != *x {
                        let in_cone = cone.contains_with(&hs, &rest);
                        let nonzero = rest.iter().any(|&c| c != 0);
                        assert!(
                            !(in_cone && nonzero && y.iter().any(|&c| c != 0) && x != y && {
                                // rest must also be a nonneg combination; box check
                                m.hilbert_basis.contains(&rest)
                            }),
                            "basis element {x:?} = {y:?} + {rest:?} is reducible"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn incompatible_cone_condition_is_an_error() {
    let f = Frame::affine(1, vec![Rat::from_integer(0)]).unwrap();
    let m = cones::ToricMap::new(Lattice::new(1), Lattice::new(1), vec![vec![-1]]).unwrap();
    assert!(matches!(
        is_toric_refinement(&m, &f, &f),
        Err(phigamma::error::Error::IncompatibleCones)
    ));
}
