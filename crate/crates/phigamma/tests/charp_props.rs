//! Ring laws, Frobenius bijectivity, the pibar-root identity, and the group
//! action property for the characteristic-p coefficient rings.

use phigamma::charp::{
    self, frobenius, gamma_act_charp, mu_decompose, random_element, CharPElem, PrecisionWindow,
};
use phigamma::gamma::GammaElem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window() -> PrecisionWindow {
    PrecisionWindow::basic(2, 2, 0, 10, 1)
}

#[test]
fn ring_laws_on_random_triples() {
    let w = window();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x = random_element(&w, &mut rng, 3, true);
        let y = random_element(&w, &mut rng, 3, true);
        let z = random_element(&w, &mut rng, 3, true);
        let assoc_l = x.mul(&y).unwrap().mul(&z).unwrap();
        let assoc_r = x.mul(&y.mul(&z).unwrap()).unwrap();
        assert!(assoc_l.sub(&assoc_r).unwrap().is_zero_at_precision());
        let dist_l = x.mul(&y.add(&z).unwrap()).unwrap();
        let dist_r = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
        assert!(dist_l.sub(&dist_r).unwrap().is_zero_at_precision());
        assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
    }
}

#[test]
fn frobenius_is_a_bijective_ring_map() {
    // the finite-level shadow of Frobenius-surjectivity for model frames:
    // every element with denominator headroom has a p-th root
    let mut w = PrecisionWindow::basic(3, 2, 0, 9, 1);
    w.toric_bound = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x = random_element(&w, &mut rng, 3, true);
        let y = random_element(&w, &mut rng, 3, true);
        let fx = frobenius(&x, false).unwrap();
        let fy = frobenius(&y, false).unwrap();
        let fxy = frobenius(&x.mul(&y).unwrap(), false).unwrap();
        assert!(fx.mul(&fy).unwrap().sub(&fxy).unwrap().is_zero_at_precision());
        let fsum = frobenius(&x.add(&y).unwrap(), false).unwrap();
        assert!(fx.add(&fy).unwrap().sub(&fsum).unwrap().is_zero_at_precision());
        // bijective on exactly-represented elements: when the forward image
        // kept every term, the roundtrip is literal equality; otherwise it
        // holds up to the truncation floor
        let back = frobenius(&fx, true).unwrap();
        if fx.is_exact() {
            assert_eq!(back, x);
        } else {
            assert!(back.sub(&x).unwrap().is_zero_at_precision());
        }
    }
}

#[test]
fn pibar_root_identity_exhaustive() {
    // pibar^(j/p^m) = ((1+pibar)^(1/p^m) - 1)^j for all j < p^m, m <= mden
    for p in [2u64, 3] {
        let w = PrecisionWindow::basic(p, 2, 0, 12, 0);
        for m in 1u32..=2 {
            let pm = p.pow(m);
            for j in 1..pm {
                let lhs = CharPElem::pibar_pow(
                    &w,
                    phigamma::rat::Rat::new(j as i64, pm as i64),
                )
                .unwrap();
                let root = charp::one_plus_pibar_root_pow(&w, 1, m)
                    .unwrap()
                    .sub(&CharPElem::one(&w))
                    .unwrap();
                let rhs = root.pow(j as u32).unwrap();
                assert_eq!(lhs, rhs, "p={p} m={m} j={j}");
            }
        }
    }
}

#[test]
fn gamma_action_is_a_group_action() {
    let w = window();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prec = 10;
    for _ in 0..100 {
        let g = GammaElem::new(
            2,
            prec,
            1 + 4 * rng.gen_range(0..4),
            vec![4 * rng.gen_range(0..4)],
        )
        .unwrap();
        let h = GammaElem::new(
            2,
            prec,
            1 + 4 * rng.gen_range(0..4),
            vec![4 * rng.gen_range(0..4)],
        )
        .unwrap();
        let x = random_element(&w, &mut rng, 2, true);
        let lhs = gamma_act_charp(&g.compose(&h).unwrap(), &x).unwrap();
        let rhs = gamma_act_charp(&g, &gamma_act_charp(&h, &x).unwrap()).unwrap();
        assert!(
            lhs.sub(&rhs).unwrap().is_zero_at_precision(),
            "action-homomorphism defect"
        );
    }
}

#[test]
fn gamma_action_is_isometric_on_exact_parts() {
    let w = window();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = GammaElem::new(2, 10, 5, vec![4]).unwrap();
    for _ in 0..50 {
        let x = random_element(&w, &mut rng, 3, true);
        let gx = gamma_act_charp(&g, &x).unwrap();
        assert_eq!(gx.valuation(), x.valuation());
    }
}

#[test]
fn mu_projectors_are_orthogonal_idempotents() {
    let w = window();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let x = random_element(&w, &mut rng, 4, true);
        let comps = mu_decompose(&x).unwrap();
        for (class, comp) in &comps {
            // idempotent: decomposing a component returns it at its class
            let again = mu_decompose(comp).unwrap();
            for (c2, piece) in again {
                if c2 == *class {
                    assert_eq!(piece, *comp);
                } else {
                    assert!(piece.is_zero_at_precision());
                }
            }
        }
    }
}

#[test]
fn gamma_bound_monotone_in_n() {
    let w = PrecisionWindow::basic(2, 1, 0, 40, 1);
    let samples = charp::standard_samples(&w);
    let g2 = charp::gamma_bound(&w, 2, &samples).unwrap();
    let g3 = charp::gamma_bound(&w, 3, &samples).unwrap();
    let g4 = charp::gamma_bound(&w, 4, &samples).unwrap();
    // decay gains at consecutive levels grow at least by the factor p
    match (g2, g3, g4) {
        (phigamma::rat::Val::Finite(a), phigamma::rat::Val::Finite(b), phigamma::rat::Val::Finite(c)) => {
            assert!(b >= phigamma::rat::Rat::from_integer(2) * a);
            assert!(c >= phigamma::rat::Rat::from_integer(2) * b);
        }
        _ => panic!("bounds should be finite on the standard samples"),
    }
}
