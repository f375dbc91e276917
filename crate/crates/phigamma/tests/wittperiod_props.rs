//! Witt ring laws over truncated coefficient rings, theta as a ring map,
//! and theta's Gamma-equivariance.

use phigamma::charp::{random_element, PrecisionWindow};
use phigamma::gamma::GammaElem;
use phigamma::rat::Val;
use phigamma::wittperiod::{theta_eval, WittElem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_witt<R: Rng>(w: &PrecisionWindow, rng: &mut R, n: usize) -> WittElem {
    WittElem {
        components: (0..n).map(|_| random_element(w, rng, 2, true)).collect(),
    }
}

#[test]
fn witt_ring_laws_over_coefficient_rings() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (p, n) in [(2u64, 2usize), (2, 3), (3, 2)] {
        let w = PrecisionWindow::basic(p, 1, 0, 6, 1);
        for _ in 0..late_count(n) {
            let x = random_witt(&w, &mut rng, n);
            let y = random_witt(&w, &mut rng, n);
            let z = random_witt(&w, &mut rng, n);
            let assoc_l = x.add(&y).unwrap().add(&z).unwrap();
            let assoc_r = x.add(&y.add(&z).unwrap()).unwrap();
            assert!(assoc_l.sub(&assoc_r).unwrap().is_zero_at_precision());
            let dist_l = x.mul(&y.add(&z).unwrap()).unwrap();
            let dist_r = x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap();
            assert!(dist_l.sub(&dist_r).unwrap().is_zero_at_precision());
            assert!(x
                .add(&x.neg().unwrap())
                .unwrap()
                .is_zero_at_precision());
        }
    }
}

fn late_count(n: usize) -> usize {
    // heavier lengths get fewer random triples; totals stay at 200 triples
    match n {
        2 => 80,
        _ => 40,
    }
}

#[test]
fn phi_after_verschiebung_is_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let w = PrecisionWindow::basic(2, 1, 0, 8, 1);
    for _ in 0..40 {
        let x = random_witt(&w, &mut rng, 3);
        let lhs = x.verschiebung().frobenius(false).unwrap();
        let rhs = x.mul(&WittElem::from_u64(&w, 3, 2).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero_at_precision());
    }
}

#[test]
fn teichmuller_is_multiplicative_on_random_monomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let w = PrecisionWindow::basic(2, 2, 0, 10, 1);
    for _ in 0..50 {
        let x = random_element(&w, &mut rng, 1, true);
        let y = random_element(&w, &mut rng, 1, true);
        let lhs = WittElem::teichmuller(&x, 3)
            .mul(&WittElem::teichmuller(&y, 3))
            .unwrap();
        let rhs = WittElem::teichmuller(&x.mul(&y).unwrap(), 3);
        assert!(lhs.sub(&rhs).unwrap().is_zero_at_precision());
    }
}

#[test]
fn theta_is_a_ring_homomorphism_mod_pn() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let n_target = 2u32;
    let w = PrecisionWindow::basic(2, 1, 0, 8, 1);
    for _ in 0..100 {
        let x = random_witt(&w, &mut rng, n_target as usize);
        let y = random_witt(&w, &mut rng, n_target as usize);
        let tx = theta_eval(&x, n_target).unwrap();
        let ty = theta_eval(&y, n_target).unwrap();
        let tsum = theta_eval(&x.add(&y).unwrap(), n_target).unwrap();
        assert_eq!(tx.add(&ty).unwrap(), tsum, "theta additive");
        let tprod = theta_eval(&x.mul(&y).unwrap(), n_target).unwrap();
        assert_eq!(tx.mul(&ty).unwrap(), tprod, "theta multiplicative");
    }
}

#[test]
fn theta_commutes_with_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let n_target = 2u32;
    let w = PrecisionWindow::basic(2, 1, 0, 8, 1);
    for _ in 0..50 {
        let g = GammaElem::new(
            2,
            12,
            1 + 4 * rng.gen_range(0..4),
            vec![4 * rng.gen_range(0..4)],
        )
        .unwrap();
        let x = random_witt(&w, &mut rng, n_target as usize);
        let lhs = theta_eval(&x.gamma_act(&g).unwrap(), n_target).unwrap();
        let rhs = theta_eval(&x, n_target).unwrap().gamma_act(&g).unwrap();
        assert_eq!(lhs, rhs, "theta equivariance");
    }
}

#[test]
fn lift_inequality_certified_on_random_imperfect_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let w = PrecisionWindow::basic(2, 1, 0, 10, 1);
    let r0 = phigamma::wittperiod::measure_lift_r0(&w, 3).unwrap();
    for _ in 0..20 {
        let x = random_element(&w, &mut rng, 3, false); // integral exponents
        if x.is_zero_at_precision() {
            continue;
        }
        let res = phigamma::wittperiod::imperfect_lift(&x, 3, r0, r0).unwrap();
        assert_eq!(res.lift.components[0], x, "mod-p reduction roundtrip");
        match (res.vr_difference, res.vr_lift) {
            (Val::Infinite, _) => {}
            (Val::Finite(d), Val::Finite(l)) => {
                assert!(d >= l + phigamma::rat::Rat::new(1, 2), "lift inequality")
            }
            _ => panic!("valuations unavailable"),
        }
    }
}

#[test]
fn witt_frobenius_bijective_on_random_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let w = PrecisionWindow::basic(2, 2, 0, 6, 1);
    for _ in 0..50 {
        let x = random_witt(&w, &mut rng, 2);
        let fx = x.frobenius(false).unwrap();
        let back = fx.frobenius(true).unwrap();
        assert!(back.sub(&x).unwrap().is_zero_at_precision());
    }
}

#[test]
fn theta_sends_toric_teichmullers_to_t_monomials() {
    use phigamma::charp::CharPElem;
    use phigamma::rat::Rat;
    let w = PrecisionWindow::basic(2, 1, 0, 8, 1);
    let s_half = CharPElem::toric_pow(&w, 0, Rat::new(1, 2)).unwrap();
    let th = theta_eval(&WittElem::teichmuller(&s_half, 2), 2).unwrap();
    // exactly one term: T^(1/8) at the shifted level, zeta-exponent 0
    let terms: Vec<_> = th.terms().collect();
    assert_eq!(terms.len(), 1);
    let (e, c) = terms[0];
    assert_eq!(e.zeta, 0);
    assert_eq!(*c, 1);
    // lift exponent: (1/2) / p^(N-1) raised back via the p^(N-1) power
    assert_eq!(e.toric, vec![Rat::new(1, 2)]);
}
