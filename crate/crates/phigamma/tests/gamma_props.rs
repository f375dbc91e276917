//! Action-homomorphism batteries for every carrier and the Leibniz rule for
//! the Lie-algebra derivation.

use num_bigint::BigInt;
use num_rational::BigRational;
use phigamma::charp::{random_element, PrecisionWindow};
use phigamma::cyclo::CycloElem;
use phigamma::gamma::{self, GammaElem, SeriesElem, SeriesExp};
use phigamma::rat::{Rat, Val};
use phigamma::wittperiod::WittElem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gamma<R: Rng>(rng: &mut R, p: u64, prec: u32, rank: usize) -> GammaElem {
    GammaElem::new(
        p,
        prec,
        1 + p * p * rng.gen_range(0..p * p),
        (0..rank).map(|_| p * p * rng.gen_range(0..p * p)).collect(),
    )
    .unwrap()
}

#[test]
fn action_homomorphism_on_witt_carrier() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let w = PrecisionWindow::basic(2, 1, 0, 8, 1);
    for _ in 0..100 {
        let g = random_gamma(&mut rng, 2, 12, 1);
        let h = random_gamma(&mut rng, 2, 12, 1);
        let x = WittElem {
            components: (0..2).map(|_| random_element(&w, &mut rng, 2, true)).collect(),
        };
        let lhs = x.gamma_act(&g.compose(&h).unwrap()).unwrap();
        let rhs = x.gamma_act(&h).unwrap().gamma_act(&g).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero_at_precision());
    }
}

#[test]
fn action_homomorphism_on_cyclo_carrier() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let p = 2u64;
    for _ in 0..100 {
        let g = random_gamma(&mut rng, p, 8, 1);
        let h = random_gamma(&mut rng, p, 8, 1);
        let x = CycloElem::zeta_power(p, 2, 1, 3, 1, 2, rng.gen_range(0..4))
            .unwrap()
            .mul(
                &CycloElem::zero(p, 2, 1, 3, 1)
                    .toric_monomial(vec![Rat::new(rng.gen_range(-2..=2), 2)], 1 + rng.gen_range(0..7))
                    .unwrap(),
            )
            .unwrap();
        let lhs = x.gamma_act(&g.compose(&h).unwrap()).unwrap();
        let rhs = x.gamma_act(&h).unwrap().gamma_act(&g).unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn action_homomorphism_on_series_carrier() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let p = 2u64;
    for _ in 0..50 {
        let g = random_gamma(&mut rng, p, 14, 1);
        let h = random_gamma(&mut rng, p, 14, 1);
        let x = SeriesElem::from_terms(
            p,
            8,
            1,
            [(
                SeriesExp {
                    pi_deg: rng.gen_range(0..3),
                    toric: vec![rng.gen_range(-2..=2)],
                },
                BigRational::from_integer(BigInt::from(rng.gen_range(1..5))),
            )],
        );
        let lhs = gamma::gamma_act_series(&g.compose(&h).unwrap(), &x).unwrap();
        let rhs = gamma::gamma_act_series(&g, &gamma::gamma_act_series(&h, &x).unwrap()).unwrap();
        // the series carrier reads truncated residues as exact integers, so
        // the composed residue differs from the honest product by a multiple
        // of p^prec; binomials then agree mod p^(prec - v_p(D!))
        let diff = lhs.sub(&rhs).unwrap();
        assert!(
            diff.min_p_valuation() >= Val::from_int(14 - 7),
            "{:?}",
            diff.min_p_valuation()
        );
    }
}

#[test]
fn dgamma_leibniz_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    let p = 2u64;
    let d = 6u32;
    let g = GammaElem::new(p, 12, 5, vec![4]).unwrap();
    for _ in 0..50 {
        let mk = |rng: &mut ChaCha8Rng| {
            SeriesElem::from_terms(
                p,
                d,
                1,
                [
                    (
                        SeriesExp {
                            pi_deg: rng.gen_range(0..2),
                            toric: vec![rng.gen_range(-1..=1)],
                        },
                        BigRational::from_integer(BigInt::from(rng.gen_range(1..4))),
                    ),
                    (
                        SeriesExp {
                            pi_deg: rng.gen_range(0..3),
                            toric: vec![0],
                        },
                        BigRational::from_integer(BigInt::from(rng.gen_range(1..4))),
                    ),
                ],
            )
        };
        let x = mk(&mut rng);
        let y = mk(&mut rng);
        let (dxy, _) = gamma::dgamma(&g, &x.mul(&y).unwrap(), 10).unwrap();
        let (dx, _) = gamma::dgamma(&g, &x, 10).unwrap();
        let (dy, _) = gamma::dgamma(&g, &y, 10).unwrap();
        let rhs = dx.mul(&y).unwrap().add(&x.mul(&dy).unwrap()).unwrap();
        let diff = dxy.sub(&rhs).unwrap();
        assert!(
            diff.min_p_valuation() >= Val::from_int(7),
            "leibniz defect {:?}",
            diff.min_p_valuation()
        );
    }
}

#[test]
fn equivariance_batch_reports_floor_level_deviations() {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let w = PrecisionWindow::basic(2, 1, 0, 8, 1);
    let mut charp_pairs = Vec::new();
    let mut theta_pairs = Vec::new();
    for _ in 0..20 {
        let g = random_gamma(&mut rng, 2, 12, 1);
        let x = random_element(&w, &mut rng, 2, true);
        charp_pairs.push((g.clone(), x.clone()));
        theta_pairs.push((g, WittElem::teichmuller(&x, 2), 2));
    }
    let report = gamma::check_equivariance(&charp_pairs, &theta_pairs).unwrap();
    // theta-gamma deviations vanish mod p^N, so the minimum is at least N
    assert!(
        report.min_deviation >= Val::from_int(2),
        "deviation {:?}",
        report.min_deviation
    );
}
