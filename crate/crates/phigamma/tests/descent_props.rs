//! Split/recombine identities, block oracles for the matrix descent, and the
//! refinement splitting laws.

use phigamma::charp::{self, CharPElem, PrecisionWindow};
use phigamma::descent::{self, DescentConfig};
use phigamma::gamma::pow_u64;
use phigamma::rat::{Rat, Val};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window() -> PrecisionWindow {
    PrecisionWindow::basic(2, 2, -8, 24, 1)
}

/// Random element supported on classes of index <= i with a valuation margin.
fn random_margin_elem<R: Rng>(w: &PrecisionWindow, rng: &mut R, i: i64) -> CharPElem {
    let mut acc = CharPElem::zero(w);
    for _ in 0..3 {
        let k = rng.gen_range(8..=12);
        let base = CharPElem::pibar_pow(w, Rat::from_integer(k)).unwrap();
        let fractional = match (i, rng.gen_bool(0.5)) {
            (0, _) | (_, false) => {
                charp::one_plus_pibar_exact_pow(w, Rat::new(rng.gen_range(0..2), 2)).unwrap()
            }
            _ => CharPElem::toric_pow(w, 0, Rat::new(rng.gen_range(0..2), 2)).unwrap(),
        };
        acc = acc.add(&base.mul(&fractional).unwrap()).unwrap();
    }
    acc
}

#[test]
fn split_then_recombine_is_identity() {
    let w = window();
    let cfg = DescentConfig::laurent_default();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for trial in 0..100 {
        let i = if trial % 2 == 0 { 1 } else { 0 };
        let x = random_margin_elem(&w, &mut rng, i);
        let (y, z) = descent::split_element(&cfg, i, 0, &x).unwrap();
        let g = descent::index_generator(w.p, cfg.gamma_prec, w.rank, i)
            .unwrap()
            .pow(pow_u64(w.p, 0));
        let gz = charp::gamma_act_charp(&g, &z).unwrap().sub(&z).unwrap();
        let recon = y.add(&gz).unwrap();
        assert!(
            recon.sub(&x).unwrap().is_zero_at_precision(),
            "recombination defect at trial {trial}"
        );
        // uniqueness: the lower part has no class-index-i components
        let yproj = charp::mu_project(&y, |mu| descent::class_index(mu) == i).unwrap();
        assert!(yproj.is_zero_at_precision());
    }
}

#[test]
fn block_diagonal_descent_matches_per_entry_runs() {
    let w = window();
    let cfg = DescentConfig::laurent_default();
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    for _ in 0..5 {
        let a = CharPElem::one(&w)
            .add(&random_margin_elem(&w, &mut rng, 1))
            .unwrap();
        let b = CharPElem::one(&w)
            .add(&random_margin_elem(&w, &mut rng, 1))
            .unwrap();
        let zero = CharPElem::zero(&w);
        let block = vec![vec![a.clone(), zero.clone()], vec![zero, b.clone()]];
        let block_out = descent::descend_matrix(&cfg, &block, 1, 0, Val::Infinite).unwrap();
        let a_out = descent::descend_matrix(&cfg, &vec![vec![a]], 1, 0, Val::Infinite).unwrap();
        let b_out = descent::descend_matrix(&cfg, &vec![vec![b]], 1, 0, Val::Infinite).unwrap();
        assert!(block_out.certified && a_out.certified && b_out.certified);
        let d00 = block_out.residual[0][0]
            .sub(&a_out.residual[0][0])
            .unwrap();
        let d11 = block_out.residual[1][1]
            .sub(&b_out.residual[0][0])
            .unwrap();
        assert!(d00.is_zero_at_precision(), "block (0,0) differs");
        assert!(d11.is_zero_at_precision(), "block (1,1) differs");
        assert!(block_out.residual[0][1].is_zero_at_precision());
        assert!(block_out.residual[1][0].is_zero_at_precision());
    }
}

#[test]
fn descend_matrix_identity_is_trivial() {
    let w = window();
    let cfg = DescentConfig::laurent_default();
    let g = descent::mat_identity(&w, 2);
    let out = descent::descend_matrix(&cfg, &g, 1, 0, Val::Infinite).unwrap();
    assert!(out.certified);
    assert!(out.iteration_log.is_empty());
    for (i, row) in out.u.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i == j {
                assert!(x.sub(&CharPElem::one(&w)).unwrap().is_zero_at_precision());
            } else {
                assert!(x.is_zero_at_precision());
            }
        }
    }
}

#[test]
fn nonconvergent_margin_is_reported() {
    // v(G - 1) must be strictly positive
    let w = window();
    let cfg = DescentConfig::laurent_default();
    let g = vec![vec![CharPElem::one(&w)
        .add(&CharPElem::toric_pow(&w, 0, Rat::new(1, 2)).unwrap())
        .unwrap()]];
    assert!(matches!(
        descent::descend_matrix(&cfg, &g, 1, 0, Val::Infinite),
        Err(phigamma::error::Error::InvalidInput(_))
    ));
}

#[test]
fn non_boundary_free_frames_are_rejected() {
    let w = window();
    let mut cfg = DescentConfig::laurent_default();
    cfg.boundary_free = false;
    let x = CharPElem::toric_pow(&w, 0, Rat::new(1, 2)).unwrap();
    assert!(descent::invert_gamma_minus_one(&cfg, 1, 0, &x).is_err());
}

#[test]
fn fourier_components_live_on_the_second_block() {
    let p = 2u64;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let x = {
            let base = phigamma::cyclo::CycloElem::zero(p, 2, 2, 5, 2);
            let mut acc = base.clone();
            for _ in 0..2 {
                let t = base
                    .toric_monomial(
                        vec![
                            Rat::new(rng.gen_range(0..2), 2),
                            Rat::new(rng.gen_range(-2..=2), 2),
                        ],
                        1 + rng.gen_range(0..31),
                    )
                    .unwrap();
                acc = acc.add(&t).unwrap();
            }
            acc
        };
        for comp in descent::fourier_decompose(&x, 1).unwrap() {
            for (e, _) in comp.value.terms() {
                assert_eq!(e.toric.len(), 1, "components live on the T'' block");
            }
        }
    }
}

#[test]
fn split_refinement_fixes_base_and_kills_fractional_layers() {
    let p = 2u64;
    let base = phigamma::cyclo::CycloElem::zero(p, 1, 1, 4, 2);
    let base_elem = base
        .toric_monomial(vec![Rat::new(1, 2), Rat::from_integer(-3)], 3)
        .unwrap();
    let adjoined = base
        .toric_monomial(vec![Rat::from_integer(1), Rat::new(1, 2)], 5)
        .unwrap();
    let x = base_elem.add(&adjoined).unwrap();
    let s = descent::split_refinement(&x, 1).unwrap();
    assert_eq!(s, base_elem);
    assert!(descent::split_refinement(&adjoined, 1).unwrap().is_zero());
    assert_eq!(descent::split_refinement(&base_elem, 1).unwrap(), base_elem);
}

#[test]
fn already_imperfect_input_descends_trivially() {
    // conjugate the trivial module by a change of basis with only
    // integer-exponent entries: the matrices are compatible and carry no
    // nontrivial classes, so no elimination pass runs
    let mut w = window();
    w.toric_bound = 512; // the inversion's geometric series climbs in s
    let cfg = DescentConfig::laurent_default();
    let u = CharPElem::one(&w)
        .add(
            &CharPElem::pibar(&w)
                .mul(&CharPElem::toric_pow(&w, 0, Rat::from_integer(1)).unwrap())
                .unwrap(),
        )
        .unwrap();
    let u_inv = u.invert().unwrap();
    let f = vec![vec![u_inv.mul(&charp::frobenius(&u, false).unwrap()).unwrap()]];
    let gs: Vec<descent::CMat> = (0..=1)
        .map(|i| {
            let g = descent::index_generator(w.p, cfg.gamma_prec, 1, i).unwrap();
            vec![vec![u_inv.mul(&charp::gamma_act_charp(&g, &u).unwrap()).unwrap()]]
        })
        .collect();
    let out = descent::deperfect_module(&cfg, &f, &gs, Val::Infinite).unwrap();
    assert!(out.certified);
    assert!(out.h_used.is_empty(), "no elimination pass should run");
    assert!(out.u[0][0]
        .sub(&CharPElem::one(&w))
        .unwrap()
        .is_zero_at_precision());
}
