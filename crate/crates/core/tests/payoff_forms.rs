mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use common::*;
use qgame_qkd::forms::*;
use qgame_qkd::state::expected_payoffs_oracle;
use qgame_qkd::{prof, EntanglementConfig, PayoffMatrix, Player, Profile, SimRng, StrategyTriple};

#[test]
fn general_closed_form_matches_oracle() {
    let mut rng = SimRng::from_seed(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let cfg = random_config(&mut rng);
        let s = random_strategies(&mut rng);
        let m = random_matrix(&mut rng);
        let d = expected_payoffs_closed(&cfg, &s, &m).max_abs_diff(&expected_payoffs_oracle(&cfg, &s, &m));
        worst = worst.max(d);
    }
    assert!(worst < 1e-9, "max deviation {worst:e}");
}

#[test]
fn closed_form_regime_sweeps() {
    let mut rng = SimRng::from_seed(102);
    let regimes = [
        EntanglementConfig::NON_ENTANGLED,
        EntanglementConfig::MAX_ENTANGLED,
        PartialBranch::EntangledState.config(),
        PartialBranch::EntangledBasis.config(),
    ];
    for cfg in regimes {
        for _ in 0..250 {
            let s = random_strategies(&mut rng);
            let m = random_matrix(&mut rng);
            let d = expected_payoffs_closed(&cfg, &s, &m).max_abs_diff(&expected_payoffs_oracle(&cfg, &s, &m));
            assert!(d < 1e-9, "{cfg:?}: {d:e}");
        }
    }
}

#[test]
fn all_zero_thetas_give_first_entry() {
    let mut rng = SimRng::from_seed(103);
    let m = random_matrix(&mut rng);
    let s = StrategyTriple::from_thetas([0.0; 3]).unwrap();
    let p = expected_payoffs_closed(&EntanglementConfig::NON_ENTANGLED, &s, &m);
    for k in Player::ALL {
        assert!((p.get(k) - m.get(k, prof("000"))).abs() < 1e-12);
    }
}

#[test]
fn trivial_max_entangled_point_mixes_000_and_011() {
    let mut rng = SimRng::from_seed(104);
    for _ in 0..50 {
        let m = random_matrix(&mut rng);
        let ta = rng.uniform_in(0.0, PI);
        let s = StrategyTriple::from_thetas([ta, 0.0, 0.0]).unwrap();
        let p = expected_payoffs_oracle(&EntanglementConfig::MAX_ENTANGLED, &s, &m);
        let (c, sa) = (s.alice.big_c(), s.alice.big_s());
        for k in Player::ALL {
            let want = c * m.get(k, prof("000")) + sa * m.get(k, prof("011"));
            assert!((p.get(k) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn interference_vanishes_at_classical_thetas_and_symmetric_regimes() {
    let mut rng = SimRng::from_seed(105);
    for _ in 0..200 {
        let cfg = random_config(&mut rng);
        let mut s = random_strategies(&mut rng);
        let m = random_matrix(&mut rng);
        let which = Player::from_index(rng.index(3));
        let edge = if rng.uniform() < 0.5 { 0.0 } else { PI };
        *s.player_mut(which) = s.player(which).with_theta(edge).unwrap();
        for k in Player::ALL {
            assert!(interference_term(&cfg, &s, &m, k, 1.0).abs() < 1e-12);
        }
        let s = random_thetas(&mut rng);
        for cfg in [EntanglementConfig::NON_ENTANGLED, EntanglementConfig::MAX_ENTANGLED] {
            for k in Player::ALL {
                assert!(interference_term(&cfg, &s, &m, k, 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn nonentangled_views_match_oracle_for_every_viewer() {
    let mut rng = SimRng::from_seed(106);
    for _ in 0..300 {
        let m = random_matrix(&mut rng);
        let cs = random_cs(&mut rng, 0.0, 1.0);
        let s = StrategyTriple::from_cs(cs).unwrap();
        let oracle = expected_payoffs_oracle(&EntanglementConfig::NON_ENTANGLED, &s, &m);
        for k in Player::ALL {
            for viewer in Player::ALL {
                let v = view_payoff(QuadVariant::NonEntangled, &m, k, viewer, cs).unwrap();
                assert!((v - oracle.get(k)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn bob_view_endpoints() {
    let mut rng = SimRng::from_seed(107);
    let m = random_matrix(&mut rng);
    let q = nonentangled_coefficients(&m, Player::Charlie, Player::Bob, 0.37);
    assert!((nonentangled_payoff_view(&q, 1.0, 1.0) - q.d).abs() < 1e-14);
    assert!((nonentangled_payoff_view(&q, 1.0, 0.0) - q.f).abs() < 1e-14);
}

#[test]
fn maxentangled_views_match_oracle() {
    let mut rng = SimRng::from_seed(108);
    for _ in 0..300 {
        let m = random_matrix(&mut rng);
        let cs = random_cs(&mut rng, 0.0, 1.0);
        let s = StrategyTriple::from_cs(cs).unwrap();
        let oracle = expected_payoffs_oracle(&EntanglementConfig::MAX_ENTANGLED, &s, &m);
        for k in Player::ALL {
            for viewer in Player::ALL {
                let q = maxentangled_coefficients(&m, k, viewer, cs[viewer.index()]);
                let (x, y) = viewer.opponents();
                let v = maxentangled_payoff_view(&q, cs[x.index()], cs[y.index()]);
                assert!((v - oracle.get(k)).abs() < 1e-9);
            }
        }
    }
    // All thetas zero: only the 000 projector contributes.
    let m = random_matrix(&mut rng);
    let v = view_payoff(QuadVariant::MaxEntangled, &m, Player::Bob, Player::Alice, [1.0; 3]).unwrap();
    assert!((v - m.get(Player::Bob, prof("000"))).abs() < 1e-12);
}

#[test]
fn symmetry_map_links_regimes() {
    let mut rng = SimRng::from_seed(109);
    for _ in 0..500 {
        let m = random_matrix(&mut rng);
        let s = random_thetas(&mut rng);
        let max = expected_payoffs_oracle(&EntanglementConfig::MAX_ENTANGLED, &s, &m);
        let non = expected_payoffs_oracle(&EntanglementConfig::NON_ENTANGLED, &s, &symmetry_permute_matrix(&m));
        assert!(max.max_abs_diff(&non) < 1e-10);
    }
}

#[test]
fn phase_transform_reproduces_phased_payoffs() {
    let mut rng = SimRng::from_seed(110);
    for cfg in [EntanglementConfig::NON_ENTANGLED, EntanglementConfig::MAX_ENTANGLED] {
        for _ in 0..200 {
            let m = random_matrix(&mut rng);
            let s = random_strategies(&mut rng);
            let t = phase_transform_matrix(&m, &s, &cfg).unwrap();
            let phased = expected_payoffs_oracle(&cfg, &s, &m);
            let flat = expected_payoffs_oracle(&cfg, &s.without_phases(), &t);
            assert!(phased.max_abs_diff(&flat) < 1e-9);
        }
    }
}

#[test]
fn phase_maps_without_phases() {
    let s = StrategyTriple::from_thetas([0.3, 0.6, 0.9]).unwrap();
    let maps = phase_pair_maps(&s, &EntanglementConfig::MAX_ENTANGLED);
    // Pairs whose basis sign is + reduce to the identity, the others to a swap.
    assert_eq!(maps[0].reference, [[1.0, 0.0], [0.0, 1.0]]);
    assert_eq!(maps[1].reference, [[1.0, 0.0], [0.0, 1.0]]);
    assert_eq!(maps[2].reference, [[0.0, 1.0], [1.0, 0.0]]);
    let maps = phase_pair_maps(&s, &EntanglementConfig::NON_ENTANGLED);
    for pm in maps {
        assert_eq!(pm.reference, [[1.0, 0.0], [0.0, 1.0]]);
    }
}

#[test]
fn partial_payoff_matches_oracle_on_both_branches() {
    let mut rng = SimRng::from_seed(111);
    for branch in [PartialBranch::EntangledState, PartialBranch::EntangledBasis] {
        for _ in 0..500 {
            let m = random_matrix(&mut rng);
            let t = random_thetas(&mut rng).thetas();
            let s = partial_strategies(t).unwrap();
            let p = partial_payoff(&s, &m, branch).unwrap();
            let o = expected_payoffs_oracle(&branch.config(), &s, &m);
            assert!(p.max_abs_diff(&o) < 1e-9, "{branch:?}");
        }
    }
}

#[test]
fn partial_payoff_with_all_entries_one() {
    let m = PayoffMatrix::uniform(1.0).unwrap();
    let s = partial_strategies([0.7, 1.9, 2.4]).unwrap();
    for branch in [PartialBranch::EntangledState, PartialBranch::EntangledBasis] {
        let p = partial_payoff(&s, &m, branch).unwrap();
        assert!(p.0.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}

#[test]
fn partial_branches_swap_under_charlie_reflection() {
    // theta_C -> -theta_C negates sin(theta_C/2), which is the same unitary as beta_C -> beta_C + pi.
    let mut rng = SimRng::from_seed(112);
    for _ in 0..200 {
        let m = random_matrix(&mut rng);
        let t = random_thetas(&mut rng).thetas();
        let s = partial_strategies(t).unwrap();
        let mut reflected = s;
        reflected.charlie = s.charlie.with_phases(0.0, PI).unwrap();
        for (from, to) in [
            (PartialBranch::EntangledState, PartialBranch::EntangledBasis),
            (PartialBranch::EntangledBasis, PartialBranch::EntangledState),
        ] {
            let swapped = expected_payoffs_oracle(&from.config(), &reflected, &m);
            let other = partial_payoff(&s, &m, to).unwrap();
            assert!(swapped.max_abs_diff(&other) < 1e-9);
        }
    }
}

#[test]
fn half_angle_form_holds_at_alice_quarter_turn() {
    let mut rng = SimRng::from_seed(113);
    for branch in [PartialBranch::EntangledState, PartialBranch::EntangledBasis] {
        for _ in 0..200 {
            let m = random_matrix(&mut rng);
            let t = random_thetas(&mut rng).thetas();
            let s = partial_strategies([FRAC_PI_2, t[1], t[2]]).unwrap();
            let h = partial_payoff_half_angle(&s, &m, branch).unwrap();
            let o = expected_payoffs_oracle(&branch.config(), &s, &m);
            assert!(h.max_abs_diff(&o) < 1e-9);
        }
    }
    let s = partial_strategies([FRAC_PI_4, 1.0, 1.0]).unwrap();
    assert!(partial_payoff_half_angle(&s, &random_matrix(&mut rng), PartialBranch::EntangledState).is_err());
}

#[test]
fn partial_dual_views_match_oracle() {
    let mut rng = SimRng::from_seed(114);
    for branch in [PartialBranch::EntangledState, PartialBranch::EntangledBasis] {
        for _ in 0..300 {
            let base = random_matrix(&mut rng);
            let m = base.relabel(|abc| if abc.bit(Player::Alice) == 1 { abc.complement() } else { abc });
            let cs = random_cs(&mut rng, 0.0, 1.0);
            let s = partial_strategies_from_cs(cs).unwrap();
            let o = expected_payoffs_oracle(&branch.config(), &s, &m);
            for k in Player::ALL {
                for viewer in Player::ALL {
                    let v = partial_dual_payoff_view(&m, cs, k, viewer).unwrap();
                    assert!((v - o.get(k)).abs() < 1e-9);
                }
            }
        }
    }
    let m = random_matrix(&mut rng).relabel(|abc| if abc.bit(Player::Alice) == 1 { abc.complement() } else { abc });
    for cs in [[1.0; 3], [0.0; 3]] {
        let v = partial_dual_payoff_view(&m, cs, Player::Alice, Player::Bob).unwrap();
        assert!((v - m.get(Player::Alice, prof("000"))).abs() < 1e-12);
    }
    let _ = Profile::ALL;
}
