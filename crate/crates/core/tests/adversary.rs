mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{random_config, random_matrix, random_strategies, random_thetas};
use proptest::prelude::*;
use qgame_qkd::adversary::*;
use qgame_qkd::forms::{partial_strategies, PartialBranch};
use qgame_qkd::state::{final_state, round_distribution, sample_counts, OutcomeDistribution};
use qgame_qkd::{EntanglementConfig, Player, Regime, SimRng, StrategyTriple};

fn forward(p: f64, qubit: Player) -> EavesdropConfig {
    EavesdropConfig::new(p, vec![Tap { qubit, leg: Leg::Forward }]).unwrap()
}

proptest! {
    #[test]
    fn kraus_sum_is_trace_preserving(p in 0.0..=1.0f64) {
        prop_assert!(kraus_completeness_error(&kraus_operators(p).unwrap()) < 1e-12);
    }

    #[test]
    fn damped_states_stay_physical(seed in any::<u64>(), p in 0.0..=1.0f64, mask in 1usize..8) {
        let mut rng = SimRng::from_seed(seed);
        let rho = final_state(&random_config(&mut rng), &random_strategies(&mut rng));
        let qubits: Vec<Player> = Player::ALL.into_iter().filter(|k| mask >> k.index() & 1 == 1).collect();
        let out = phase_damp(&rho, p, &qubits).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(out.hermiticity_error() < 1e-12);
        prop_assert!(out.min_eigenvalue() > -1e-10);
        // Dephasing never touches the populations.
        for abc in qgame_qkd::Profile::ALL {
            prop_assert!((out.entry(abc, abc) - rho.entry(abc, abc)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_forward_tap_closed_form_matches_kraus(seed in any::<u64>(), p in 0.0..=1.0f64, q in 0usize..3) {
        let mut rng = SimRng::from_seed(seed);
        let (cfg, s, m) = (random_config(&mut rng), random_strategies(&mut rng), random_matrix(&mut rng));
        let e = forward(p, Player::from_index(q));
        let closed = tapped_expected_payoffs(&cfg, &s, &m, &e).unwrap();
        let oracle = tapped_payoffs_oracle(&cfg, &s, &m, &e).unwrap();
        prop_assert!(closed.max_abs_diff(&oracle) < 1e-9);
    }

    #[test]
    fn payoffs_are_affine_in_mu(seed in any::<u64>(), p in 0.0..=1.0f64) {
        let mut rng = SimRng::from_seed(seed);
        let (cfg, s, m) = (random_config(&mut rng), random_strategies(&mut rng), random_matrix(&mut rng));
        let clean = tapped_payoffs_oracle(&cfg, &s, &m, &forward(0.0, Player::Bob)).unwrap();
        let tapped = tapped_payoffs_oracle(&cfg, &s, &m, &forward(p, Player::Bob)).unwrap();
        let slope = mu_slope(&cfg, &s, &m);
        for i in 0..3 {
            prop_assert!((clean.0[i] - p * slope.0[i] - tapped.0[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn nonentangled_payoffs_ignore_every_tap() {
    let mut rng = SimRng::from_seed(8);
    let cfg = EntanglementConfig::NON_ENTANGLED;
    for _ in 0..50 {
        let (s, m) = (random_thetas(&mut rng), random_matrix(&mut rng));
        let clean = qgame_qkd::state::expected_payoffs_oracle(&cfg, &s, &m);
        let all = EavesdropConfig::new(
            rng.uniform(),
            Player::ALL
                .into_iter()
                .flat_map(|qubit| [Leg::Forward, Leg::Return].map(|leg| Tap { qubit, leg }))
                .collect(),
        )
        .unwrap();
        assert!(tapped_payoffs_oracle(&cfg, &s, &m, &all).unwrap().max_abs_diff(&clean) < 1e-10);
    }
}

#[test]
fn partial_regime_depends_on_the_tap_only_through_the_entangled_state() {
    let mut rng = SimRng::from_seed(9);
    for _ in 0..30 {
        let thetas = [rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI)];
        let s = partial_strategies(thetas).unwrap();
        let m = random_matrix(&mut rng);
        let p = rng.uniform();
        let e = EavesdropConfig::single_forward(p).unwrap();
        for branch in [PartialBranch::EntangledState, PartialBranch::EntangledBasis] {
            let oracle = tapped_payoffs_oracle(&branch.config(), &s, &m, &e).unwrap();
            let closed = tapped_partial_payoff(&s, &m, branch, &e).unwrap();
            assert!(oracle.max_abs_diff(&closed) < 1e-9);
        }
        let basis = PartialBranch::EntangledBasis;
        let clean = tapped_partial_payoff(&s, &m, basis, &EavesdropConfig::single_forward(0.0).unwrap()).unwrap();
        assert!(tapped_partial_payoff(&s, &m, basis, &e).unwrap().max_abs_diff(&clean) < 1e-10);
    }
}

#[test]
fn return_leg_taps_need_the_kraus_path() {
    let e = EavesdropConfig::new(0.4, vec![Tap { qubit: Player::Alice, leg: Leg::Return }]).unwrap();
    assert!(!e.is_closed_form());
    let mut rng = SimRng::from_seed(2);
    let (s, m) = (random_strategies(&mut rng), random_matrix(&mut rng));
    assert!(matches!(
        tapped_expected_payoffs(&EntanglementConfig::MAX_ENTANGLED, &s, &m, &e),
        Err(qgame_qkd::DomainError::UnsupportedTap(_))
    ));
    assert!(tapped_payoffs_oracle(&EntanglementConfig::MAX_ENTANGLED, &s, &m, &e).is_ok());
    assert!(EavesdropConfig::single_forward(0.0).unwrap().is_closed_form());
}

#[test]
fn tap_configs_normalize_and_validate() {
    let t = |qubit, leg| Tap { qubit, leg };
    let e = EavesdropConfig::new(
        0.2,
        vec![t(Player::Charlie, Leg::Return), t(Player::Bob, Leg::Forward), t(Player::Bob, Leg::Forward)],
    )
    .unwrap();
    assert_eq!(e.targets(), &[t(Player::Bob, Leg::Forward), t(Player::Charlie, Leg::Return)]);
    assert!((e.mu() - 0.8).abs() < 1e-15);
    assert!(EavesdropConfig::single_forward(1.5).is_err());
    let parsed: EavesdropConfig = serde_json::from_str(r#"{"p": 0.3}"#).unwrap();
    assert_eq!(parsed, EavesdropConfig::single_forward(0.3).unwrap());
}

fn audit_max(p: f64, s: &StrategyTriple, m: &qgame_qkd::PayoffMatrix) -> DetectionReport {
    let regime = Regime::MaxEntangled;
    let cfg = regime.config().unwrap();
    let observed = tapped_expected_payoffs(&cfg, s, m, &EavesdropConfig::single_forward(p).unwrap()).unwrap();
    detect_eavesdropper(&observed, Audit { regime: &regime, strategies: s, matrix: m }, 1e-9).unwrap()
}

#[test]
fn exact_detection_estimates_the_tap_strength() {
    let mut rng = SimRng::from_seed(12);
    let mut checked = 0;
    for _ in 0..50 {
        let (s, m) = (random_thetas(&mut rng), random_matrix(&mut rng));
        let slope = mu_slope(&EntanglementConfig::MAX_ENTANGLED, &s, &m);
        if slope.0.iter().all(|x| x.abs() < 1e-3) {
            continue;
        }
        for p in [0.05, 0.3, 1.0] {
            let r = audit_max(p, &s, &m);
            let Verdict::Tapped { p_hat } = r.verdict else { panic!("{r:?}") };
            assert!((p_hat - p).abs() < 1e-9);
        }
        assert_eq!(audit_max(0.0, &s, &m).verdict, Verdict::Clean);
        checked += 1;
    }
    assert!(checked > 30);
}

#[test]
fn undetectable_cases_are_named() {
    let mut rng = SimRng::from_seed(13);
    let (s, m) = (random_thetas(&mut rng), random_matrix(&mut rng));
    let observed = qgame_qkd::Payoffs([0.0; 3]);
    let report = |regime: Regime, s: &StrategyTriple| {
        detect_eavesdropper(&observed, Audit { regime: &regime, strategies: s, matrix: &m }, 1e-9)
            .unwrap()
            .verdict
    };
    let cause = |c| Verdict::Undetectable { cause: c };
    assert_eq!(report(Regime::NonEntangled, &s), cause(UndetectableCause::RegimeIndependent));
    let basis = Regime::Partial { branch: PartialBranch::EntangledBasis };
    assert_eq!(report(basis, &partial_strategies([1.0, 2.0, 0.5]).unwrap()), cause(UndetectableCause::RegimeIndependent));
    let phased = random_strategies(&mut rng);
    assert_eq!(report(Regime::MaxEntangled, &phased), cause(UndetectableCause::PhasesNotZero));
    // A flat table pays the same whatever the state, so nothing moves with mu.
    let flat = qgame_qkd::PayoffMatrix::uniform(2.0).unwrap();
    let r = detect_eavesdropper(
        &observed,
        Audit { regime: &Regime::MaxEntangled, strategies: &s, matrix: &flat },
        1e-9,
    )
    .unwrap();
    assert_eq!(r.verdict, cause(UndetectableCause::ZeroSlope));
}

#[test]
fn partial_entangled_state_taps_are_detected() {
    let regime = Regime::Partial { branch: PartialBranch::EntangledState };
    let mut rng = SimRng::from_seed(14);
    let s = partial_strategies([FRAC_PI_2, 1.1, 2.3]).unwrap();
    let m = random_matrix(&mut rng);
    let observed = tapped_partial_payoff(&s, &m, PartialBranch::EntangledState, &EavesdropConfig::single_forward(0.5).unwrap()).unwrap();
    let r = detect_eavesdropper(&observed, Audit { regime: &regime, strategies: &s, matrix: &m }, 1e-9).unwrap();
    let Verdict::Tapped { p_hat } = r.verdict else { panic!("{r:?}") };
    assert!((p_hat - 0.5).abs() < 1e-9);
}

#[test]
fn sampled_detection_separates_clean_from_tapped() {
    let regime = Regime::MaxEntangled;
    let cfg = regime.config().unwrap();
    let mut rng = SimRng::from_seed(15);
    let s = StrategyTriple::from_thetas([0.7, 1.9, 2.4]).unwrap();
    let m = random_matrix(&mut rng);
    let shots = 200_000;
    let mut run = |p: f64| {
        let dist = tapped_outcome_distribution(&cfg, &s, &EavesdropConfig::single_forward(p).unwrap()).unwrap();
        let counts = sample_counts(&dist, shots, &mut rng);
        let freq = OutcomeDistribution::new(counts.map(|n| n as f64 / shots as f64)).unwrap();
        let sens = sampled_sensitivity(&round_distribution(&cfg, &s), &m, shots, 4.0);
        detect_eavesdropper(&freq.mean_payoffs(&m), Audit { regime: &regime, strategies: &s, matrix: &m }, sens).unwrap()
    };
    let clean: usize = (0..20).filter(|_| run(0.0).verdict.is_tapped()).count();
    assert!(clean <= 1, "false alarms: {clean}/20");
    let r = run(0.6);
    let Verdict::Tapped { p_hat } = r.verdict else { panic!("{r:?}") };
    assert!((p_hat - 0.6).abs() < 0.1);
}
