//! The key distribution protocol.
//!
//! A round: Alice prepares the shared state and sends two qubits out, each
//! player applies a strategy, the qubits come back, Alice measures and
//! publishes a disclosure, and Bob and Charlie invert it. Rounds are consumed
//! in pairs: the first round of a pair yields Bob's and Charlie's strategy
//! symbols, the second their payoff symbols.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{self, Audit, DetectionReport, EavesdropConfig, Verdict};
use crate::error::DomainError;
use crate::forms::{symmetry_permute_matrix, PartialBranch};
use crate::game::{PayoffMatrix, Player, Profile};
use crate::recovery::{
    self, alice_fit_opponents, alice_identify_outcome, alice_infer_opponent_product, classify_symmetry_case,
    disambiguate_by_replay, validate_ratio_distinctness, CaseFamily, Disclosure, DisclosurePolicy,
    OutcomeStatistics, PlayEvidence, ProductEstimate, RecoveredInfo, RecoveryError, ReplayOutcome, SymmetryCase,
};
use crate::regime::Regime;
use crate::rng::SimRng;
use crate::state::{
    measurement_basis, outcome_distribution, single_shot_measured_payoff, payoffs_from_density, sample_counts,
    sample_outcome, EntanglementConfig, OutcomeDistribution, Payoffs, StrategyTriple,
};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Sampled { shots: u64 },
}

impl Mode {
    pub fn shots(&self) -> Option<u64> {
        match self {
            Mode::Exact => None,
            Mode::Sampled { shots } => Some(*shots),
        }
    }
}

/// How each party picks its strategy weight `C` per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategySource {
    /// Uniform over a safe grid, from each party's private stream.
    Grid { values: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Fixed { cs: [f64; 3] },
}

impl Default for StrategySource {
    fn default() -> Self {
        StrategySource::Grid {
            values: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl StrategySource {
    fn validate(&self) -> Result<(), ProtocolError> {
        let ok = |c: f64| (0.0..=1.0).contains(&c);
        let fine = match self {
            StrategySource::Grid { values } => !values.is_empty() && values.iter().all(|&c| ok(c)),
            StrategySource::Uniform { lo, hi } => ok(*lo) && ok(*hi) && lo <= hi,
            StrategySource::Fixed { cs } => cs.iter().all(|&c| ok(c)),
        };
        if fine {
            Ok(())
        } else {
            Err(ProtocolError::Invalid("strategy weights must lie in [0, 1]".into()))
        }
    }

    fn draw(&self, party: Player, rng: &mut SimRng) -> f64 {
        match self {
            StrategySource::Grid { values } => values[rng.index(values.len())],
            StrategySource::Uniform { lo, hi } => rng.uniform_in(*lo, *hi),
            StrategySource::Fixed { cs } => cs[party.index()],
        }
    }
}

/// Quantizers that turn recovered values into key symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub strategy_bits: u32,
    pub payoff_digits: u32,
    pub payoff_min: f64,
    pub payoff_max: f64,
}

/// Values are rounded to this many decimals before quantizing so that
/// parties whose recoveries differ by float round-off land in the same bin.
const SNAP_DECIMALS: i32 = 9;

fn snap(x: f64) -> f64 {
    let scale = 10f64.powi(SNAP_DECIMALS);
    (x * scale).round() / scale
}

impl Codebook {
    pub fn new(strategy_bits: u32, payoff_digits: u32, payoff_min: f64, payoff_max: f64) -> Result<Self, ProtocolError> {
        if !(1..=16).contains(&strategy_bits) {
            return Err(ProtocolError::Invalid("strategy_bits must be in 1..=16".into()));
        }
        if payoff_digits > 6 {
            return Err(ProtocolError::Invalid("payoff_digits must be at most 6".into()));
        }
        if !(payoff_min.is_finite() && payoff_max.is_finite() && payoff_min <= payoff_max) {
            return Err(ProtocolError::Invalid("payoff range must be finite and ordered".into()));
        }
        Ok(Codebook {
            strategy_bits,
            payoff_digits,
            payoff_min,
            payoff_max,
        })
    }

    /// Payoff range spanning the matrix entries, which bound every expected payoff.
    pub fn for_matrix(strategy_bits: u32, payoff_digits: u32, m: &PayoffMatrix) -> Result<Self, ProtocolError> {
        Codebook::new(strategy_bits, payoff_digits, m.min_entry(), m.max_entry())
    }

    pub fn strategy_alphabet(&self) -> u64 {
        1 << self.strategy_bits
    }

    pub fn payoff_alphabet(&self) -> u64 {
        self.payoff_index(self.payoff_max) + 1
    }

    fn payoff_index(&self, p: f64) -> u64 {
        ((snap(p) - self.payoff_min) * 10f64.powi(self.payoff_digits as i32)).round().max(0.0) as u64
    }

    pub fn strategy_symbol(&self, c: f64) -> Result<u64, ProtocolError> {
        if !c.is_finite() || !(-tolerance::RECOVERY..=1.0 + tolerance::RECOVERY).contains(&c) {
            return Err(ProtocolError::Invalid(format!("strategy weight {c} outside [0, 1]")));
        }
        let scaled = (snap(c.clamp(0.0, 1.0)) * self.strategy_alphabet() as f64).floor() as u64;
        Ok(scaled.min(self.strategy_alphabet() - 1))
    }

    pub fn payoff_symbol(&self, p: f64) -> Result<u64, ProtocolError> {
        let slack = tolerance::RECOVERY * (1.0 + p.abs());
        if !p.is_finite() || p < self.payoff_min - slack || p > self.payoff_max + slack {
            return Err(ProtocolError::Invalid(format!(
                "payoff {p} outside [{}, {}]",
                self.payoff_min, self.payoff_max
            )));
        }
        Ok(self.payoff_index(p.clamp(self.payoff_min, self.payoff_max)))
    }

    /// `(m_B, m_C, n_B, n_C)` from two strategy weights and two payoffs.
    pub fn encode(&self, c_b: f64, c_c: f64, p_b: f64, p_c: f64) -> Result<[u64; 4], ProtocolError> {
        Ok([
            self.strategy_symbol(c_b)?,
            self.strategy_symbol(c_c)?,
            self.payoff_symbol(p_b)?,
            self.payoff_symbol(p_c)?,
        ])
    }
}

/// Which solver Bob and Charlie run for a given regime, matrix and policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RecoveryPlan {
    /// Two-payoff disclosure. `permuted` runs the solver on the
    /// symmetry-permuted matrix (maximally entangled rounds).
    PayoffsAB { case: SymmetryCase, permuted: bool },
    AliceAll { case: SymmetryCase, permuted: bool },
    Partial { branch: PartialBranch },
    PartialSymmetric { case: SymmetryCase },
}

impl RecoveryPlan {
    pub fn recover(&self, d: &Disclosure, m: &PayoffMatrix, own_c: f64, party: Player) -> Result<RecoveredInfo, RecoveryError> {
        let work = |permuted: bool| if permuted { symmetry_permute_matrix(m) } else { m.clone() };
        match *self {
            RecoveryPlan::PayoffsAB { case, permuted } => match case {
                SymmetryCase::CaseI => recovery::recover_nonentangled_case_i(d, &work(permuted), own_c, party),
                SymmetryCase::CaseII => recovery::recover_nonentangled_case_ii(d, &work(permuted), own_c, party),
                other => Err(RecoveryError::Unsupported(format!("two-payoff disclosure under {other:?}"))),
            },
            RecoveryPlan::AliceAll { case, permuted } => {
                recovery::recover_from_alice_disclosure(d, &work(permuted), own_c, party, case)
            }
            RecoveryPlan::Partial { branch } => recovery::recover_partial(d, m, own_c, party, branch),
            RecoveryPlan::PartialSymmetric { case } => recovery::recover_partial_symmetric(d, m, own_c, party, case),
        }
    }
}

/// Choose the solver, rejecting combinations that have none.
pub fn plan_recovery(regime: &Regime, m: &PayoffMatrix, policy: DisclosurePolicy) -> Result<RecoveryPlan, ProtocolError> {
    let invalid = |msg: String| Err(ProtocolError::Invalid(msg));
    match regime {
        Regime::NonEntangled | Regime::MaxEntangled => {
            let permuted = *regime == Regime::MaxEntangled;
            let work = if permuted { symmetry_permute_matrix(m) } else { m.clone() };
            let class = classify_symmetry_case(&work, CaseFamily::NonEntangled);
            match policy {
                DisclosurePolicy::PayoffsAB => match class.case {
                    SymmetryCase::CaseI | SymmetryCase::CaseII if class.two_index => {
                        if !(class.constrains(Player::Alice) && class.constrains(Player::Bob)) {
                            return invalid(format!("{:?} must constrain payoff rows A and B", class.case));
                        }
                        Ok(RecoveryPlan::PayoffsAB {
                            case: class.case,
                            permuted,
                        })
                    }
                    SymmetryCase::CaseI | SymmetryCase::CaseII => invalid(format!(
                        "{:?} must be imposed on exactly two payoff rows for a two-payoff disclosure",
                        class.case
                    )),
                    SymmetryCase::CaseIII => invalid("Case III needs Alice's strategy in the disclosure".into()),
                    _ => invalid(format!("no two-payoff solver for an unconstrained matrix in the {regime} regime")),
                },
                DisclosurePolicy::AliceAll => match class.case {
                    SymmetryCase::CaseI | SymmetryCase::CaseII | SymmetryCase::CaseIII
                        if class.constrains(Player::Alice) =>
                    {
                        Ok(RecoveryPlan::AliceAll {
                            case: class.case,
                            permuted,
                        })
                    }
                    _ => invalid(format!("Alice's disclosure needs a Case I-III matrix in the {regime} regime")),
                },
                DisclosurePolicy::PayoffAOnly => {
                    invalid("disclosing only P^A is solved in the partial regime's symmetric cases".into())
                }
            }
        }
        Regime::Partial { branch } => match policy {
            DisclosurePolicy::AliceAll => {
                if !m.is_not_dual_for(Player::Alice, tolerance::MATRIX_EQUALITY) {
                    return invalid("the partial regime needs Alice's payoff row to be NOT-dual".into());
                }
                Ok(RecoveryPlan::Partial { branch: *branch })
            }
            DisclosurePolicy::PayoffAOnly => {
                let class = classify_symmetry_case(m, CaseFamily::PartialDual);
                match class.case {
                    SymmetryCase::PartialSymI | SymmetryCase::PartialSymII | SymmetryCase::PartialSymIII
                        if class.constrains(Player::Alice) && class.constrains(Player::Bob) =>
                    {
                        Ok(RecoveryPlan::PartialSymmetric { case: class.case })
                    }
                    _ => invalid("disclosing only P^A needs a symmetric NOT-dual matrix on rows A and B".into()),
                }
            }
            DisclosurePolicy::PayoffsAB => invalid("the partial regime has no two-payoff solver".into()),
        },
        Regime::General { .. } => invalid("recovery is solved only in the non-, maximally and partially entangled regimes".into()),
    }
}

/// Forces a singular recovery on the first attempt of the listed rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultPlan {
    #[serde(default)]
    pub singular_first_attempt: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub regime: Regime,
    pub matrix: PayoffMatrix,
    pub policy: DisclosurePolicy,
    pub mode: Mode,
    #[serde(default)]
    pub eavesdrop: Option<EavesdropConfig>,
    #[serde(default)]
    pub strategies: StrategySource,
    pub codebook: Codebook,
    /// Round pairs; the key has four symbols per pair.
    pub round_pairs: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Extra plays Alice uses to split her opponents' weights in sampled mode.
    #[serde(default = "default_replays")]
    pub replays: u32,
    /// Largest standard error at which a sampled replay counts as resolved.
    #[serde(default = "default_replay_error")]
    pub replay_max_std_error: f64,
    #[serde(default = "default_sigmas")]
    pub detection_sigmas: f64,
    #[serde(default)]
    pub faults: FaultPlan,
}

fn default_retries() -> u32 {
    3
}

fn default_replays() -> u32 {
    3
}

fn default_replay_error() -> f64 {
    0.01
}

fn default_sigmas() -> f64 {
    tolerance::DETECTION_SIGMAS
}

impl SessionConfig {
    /// Exact, untapped session with the default grid, retries and replays.
    pub fn exact(regime: Regime, matrix: PayoffMatrix, policy: DisclosurePolicy, codebook: Codebook, round_pairs: usize) -> Self {
        SessionConfig {
            regime,
            matrix,
            policy,
            mode: Mode::Exact,
            eavesdrop: None,
            strategies: StrategySource::default(),
            codebook,
            round_pairs,
            max_retries: default_retries(),
            replays: default_replays(),
            replay_max_std_error: default_replay_error(),
            detection_sigmas: default_sigmas(),
            faults: FaultPlan::default(),
        }
    }

    /// Everything a round needs checked before anything runs.
    pub fn validate_round(&self) -> Result<RecoveryPlan, ProtocolError> {
        let ratios = validate_ratio_distinctness(&self.matrix);
        if !ratios.distinct {
            return Err(ProtocolError::Invalid(format!(
                "payoff ratios do not identify outcomes (collisions {:?}, degenerate {:?})",
                ratios.collisions, ratios.degenerate
            )));
        }
        self.regime.config()?;
        self.strategies.validate()?;
        if let Mode::Sampled { shots } = self.mode {
            if shots == 0 {
                return Err(ProtocolError::Invalid("sampled mode needs at least one shot".into()));
            }
        }
        if !(self.detection_sigmas.is_finite() && self.detection_sigmas > 0.0) {
            return Err(ProtocolError::Invalid("detection_sigmas must be positive".into()));
        }
        plan_recovery(&self.regime, &self.matrix, self.policy)
    }

    /// Round checks plus what key assembly needs.
    pub fn validate(&self) -> Result<RecoveryPlan, ProtocolError> {
        let plan = self.validate_round()?;
        if self.policy == DisclosurePolicy::PayoffAOnly {
            return Err(ProtocolError::Invalid(
                "disclosing only P^A leaves Charlie's payoff undetermined, so no key can be assembled".into(),
            ));
        }
        if self.round_pairs == 0 {
            return Err(ProtocolError::Invalid("a session needs at least one round pair".into()));
        }
        Codebook::new(
            self.codebook.strategy_bits,
            self.codebook.payoff_digits,
            self.codebook.payoff_min,
            self.codebook.payoff_max,
        )?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundFailure {
    pub stage: FailureStage,
    pub cause: String,
    pub singular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureStage {
    Identification,
    AliceInference,
    Recovery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub attempt: u32,
    pub regime: Regime,
    pub config: EntanglementConfig,
    pub strategies: StrategyTriple,
    pub mode: Mode,
    pub statistics: OutcomeStatistics,
    /// Outcome of Alice's first shot and the profile she identified from it.
    pub outcome: Profile,
    pub identified: Option<Profile>,
    pub alice_product: Option<ProductEstimate>,
    /// Payoffs as Alice observed them: expectations in exact mode, shot averages otherwise.
    pub observed: Payoffs,
    pub disclosure: Option<Disclosure>,
    /// Alice, Bob and Charlie, in that order, when the round succeeded.
    pub recovered: Vec<RecoveredInfo>,
    pub eavesdrop: Option<EavesdropConfig>,
    pub detection: DetectionReport,
    pub failure: Option<RoundFailure>,
}

impl RoundRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn recovered_by(&self, p: Player) -> Option<&RecoveredInfo> {
        self.recovered.iter().find(|r| r.party == p)
    }

    /// Largest deviation of any party's recovered weights from the truth.
    pub fn max_strategy_error(&self) -> Option<f64> {
        let truth = self.strategies.cs();
        self.succeeded()
            .then(|| self.recovered.iter().map(|r| r.max_strategy_error(truth)).fold(0.0, f64::max))
    }
}

fn fail(stage: FailureStage, e: &RecoveryError) -> RoundFailure {
    RoundFailure {
        stage,
        cause: e.to_string(),
        singular: matches!(e, RecoveryError::Singular { .. }),
    }
}

/// Alice splits her opponents' weights using the round's own statistics
/// and, in sampled mode, `replays` further plays with the same strategies.
fn alice_opponents(
    cfg: &SessionConfig,
    stats: &OutcomeStatistics,
    dist: &OutcomeDistribution,
    own_c: f64,
    rng: &mut SimRng,
) -> Result<(Option<ProductEstimate>, f64, f64), RecoveryError> {
    match cfg.regime {
        Regime::NonEntangled | Regime::MaxEntangled => {
            let product = alice_infer_opponent_product(stats, &cfg.regime, own_c)?;
            let mut plays = vec![PlayEvidence::Statistics(stats.clone())];
            if let Mode::Sampled { shots } = cfg.mode {
                for _ in 0..cfg.replays {
                    plays.push(PlayEvidence::Statistics(OutcomeStatistics::Counts(sample_counts(dist, shots, rng))));
                }
            }
            match disambiguate_by_replay(&plays, &cfg.regime, cfg.replay_max_std_error)? {
                ReplayOutcome::Resolved { c_b, c_c } => Ok((Some(product), c_b, c_c)),
                ReplayOutcome::AmbiguityRemains { candidates } => Err(RecoveryError::Unsupported(format!(
                    "replays left the opponents' weights ambiguous: {candidates:?}"
                ))),
            }
        }
        _ => {
            let fit = alice_fit_opponents(stats, &cfg.regime, own_c)?;
            if fit.ambiguous {
                return Err(RecoveryError::Unsupported("outcome law fits several opponent weights".into()));
            }
            Ok((None, fit.c_b, fit.c_c))
        }
    }
}

/// Play one round with the given strategies. Failures inside the round are
/// recorded, not returned; errors are reserved for invalid input.
pub fn run_round(cfg: &SessionConfig, s: &StrategyTriple, index: usize, seed: u64) -> Result<RoundRecord, ProtocolError> {
    let plan = cfg.validate_round()?;
    run_planned_round(cfg, &plan, s, index, 0, seed, false)
}

fn check_strategies(regime: &Regime, s: &StrategyTriple) -> Result<(), ProtocolError> {
    match regime {
        Regime::Partial { .. } => Ok(crate::forms::check_partial_regime(s)?),
        _ if s.phases_zero() => Ok(()),
        _ => Err(ProtocolError::Invalid("recovery assumes phase-free strategies in this regime".into())),
    }
}

fn run_planned_round(
    cfg: &SessionConfig,
    plan: &RecoveryPlan,
    s: &StrategyTriple,
    index: usize,
    attempt: u32,
    seed: u64,
    inject_singular: bool,
) -> Result<RoundRecord, ProtocolError> {
    check_strategies(&cfg.regime, s)?;
    let mut rng = SimRng::stream(seed, ((index as u64) << 8) | attempt as u64);
    let ent = cfg.regime.config()?;
    let m = &cfg.matrix;

    // Steps 1-4: prepare, distribute, play, return. Eva acts on the wire.
    let tap = cfg.eavesdrop.clone().unwrap_or(EavesdropConfig::new(0.0, Vec::new())?);
    let rho = adversary::tapped_final_state(&ent, s, &tap)?;

    // Step 5: Alice measures, identifies the profile and infers her opponents.
    let basis = measurement_basis(ent.delta())?;
    let dist = outcome_distribution(&rho, &basis);
    let (stats, empirical, observed) = match cfg.mode {
        Mode::Exact => (OutcomeStatistics::Exact(dist), dist, payoffs_from_density(&rho, &basis, m)),
        Mode::Sampled { shots } => {
            let counts = sample_counts(&dist, shots, &mut rng);
            let freq = OutcomeDistribution::new(counts.map(|c| c as f64 / shots as f64))?;
            (OutcomeStatistics::Counts(counts), freq, freq.mean_payoffs(m))
        }
    };
    let outcome = sample_outcome(&dist, &mut rng);
    let measured = Player::ALL.map(|k| single_shot_measured_payoff(&empirical, m, outcome, k));
    let c_a = s.alice.big_c();

    let audit = Audit {
        regime: &cfg.regime,
        strategies: s,
        matrix: m,
    };
    let sensitivity = match cfg.mode {
        Mode::Exact => tolerance::DETECTION_EXACT,
        Mode::Sampled { shots } => {
            let clean = crate::state::round_distribution(&ent, s);
            adversary::sampled_sensitivity(&clean, m, shots, cfg.detection_sigmas)
        }
    };
    let mut detection = adversary::detect_eavesdropper(&observed, audit, sensitivity)?;
    detection.p_true = cfg.eavesdrop.as_ref().map(|e| e.p());
    detection.shots = cfg.mode.shots();

    let mut record = RoundRecord {
        index,
        attempt,
        regime: cfg.regime,
        config: ent,
        strategies: *s,
        mode: cfg.mode,
        statistics: stats.clone(),
        outcome,
        identified: None,
        alice_product: None,
        observed,
        disclosure: None,
        recovered: Vec::new(),
        eavesdrop: cfg.eavesdrop.clone(),
        detection,
        failure: None,
    };

    match alice_identify_outcome(measured, m) {
        Ok(p) => record.identified = Some(p),
        Err(e) => {
            record.failure = Some(fail(FailureStage::Identification, &e));
            return Ok(record);
        }
    }
    let (product, c_b, c_c) = match alice_opponents(cfg, &stats, &dist, c_a, &mut rng) {
        Ok(v) => v,
        Err(e) => {
            record.failure = Some(fail(FailureStage::AliceInference, &e));
            return Ok(record);
        }
    };
    record.alice_product = product;

    // Step 6: disclosure.
    let disclosure = cfg.policy.disclose(&observed, c_a);
    record.disclosure = Some(disclosure);

    // Step 7: Bob and Charlie solve for everything else.
    let alice = RecoveredInfo {
        party: Player::Alice,
        c: [Some(c_a), Some(c_b), Some(c_c)],
        payoffs: observed.0.map(Some),
        min_abs_denominator: f64::INFINITY,
    };
    let mut recovered = vec![alice];
    for party in [Player::Bob, Player::Charlie] {
        let result = if inject_singular {
            Err(RecoveryError::Singular { denominator: 0.0 })
        } else {
            plan.recover(&disclosure, m, s.player(party).big_c(), party)
        };
        match result {
            Ok(info) => recovered.push(info),
            Err(e) => {
                record.failure = Some(fail(FailureStage::Recovery, &e));
                return Ok(record);
            }
        }
    }
    record.recovered = recovered;
    Ok(record)
}

/// Symbols for one round pair from one party's point of view.
pub fn encode_round_pair(
    codebook: &Codebook,
    first: &RoundRecord,
    second: &RoundRecord,
    party: Player,
) -> Result<[u64; 4], ProtocolError> {
    let missing = || ProtocolError::Invalid(format!("round pair lacks {}'s recovered values", party.letter()));
    let a = first.recovered_by(party).ok_or_else(missing)?;
    let b = second.recovered_by(party).ok_or_else(missing)?;
    codebook.encode(
        a.c_of(Player::Bob).ok_or_else(missing)?,
        a.c_of(Player::Charlie).ok_or_else(missing)?,
        b.payoff(Player::Bob).ok_or_else(missing)?,
        b.payoff(Player::Charlie).ok_or_else(missing)?,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Key {
    pub party: Player,
    pub symbols: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyAgreement {
    pub agree: bool,
    pub first_mismatch: Option<usize>,
}

/// Whether all keys are identical, and the first symbol position where they are not.
pub fn verify_key_agreement(keys: &[Key]) -> KeyAgreement {
    let Some(first) = keys.first() else {
        return KeyAgreement {
            agree: true,
            first_mismatch: None,
        };
    };
    let longest = keys.iter().map(|k| k.symbols.len()).max().unwrap_or(0);
    let mismatch = (0..longest).find(|&i| keys.iter().any(|k| k.symbols.get(i) != first.symbols.get(i)));
    KeyAgreement {
        agree: mismatch.is_none(),
        first_mismatch: mismatch,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SessionStatus {
    Completed,
    /// A tapped round was detected; keys were not released.
    Compromised,
    Aborted { round: usize, cause: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub clean: usize,
    pub tapped: usize,
    pub undetectable: usize,
    pub max_p_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub seed: u64,
    pub plan: RecoveryPlan,
    pub rounds: Vec<RoundRecord>,
    pub retries: u32,
    pub status: SessionStatus,
    /// Alice's, Bob's and Charlie's keys, withheld unless the session completed.
    pub keys: Option<Vec<Key>>,
    pub agreement: Option<KeyAgreement>,
    pub detection: DetectionSummary,
}

impl SessionReport {
    pub fn compromised(&self) -> bool {
        self.status == SessionStatus::Compromised
    }

    pub fn keys_agree(&self) -> bool {
        self.agreement.is_some_and(|a| a.agree)
    }
}

fn draw_strategies(cfg: &SessionConfig, seed: u64, round: usize, attempt: u32) -> Result<StrategyTriple, ProtocolError> {
    let cs = Player::ALL.map(|p| {
        // Each party draws from its own private stream.
        let stream = (1u64 << 40) | ((p.index() as u64) << 32) | ((round as u64) << 8) | attempt as u64;
        cfg.strategies.draw(p, &mut SimRng::stream(seed, stream))
    });
    Ok(cfg.regime.strategies_from_cs(cs)?)
}

/// Run `round_pairs` pairs of rounds, retrying failed rounds with fresh
/// strategies, and assemble every party's key.
pub fn run_session(cfg: &SessionConfig, seed: u64) -> Result<SessionReport, ProtocolError> {
    let plan = cfg.validate()?;
    let mut rounds = Vec::new();
    let mut accepted: Vec<RoundRecord> = Vec::new();
    let mut retries = 0;
    let mut status = SessionStatus::Completed;
    'rounds: for index in 0..2 * cfg.round_pairs {
        let mut attempt = 0;
        loop {
            let s = draw_strategies(cfg, seed, index, attempt)?;
            let inject = attempt == 0 && cfg.faults.singular_first_attempt.contains(&index);
            let record = run_planned_round(cfg, &plan, &s, index, attempt, seed, inject)?;
            let ok = record.succeeded();
            let failure = record.failure.clone();
            rounds.push(record.clone());
            if ok {
                accepted.push(record);
                break;
            }
            if attempt >= cfg.max_retries {
                status = SessionStatus::Aborted {
                    round: index,
                    cause: failure.map(|f| f.cause).unwrap_or_default(),
                };
                break 'rounds;
            }
            attempt += 1;
            retries += 1;
        }
    }

    let mut detection = DetectionSummary::default();
    for r in &rounds {
        match r.detection.verdict {
            Verdict::Clean => detection.clean += 1,
            Verdict::Tapped { p_hat } => {
                detection.tapped += 1;
                detection.max_p_hat = Some(detection.max_p_hat.map_or(p_hat, |m: f64| m.max(p_hat)));
            }
            Verdict::Undetectable { .. } => detection.undetectable += 1,
        }
    }
    // A detected tap outranks a later abort: tapped disclosures often fail
    // to invert at all, and the abort is then a symptom of the tap.
    if detection.tapped > 0 {
        status = SessionStatus::Compromised;
    }

    let (keys, agreement) = if status == SessionStatus::Completed {
        let mut keys = Vec::new();
        for party in Player::ALL {
            let mut symbols = Vec::with_capacity(4 * cfg.round_pairs);
            for pair in accepted.chunks(2) {
                symbols.extend(encode_round_pair(&cfg.codebook, &pair[0], &pair[1], party)?);
            }
            keys.push(Key { party, symbols });
        }
        let agreement = verify_key_agreement(&keys);
        (Some(keys), Some(agreement))
    } else {
        (None, None)
    };

    Ok(SessionReport {
        config: cfg.clone(),
        seed,
        plan,
        rounds,
        retries,
        status,
        keys,
        agreement,
        detection,
    })
}
