//! Phase-damping eavesdropper.
//!
//! Eva dephases qubits in transit. A tap on the forward leg acts on the
//! shared state before the players move; a tap on the return leg acts on the
//! manipulated qubits before Alice measures. One forward tap scales the
//! initial coherence by `mu = 1 - p`, which is what the closed forms model.
//! Any other tap set is simulated through the Kraus sum only.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, DomainError};
use crate::forms::{self, closed_form_with_visibility, PartialBranch};
use crate::game::{PayoffMatrix, Player};
use crate::regime::Regime;
use crate::state::{
    evolve_mixed, initial_state, max_abs, measurement_basis, outcome_distribution, payoffs_from_density,
    DensityMatrix3, EntanglementConfig, Op2, Op8, OutcomeDistribution, Payoffs, StrategyTriple, C64,
};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Leg {
    /// From Alice's source to the players, before the unitaries.
    Forward,
    /// Back to Alice, after the unitaries.
    Return,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tap {
    pub qubit: Player,
    pub leg: Leg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEavesdrop")]
pub struct EavesdropConfig {
    p: f64,
    targets: Vec<Tap>,
}

#[derive(Deserialize)]
struct RawEavesdrop {
    p: f64,
    #[serde(default = "default_targets")]
    targets: Vec<Tap>,
}

fn default_targets() -> Vec<Tap> {
    vec![Tap {
        qubit: Player::Bob,
        leg: Leg::Forward,
    }]
}

impl TryFrom<RawEavesdrop> for EavesdropConfig {
    type Error = DomainError;
    fn try_from(r: RawEavesdrop) -> Result<Self, DomainError> {
        EavesdropConfig::new(r.p, r.targets)
    }
}

impl EavesdropConfig {
    pub fn new(p: f64, mut targets: Vec<Tap>) -> Result<Self, DomainError> {
        let p = check_range("p", p, 0.0, 1.0)?;
        targets.sort_by_key(|t| (t.leg == Leg::Return, t.qubit.index()));
        targets.dedup();
        Ok(EavesdropConfig { p, targets })
    }

    /// One tap on the qubit travelling to Bob.
    pub fn single_forward(p: f64) -> Result<Self, DomainError> {
        EavesdropConfig::new(p, default_targets())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        1.0 - self.p
    }

    pub fn targets(&self) -> &[Tap] {
        &self.targets
    }

    pub fn with_p(&self, p: f64) -> Result<Self, DomainError> {
        EavesdropConfig::new(p, self.targets.clone())
    }

    fn on_leg(&self, leg: Leg) -> Vec<Player> {
        self.targets.iter().filter(|t| t.leg == leg).map(|t| t.qubit).collect()
    }

    /// Exactly one forward tap and nothing else (or no effective tap at all).
    pub fn is_closed_form(&self) -> bool {
        self.p == 0.0 || self.targets.is_empty() || (self.targets.len() == 1 && self.targets[0].leg == Leg::Forward)
    }

    /// Coherence factor on the initial state when the closed form applies.
    fn visibility(&self) -> Result<f64, DomainError> {
        if !self.is_closed_form() {
            return Err(DomainError::UnsupportedTap(format!(
                "closed forms cover a single forward tap; got {} taps",
                self.targets.len()
            )));
        }
        Ok(if self.targets.is_empty() { 1.0 } else { self.mu() })
    }
}

/// Single-qubit Kraus operators of the channel.
pub fn kraus_operators(p: f64) -> Result<[Op2; 3], DomainError> {
    let p = check_range("p", p, 0.0, 1.0)?;
    let r = C64::new(p.sqrt(), 0.0);
    let z = C64::new(0.0, 0.0);
    let keep = C64::new((1.0 - p).sqrt(), 0.0);
    Ok([
        Matrix2::new(r, z, z, z),
        Matrix2::new(z, z, z, r),
        Matrix2::new(keep, z, z, keep),
    ])
}

/// Largest deviation of `sum A^dagger A` from the identity.
pub fn kraus_completeness_error(ops: &[Op2]) -> f64 {
    let sum: Op2 = ops.iter().map(|a| a.adjoint() * a).sum();
    max_abs(&(sum - Op2::identity()))
}

/// Embed a single-qubit operator on `qubit` into the three-qubit space.
fn embed(op: &Op2, qubit: Player) -> Op8 {
    let shift = 2 - qubit.index();
    Op8::from_fn(|row, col| {
        let others = !(1 << shift) & 0b111;
        if row & others != col & others {
            C64::new(0.0, 0.0)
        } else {
            op[((row >> shift) & 1, (col >> shift) & 1)]
        }
    })
}

/// Apply the channel independently to each targeted qubit.
pub fn phase_damp(rho: &DensityMatrix3, p: f64, qubits: &[Player]) -> Result<DensityMatrix3, DomainError> {
    let ops = kraus_operators(p)?;
    let mut out = *rho.matrix();
    for &q in qubits {
        let mut next = Op8::zeros();
        for a in &ops {
            let big = embed(a, q);
            next += big * out * big.adjoint();
        }
        out = next;
    }
    Ok(DensityMatrix3::from_trusted(out))
}

/// Final state with Eva on the wire.
pub fn tapped_final_state(
    cfg: &EntanglementConfig,
    s: &StrategyTriple,
    e: &EavesdropConfig,
) -> Result<DensityMatrix3, DomainError> {
    let start = DensityMatrix3::pure(&initial_state(cfg));
    let sent = phase_damp(&start, e.p(), &e.on_leg(Leg::Forward))?;
    let played = evolve_mixed(&sent, &s.alice.unitary(), &s.bob.unitary(), &s.charlie.unitary());
    phase_damp(&played, e.p(), &e.on_leg(Leg::Return))
}

pub fn tapped_outcome_distribution(
    cfg: &EntanglementConfig,
    s: &StrategyTriple,
    e: &EavesdropConfig,
) -> Result<OutcomeDistribution, DomainError> {
    let rho = tapped_final_state(cfg, s, e)?;
    Ok(outcome_distribution(&rho, &measurement_basis(cfg.delta())?))
}

/// Trace oracle for tapped payoffs, valid for every tap set.
pub fn tapped_payoffs_oracle(
    cfg: &EntanglementConfig,
    s: &StrategyTriple,
    m: &PayoffMatrix,
    e: &EavesdropConfig,
) -> Result<Payoffs, DomainError> {
    let rho = tapped_final_state(cfg, s, e)?;
    Ok(payoffs_from_density(&rho, &measurement_basis(cfg.delta())?, m))
}


/// Closed-form tapped payoffs: the coherence factor and the forward
/// interference sub-term both pick up `mu`.
pub fn tapped_expected_payoffs(
    cfg: &EntanglementConfig,
    s: &StrategyTriple,
    m: &PayoffMatrix,
    e: &EavesdropConfig,
) -> Result<Payoffs, DomainError> {
    Ok(closed_form_with_visibility(cfg, s, m, e.visibility()?))
}

/// Partial-regime tapped payoffs. Only the entangled-state branch carries a
/// coherence term, so only it depends on `mu`.
pub fn tapped_partial_payoff(
    s: &StrategyTriple,
    m: &PayoffMatrix,
    branch: PartialBranch,
    e: &EavesdropConfig,
) -> Result<Payoffs, DomainError> {
    let vis = e.visibility()?;
    let clean = forms::partial_payoff(s, m, branch)?;
    Ok(match branch {
        PartialBranch::EntangledState => {
            let last = forms::partial_interference(s, m, branch);
            Payoffs(std::array::from_fn(|i| clean.0[i] - (1.0 - vis) * last.0[i]))
        }
        PartialBranch::EntangledBasis => clean,
    })
}

/// `dP/dmu` for a single forward tap; payoffs are affine in `mu`.
pub fn mu_slope(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix) -> Payoffs {
    let full = closed_form_with_visibility(cfg, s, m, 1.0);
    let none = closed_form_with_visibility(cfg, s, m, 0.0);
    Payoffs(std::array::from_fn(|i| full.0[i] - none.0[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UndetectableCause {
    /// The regime's payoff provably does not depend on the tap.
    RegimeIndependent,
    /// Nonzero phases can mask the tap; detection is only certified without them.
    PhasesNotZero,
    /// The payoff happens to be flat in `mu` at these strategies.
    ZeroSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Clean,
    Tapped { p_hat: f64 },
    Undetectable { cause: UndetectableCause },
}

impl Verdict {
    pub fn is_tapped(&self) -> bool {
        matches!(self, Verdict::Tapped { .. })
    }
}

/// What a post-round audit knows: the regime and every player's true strategy.
#[derive(Debug, Clone, Copy)]
pub struct Audit<'a> {
    pub regime: &'a Regime,
    pub strategies: &'a StrategyTriple,
    pub matrix: &'a PayoffMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub regime: Regime,
    pub p_true: Option<f64>,
    pub verdict: Verdict,
    pub p_hat: Option<f64>,
    /// Clean prediction minus observation, per player.
    pub deltas: [f64; 3],
    pub slope: [f64; 3],
    pub sensitivity: f64,
    pub shots: Option<u64>,
}

/// Compare observed payoffs with the clean prediction and, when they differ,
/// estimate `p` by least squares on the affine `mu` dependence.
pub fn detect_eavesdropper(observed: &Payoffs, audit: Audit<'_>, sensitivity: f64) -> Result<DetectionReport, DomainError> {
    let cfg = audit.regime.config()?;
    let s = audit.strategies;
    let clean = closed_form_with_visibility(&cfg, s, audit.matrix, 1.0);
    let slope = mu_slope(&cfg, s, audit.matrix);
    let deltas: [f64; 3] = std::array::from_fn(|i| clean.0[i] - observed.0[i]);
    let independent = match audit.regime {
        Regime::NonEntangled => true,
        Regime::Partial { branch } => *branch == PartialBranch::EntangledBasis,
        _ => false,
    };
    let phases_ok = matches!(audit.regime, Regime::Partial { .. }) || s.phases_zero();
    let slope_norm2: f64 = slope.0.iter().map(|x| x * x).sum();
    let (verdict, p_hat) = if independent {
        (Verdict::Undetectable { cause: UndetectableCause::RegimeIndependent }, None)
    } else if !phases_ok {
        (Verdict::Undetectable { cause: UndetectableCause::PhasesNotZero }, None)
    } else if slope_norm2.sqrt() < tolerance::DETECTION_EXACT {
        (Verdict::Undetectable { cause: UndetectableCause::ZeroSlope }, None)
    } else {
        let p_hat = (0..3).map(|i| slope.0[i] * deltas[i]).sum::<f64>() / slope_norm2;
        if deltas.iter().all(|d| d.abs() <= sensitivity) {
            (Verdict::Clean, Some(p_hat))
        } else {
            let p_hat = p_hat.clamp(0.0, 1.0);
            (Verdict::Tapped { p_hat }, Some(p_hat))
        }
    };
    Ok(DetectionReport {
        regime: *audit.regime,
        p_true: None,
        verdict,
        p_hat,
        deltas,
        slope: slope.0,
        sensitivity,
        shots: None,
    })
}

/// Detection threshold for shot-averaged payoffs: `sigmas` standard errors
/// of the noisiest player's mean payoff.
pub fn sampled_sensitivity(dist: &OutcomeDistribution, m: &PayoffMatrix, shots: u64, sigmas: f64) -> f64 {
    let n = shots.max(1) as f64;
    Player::ALL
        .iter()
        .map(|&k| {
            let (mean, second): (f64, f64) = crate::game::Profile::ALL.iter().fold((0.0, 0.0), |(a, b), &abc| {
                let (p, v) = (dist.probability(abc), m.get(k, abc));
                (a + p * v, b + p * v * v)
            });
            ((second - mean * mean).max(0.0) / n).sqrt()
        })
        .fold(0.0, f64::max)
        * sigmas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kraus_is_complete() {
        for p in [0.0, 0.3, 1.0] {
            assert!(kraus_completeness_error(&kraus_operators(p).unwrap()) < 1e-12);
        }
        assert!(kraus_operators(1.5).is_err());
    }

    #[test]
    fn taps_are_normalized_and_deduplicated() {
        let t = Tap {
            qubit: Player::Charlie,
            leg: Leg::Return,
        };
        let e = EavesdropConfig::new(0.2, vec![t, t]).unwrap();
        assert_eq!(e.targets().len(), 1);
        assert!(!e.is_closed_form());
        assert!((e.mu() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn default_target_is_bob_forward() {
        let e: EavesdropConfig = serde_json::from_str(r#"{"p": 0.5}"#).unwrap();
        assert_eq!(e.targets(), default_targets().as_slice());
        assert!(serde_json::from_str::<EavesdropConfig>(r#"{"p": 2.0}"#).is_err());
    }
}
