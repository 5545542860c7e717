//! Inversion of the payoff algebra.
//!
//! Alice identifies the collapsed profile from payoff ratios and estimates her
//! opponents' weights from outcome statistics. Bob and Charlie, knowing their
//! own `C`, invert the bilinear payoff view against Alice's disclosure.
//!
//! Every solver works in the recovering party's view with Alice as the first
//! opponent: `P^k = both C_A C_o + first C_A + second C_o + constant`, where
//! `o` is the third player.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DomainError;
use crate::forms::{self, symmetry_swap, PartialBranch, QuadVariant, ReducedPayoffView};
use crate::game::{prof, PayoffMatrix, Player, Profile};
use crate::regime::Regime;
use crate::state::{OutcomeDistribution, Payoffs};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("singular recovery: denominator {denominator:e} is below threshold")]
    Singular { denominator: f64 },
    #[error("inconsistent disclosure: {name} = {value}")]
    InconsistentDisclosure { name: &'static str, value: f64 },
    #[error("the disclosed payoff carries no private information (constant {value})")]
    NoInformation { value: f64 },
    #[error("no profile matches the measured payoff ratio")]
    NoMatch,
    #[error("measured payoff ratio matches several profiles: {0:?}")]
    AmbiguousMatch(Vec<Profile>),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryCase {
    CaseI,
    CaseII,
    CaseIII,
    PartialSymI,
    PartialSymII,
    PartialSymIII,
    None,
}

/// Which payoff reduction a classification refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseFamily {
    NonEntangled,
    PartialDual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub case: SymmetryCase,
    /// Payoff rows satisfying the case conditions.
    pub players: Vec<Player>,
    /// Conditions hold for exactly two rows, as ratio identification requires.
    pub two_index: bool,
}

impl Classification {
    pub fn constrains(&self, k: Player) -> bool {
        self.players.contains(&k)
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= tolerance::MATRIX_EQUALITY
}

/// Whether row `k` of `m` satisfies the equalities of `case`.
pub fn case_holds(m: &PayoffMatrix, case: SymmetryCase, k: Player) -> bool {
    let e = |x: &str| m.get(k, prof(x));
    let dual = || m.is_not_dual_for(k, tolerance::MATRIX_EQUALITY);
    match case {
        SymmetryCase::CaseI => same(e("001"), e("101")) && same(e("011"), e("111")) && same(e("010"), e("110")),
        SymmetryCase::CaseII => same(e("100"), e("101")) && same(e("100"), e("110")) && same(e("100"), e("111")),
        SymmetryCase::CaseIII => {
            case_holds(m, SymmetryCase::CaseI, k) && case_holds(m, SymmetryCase::CaseII, k)
        }
        SymmetryCase::PartialSymI => dual() && same(e("100"), e("101")) && same(e("001"), e("000")),
        SymmetryCase::PartialSymII => dual() && same(e("001"), e("101")) && same(e("100"), e("000")),
        SymmetryCase::PartialSymIII => {
            dual() && same(e("001"), e("101")) && same(e("101"), e("100")) && same(e("100"), e("000"))
        }
        SymmetryCase::None => true,
    }
}

/// Most specific case satisfied by at least two payoff rows.
pub fn classify_symmetry_case(m: &PayoffMatrix, family: CaseFamily) -> Classification {
    let order = match family {
        CaseFamily::NonEntangled => [SymmetryCase::CaseIII, SymmetryCase::CaseI, SymmetryCase::CaseII],
        CaseFamily::PartialDual => [
            SymmetryCase::PartialSymIII,
            SymmetryCase::PartialSymI,
            SymmetryCase::PartialSymII,
        ],
    };
    for case in order {
        let players: Vec<Player> = Player::ALL.into_iter().filter(|&k| case_holds(m, case, k)).collect();
        if players.len() >= 2 {
            let two_index = players.len() == 2;
            return Classification {
                case,
                players,
                two_index,
            };
        }
    }
    Classification {
        case: SymmetryCase::None,
        players: Vec::new(),
        two_index: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub distinct: bool,
    pub collisions: Vec<(Profile, Profile)>,
    /// Profiles whose payoff triple is zero and so has no ratio.
    pub degenerate: Vec<Profile>,
}

fn direction(t: [f64; 3]) -> Option<[f64; 3]> {
    let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    (n > f64::MIN_POSITIVE && n.is_finite()).then(|| t.map(|v| v / n))
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Whether the eight payoff triples are pairwise distinct up to positive scale.
pub fn validate_ratio_distinctness(m: &PayoffMatrix) -> RatioReport {
    let dirs = Profile::ALL.map(|abc| direction(m.triple(abc)));
    let degenerate: Vec<Profile> = Profile::ALL.into_iter().filter(|p| dirs[p.index()].is_none()).collect();
    let mut collisions = Vec::new();
    for i in 0..8 {
        for j in i + 1..8 {
            if let (Some(a), Some(b)) = (dirs[i], dirs[j]) {
                if distance(a, b) <= tolerance::RATIO {
                    collisions.push((Profile::ALL[i], Profile::ALL[j]));
                }
            }
        }
    }
    RatioReport {
        distinct: collisions.is_empty() && degenerate.is_empty(),
        collisions,
        degenerate,
    }
}

/// The profile whose payoff ratio matches the measured triple.
pub fn alice_identify_outcome(measured: [f64; 3], m: &PayoffMatrix) -> Result<Profile, RecoveryError> {
    let dir = direction(measured).ok_or(RecoveryError::NoMatch)?;
    let hits: Vec<Profile> = Profile::ALL
        .into_iter()
        .filter(|&abc| direction(m.triple(abc)).is_some_and(|d| distance(d, dir) <= tolerance::IDENTIFY))
        .collect();
    match hits.len() {
        0 => Err(RecoveryError::NoMatch),
        1 => Ok(hits[0]),
        _ => Err(RecoveryError::AmbiguousMatch(hits)),
    }
}

/// What Alice saw over one or more shots of a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeStatistics {
    Exact(OutcomeDistribution),
    Counts([u64; 8]),
}

/// Alice's estimate of her opponents' joint weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductEstimate {
    /// Estimate of `C_B C_C`.
    pub product: f64,
    pub std_error: f64,
    /// `joint[b][c]` estimates `(C_B or S_B)(C_C or S_C)`.
    pub joint: [[f64; 2]; 2],
    pub shots: Option<u64>,
    /// Alice played a pure move, so her own bit carries no mixing.
    pub own_extreme: bool,
}

/// Outcome law relabeled so that it factorizes as in the non-entangled regime.
fn factorizing_law(probs: [f64; 8], regime: &Regime) -> Result<[f64; 8], RecoveryError> {
    match regime {
        Regime::NonEntangled => Ok(probs),
        Regime::MaxEntangled => Ok(Profile::ALL.map(|abc| probs[symmetry_swap(abc).index()])),
        other => Err(RecoveryError::Unsupported(format!(
            "outcome statistics do not factorize in the {other} regime"
        ))),
    }
}

fn factorized_label(outcome: Profile, regime: &Regime) -> Result<Profile, RecoveryError> {
    match regime {
        Regime::NonEntangled => Ok(outcome),
        Regime::MaxEntangled => Ok(symmetry_swap(outcome)),
        other => Err(RecoveryError::Unsupported(format!("no product law in the {other} regime"))),
    }
}

fn joint_of(law: &[f64; 8]) -> [[f64; 2]; 2] {
    let mut joint = [[0.0; 2]; 2];
    for abc in Profile::ALL {
        joint[abc.bit(Player::Bob) as usize][abc.bit(Player::Charlie) as usize] += law[abc.index()];
    }
    joint
}

/// Estimate `C_B C_C` from outcome statistics (phase-free strategies assumed).
///
/// Uses the `(b, c)` marginal, which factorizes as `f_B(b) f_C(c)` whatever
/// Alice played.
pub fn alice_infer_opponent_product(
    stats: &OutcomeStatistics,
    regime: &Regime,
    own_c: f64,
) -> Result<ProductEstimate, RecoveryError> {
    let (probs, shots) = match stats {
        OutcomeStatistics::Exact(d) => (*d.probs(), None),
        OutcomeStatistics::Counts(c) => {
            let n: u64 = c.iter().sum();
            if n == 0 {
                return Err(RecoveryError::Unsupported("no shots recorded".into()));
            }
            (c.map(|x| x as f64 / n as f64), Some(n))
        }
    };
    let joint = joint_of(&factorizing_law(probs, regime)?);
    let product = joint[0][0];
    let std_error = shots.map_or(0.0, |n| (product * (1.0 - product) / n as f64).sqrt());
    Ok(ProductEstimate {
        product,
        std_error,
        joint,
        shots,
        own_extreme: own_c <= tolerance::RECOVERY || own_c >= 1.0 - tolerance::RECOVERY,
    })
}

/// Alice's fit of `(C_B, C_C)` to the outcome law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentFit {
    pub c_b: f64,
    pub c_c: f64,
    /// Sum of squared probability residuals at the fit.
    pub residual: f64,
    /// A distant second pair fits the data as well.
    pub ambiguous: bool,
}

/// Fit the opponents' weights to Alice's statistics in regimes whose outcome
/// law is not a product (partial and general settings, phase convention of
/// the regime). Grid search followed by a shrinking pattern search.
pub fn alice_fit_opponents(
    stats: &OutcomeStatistics,
    regime: &Regime,
    own_c: f64,
) -> Result<OpponentFit, RecoveryError> {
    let own_c = check_own(own_c)?;
    let cfg = regime.config()?;
    let (observed, noise) = match stats {
        OutcomeStatistics::Exact(d) => (*d.probs(), 0.0),
        OutcomeStatistics::Counts(c) => {
            let n: u64 = c.iter().sum();
            if n == 0 {
                return Err(RecoveryError::Unsupported("no shots recorded".into()));
            }
            let f = c.map(|x| x as f64 / n as f64);
            (f, f.iter().map(|p| p * (1.0 - p)).sum::<f64>() / n as f64)
        }
    };
    let residual = |cb: f64, cc: f64| -> Result<f64, RecoveryError> {
        let s = regime.strategies_from_cs([own_c, cb, cc])?;
        let model = crate::state::round_distribution(&cfg, &s);
        Ok(model.probs().iter().zip(observed.iter()).map(|(a, b)| (a - b).powi(2)).sum())
    };
    const GRID: usize = 40;
    let mut grid = Vec::with_capacity((GRID + 1) * (GRID + 1));
    for i in 0..=GRID {
        for j in 0..=GRID {
            let (cb, cc) = (i as f64 / GRID as f64, j as f64 / GRID as f64);
            grid.push((residual(cb, cc)?, cb, cc));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let refine = |start: (f64, f64, f64)| -> Result<(f64, f64, f64), RecoveryError> {
        let (mut best, mut cb, mut cc) = start;
        let mut step = 1.0 / GRID as f64;
        while step > 1e-13 {
            let mut moved = false;
            for (db, dc) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let (nb, nc) = ((cb + db).clamp(0.0, 1.0), (cc + dc).clamp(0.0, 1.0));
                let r = residual(nb, nc)?;
                if r < best {
                    (best, cb, cc, moved) = (r, nb, nc, true);
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        Ok((best, cb, cc))
    };
    let (best, cb, cc) = refine(grid[0])?;
    let rival = grid
        .iter()
        .find(|g| (g.1 - cb).abs().max((g.2 - cc).abs()) > 0.1)
        .copied()
        .map(refine)
        .transpose()?;
    let ambiguous = rival.is_some_and(|(r, rb, rc)| {
        (rb - cb).abs().max((rc - cc).abs()) > 0.05 && r <= best + 1e-18 + 2.0 * noise
    });
    Ok(OpponentFit {
        c_b: cb,
        c_c: cc,
        residual: best,
        ambiguous,
    })
}

/// Evidence from one play of a replayed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlayEvidence {
    Statistics(OutcomeStatistics),
    /// A single shot: the observed profile and the opponents' weight product it reveals.
    SingleShot { outcome: Profile, product: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReplayOutcome {
    Resolved { c_b: f64, c_c: f64 },
    AmbiguityRemains { candidates: Vec<(f64, f64)> },
}

/// The weight product a single shot reveals, from Alice's measured payoff.
///
/// The measured payoff is the outcome probability times the payoff entry,
/// so dividing out the entry and Alice's own factor leaves `f_B(b) f_C(c)`.
pub fn product_from_measured_payoff(
    measured_a: f64,
    m: &PayoffMatrix,
    outcome: Profile,
    own_c: f64,
    regime: &Regime,
) -> Result<f64, RecoveryError> {
    let label = factorized_label(outcome, regime)?;
    let own = if label.bit(Player::Alice) == 0 { own_c } else { 1.0 - own_c };
    let entry = m.get(Player::Alice, outcome);
    let scale = own * entry;
    if scale.abs() < tolerance::SINGULAR {
        return Err(RecoveryError::Singular { denominator: scale });
    }
    Ok(measured_a / scale)
}

fn weight(c: f64, bit: usize) -> f64 {
    if bit == 0 {
        c
    } else {
        1.0 - c
    }
}

fn push_candidate(out: &mut Vec<(f64, f64)>, cb: f64, cc: f64) {
    let slack = tolerance::RECOVERY;
    if !(cb.is_finite() && cc.is_finite()) || cb < -slack || cb > 1.0 + slack || cc < -slack || cc > 1.0 + slack {
        return;
    }
    let cand = (cb.clamp(0.0, 1.0), cc.clamp(0.0, 1.0));
    if !out.iter().any(|c| (c.0 - cand.0).abs() < 1e-9 && (c.1 - cand.1).abs() < 1e-9) {
        out.push(cand);
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < -1e-12 {
        return Vec::new();
    }
    // Round-off around a double root must not split it in two.
    if disc.abs() <= 1e-12 {
        return vec![-b / (2.0 * a)];
    }
    let r = disc.max(0.0).sqrt();
    vec![(-b + r) / (2.0 * a), (-b - r) / (2.0 * a)]
}

fn resolve_single_shots(products: &[[Option<f64>; 2]; 2]) -> Result<ReplayOutcome, RecoveryError> {
    let mut candidates = Vec::new();
    let known: Vec<(usize, usize, f64)> = (0..2)
        .flat_map(|b| (0..2).map(move |c| (b, c)))
        .filter_map(|(b, c)| products[b][c].map(|v| (b, c, v)))
        .collect();
    // A shared factor splits the product directly.
    for (b, row) in products.iter().enumerate() {
        if let (Some(v0), Some(v1)) = (row[0], row[1]) {
            let fb = v0 + v1;
            if fb > f64::MIN_POSITIVE {
                push_candidate(&mut candidates, if b == 0 { fb } else { 1.0 - fb }, v0 / fb);
            }
        }
    }
    for (c, (&v0, &v1)) in products[0].iter().zip(&products[1]).enumerate() {
        if let (Some(v0), Some(v1)) = (v0, v1) {
            let fc = v0 + v1;
            if fc > f64::MIN_POSITIVE {
                push_candidate(&mut candidates, v0 / fc, if c == 0 { fc } else { 1.0 - fc });
            }
        }
    }
    if candidates.is_empty() {
        if let (Some(x), Some(y)) = (products[0][0], products[1][1]) {
            // C_B C_C = x, S_B S_C = y.
            let sum = 1.0 + x - y;
            for t in quadratic_roots(1.0, -sum, x) {
                push_candidate(&mut candidates, t, sum - t);
            }
        }
        if let (Some(x), Some(y)) = (products[0][1], products[1][0]) {
            // C_B S_C = x, S_B C_C = y.
            let d = x - y;
            for cc in quadratic_roots(2.0, 2.0 * d - 2.0, x + y - d) {
                push_candidate(&mut candidates, cc + d, cc);
            }
        }
    }
    candidates.retain(|&(cb, cc)| {
        known
            .iter()
            .all(|&(b, c, v)| (weight(cb, b) * weight(cc, c) - v).abs() <= tolerance::RECOVERY)
    });
    if known.len() >= 2 && candidates.is_empty() {
        return Err(RecoveryError::ProtocolViolation(
            "replayed shots admit no common strategy pair".into(),
        ));
    }
    Ok(match candidates.as_slice() {
        [(cb, cc)] => ReplayOutcome::Resolved { c_b: *cb, c_c: *cc },
        _ => ReplayOutcome::AmbiguityRemains { candidates },
    })
}

/// Split Alice's product estimate into `C_B` and `C_C` using replayed plays.
///
/// Statistics plays pool their counts (exact distributions must agree);
/// the pooled estimate is ambiguous while either standard error exceeds
/// `max_std_error`. Single-shot plays reveal one weight product each.
pub fn disambiguate_by_replay(
    plays: &[PlayEvidence],
    regime: &Regime,
    max_std_error: f64,
) -> Result<ReplayOutcome, RecoveryError> {
    if plays.is_empty() {
        return Ok(ReplayOutcome::AmbiguityRemains { candidates: Vec::new() });
    }
    let single = plays.iter().all(|p| matches!(p, PlayEvidence::SingleShot { .. }));
    let stats = plays.iter().all(|p| matches!(p, PlayEvidence::Statistics(_)));
    if single {
        let mut products: [[Option<f64>; 2]; 2] = [[None; 2]; 2];
        for p in plays {
            let PlayEvidence::SingleShot { outcome, product } = p else { unreachable!() };
            let label = factorized_label(*outcome, regime)?;
            let slot = &mut products[label.bit(Player::Bob) as usize][label.bit(Player::Charlie) as usize];
            match slot {
                Some(prev) if (*prev - product).abs() > tolerance::RECOVERY => {
                    return Err(RecoveryError::ProtocolViolation(
                        "replayed shot contradicts an earlier one; strategies changed".into(),
                    ))
                }
                _ => *slot = Some(*product),
            }
        }
        return resolve_single_shots(&products);
    }
    if !stats {
        return Err(RecoveryError::Unsupported("cannot mix single shots with statistics".into()));
    }
    let mut exact: Option<[[f64; 2]; 2]> = None;
    let mut pooled = [0u64; 8];
    let mut rounds: Vec<[u64; 8]> = Vec::new();
    for p in plays {
        match p {
            PlayEvidence::Statistics(OutcomeStatistics::Exact(d)) => {
                let j = joint_of(&factorizing_law(*d.probs(), regime)?);
                if let Some(prev) = exact {
                    let diff = (0..2)
                        .flat_map(|b| (0..2).map(move |c| (b, c)))
                        .map(|(b, c)| (prev[b][c] - j[b][c]).abs())
                        .fold(0.0, f64::max);
                    if diff > tolerance::RECOVERY {
                        return Err(RecoveryError::ProtocolViolation(
                            "replayed distributions differ; strategies changed".into(),
                        ));
                    }
                }
                exact = Some(j);
            }
            PlayEvidence::Statistics(OutcomeStatistics::Counts(c)) => {
                let relabeled = factorizing_law(c.map(|x| x as f64), regime)?.map(|x| x as u64);
                for i in 0..8 {
                    pooled[i] += relabeled[i];
                }
                rounds.push(relabeled);
            }
            PlayEvidence::SingleShot { .. } => unreachable!(),
        }
    }
    if let Some(j) = exact {
        return Ok(ReplayOutcome::Resolved {
            c_b: j[0][0] + j[0][1],
            c_c: j[0][0] + j[1][0],
        });
    }
    let n: u64 = pooled.iter().sum();
    if n == 0 {
        return Ok(ReplayOutcome::AmbiguityRemains { candidates: Vec::new() });
    }
    let marginal = |counts: &[u64; 8], who: Player| -> (f64, u64) {
        let total: u64 = counts.iter().sum();
        let zeros: u64 = Profile::ALL
            .iter()
            .filter(|abc| abc.bit(who) == 0)
            .map(|abc| counts[abc.index()])
            .sum();
        (zeros as f64 / total.max(1) as f64, total)
    };
    let (cb, _) = marginal(&pooled, Player::Bob);
    let (cc, _) = marginal(&pooled, Player::Charlie);
    // Each round must be compatible with the pooled law (strategies unchanged).
    for r in &rounds {
        for (who, pooled_p) in [(Player::Bob, cb), (Player::Charlie, cc)] {
            let (p, total) = marginal(r, who);
            let sigma = (pooled_p * (1.0 - pooled_p) / total.max(1) as f64).sqrt();
            if (p - pooled_p).abs() > 6.0 * sigma + 1e-12 {
                return Err(RecoveryError::ProtocolViolation(
                    "replayed round statistics disagree; strategies changed".into(),
                ));
            }
        }
    }
    let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
    if se(cb).max(se(cc)) > max_std_error {
        return Ok(ReplayOutcome::AmbiguityRemains {
            candidates: vec![(cb, cc)],
        });
    }
    Ok(ReplayOutcome::Resolved { c_b: cb, c_c: cc })
}

/// What Alice publishes after measuring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Disclosure {
    PayoffsAB { p_a: f64, p_b: f64 },
    AliceAll { p_a: f64, c_a: f64 },
    PayoffAOnly { p_a: f64 },
}

impl Disclosure {
    pub fn p_a(&self) -> f64 {
        match *self {
            Disclosure::PayoffsAB { p_a, .. } | Disclosure::AliceAll { p_a, .. } | Disclosure::PayoffAOnly { p_a } => p_a,
        }
    }

    pub fn policy(&self) -> DisclosurePolicy {
        match self {
            Disclosure::PayoffsAB { .. } => DisclosurePolicy::PayoffsAB,
            Disclosure::AliceAll { .. } => DisclosurePolicy::AliceAll,
            Disclosure::PayoffAOnly { .. } => DisclosurePolicy::PayoffAOnly,
        }
    }

    fn check_finite(&self) -> Result<(), RecoveryError> {
        let ok = match *self {
            Disclosure::PayoffsAB { p_a, p_b } => p_a.is_finite() && p_b.is_finite(),
            Disclosure::AliceAll { p_a, c_a } => p_a.is_finite() && c_a.is_finite(),
            Disclosure::PayoffAOnly { p_a } => p_a.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(DomainError::NonFinite("disclosed value").into())
        }
    }
}

/// Which values Alice discloses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisclosurePolicy {
    PayoffsAB,
    AliceAll,
    PayoffAOnly,
}

impl DisclosurePolicy {
    pub fn disclose(&self, payoffs: &Payoffs, c_a: f64) -> Disclosure {
        match self {
            DisclosurePolicy::PayoffsAB => Disclosure::PayoffsAB {
                p_a: payoffs.get(Player::Alice),
                p_b: payoffs.get(Player::Bob),
            },
            DisclosurePolicy::AliceAll => Disclosure::AliceAll {
                p_a: payoffs.get(Player::Alice),
                c_a,
            },
            DisclosurePolicy::PayoffAOnly => Disclosure::PayoffAOnly {
                p_a: payoffs.get(Player::Alice),
            },
        }
    }
}

/// Everything one party knows after recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredInfo {
    pub party: Player,
    /// Recovered (or own) `C` values; `None` where the disclosure does not determine them.
    pub c: [Option<f64>; 3],
    pub payoffs: [Option<f64>; 3],
    /// Smallest raw denominator met along the way.
    pub min_abs_denominator: f64,
}

impl RecoveredInfo {
    pub fn c_of(&self, p: Player) -> Option<f64> {
        self.c[p.index()]
    }

    pub fn payoff(&self, k: Player) -> Option<f64> {
        self.payoffs[k.index()]
    }

    pub fn is_complete(&self) -> bool {
        self.c.iter().chain(self.payoffs.iter()).all(Option::is_some)
    }

    /// Same fields known, and known values within `tol`.
    pub fn agrees_with(&self, other: &RecoveredInfo, tol: f64) -> bool {
        self.c
            .iter()
            .zip(other.c.iter())
            .chain(self.payoffs.iter().zip(other.payoffs.iter()))
            .all(|(a, b)| match (a, b) {
                (Some(x), Some(y)) => (x - y).abs() <= tol,
                (None, None) => true,
                _ => false,
            })
    }

    /// Largest error against the true `C` values over the recovered ones.
    pub fn max_strategy_error(&self, truth: [f64; 3]) -> f64 {
        (0..3)
            .filter_map(|i| self.c[i].map(|v| (v - truth[i]).abs()))
            .fold(0.0, f64::max)
    }
}

fn check_party(party: Player) -> Result<Player, RecoveryError> {
    match party {
        Player::Bob => Ok(Player::Charlie),
        Player::Charlie => Ok(Player::Bob),
        Player::Alice => Err(RecoveryError::Unsupported(
            "recovery is performed by Bob or Charlie".into(),
        )),
    }
}

fn check_denominator(d: f64) -> Result<f64, RecoveryError> {
    if !d.is_finite() || d.abs() < tolerance::SINGULAR {
        Err(RecoveryError::Singular { denominator: d })
    } else {
        Ok(d.abs())
    }
}

fn clamp_c(name: &'static str, v: f64) -> Result<f64, RecoveryError> {
    if !v.is_finite() || !(-tolerance::RECOVERY..=1.0 + tolerance::RECOVERY).contains(&v) {
        return Err(RecoveryError::InconsistentDisclosure { name, value: v });
    }
    Ok(v.clamp(0.0, 1.0))
}

fn check_own(own_c: f64) -> Result<f64, RecoveryError> {
    Ok(crate::error::check_range("own C", own_c, 0.0, 1.0)?)
}

/// `party`'s view of row `k`, Alice first.
fn view(m: &PayoffMatrix, k: Player, party: Player, own_c: f64, variant: QuadVariant) -> Result<ReducedPayoffView, RecoveryError> {
    let quad = match variant {
        QuadVariant::NonEntangled => forms::nonentangled_coefficients(m, k, party, own_c),
        QuadVariant::MaxEntangled => forms::maxentangled_coefficients(m, k, party, own_c),
        QuadVariant::PartialDual => forms::partial_dual_coefficients(m, k, party, own_c)?,
    };
    Ok(quad.view())
}

fn assemble(party: Player, other: Player, own_c: f64, c_a: f64, c_o: f64) -> [f64; 3] {
    let mut cs = [0.0; 3];
    cs[Player::Alice.index()] = c_a;
    cs[party.index()] = own_c;
    cs[other.index()] = c_o;
    cs
}

fn require_case(m: &PayoffMatrix, case: SymmetryCase, rows: &[Player]) -> Result<(), RecoveryError> {
    for &k in rows {
        if !case_holds(m, case, k) {
            return Err(RecoveryError::Unsupported(format!(
                "payoff row {} does not satisfy {case:?}",
                k.letter()
            )));
        }
    }
    Ok(())
}

/// Two-payoff disclosures need the case imposed on exactly two rows.
fn require_two_rows(m: &PayoffMatrix, case: SymmetryCase) -> Result<(), RecoveryError> {
    if Player::ALL.iter().all(|&k| case_holds(m, case, k)) {
        return Err(RecoveryError::Unsupported(format!(
            "{case:?} imposed on all three payoff rows; disclosing P^A and P^B cannot separate the strategies"
        )));
    }
    Ok(())
}

fn check_reproduces(name: &'static str, disclosed: f64, recomputed: f64) -> Result<(), RecoveryError> {
    if (disclosed - recomputed).abs() > tolerance::RECOVERY * (1.0 + disclosed.abs()) {
        return Err(RecoveryError::InconsistentDisclosure { name, value: recomputed });
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum FirstUnknown {
    Alice,
    Other,
}

/// Two-payoff recovery. In Case I the `C_A` term without `C_o` vanishes, so the
/// ratio of the two equations fixes `C_A` first; Case II is the mirror image.
fn recover_two_payoffs(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
    first: FirstUnknown,
) -> Result<RecoveredInfo, RecoveryError> {
    d.check_finite()?;
    let own_c = check_own(own_c)?;
    let other = check_party(party)?;
    let Disclosure::PayoffsAB { p_a, p_b } = *d else {
        return Err(RecoveryError::Unsupported("two-payoff recovery needs P^A and P^B".into()));
    };
    let va = view(m, Player::Alice, party, own_c, QuadVariant::NonEntangled)?;
    let vb = view(m, Player::Bob, party, own_c, QuadVariant::NonEntangled)?;
    let (ra, rb) = (p_a - va.constant, p_b - vb.constant);
    // Linear terms of the unknown solved second.
    let (la, lb) = match first {
        FirstUnknown::Alice => (va.second, vb.second),
        FirstUnknown::Other => (va.first, vb.first),
    };
    let den1 = ra * vb.both - rb * va.both;
    let mut min_den = check_denominator(den1)?;
    let x = clamp_c(
        match first {
            FirstUnknown::Alice => "C_A",
            FirstUnknown::Other => "C_o",
        },
        (rb * la - ra * lb) / den1,
    )?;
    // Use whichever equation is better conditioned for the second unknown.
    let (den_a, den_b) = (va.both * x + la, vb.both * x + lb);
    let (num, den2) = if den_a.abs() >= den_b.abs() { (ra, den_a) } else { (rb, den_b) };
    min_den = min_den.min(check_denominator(den2)?);
    let y = clamp_c("second strategy", num / den2)?;
    let (c_a, c_o) = match first {
        FirstUnknown::Alice => (x, y),
        FirstUnknown::Other => (y, x),
    };
    let cs = assemble(party, other, own_c, c_a, c_o);
    let payoffs = forms::nonentangled_payoffs(m, cs);
    check_reproduces("P^A", p_a, payoffs.get(Player::Alice))?;
    check_reproduces("P^B", p_b, payoffs.get(Player::Bob))?;
    Ok(RecoveredInfo {
        party,
        c: cs.map(Some),
        payoffs: payoffs.0.map(Some),
        min_abs_denominator: min_den,
    })
}

/// Case I, disclosure of `P^A` and `P^B`: solve for `C_A`, then the remaining opponent.
pub fn recover_nonentangled_case_i(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
) -> Result<RecoveredInfo, RecoveryError> {
    require_case(m, SymmetryCase::CaseI, &[Player::Alice, Player::Bob])?;
    require_two_rows(m, SymmetryCase::CaseI)?;
    recover_two_payoffs(d, m, own_c, party, FirstUnknown::Alice)
}

/// Case II, disclosure of `P^A` and `P^B`: solve for the remaining opponent, then `C_A`.
pub fn recover_nonentangled_case_ii(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
) -> Result<RecoveredInfo, RecoveryError> {
    require_case(m, SymmetryCase::CaseII, &[Player::Alice, Player::Bob])?;
    require_two_rows(m, SymmetryCase::CaseII)?;
    recover_two_payoffs(d, m, own_c, party, FirstUnknown::Other)
}

/// Solve Alice's row for the remaining opponent given the disclosed `C_A`.
fn solve_with_alice_strategy(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
    variant: QuadVariant,
) -> Result<(f64, f64, f64), RecoveryError> {
    d.check_finite()?;
    let own_c = check_own(own_c)?;
    check_party(party)?;
    let Disclosure::AliceAll { p_a, c_a } = *d else {
        return Err(RecoveryError::Unsupported("this recovery needs P^A and C_A".into()));
    };
    let c_a = clamp_c("C_A", c_a)?;
    let v = view(m, Player::Alice, party, own_c, variant)?;
    // A row that no strategy moves carries nothing private.
    if [v.both, v.first, v.second].iter().all(|x| x.abs() < tolerance::SINGULAR) {
        return Err(RecoveryError::NoInformation {
            value: v.first * c_a + v.constant,
        });
    }
    let den = v.both * c_a + v.second;
    let min_den = check_denominator(den)?;
    let c_o = clamp_c("C_o", (p_a - v.constant - v.first * c_a) / den)?;
    Ok((c_a, c_o, min_den))
}

/// Alice discloses `P^A` and `C_A` (non-entangled Cases I, II and III).
pub fn recover_from_alice_disclosure(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
    case: SymmetryCase,
) -> Result<RecoveredInfo, RecoveryError> {
    if !matches!(case, SymmetryCase::CaseI | SymmetryCase::CaseII | SymmetryCase::CaseIII) {
        return Err(RecoveryError::Unsupported(format!(
            "Alice's full disclosure is solved for Cases I-III, not {case:?}"
        )));
    }
    require_case(m, case, &[Player::Alice])?;
    let other = check_party(party)?;
    let (c_a, c_o, min_den) = solve_with_alice_strategy(d, m, own_c, party, QuadVariant::NonEntangled)?;
    let cs = assemble(party, other, own_c, c_a, c_o);
    let payoffs = forms::nonentangled_payoffs(m, cs);
    check_reproduces("P^A", d.p_a(), payoffs.get(Player::Alice))?;
    Ok(RecoveredInfo {
        party,
        c: cs.map(Some),
        payoffs: payoffs.0.map(Some),
        min_abs_denominator: min_den,
    })
}

/// Partial regime under NOT-duality of Alice's row; Alice discloses `P^A` and `C_A`.
pub fn recover_partial(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
    branch: PartialBranch,
) -> Result<RecoveredInfo, RecoveryError> {
    let other = check_party(party)?;
    let (c_a, c_o, min_den) = solve_with_alice_strategy(d, m, own_c, party, QuadVariant::PartialDual)?;
    let cs = assemble(party, other, own_c, c_a, c_o);
    let s = forms::partial_strategies_from_cs(cs)?;
    let payoffs = forms::partial_payoff(&s, m, branch)?;
    check_reproduces("P^A", d.p_a(), payoffs.get(Player::Alice))?;
    Ok(RecoveredInfo {
        party,
        c: cs.map(Some),
        payoffs: payoffs.0.map(Some),
        min_abs_denominator: min_den,
    })
}

/// Partial regime with the extra symmetric conditions; only `P^A` is public.
///
/// Under PartialSymI, `P^A` depends on `C_A` and `C_B` only: Bob recovers
/// `C_A` and Charlie learns nothing. Under PartialSymII it depends on `C_B`
/// and `C_C` only: each of Bob and Charlie recovers the other, and `C_A`
/// stays hidden. Fields that `P^A` does not determine are left empty.
pub fn recover_partial_symmetric(
    d: &Disclosure,
    m: &PayoffMatrix,
    own_c: f64,
    party: Player,
    case: SymmetryCase,
) -> Result<RecoveredInfo, RecoveryError> {
    d.check_finite()?;
    let own_c = check_own(own_c)?;
    let other = check_party(party)?;
    let Disclosure::PayoffAOnly { p_a } = *d else {
        return Err(RecoveryError::Unsupported("symmetric partial recovery uses P^A only".into()));
    };
    let a = |x: &str| m.get(Player::Alice, prof(x));
    match case {
        SymmetryCase::PartialSymIII => {
            require_case(m, case, &[Player::Alice])?;
            return Err(RecoveryError::NoInformation { value: a("000") });
        }
        SymmetryCase::PartialSymI | SymmetryCase::PartialSymII => {
            require_case(m, case, &[Player::Alice, Player::Bob])?;
        }
        other => {
            return Err(RecoveryError::Unsupported(format!(
                "symmetric partial recovery is defined for PartialSymI/II, not {other:?}"
            )))
        }
    }
    // P^A = $000 + delta (x + y - 2 x y) over the two strategies it depends on.
    let (delta, pair) = if case == SymmetryCase::PartialSymI {
        (a("100") - a("000"), [Player::Alice, Player::Bob])
    } else {
        (a("001") - a("000"), [Player::Bob, Player::Charlie])
    };
    let mut c = [None; 3];
    c[party.index()] = Some(own_c);
    let mut payoffs = [None; 3];
    payoffs[Player::Alice.index()] = Some(p_a);
    if !pair.contains(&party) {
        // The disclosed payoff does not involve this party's own strategy.
        return Ok(RecoveredInfo {
            party,
            c,
            payoffs,
            min_abs_denominator: f64::INFINITY,
        });
    }
    let unknown = if pair[0] == party { pair[1] } else { pair[0] };
    let den = (1.0 - 2.0 * own_c) * delta;
    let min_den = check_denominator(den)?;
    let value = clamp_c("opponent C", (p_a - a("000") - own_c * delta) / den)?;
    c[unknown.index()] = Some(value);
    // Rows constrained like Alice's depend on the same pair of strategies.
    let (x, y) = (own_c, value);
    let mix = x + y - 2.0 * x * y;
    for k in [Player::Bob, Player::Charlie] {
        if case_holds(m, case, k) {
            let base = m.get(k, prof("000"));
            let step = if case == SymmetryCase::PartialSymI {
                m.get(k, prof("100")) - base
            } else {
                m.get(k, prof("001")) - base
            };
            payoffs[k.index()] = Some(base + step * mix);
        }
    }
    let _ = other;
    Ok(RecoveredInfo {
        party,
        c,
        payoffs,
        min_abs_denominator: min_den,
    })
}

/// Strategy triples consistent with a two-payoff disclosure for someone who
/// knows neither Bob's nor Charlie's strategy: try each hypothetical `C_B`.
pub fn outsider_completions(
    d: &Disclosure,
    m: &PayoffMatrix,
    case: SymmetryCase,
    trial_c_b: &[f64],
) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = Vec::new();
    for &cb in trial_c_b {
        let r = match case {
            SymmetryCase::CaseI => recover_nonentangled_case_i(d, m, cb, Player::Bob),
            SymmetryCase::CaseII => recover_nonentangled_case_ii(d, m, cb, Player::Bob),
            _ => continue,
        };
        if let Ok(info) = r {
            let cs = info.c.map(|v| v.expect("complete"));
            if !out.iter().any(|o| (0..3).all(|i| (o[i] - cs[i]).abs() < 1e-9)) {
                out.push(cs);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_matrix_collides_everywhere() {
        let r = validate_ratio_distinctness(&PayoffMatrix::uniform(3.0).unwrap());
        assert!(!r.distinct);
        assert_eq!(r.collisions.len(), 28);
    }

    #[test]
    fn zero_triple_is_degenerate() {
        let mut m = PayoffMatrix::from_fn(|k, abc| 1.0 + abc.index() as f64 * (k.index() as f64 + 1.0)).unwrap();
        for k in Player::ALL {
            m.set(k, prof("010"), 0.0).unwrap();
        }
        let r = validate_ratio_distinctness(&m);
        assert_eq!(r.degenerate, vec![prof("010")]);
        assert!(!r.distinct);
    }

    #[test]
    fn identification_rejects_zero_measurement() {
        let m = PayoffMatrix::uniform(1.0).unwrap();
        assert_eq!(alice_identify_outcome([0.0; 3], &m), Err(RecoveryError::NoMatch));
    }

    #[test]
    fn alice_cannot_recover() {
        let m = PayoffMatrix::uniform(1.0).unwrap();
        let d = Disclosure::AliceAll { p_a: 1.0, c_a: 0.5 };
        assert!(matches!(
            recover_from_alice_disclosure(&d, &m, 0.5, Player::Alice, SymmetryCase::CaseIII),
            Err(RecoveryError::Unsupported(_))
        ));
    }

    #[test]
    fn single_shot_pair_sharing_bob_bit_resolves() {
        let (cb, cc) = (0.3, 0.8);
        let mut p = [[None; 2]; 2];
        p[0][0] = Some(cb * cc);
        p[0][1] = Some(cb * (1.0 - cc));
        match resolve_single_shots(&p).unwrap() {
            ReplayOutcome::Resolved { c_b, c_c } => {
                assert!((c_b - cb).abs() < 1e-12 && (c_c - cc).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_shot_diagonal_pair_is_swap_ambiguous() {
        let (cb, cc) = (0.3, 0.8);
        let mut p = [[None; 2]; 2];
        p[0][0] = Some(cb * cc);
        p[1][1] = Some((1.0 - cb) * (1.0 - cc));
        match resolve_single_shots(&p).unwrap() {
            ReplayOutcome::AmbiguityRemains { candidates } => assert_eq!(candidates.len(), 2),
            other => panic!("{other:?}"),
        }
        let mut p = [[None; 2]; 2];
        p[0][0] = Some(0.25);
        p[1][1] = Some(0.25);
        assert_eq!(
            resolve_single_shots(&p).unwrap(),
            ReplayOutcome::Resolved { c_b: 0.5, c_c: 0.5 }
        );
    }
}
