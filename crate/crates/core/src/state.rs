//! Exact three-qubit engine and the brute-force payoff oracle.
//!
//! Basis index of `|abc>` is `4a + 2b + c`; Alice owns the leading qubit.
//! Everything here is plain dense 8x8 complex arithmetic, which is the
//! ground truth every closed form in the crate is tested against.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Complex, Matrix2, SMatrix, SVector};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, DomainError};
use crate::game::{PayoffMatrix, Player, Profile};
use crate::rng::SimRng;
use crate::tolerance;

pub type C64 = Complex<f64>;
pub type Ket8 = SVector<C64, 8>;
pub type Op8 = SMatrix<C64, 8, 8>;
pub type Op2 = Matrix2<C64>;

const I: C64 = C64::new(0.0, 1.0);

fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// Entanglement of the initial state (`gamma`) and of the measurement basis (`delta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEntanglement")]
pub struct EntanglementConfig {
    gamma: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawEntanglement {
    gamma: f64,
    delta: f64,
}

impl TryFrom<RawEntanglement> for EntanglementConfig {
    type Error = DomainError;

    fn try_from(r: RawEntanglement) -> Result<Self, Self::Error> {
        EntanglementConfig::new(r.gamma, r.delta)
    }
}

impl EntanglementConfig {
    pub const NON_ENTANGLED: EntanglementConfig = EntanglementConfig {
        gamma: 0.0,
        delta: 0.0,
    };
    pub const MAX_ENTANGLED: EntanglementConfig = EntanglementConfig {
        gamma: FRAC_PI_2,
        delta: FRAC_PI_2,
    };

    pub fn new(gamma: f64, delta: f64) -> Result<Self, DomainError> {
        Ok(EntanglementConfig {
            gamma: check_range("gamma", gamma, 0.0, FRAC_PI_2)?,
            delta: check_range("delta", delta, 0.0, FRAC_PI_2)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta1(&self) -> f64 {
        let (cg, sg) = ((self.gamma / 2.0).cos(), (self.gamma / 2.0).sin());
        let (cd, sd) = ((self.delta / 2.0).cos(), (self.delta / 2.0).sin());
        cg * cg * cd * cd + sg * sg * sd * sd
    }

    pub fn eta2(&self) -> f64 {
        let (cg, sg) = ((self.gamma / 2.0).cos(), (self.gamma / 2.0).sin());
        let (cd, sd) = ((self.delta / 2.0).cos(), (self.delta / 2.0).sin());
        sg * sg * cd * cd + cg * cg * sd * sd
    }

    pub fn xi(&self) -> f64 {
        0.5 * self.delta.sin() * self.gamma.sin()
    }
}

/// One player's unitary parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy")]
pub struct StrategyParams {
    theta: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawStrategy {
    theta: f64,
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    beta: f64,
}

impl TryFrom<RawStrategy> for StrategyParams {
    type Error = DomainError;

    fn try_from(r: RawStrategy) -> Result<Self, Self::Error> {
        StrategyParams::new(r.theta, r.alpha, r.beta)
    }
}

impl StrategyParams {
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Result<Self, DomainError> {
        Ok(StrategyParams {
            theta: check_range("theta", theta, 0.0, PI)?,
            alpha: check_range("alpha", alpha, -PI, PI)?,
            beta: check_range("beta", beta, -PI, PI)?,
        })
    }

    /// Phase-free strategy with `cos²(theta/2) = c`, taking `theta` in `[0, pi]`.
    pub fn from_c(c: f64) -> Result<Self, DomainError> {
        let c = check_range("C", c, 0.0, 1.0)?;
        StrategyParams::new(2.0 * c.sqrt().acos(), 0.0, 0.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_theta(self, theta: f64) -> Result<Self, DomainError> {
        StrategyParams::new(theta, self.alpha, self.beta)
    }

    pub fn with_phases(self, alpha: f64, beta: f64) -> Result<Self, DomainError> {
        StrategyParams::new(self.theta, alpha, beta)
    }

    /// `cos(theta/2)`.
    pub fn c_half(&self) -> f64 {
        (self.theta / 2.0).cos()
    }

    /// `sin(theta/2)`.
    pub fn s_half(&self) -> f64 {
        (self.theta / 2.0).sin()
    }

    /// `cos²(theta/2)`, the weight of the unflipped move.
    pub fn big_c(&self) -> f64 {
        self.c_half().powi(2)
    }

    /// `sin²(theta/2)`, the weight of the flipped move.
    pub fn big_s(&self) -> f64 {
        self.s_half().powi(2)
    }

    pub fn unitary(&self) -> LocalUnitary {
        strategy_unitary(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyTriple {
    pub alice: StrategyParams,
    pub bob: StrategyParams,
    pub charlie: StrategyParams,
}

impl StrategyTriple {
    pub fn new(alice: StrategyParams, bob: StrategyParams, charlie: StrategyParams) -> Self {
        StrategyTriple {
            alice,
            bob,
            charlie,
        }
    }

    pub fn from_thetas(thetas: [f64; 3]) -> Result<Self, DomainError> {
        Ok(StrategyTriple::new(
            StrategyParams::new(thetas[0], 0.0, 0.0)?,
            StrategyParams::new(thetas[1], 0.0, 0.0)?,
            StrategyParams::new(thetas[2], 0.0, 0.0)?,
        ))
    }

    pub fn from_cs(cs: [f64; 3]) -> Result<Self, DomainError> {
        Ok(StrategyTriple::new(
            StrategyParams::from_c(cs[0])?,
            StrategyParams::from_c(cs[1])?,
            StrategyParams::from_c(cs[2])?,
        ))
    }

    pub fn player(&self, p: Player) -> &StrategyParams {
        match p {
            Player::Alice => &self.alice,
            Player::Bob => &self.bob,
            Player::Charlie => &self.charlie,
        }
    }

    pub fn player_mut(&mut self, p: Player) -> &mut StrategyParams {
        match p {
            Player::Alice => &mut self.alice,
            Player::Bob => &mut self.bob,
            Player::Charlie => &mut self.charlie,
        }
    }

    pub fn as_array(&self) -> [StrategyParams; 3] {
        [self.alice, self.bob, self.charlie]
    }

    pub fn thetas(&self) -> [f64; 3] {
        self.as_array().map(|s| s.theta)
    }

    pub fn alphas(&self) -> [f64; 3] {
        self.as_array().map(|s| s.alpha)
    }

    pub fn betas(&self) -> [f64; 3] {
        self.as_array().map(|s| s.beta)
    }

    pub fn cs(&self) -> [f64; 3] {
        self.as_array().map(|s| s.big_c())
    }

    pub fn phases_zero(&self) -> bool {
        self.as_array()
            .iter()
            .all(|s| s.alpha.abs() <= tolerance::ANGLE && s.beta.abs() <= tolerance::ANGLE)
    }

    /// Same thetas with every phase cleared.
    pub fn without_phases(&self) -> StrategyTriple {
        StrategyTriple::from_thetas(self.thetas()).expect("thetas already validated")
    }

    /// `sin(theta_A) sin(theta_B) sin(theta_C)`.
    pub fn sin_product(&self) -> f64 {
        self.thetas().iter().map(|t| t.sin()).product()
    }
}

/// Normalized three-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState3 {
    amps: Ket8,
}

impl PureState3 {
    pub fn new(amps: Ket8) -> Result<Self, DomainError> {
        let n = amps.norm_squared();
        if !n.is_finite() || (n - 1.0).abs() > tolerance::NORM {
            return Err(DomainError::NotNormalized(n));
        }
        Ok(PureState3 { amps })
    }

    pub fn basis(abc: Profile) -> PureState3 {
        let mut amps = Ket8::zeros();
        amps[abc.index()] = C64::new(1.0, 0.0);
        PureState3 { amps }
    }

    pub fn amplitude(&self, abc: Profile) -> C64 {
        self.amps[abc.index()]
    }

    pub fn vector(&self) -> &Ket8 {
        &self.amps
    }

    pub fn projector(&self) -> Op8 {
        self.amps * self.amps.adjoint()
    }
}

/// Single-qubit unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalUnitary {
    m: Op2,
}

impl LocalUnitary {
    pub fn new(m: Op2) -> Result<Self, DomainError> {
        let dev = max_abs(&(m * m.adjoint() - Op2::identity()));
        if !dev.is_finite() || dev > tolerance::NORM {
            return Err(DomainError::NotUnitary(dev));
        }
        Ok(LocalUnitary { m })
    }

    pub fn identity() -> Self {
        LocalUnitary { m: Op2::identity() }
    }

    pub fn matrix(&self) -> &Op2 {
        &self.m
    }

    pub fn with_global_phase(&self, phi: f64) -> LocalUnitary {
        LocalUnitary { m: self.m * cis(phi) }
    }
}

/// Validated three-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix3 {
    rho: Op8,
}

impl DensityMatrix3 {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(rho: Op8) -> Result<Self, DomainError> {
        let herm = max_abs(&(rho - rho.adjoint()));
        if !herm.is_finite() || herm > tolerance::NORM {
            return Err(DomainError::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > tolerance::NORM || tr.im.abs() > tolerance::NORM {
            return Err(DomainError::BadTrace(tr.re));
        }
        let d = DensityMatrix3 { rho };
        let min = d.min_eigenvalue();
        if min < -tolerance::PSD {
            return Err(DomainError::NotPositive(min));
        }
        Ok(d)
    }

    /// For maps that preserve the invariants by construction.
    pub(crate) fn from_trusted(rho: Op8) -> Self {
        DensityMatrix3 { rho }
    }

    pub fn pure(state: &PureState3) -> Self {
        DensityMatrix3 {
            rho: state.projector(),
        }
    }

    pub fn matrix(&self) -> &Op8 {
        &self.rho
    }

    pub fn entry(&self, row: Profile, col: Profile) -> C64 {
        self.rho[(row.index(), col.index())]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.rho - self.rho.adjoint()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.rho)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

fn sorted_eigenvalues(m: &Op8) -> Vec<f64> {
    // Symmetrize so tiny anti-Hermitian round-off cannot leak into the solver.
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// The eight entangled measurement vectors for a given `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    delta: f64,
    vectors: [Ket8; 8],
}

impl MeasurementBasis {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn vector(&self, abc: Profile) -> &Ket8 {
        &self.vectors[abc.index()]
    }

    pub fn projector(&self, abc: Profile) -> Op8 {
        let v = self.vector(abc);
        v * v.adjoint()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let ip = self.vectors[i].dotc(&self.vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest deviation of the summed projectors from the identity.
    pub fn completeness_error(&self) -> f64 {
        let sum = Profile::ALL
            .iter()
            .fold(Op8::zeros(), |acc, &p| acc + self.projector(p));
        max_abs(&(sum - Op8::identity()))
    }
}

/// Sign of the `i sin(delta/2)` admixture in the measurement vector of `abc`.
pub fn basis_sign(abc: Profile) -> f64 {
    match abc.index() {
        0b000 | 0b111 | 0b001 | 0b110 => 1.0,
        _ => -1.0,
    }
}

/// Hermitian 8x8 operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    m: Op8,
}

impl Observable {
    pub fn matrix(&self) -> &Op8 {
        &self.m
    }

    pub fn expectation(&self, rho: &DensityMatrix3) -> f64 {
        trace_product(&self.m, rho.matrix())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.m)
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(self.m - self.m.adjoint()))
    }

    /// Max-entry norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Observable) -> f64 {
        max_abs(&(self.m * other.m - other.m * self.m))
    }
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs<R: nalgebra::Dim, Cc: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, Cc>>(
    m: &nalgebra::Matrix<C64, R, Cc, S>,
) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn trace_product(a: &Op8, b: &Op8) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..8 {
        for j in 0..8 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// Expected payoffs of all three players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payoffs(pub [f64; 3]);

impl Payoffs {
    pub fn get(&self, k: Player) -> f64 {
        self.0[k.index()]
    }

    pub fn max_abs_diff(&self, other: &Payoffs) -> f64 {
        (0..3)
            .map(|i| (self.0[i] - other.0[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Probabilities of the eight measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution([f64; 8]);

impl OutcomeDistribution {
    /// Accepts round-off negatives down to `-PROBABILITY_SUM` and clamps them.
    pub fn new(probs: [f64; 8]) -> Result<Self, DomainError> {
        let sum: f64 = probs.iter().sum();
        let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        if !sum.is_finite()
            || (sum - 1.0).abs() > tolerance::PROBABILITY_SUM
            || min < -tolerance::PROBABILITY_SUM
            || probs.iter().any(|p| *p > 1.0 + tolerance::PROBABILITY_SUM)
        {
            return Err(DomainError::BadDistribution { sum, min });
        }
        Ok(OutcomeDistribution(probs.map(|p| p.clamp(0.0, 1.0))))
    }

    pub fn point(abc: Profile) -> Self {
        let mut p = [0.0; 8];
        p[abc.index()] = 1.0;
        OutcomeDistribution(p)
    }

    pub fn uniform() -> Self {
        OutcomeDistribution([0.125; 8])
    }

    pub fn probability(&self, abc: Profile) -> f64 {
        self.0[abc.index()]
    }

    pub fn probs(&self) -> &[f64; 8] {
        &self.0
    }

    /// `sum_abc p_abc $^(k)_abc` for every k.
    pub fn mean_payoffs(&self, m: &PayoffMatrix) -> Payoffs {
        Payoffs(Player::ALL.map(|k| {
            Profile::ALL
                .iter()
                .map(|&abc| self.probability(abc) * m.get(k, abc))
                .sum()
        }))
    }
}

/// `cos(gamma/2)|000> + i sin(gamma/2)|111>`.
pub fn initial_state(cfg: &EntanglementConfig) -> PureState3 {
    let mut amps = Ket8::zeros();
    amps[0] = C64::new((cfg.gamma / 2.0).cos(), 0.0);
    amps[7] = I * (cfg.gamma / 2.0).sin();
    PureState3 { amps }
}

/// `cos(theta/2) R + sin(theta/2) Q`, column `j` being the image of `|j>`.
pub fn strategy_unitary(p: StrategyParams) -> LocalUnitary {
    let (c, s) = (p.c_half(), p.s_half());
    let m = Op2::new(
        cis(p.alpha) * c,
        cis(FRAC_PI_2 + p.beta) * s,
        cis(FRAC_PI_2 - p.beta) * s,
        cis(-p.alpha) * c,
    );
    LocalUnitary { m }
}

/// `uA ⊗ uB ⊗ uC` with Alice on the leading factor.
pub fn kron3(ua: &LocalUnitary, ub: &LocalUnitary, uc: &LocalUnitary) -> Op8 {
    Op8::from_fn(|row, col| {
        let bit = |x: usize, shift: usize| (x >> shift) & 1;
        ua.m[(bit(row, 2), bit(col, 2))]
            * ub.m[(bit(row, 1), bit(col, 1))]
            * uc.m[(bit(row, 0), bit(col, 0))]
    })
}

/// Final state after each player applies their unitary.
pub fn evolve(
    state: &PureState3,
    ua: &LocalUnitary,
    ub: &LocalUnitary,
    uc: &LocalUnitary,
) -> DensityMatrix3 {
    let v = kron3(ua, ub, uc) * state.amps;
    DensityMatrix3::from_trusted(v * v.adjoint())
}

/// Apply the three unitaries to an already mixed state.
pub fn evolve_mixed(
    rho: &DensityMatrix3,
    ua: &LocalUnitary,
    ub: &LocalUnitary,
    uc: &LocalUnitary,
) -> DensityMatrix3 {
    let u = kron3(ua, ub, uc);
    DensityMatrix3::from_trusted(u * rho.rho * u.adjoint())
}

pub fn final_state(cfg: &EntanglementConfig, s: &StrategyTriple) -> DensityMatrix3 {
    evolve(
        &initial_state(cfg),
        &s.alice.unitary(),
        &s.bob.unitary(),
        &s.charlie.unitary(),
    )
}

pub fn measurement_basis(delta: f64) -> Result<MeasurementBasis, DomainError> {
    let delta = check_range("delta", delta, 0.0, FRAC_PI_2)?;
    let (cd, sd) = ((delta / 2.0).cos(), (delta / 2.0).sin());
    let vectors = Profile::ALL.map(|abc| {
        let mut v = Ket8::zeros();
        v[abc.index()] = C64::new(cd, 0.0);
        v[abc.complement().index()] = I * (basis_sign(abc) * sd);
        v
    });
    Ok(MeasurementBasis { delta, vectors })
}

/// `sum_abc $^(k)_abc |psi_abc><psi_abc|`.
pub fn payoff_operator(m: &PayoffMatrix, k: Player, basis: &MeasurementBasis) -> Observable {
    let op = Profile::ALL.iter().fold(Op8::zeros(), |acc, &abc| {
        acc + basis.projector(abc) * C64::new(m.get(k, abc), 0.0)
    });
    Observable { m: op }
}

/// `Tr($^(k) rho)` for each player, by full matrix arithmetic.
pub fn payoffs_from_density(rho: &DensityMatrix3, basis: &MeasurementBasis, m: &PayoffMatrix) -> Payoffs {
    Payoffs(Player::ALL.map(|k| payoff_operator(m, k, basis).expectation(rho)))
}

/// The ground-truth oracle.
pub fn expected_payoffs_oracle(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix) -> Payoffs {
    let basis = measurement_basis(cfg.delta).expect("config delta already validated");
    payoffs_from_density(&final_state(cfg, s), &basis, m)
}

pub fn outcome_distribution(rho: &DensityMatrix3, basis: &MeasurementBasis) -> OutcomeDistribution {
    let probs = Profile::ALL.map(|abc| {
        let v = basis.vector(abc);
        (v.adjoint() * rho.rho * v)[(0, 0)].re
    });
    OutcomeDistribution::new(probs).expect("valid density matrix yields a distribution")
}

/// Outcome law of a clean round.
pub fn round_distribution(cfg: &EntanglementConfig, s: &StrategyTriple) -> OutcomeDistribution {
    let basis = measurement_basis(cfg.delta).expect("config delta already validated");
    outcome_distribution(&final_state(cfg, s), &basis)
}

/// One projective measurement outcome.
pub fn sample_outcome(dist: &OutcomeDistribution, rng: &mut SimRng) -> Profile {
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut last = Profile::ALL[0];
    for abc in Profile::ALL {
        let p = dist.probability(abc);
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = abc;
        if u < acc {
            return abc;
        }
    }
    // Round-off left `acc` marginally below one.
    last
}

/// Outcome counts of `shots` independent measurements (multinomial draw).
pub fn sample_counts(dist: &OutcomeDistribution, shots: u64, rng: &mut SimRng) -> [u64; 8] {
    let mut counts = [0u64; 8];
    let mut remaining = shots;
    let mut mass = 1.0;
    for abc in Profile::ALL {
        if remaining == 0 {
            break;
        }
        let p = dist.probability(abc);
        if abc.index() == 7 || mass <= p {
            counts[abc.index()] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let n = Binomial::new(remaining, q)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        counts[abc.index()] = n;
        remaining -= n;
        mass -= p;
    }
    counts
}

/// Payoff reported from one observed outcome: its probability times the payoff entry.
pub fn single_shot_measured_payoff(dist: &OutcomeDistribution, m: &PayoffMatrix, outcome: Profile, k: Player) -> f64 {
    dist.probability(outcome) * m.get(k, outcome)
}
