//! Closed-form payoffs and their regime-specific reductions.
//!
//! The general formula groups the eight profiles into complementary pairs
//! `(x, !x)`. Profile `x` carries weight `W_x = prod_k (C_k or S_k)` and sees
//! `eta1 $x + eta2 $!x + sigma_x xi ($x - $!x) cos(2 phi_x)`, where `sigma_x`
//! is the measurement-basis sign of `x` and `phi_x` its phase combination.
//! An interference term proportional to `sin(theta_A) sin(theta_B) sin(theta_C)`
//! survives only for partial entanglement.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::game::{PayoffMatrix, Player, Profile};
use crate::state::{basis_sign, EntanglementConfig, Payoffs, StrategyParams, StrategyTriple};
use crate::tolerance;

/// Weight of profile `abc` in the classical mixture: product of `C_k` (bit 0) or `S_k` (bit 1).
pub fn profile_weight(cs: [f64; 3], abc: Profile) -> f64 {
    Player::ALL
        .iter()
        .map(|&k| {
            let c = cs[k.index()];
            if abc.bit(k) == 0 {
                c
            } else {
                1.0 - c
            }
        })
        .product()
}

/// Phase combination entering the coherence term of profile `abc`.
///
/// Players agreeing with the majority bit contribute `+alpha` (bit 0) or
/// `+beta` (bit 1); the odd one out contributes with a minus sign.
pub fn profile_phase(s: &StrategyTriple, abc: Profile) -> f64 {
    let ones = Player::ALL.iter().filter(|&&k| abc.bit(k) == 1).count();
    let majority = u8::from(ones >= 2);
    Player::ALL
        .iter()
        .map(|&k| {
            let p = s.player(k);
            let bit = abc.bit(k);
            let angle = if bit == 0 { p.alpha() } else { p.beta() };
            if bit == majority {
                angle
            } else {
                -angle
            }
        })
        .sum()
}

/// Coefficients `(a_x, b_x)` such that profile `x` contributes `W_x (a_x $x + b_x $!x)`.
fn pair_coefficients(cfg: &EntanglementConfig, xi: f64, phase: f64, abc: Profile) -> (f64, f64) {
    let coherence = basis_sign(abc) * xi * (2.0 * phase).cos();
    (cfg.eta1() + coherence, cfg.eta2() - coherence)
}

/// Interference term for player `k`, with the forward-coherence part scaled by `visibility`.
pub fn interference_term(
    cfg: &EntanglementConfig,
    s: &StrategyTriple,
    m: &PayoffMatrix,
    k: Player,
    visibility: f64,
) -> f64 {
    let [aa, ab, ac] = s.alphas();
    let [ba, bb, bc] = s.betas();
    let e = |x: &str| m.get(k, crate::game::prof(x));
    let alternating: f64 = Profile::ALL
        .iter()
        .map(|&abc| abc.parity_sign() * m.get(k, abc))
        .sum();
    let (g, d) = (cfg.gamma(), cfg.delta());
    let forward = d.cos() * g.sin() * (aa + ab + ac - ba - bb - bc).cos() * alternating;
    let basis_part = g.cos()
        * d.sin()
        * ((e("000") - e("111")) * (aa + ab + ac + ba + bb + bc).cos()
            + (e("110") - e("001")) * (aa + ab - ac + ba + bb - bc).cos()
            + (e("010") - e("101")) * (aa - ab + ac + ba - bb + bc).cos()
            + (e("100") - e("011")) * (aa - ab - ac + ba - bb - bc).cos());
    s.sin_product() / 8.0 * (visibility * forward - basis_part)
}

/// General closed form with the initial-state coherence scaled by `visibility`.
///
/// `visibility = 1` is the clean formula; a single dephasing tap on a
/// transmitted qubit with probability `p` gives `visibility = 1 - p`.
pub fn closed_form_with_visibility(
    cfg: &EntanglementConfig,
    s: &StrategyTriple,
    m: &PayoffMatrix,
    visibility: f64,
) -> Payoffs {
    let cs = s.cs();
    let xi = cfg.xi() * visibility;
    Payoffs(Player::ALL.map(|k| {
        let classical: f64 = Profile::ALL
            .iter()
            .map(|&abc| {
                let (a, b) = pair_coefficients(cfg, xi, profile_phase(s, abc), abc);
                profile_weight(cs, abc) * (a * m.get(k, abc) + b * m.get(k, abc.complement()))
            })
            .sum();
        classical + interference_term(cfg, s, m, k, visibility)
    }))
}

pub fn expected_payoffs_closed(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix) -> Payoffs {
    closed_form_with_visibility(cfg, s, m, 1.0)
}

/// Which family of per-viewer coefficients a quad belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadVariant {
    NonEntangled,
    MaxEntangled,
    PartialDual,
}

/// Per-viewer payoff coefficients `(D, E, F, G)`.
///
/// For viewer `v` with opponents `x < y`, the slots correspond to the opponent
/// weights `C_x C_y`, `S_x C_y`, `C_x S_y`, `S_x S_y`; each coefficient mixes
/// the viewer's two moves as `C_v $(v=0) + S_v $(v=1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientQuad {
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub variant: QuadVariant,
    pub viewer: Player,
    pub target: Player,
}

impl CoefficientQuad {
    pub fn view(&self) -> ReducedPayoffView {
        ReducedPayoffView {
            viewer: self.viewer,
            target: self.target,
            both: self.d - self.e - self.f + self.g,
            first: self.f - self.g,
            second: self.e - self.g,
            constant: self.g,
        }
    }
}

/// `P = both C_x C_y + first C_x + second C_y + constant` over the viewer's opponents `x < y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPayoffView {
    pub viewer: Player,
    pub target: Player,
    pub both: f64,
    pub first: f64,
    pub second: f64,
    pub constant: f64,
}

impl ReducedPayoffView {
    pub fn evaluate(&self, c_first: f64, c_second: f64) -> f64 {
        self.both * c_first * c_second + self.first * c_first + self.second * c_second + self.constant
    }

    /// Evaluate with the full strategy vector, picking the viewer's opponents.
    pub fn evaluate_cs(&self, cs: [f64; 3]) -> f64 {
        let (x, y) = self.viewer.opponents();
        self.evaluate(cs[x.index()], cs[y.index()])
    }
}

fn quad_from(m: &PayoffMatrix, k: Player, viewer: Player, own_c: f64, variant: QuadVariant) -> CoefficientQuad {
    let (x, y) = viewer.opponents();
    let slot = |bx: u8, by: u8| {
        let base = Profile::from_bits(0, 0, 0).with_bit(x, bx).with_bit(y, by);
        own_c * m.get(k, base.with_bit(viewer, 0)) + (1.0 - own_c) * m.get(k, base.with_bit(viewer, 1))
    };
    CoefficientQuad {
        d: slot(0, 0),
        e: slot(1, 0),
        f: slot(0, 1),
        g: slot(1, 1),
        variant,
        viewer,
        target: k,
    }
}

pub fn nonentangled_coefficients(m: &PayoffMatrix, k: Player, viewer: Player, own_c: f64) -> CoefficientQuad {
    quad_from(m, k, viewer, own_c, QuadVariant::NonEntangled)
}

/// Maximally entangled quads: the non-entangled quads of the relabeled matrix.
pub fn maxentangled_coefficients(m: &PayoffMatrix, k: Player, viewer: Player, own_c: f64) -> CoefficientQuad {
    quad_from(&symmetry_permute_matrix(m), k, viewer, own_c, QuadVariant::MaxEntangled)
}

/// Quads of the partial regime under NOT-duality of row `k`.
pub fn partial_dual_coefficients(
    m: &PayoffMatrix,
    k: Player,
    viewer: Player,
    own_c: f64,
) -> Result<CoefficientQuad, DomainError> {
    if !m.is_not_dual_for(k, tolerance::MATRIX_EQUALITY) {
        return Err(DomainError::NotDual(k.letter()));
    }
    Ok(quad_from(m, k, viewer, own_c, QuadVariant::PartialDual))
}

/// Evaluate a quad's bilinear view at the viewer's opponents' C values.
pub fn nonentangled_payoff_view(quad: &CoefficientQuad, c_first: f64, c_second: f64) -> f64 {
    quad.view().evaluate(c_first, c_second)
}

pub fn maxentangled_payoff_view(quad: &CoefficientQuad, c_first: f64, c_second: f64) -> f64 {
    quad.view().evaluate(c_first, c_second)
}

/// Payoffs of the non-entangled, phase-free regime for strategy weights `cs`.
pub fn nonentangled_payoffs(m: &PayoffMatrix, cs: [f64; 3]) -> Payoffs {
    Payoffs(Player::ALL.map(|k| {
        Profile::ALL
            .iter()
            .map(|&abc| profile_weight(cs, abc) * m.get(k, abc))
            .sum()
    }))
}

/// Payoff of row `k` in a phase-free regime, computed through `viewer`'s quad.
pub fn view_payoff(variant: QuadVariant, m: &PayoffMatrix, k: Player, viewer: Player, cs: [f64; 3]) -> Result<f64, DomainError> {
    let own = cs[viewer.index()];
    let quad = match variant {
        QuadVariant::NonEntangled => nonentangled_coefficients(m, k, viewer, own),
        QuadVariant::MaxEntangled => maxentangled_coefficients(m, k, viewer, own),
        QuadVariant::PartialDual => partial_dual_coefficients(m, k, viewer, own)?,
    };
    Ok(quad.view().evaluate_cs(cs))
}

/// Profile relabeling behind the max-entangled / non-entangled correspondence.
pub fn symmetry_swap(abc: Profile) -> Profile {
    match abc.index() {
        0b100 => Profile::from_bits(0, 1, 1),
        0b011 => Profile::from_bits(1, 0, 0),
        0b010 => Profile::from_bits(1, 0, 1),
        0b101 => Profile::from_bits(0, 1, 0),
        _ => abc,
    }
}

/// Swap entries `100 <-> 011` and `010 <-> 101` in every row.
pub fn symmetry_permute_matrix(m: &PayoffMatrix) -> PayoffMatrix {
    m.relabel(symmetry_swap)
}

fn is_at(value: f64, target: f64) -> bool {
    (value - target).abs() <= tolerance::ANGLE
}

/// Whether the interference term vanishes for every strategy: `gamma = delta` at 0 or pi/2.
pub fn interference_free(cfg: &EntanglementConfig) -> bool {
    (is_at(cfg.gamma(), 0.0) && is_at(cfg.delta(), 0.0))
        || (is_at(cfg.gamma(), FRAC_PI_2) && is_at(cfg.delta(), FRAC_PI_2))
}

/// One complementary pair `(x, !x)` of the phase map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMap {
    pub first: Profile,
    pub second: Profile,
    /// Rows of the phase-dependent forward map at the strategy's phases.
    pub forward: [[f64; 2]; 2],
    /// The same map with all phases cleared.
    pub reference: [[f64; 2]; 2],
}

pub const PHASE_PAIRS: [(usize, usize); 4] = [(0b000, 0b111), (0b001, 0b110), (0b100, 0b011), (0b101, 0b010)];

/// Forward and reference 2x2 maps of every complementary pair.
pub fn phase_pair_maps(s: &StrategyTriple, cfg: &EntanglementConfig) -> [PairMap; 4] {
    let zero = s.without_phases();
    PHASE_PAIRS.map(|(i, j)| {
        let (x, y) = (Profile::ALL[i], Profile::ALL[j]);
        let rows = |st: &StrategyTriple| {
            let (ax, bx) = pair_coefficients(cfg, cfg.xi(), profile_phase(st, x), x);
            let (ay, by) = pair_coefficients(cfg, cfg.xi(), profile_phase(st, y), y);
            [[ax, bx], [by, ay]]
        };
        PairMap {
            first: x,
            second: y,
            forward: rows(s),
            reference: rows(&zero),
        }
    })
}

/// Matrix that, played with all phases cleared, reproduces the payoffs of `s`.
///
/// For each pair the new entries solve `reference * new = forward * old`.
pub fn phase_transform_matrix(
    m: &PayoffMatrix,
    s: &StrategyTriple,
    cfg: &EntanglementConfig,
) -> Result<PayoffMatrix, DomainError> {
    if !interference_free(cfg) {
        return Err(DomainError::Regime(
            "phase transform needs gamma = delta in {0, pi/2}".into(),
        ));
    }
    let maps = phase_pair_maps(s, cfg);
    let mut out = m.clone();
    for k in Player::ALL {
        for pm in &maps {
            let old = [m.get(k, pm.first), m.get(k, pm.second)];
            let rhs = [
                pm.forward[0][0] * old[0] + pm.forward[0][1] * old[1],
                pm.forward[1][0] * old[0] + pm.forward[1][1] * old[1],
            ];
            let r = pm.reference;
            let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
            if det.abs() < tolerance::SINGULAR {
                return Err(DomainError::Regime("phase map reference is singular".into()));
            }
            let new_first = (rhs[0] * r[1][1] - r[0][1] * rhs[1]) / det;
            let new_second = (r[0][0] * rhs[1] - rhs[0] * r[1][0]) / det;
            out.set(k, pm.first, new_first)?;
            out.set(k, pm.second, new_second)?;
        }
    }
    Ok(out)
}

/// The two partially entangled settings analysed in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartialBranch {
    /// Entangled initial state, product measurement basis (`delta = 0`, `gamma = pi/2`).
    EntangledState,
    /// Product initial state, entangled measurement basis (`delta = pi/2`, `gamma = 0`).
    EntangledBasis,
}

impl PartialBranch {
    pub fn config(self) -> EntanglementConfig {
        match self {
            PartialBranch::EntangledState => EntanglementConfig::new(FRAC_PI_2, 0.0),
            PartialBranch::EntangledBasis => EntanglementConfig::new(0.0, FRAC_PI_2),
        }
        .expect("branch angles are in range")
    }

    /// Sign of the interference term: `sin(gamma - delta)`.
    pub fn sign(self) -> f64 {
        match self {
            PartialBranch::EntangledState => 1.0,
            PartialBranch::EntangledBasis => -1.0,
        }
    }

    pub fn from_config(cfg: &EntanglementConfig) -> Option<PartialBranch> {
        if is_at(cfg.gamma(), FRAC_PI_2) && is_at(cfg.delta(), 0.0) {
            Some(PartialBranch::EntangledState)
        } else if is_at(cfg.gamma(), 0.0) && is_at(cfg.delta(), FRAC_PI_2) {
            Some(PartialBranch::EntangledBasis)
        } else {
            None
        }
    }
}

/// Default phase choice of the partial regime: `alpha = 0`, `beta = (-pi/2, pi/2, 0)`.
pub fn partial_strategies(thetas: [f64; 3]) -> Result<StrategyTriple, DomainError> {
    let betas = [-FRAC_PI_2, FRAC_PI_2, 0.0];
    Ok(StrategyTriple::new(
        StrategyParams::new(thetas[0], 0.0, betas[0])?,
        StrategyParams::new(thetas[1], 0.0, betas[1])?,
        StrategyParams::new(thetas[2], 0.0, betas[2])?,
    ))
}

pub fn partial_strategies_from_cs(cs: [f64; 3]) -> Result<StrategyTriple, DomainError> {
    let t = StrategyTriple::from_cs(cs)?;
    partial_strategies(t.thetas())
}

fn phase_is(angle: f64, target: f64) -> bool {
    let d = (angle - target).rem_euclid(2.0 * PI);
    d <= 1e-9 || 2.0 * PI - d <= 1e-9
}

/// Checks `alpha = 0`, `beta_C = 0`, `beta_A + beta_B = 0` and `beta_A - beta_B = pi` (mod 2 pi).
pub fn check_partial_regime(s: &StrategyTriple) -> Result<(), DomainError> {
    let [ba, bb, bc] = s.betas();
    let ok = s.alphas().iter().all(|a| phase_is(*a, 0.0))
        && phase_is(bc, 0.0)
        && phase_is(ba + bb, 0.0)
        && phase_is(ba - bb, PI);
    if ok {
        Ok(())
    } else {
        Err(DomainError::Regime(
            "partial regime needs alpha = 0, beta_C = 0, beta_A + beta_B = 0, beta_A - beta_B = pi (mod 2 pi)".into(),
        ))
    }
}

/// Squared-amplitude form of the partial regime payoffs.
pub fn partial_payoff(s: &StrategyTriple, m: &PayoffMatrix, branch: PartialBranch) -> Result<Payoffs, DomainError> {
    check_partial_regime(s)?;
    let [ca, cb, cc] = s.as_array().map(|p| p.c_half());
    let [sa, sb, sc] = s.as_array().map(|p| p.s_half());
    let pm = branch.sign();
    let amp = |abc: &str| -> f64 {
        match abc {
            "000" => ca * cb * cc + pm * sa * sb * sc,
            "111" => ca * cb * cc - pm * sa * sb * sc,
            "001" => ca * cb * sc - pm * sa * sb * cc,
            "110" => ca * cb * sc + pm * sa * sb * cc,
            "100" => sa * cb * cc - pm * ca * sb * sc,
            "011" => sa * cb * cc + pm * ca * sb * sc,
            "101" => sa * cb * sc + pm * ca * sb * cc,
            "010" => sa * cb * sc - pm * ca * sb * cc,
            _ => unreachable!(),
        }
    };
    Ok(Payoffs(Player::ALL.map(|k| {
        0.5 * Profile::ALL
            .iter()
            .map(|&abc| m.get(k, abc) * amp(&abc.label()).powi(2))
            .sum::<f64>()
    })))
}

/// Interference part of the partial regime payoff: `(1/8) sin-product sin(gamma - delta) sum (-1)^parity $`.
pub fn partial_interference(s: &StrategyTriple, m: &PayoffMatrix, branch: PartialBranch) -> Payoffs {
    Payoffs(Player::ALL.map(|k| {
        let alternating: f64 = Profile::ALL
            .iter()
            .map(|&abc| abc.parity_sign() * m.get(k, abc))
            .sum();
        s.sin_product() / 8.0 * branch.sign() * alternating
    }))
}

/// Half-angle form of the partial payoff, valid when Alice plays `theta_A = pi/2`.
pub fn partial_payoff_half_angle(s: &StrategyTriple, m: &PayoffMatrix, branch: PartialBranch) -> Result<Payoffs, DomainError> {
    check_partial_regime(s)?;
    if !is_at(s.alice.theta(), FRAC_PI_2) {
        return Err(DomainError::Regime("half-angle form needs theta_A = pi/2".into()));
    }
    Ok(half_angle_formula(s, m, branch))
}

pub(crate) fn half_angle_formula(s: &StrategyTriple, m: &PayoffMatrix, branch: PartialBranch) -> Payoffs {
    let (tb, tc) = (s.bob.theta(), s.charlie.theta());
    let minus = tb - branch.sign() * tc;
    let plus = tb + branch.sign() * tc;
    let cos2 = |x: f64| (x / 2.0).cos().powi(2);
    let sin2 = |x: f64| (x / 2.0).sin().powi(2);
    Payoffs(Player::ALL.map(|k| {
        let e = |x: &str| m.get(k, crate::game::prof(x));
        0.25 * (e("000") * cos2(minus)
            + e("111") * cos2(plus)
            + e("001") * sin2(minus)
            + e("110") * sin2(plus)
            + e("100") * cos2(plus)
            + e("011") * cos2(minus)
            + e("101") * sin2(plus)
            + e("010") * sin2(minus))
    }))
}

/// Payoff of row `k` in the partial regime under NOT-duality, through `viewer`'s quad.
pub fn partial_dual_payoff_view(m: &PayoffMatrix, cs: [f64; 3], k: Player, viewer: Player) -> Result<f64, DomainError> {
    view_payoff(QuadVariant::PartialDual, m, k, viewer, cs)
}
