//! Literal transcriptions of the printed closed forms and solver quotients.
//!
//! Nothing in the simulator calls these. They exist so the discrepancy
//! ledger can evaluate each printed expression next to the oracle and record
//! where the two part ways. Where a printed expression is ambiguous the
//! reading chosen is stated on the function.

use crate::game::{prof, PayoffMatrix, Player, Profile};
use crate::state::{EntanglementConfig, StrategyTriple};

fn entry(m: &PayoffMatrix, k: Player) -> impl Fn(&str) -> f64 + '_ {
    move |x| m.get(k, prof(x))
}

fn alternating_sum(m: &PayoffMatrix, k: Player) -> f64 {
    Profile::ALL.iter().map(|&abc| abc.parity_sign() * m.get(k, abc)).sum()
}

fn cos2(x: f64) -> f64 {
    (2.0 * x).cos()
}

/// General payoff with dephasing factor `mu` on the coherence terms.
/// `bracket_sign` is the sign in front of `beta_C` in the `C_A S_B S_C` phase
/// (printed: `-1`).
fn general(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix, k: Player, mu: f64, bracket_sign: f64) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = s.cs();
    let [sa, sb, sc] = [1.0 - ca, 1.0 - cb, 1.0 - cc];
    let [aa, ab, ac] = s.alphas();
    let [ba, bb, bc] = s.betas();
    let (n1, n2, xi) = (cfg.eta1(), cfg.eta2(), cfg.xi() * mu);
    let (g, d) = (cfg.gamma(), cfg.delta());
    let classical = ca * cb * cc * (n1 * e("000") + n2 * e("111") + xi * (e("000") - e("111")) * cos2(aa + ab + ac))
        + sa * sb * sc * (n2 * e("000") + n1 * e("111") - xi * (e("000") - e("111")) * cos2(ba + bb + bc))
        + ca * cb * sc * (n1 * e("001") + n2 * e("110") + xi * (e("001") - e("110")) * cos2(aa + ab - bc))
        + sa * sb * cc * (n2 * e("001") + n1 * e("110") - xi * (e("001") - e("110")) * cos2(ba + bb - ac))
        + sa * cb * cc * (n1 * e("100") + n2 * e("011") - xi * (e("100") - e("011")) * cos2(-ba + ab + ac))
        + ca * sb * sc
            * (n2 * e("100") + n1 * e("011") + xi * (e("100") - e("011")) * cos2(-aa + bb + bracket_sign * bc))
        + sa * cb * sc * (n1 * e("101") + n2 * e("010") - xi * (e("101") - e("010")) * cos2(ba - ab + bc))
        + ca * sb * cc * (n2 * e("101") + n1 * e("010") + xi * (e("101") - e("010")) * cos2(aa - bb + ac));
    let last = s.sin_product() / 8.0
        * (d.cos() * g.sin() * (aa + ab + ac - ba - bb - bc).cos() * mu * alternating_sum(m, k)
            - g.cos()
                * d.sin()
                * ((e("000") - e("111")) * (aa + ab + ac + ba + bb + bc).cos()
                    + (e("110") - e("001")) * (aa + ab - ac + ba + bb - bc).cos()
                    + (e("010") - e("101")) * (aa - ab + ac + ba - bb + bc).cos()
                    + (e("100") - e("011")) * (aa - ab - ac + ba - bb - bc).cos()));
    classical + last
}

/// The general payoff as printed, `cos2(x)` read as `cos(2x)`.
pub fn general_closed_form(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix, k: Player) -> f64 {
    general(cfg, s, m, k, 1.0, -1.0)
}

/// The printed general payoff with `-alpha_A + beta_B + beta_C` in the `C_A S_B S_C` bracket.
pub fn general_closed_form_bracket_fixed(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix, k: Player) -> f64 {
    general(cfg, s, m, k, 1.0, 1.0)
}

/// Printed dephasing rule: `xi -> xi mu` and `(-1)^(a+b+c) -> mu (-1)^(a+b+c)`.
pub fn general_closed_form_tapped(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix, k: Player, mu: f64) -> f64 {
    general(cfg, s, m, k, mu, -1.0)
}

/// Maximal entanglement with `theta_B = theta_C = 0`: `C_A $000 + sign S_A $001`.
pub fn maxentangled_trivial_point(s: &StrategyTriple, m: &PayoffMatrix, k: Player, sign: f64) -> f64 {
    let ca = s.alice.big_c();
    ca * m.get(k, prof("000")) + sign * (1.0 - ca) * m.get(k, prof("001"))
}

/// Maximal entanglement, no phases: the relabeled product expansion.
pub fn maxentangled_expansion(cs: [f64; 3], m: &PayoffMatrix, k: Player) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = cs;
    let [sa, sb, sc] = cs.map(|c| 1.0 - c);
    ca * cb * cc * e("000")
        + sa * sb * sc * e("111")
        + ca * cb * sc * e("001")
        + sa * sb * cc * e("110")
        + sa * cb * cc * e("011")
        + ca * sb * sc * e("100")
        + sa * cb * sc * e("010")
        + ca * sb * cc * e("101")
}

/// Printed tapped expansion for maximal entanglement without phases.
pub fn maxentangled_tapped_expansion(cs: [f64; 3], m: &PayoffMatrix, k: Player, mu: f64) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = cs;
    let [sa, sb, sc] = cs.map(|c| 1.0 - c);
    let pair = |x: &str, y: &str, sign: f64| e(x) + e(y) + sign * mu * (e(x) - e(y));
    0.5 * (ca * cb * cc * pair("000", "111", 1.0)
        + sa * sb * sc * pair("000", "111", -1.0)
        + ca * cb * sc * pair("001", "110", 1.0)
        + sa * sb * cc * pair("001", "110", -1.0)
        + sa * cb * cc * pair("100", "011", -1.0)
        + ca * sb * sc * pair("100", "011", 1.0)
        + sa * cb * sc * pair("101", "010", -1.0)
        + ca * sb * cc * pair("101", "010", 1.0))
}

/// Printed primed coefficients `[D', E', F', G']` of row `k` for `viewer`.
pub fn primed_quad(m: &PayoffMatrix, k: Player, viewer: Player, own_c: f64) -> [f64; 4] {
    let e = entry(m, k);
    let (c, s) = (own_c, 1.0 - own_c);
    let mix = |x: &str, y: &str| c * e(x) + s * e(y);
    match viewer {
        Player::Alice => [mix("000", "011"), mix("101", "110"), mix("001", "110"), mix("100", "111")],
        Player::Bob => [mix("000", "101"), mix("011", "111"), mix("001", "011"), mix("010", "111")],
        Player::Charlie => [mix("000", "001"), mix("011", "010"), mix("101", "100"), mix("110", "111")],
    }
}

/// Printed primed view: `C_x C_y D' + S_x S_y E' + C_x S_y F' + S_x C_y G'`.
pub fn maxentangled_primed_view(cs: [f64; 3], m: &PayoffMatrix, k: Player, viewer: Player) -> f64 {
    let (x, y) = viewer.opponents();
    let (cx, cy) = (cs[x.index()], cs[y.index()]);
    let [d, e, f, g] = primed_quad(m, k, viewer, cs[viewer.index()]);
    cx * cy * d + (1.0 - cx) * (1.0 - cy) * e + cx * (1.0 - cy) * f + (1.0 - cx) * cy * g
}

/// Printed phase map, applied by direct multiplication. The printed `cos`
/// is taken as `cos(x)`, and the fourth block, printed on `($101, $101)`,
/// is read as acting on `($101, $010)`.
pub fn phase_transformed_matrix(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix) -> PayoffMatrix {
    let [aa, ab, ac] = s.alphas();
    let [ba, bb, bc] = s.betas();
    let (n1, n2, xi) = (cfg.eta1(), cfg.eta2(), cfg.xi());
    let block = |sign: f64, top: f64, bottom: f64| {
        [
            [n1 + sign * xi * top.cos(), n2 - sign * xi * top.cos()],
            [n2 - sign * xi * bottom.cos(), n1 + sign * xi * bottom.cos()],
        ]
    };
    let blocks = [
        ("000", "111", block(1.0, aa + ab + ac, ba + bb + bc)),
        ("001", "110", block(1.0, aa + ab - bc, ba + bb - ac)),
        ("100", "011", block(-1.0, -ba + ab + ac, aa - bb + bc)),
        ("101", "010", block(-1.0, ba - ab + bc, aa - bb + ac)),
    ];
    let mut out = m.clone();
    for k in Player::ALL {
        for (x, y, b) in &blocks {
            let (vx, vy) = (m.get(k, prof(x)), m.get(k, prof(y)));
            out.set(k, prof(x), b[0][0] * vx + b[0][1] * vy).expect("finite");
            out.set(k, prof(y), b[1][0] * vx + b[1][1] * vy).expect("finite");
        }
    }
    out
}

/// Partial regime, phase-free part: `eta1 = eta2 = 1/2`, `xi = 0`.
pub fn partial_half_sum(cs: [f64; 3], m: &PayoffMatrix, k: Player) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = cs;
    let [sa, sb, sc] = cs.map(|c| 1.0 - c);
    0.5 * ((ca * cb * cc + sa * sb * sc) * (e("000") + e("111"))
        + (ca * cb * sc + sa * sb * cc) * (e("001") + e("110"))
        + (sa * cb * cc + ca * sb * sc) * (e("100") + e("011"))
        + (sa * cb * sc + ca * sb * cc) * (e("101") + e("010")))
}

/// Printed partial interference term: `(1/8) sin-product sin(delta - gamma) sum (-1)^parity $`.
pub fn partial_last_term(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix, k: Player) -> f64 {
    s.sin_product() / 8.0 * (cfg.delta() - cfg.gamma()).sin() * alternating_sum(m, k)
}

/// Printed tapped interference term: `mu` times the clean term on the
/// entangled-state branch, and the negated clean term on the other.
pub fn partial_last_term_tapped(cfg: &EntanglementConfig, s: &StrategyTriple, m: &PayoffMatrix, k: Player, mu: f64) -> f64 {
    let clean = partial_last_term(cfg, s, m, k);
    if cfg.gamma() > cfg.delta() {
        mu * clean
    } else {
        -clean
    }
}

/// Printed square-root form of the interference term, upper sign on the
/// entangled-state branch.
pub fn partial_sqrt_term(cs: [f64; 3], m: &PayoffMatrix, k: Player, sign: f64) -> f64 {
    let product: f64 = cs.iter().map(|c| c * (1.0 - c)).product();
    sign * product.sqrt() * alternating_sum(m, k)
}

/// Printed squared-amplitude form, upper sign on the entangled-state branch.
pub fn partial_squared_amplitudes(s: &StrategyTriple, m: &PayoffMatrix, k: Player, sign: f64) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = s.as_array().map(|p| p.c_half());
    let [sa, sb, sc] = s.as_array().map(|p| p.s_half());
    let (p, q) = (sign, -sign);
    0.5 * (e("000") * (ca * cb * cc + p * sa * sb * sc).powi(2)
        + e("111") * (ca * cb * cc + q * sa * sb * sc).powi(2)
        + e("001") * (ca * cb * sc + q * sa * sb * cc).powi(2)
        + e("110") * (ca * cb * sc + p * sa * sb * cc).powi(2)
        + e("100") * (sa * cb * cc + q * ca * sb * sc).powi(2)
        + e("011") * (sa * cb * cc + p * ca * sb * sc).powi(2)
        + e("101") * (sa * cb * sc + p * ca * sb * cc).powi(2)
        + e("010") * (sa * cb * sc + q * ca * sb * cc).powi(2))
}

/// Printed half-angle form. The printed text attaches it to `theta_A = pi/4`.
pub fn partial_half_angle(s: &StrategyTriple, m: &PayoffMatrix, k: Player, sign: f64) -> f64 {
    let (tb, tc) = (s.bob.theta(), s.charlie.theta());
    let (minus, plus) = (tb - sign * tc, tb + sign * tc);
    let c2 = |x: f64| (x / 2.0).cos().powi(2);
    let s2 = |x: f64| (x / 2.0).sin().powi(2);
    let e = entry(m, k);
    0.25 * (e("000") * c2(minus)
        + e("111") * c2(plus)
        + e("001") * s2(minus)
        + e("110") * s2(plus)
        + e("100") * c2(plus)
        + e("011") * c2(minus)
        + e("101") * s2(plus)
        + e("010") * s2(minus))
}

/// Printed four-term expansion under NOT-duality.
pub fn not_dual_expansion(cs: [f64; 3], m: &PayoffMatrix, k: Player) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = cs;
    let [sa, sb, sc] = cs.map(|c| 1.0 - c);
    e("000") * (ca * cb * cc + sa * sb * sc)
        + e("001") * (ca * cb * sc + sa * sb * cc)
        + e("100") * (sa * cb * cc + ca * sb * sc)
        + e("101") * (sa * cb * sc + ca * sb * cc)
}

/// Printed barred coefficients `[D, E, F, G]` of row `k` for `viewer`.
pub fn barred_quad(m: &PayoffMatrix, k: Player, viewer: Player, own_c: f64) -> [f64; 4] {
    let e = entry(m, k);
    let (c, s) = (own_c, 1.0 - own_c);
    let mix = |x: &str, y: &str| c * e(x) + s * e(y);
    match viewer {
        Player::Alice => [mix("000", "100"), mix("101", "001"), mix("001", "101"), mix("100", "000")],
        Player::Bob => [mix("000", "101"), mix("100", "001"), mix("001", "100"), mix("101", "000")],
        Player::Charlie => [mix("000", "001"), mix("101", "100"), mix("100", "101"), mix("001", "100")],
    }
}

/// Printed NOT-dual views, each with its printed bilinear and linear terms.
pub fn not_dual_view(cs: [f64; 3], m: &PayoffMatrix, k: Player, viewer: Player) -> f64 {
    let e = entry(m, k);
    let [ca, cb, cc] = cs;
    let [_, ee, f, g] = barred_quad(m, k, viewer, cs[viewer.index()]);
    match viewer {
        Player::Alice => cb * cc * (e("000") + e("100") - e("001") - e("101")) + cb * (f - g) + cc * (ee - g) + g,
        Player::Bob => ca * cc * (e("000") + e("101") - e("001") - e("100")) + cc * (ee - g) + cc * (f - g) + g,
        Player::Charlie => ca * cb * (e("000") + e("001") - e("101") - e("100")) + cb * (f - g) + ca * (ee - g) + g,
    }
}

/// Non-entangled coefficients `[D, E, F, G]` of row `k` for `viewer`, as printed.
pub fn plain_quad(m: &PayoffMatrix, k: Player, viewer: Player, own_c: f64) -> [f64; 4] {
    let e = entry(m, k);
    let (c, s) = (own_c, 1.0 - own_c);
    let mix = |x: &str, y: &str| c * e(x) + s * e(y);
    match viewer {
        Player::Alice => [mix("000", "100"), mix("010", "110"), mix("001", "101"), mix("011", "111")],
        Player::Bob => [mix("000", "010"), mix("100", "110"), mix("001", "011"), mix("101", "111")],
        Player::Charlie => [mix("000", "001"), mix("100", "101"), mix("010", "011"), mix("110", "111")],
    }
}

/// Two-payoff quotient: the printed Case I (`slot = 1`, E) or Case II
/// (`slot = 2`, F) solution for `viewer`. Returns `(first, second)`: for
/// Case I `(C_A, C_other)`, for Case II `(C_other, C_A)`.
pub fn two_payoff_quotients(m: &PayoffMatrix, viewer: Player, own_c: f64, p_a: f64, p_b: f64, slot: usize) -> (f64, f64) {
    let qa = plain_quad(m, Player::Alice, viewer, own_c);
    let qb = plain_quad(m, Player::Bob, viewer, own_c);
    let (ga, gb) = (qa[3], qb[3]);
    let (xa, xb) = (qa[slot], qb[slot]);
    let first = ((p_b - gb) * (xa - ga) - (p_a - ga) * (xb - gb)) / ((p_a - ga) * (qb[0] - xb) - (p_b - gb) * (qa[0] - xa));
    let second = (p_a - ga) / (first * (qa[0] - xa) + xa - ga);
    (first, second)
}

/// Printed quotient when Alice discloses `P^A` and `C_A` (Case II). Bob's
/// numerator carries Charlie's `F - G`; `c_c_for_quad` evaluates those
/// coefficients.
pub fn alice_disclosure_quotient(m: &PayoffMatrix, viewer: Player, own_c: f64, p_a: f64, c_a: f64, c_c_for_quad: f64) -> f64 {
    let q = plain_quad(m, Player::Alice, viewer, own_c);
    let qc = plain_quad(m, Player::Alice, Player::Charlie, c_c_for_quad);
    (p_a - q[3] - c_a * (qc[2] - qc[3])) / (c_a * (q[0] - q[2]))
}

/// Printed Case III quotient: `(P^A - G) / (C_A (D - F))`.
pub fn case_iii_quotient(m: &PayoffMatrix, viewer: Player, own_c: f64, p_a: f64, c_a: f64) -> f64 {
    let q = plain_quad(m, Player::Alice, viewer, own_c);
    (p_a - q[3]) / (c_a * (q[0] - q[2]))
}

/// Printed Case III payoff forms: Bob's `C_A C_C (D - F) + G`, Charlie's `C_B C_C (D - F) + G`.
pub fn case_iii_payoff(cs: [f64; 3], m: &PayoffMatrix, k: Player, viewer: Player) -> f64 {
    let q = plain_quad(m, k, viewer, cs[viewer.index()]);
    let weight = match viewer {
        Player::Charlie => cs[1] * cs[2],
        _ => cs[0] * cs[2],
    };
    weight * (q[0] - q[2]) + q[3]
}

/// Printed partial-regime quotients. Charlie's denominator uses Bob's
/// coefficients, evaluated here at `c_b_for_quad`.
pub fn partial_quotient(m: &PayoffMatrix, viewer: Player, own_c: f64, p_a: f64, c_a: f64, c_b_for_quad: f64) -> f64 {
    let e = entry(m, Player::Alice);
    let q = barred_quad(m, Player::Alice, viewer, own_c);
    let qb = barred_quad(m, Player::Alice, Player::Bob, c_b_for_quad);
    match viewer {
        Player::Charlie => {
            (p_a - c_a * (q[2] - q[3]) + q[3]) / (c_a * (e("000") + e("001") - e("100") - e("101")) + (qb[1] - qb[3]))
        }
        _ => (p_a - c_a * (q[2] - q[3]) + q[3]) / (c_a * (e("000") + e("101") - e("100") - e("001")) + (q[1] - q[3])),
    }
}

/// Printed symmetric partial quotients on Alice's row for `viewer` knowing `own_c`.
pub fn partial_symmetric_quotient(m: &PayoffMatrix, case_ii: bool, viewer: Player, own_c: f64, p_a: f64) -> f64 {
    let e = entry(m, Player::Alice);
    let c = own_c;
    match (case_ii, viewer) {
        (false, _) => (p_a - e("110") + c * (e("100") - e("001"))) / ((2.0 * c - 1.0) * (e("100") - e("001"))),
        (true, Player::Charlie) => (p_a - e("000") + c * (e("100") - e("001"))) / ((2.0 * c - 1.0) * (e("100") - e("001"))),
        (true, _) => (p_a - e("000") - c * (e("100") - e("000"))) / ((2.0 * c - 1.0) * (e("100") - e("000"))),
    }
}
