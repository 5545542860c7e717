//! Discrepancy ledger: every printed expression evaluated next to the oracle.
//!
//! Rows are a pure function of the fixed seed below, so the shipped TSV can be
//! regenerated byte for byte. Payoff rows compare against the trace oracle;
//! solver rows compare the printed quotient against the strategy value that
//! produced the disclosure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

use crate::adversary::{tapped_payoffs_oracle, EavesdropConfig};
use crate::forms::PartialBranch;
use crate::game::{PayoffMatrix, Player};
use crate::generators::MatrixGenerator;
use crate::printed;
use crate::rng::SimRng;
use crate::state::{expected_payoffs_oracle, EntanglementConfig, StrategyParams, StrategyTriple};

pub const LEDGER_SEED: u64 = 0x1ed6_e125;
pub const POINTS_PER_ENTRY: u64 = 3;
/// Absolute difference at or below which a printed value agrees.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

pub const TSV_HEADER: &str = "id\tregime\tpoint\tprinted\toracle\tabs_diff\tverdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Agrees,
    Diverges,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Agrees => "agrees",
            Verdict::Diverges => "diverges",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LedgerRow {
    pub id: &'static str,
    pub regime: &'static str,
    pub point: String,
    pub printed: f64,
    pub oracle: f64,
}

impl LedgerRow {
    /// Infinite when the printed value is not a number (a zero denominator).
    pub fn abs_diff(&self) -> f64 {
        let d = (self.printed - self.oracle).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    }

    pub fn verdict(&self) -> Verdict {
        if self.abs_diff() <= AGREEMENT_TOLERANCE {
            Verdict::Agrees
        } else {
            Verdict::Diverges
        }
    }
}

/// One randomized evaluation point.
struct Draw {
    rng: SimRng,
    label: String,
    fields: Vec<String>,
}

impl Draw {
    fn new(entry: u64, point: u64) -> Draw {
        Draw {
            rng: SimRng::stream(LEDGER_SEED + point, entry),
            label: format!("draw={entry}.{point}"),
            fields: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.fields.push(format!("{key}={value}"));
    }

    fn angle(&mut self, key: &str, lo: f64, hi: f64) -> f64 {
        let v = self.rng.uniform_in(lo, hi);
        self.note(key, format_args!("{v:.6}"));
        v
    }

    fn config(&mut self) -> EntanglementConfig {
        let g = self.angle("gamma", 0.0, FRAC_PI_2);
        let d = self.angle("delta", 0.0, FRAC_PI_2);
        EntanglementConfig::new(g, d).expect("in range")
    }

    fn strategies(&mut self, phases: bool) -> StrategyTriple {
        let params: Vec<StrategyParams> = ['a', 'b', 'c']
            .into_iter()
            .map(|p| {
                let t = self.angle(&format!("theta_{p}"), 0.0, PI);
                let (a, b) = if phases {
                    (self.angle(&format!("alpha_{p}"), -PI, PI), self.angle(&format!("beta_{p}"), -PI, PI))
                } else {
                    (0.0, 0.0)
                };
                StrategyParams::new(t, a, b).expect("in range")
            })
            .collect();
        StrategyTriple::new(params[0], params[1], params[2])
    }

    fn cs(&mut self) -> [f64; 3] {
        ['a', 'b', 'c'].map(|p| {
            let c = self.rng.uniform_in(0.05, 0.95);
            self.note(&format!("c_{p}"), format_args!("{c:.6}"));
            c
        })
    }

    fn matrix(&mut self, generator: MatrixGenerator) -> PayoffMatrix {
        if generator == MatrixGenerator::Random {
            self.note("matrix", "uniform(-5,5)");
            return PayoffMatrix::from_fn(|_, _| self.rng.uniform_in(-5.0, 5.0)).expect("finite");
        }
        let seed = self.rng.index(1 << 20) as u64;
        self.note("matrix", format_args!("{}#{seed}", generator.name()));
        generator.generate(seed)
    }

    fn player(&mut self, k: Player) -> Player {
        self.note("k", k.letter());
        k
    }

    fn point(&self) -> String {
        std::iter::once(self.label.clone()).chain(self.fields.iter().cloned()).collect::<Vec<_>>().join(";")
    }
}

struct Builder {
    rows: Vec<LedgerRow>,
    entry: u64,
}

impl Builder {
    /// Adds `POINTS_PER_ENTRY` rows for one printed expression. `eval`
    /// returns `(printed, oracle)` at a fresh draw.
    fn entry(&mut self, id: &'static str, regime: &'static str, mut eval: impl FnMut(&mut Draw, u64) -> (f64, f64)) {
        self.entry += 1;
        for j in 0..POINTS_PER_ENTRY {
            let mut draw = Draw::new(self.entry, j);
            let (printed, oracle) = eval(&mut draw, j);
            self.rows.push(LedgerRow { id, regime, point: draw.point(), printed, oracle });
        }
    }
}

fn cycle(j: u64) -> Player {
    Player::from_index(j as usize % 3)
}

fn branch_name(branch: PartialBranch) -> &'static str {
    match branch {
        PartialBranch::EntangledState => "partial-state",
        PartialBranch::EntangledBasis => "partial-basis",
    }
}

fn partial_point(d: &mut Draw, branch: PartialBranch, generator: MatrixGenerator, k: Player) -> (StrategyTriple, PayoffMatrix, f64) {
    let cs = d.cs();
    let s = crate::forms::partial_strategies_from_cs(cs).expect("in range");
    let m = d.matrix(generator);
    let oracle = expected_payoffs_oracle(&branch.config(), &s, &m).get(k);
    (s, m, oracle)
}

fn payoff_entries(b: &mut Builder) {
    b.entry("general-closed-form", "general", |d, j| {
        let (cfg, s, m, k) = (d.config(), d.strategies(true), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
        (printed::general_closed_form(&cfg, &s, &m, k), expected_payoffs_oracle(&cfg, &s, &m).get(k))
    });
    b.entry("general-closed-form-c_a-s_b-s_c-phase-plus-beta_c", "general", |d, j| {
        let (cfg, s, m, k) = (d.config(), d.strategies(true), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
        (printed::general_closed_form_bracket_fixed(&cfg, &s, &m, k), expected_payoffs_oracle(&cfg, &s, &m).get(k))
    });
    b.entry("general-closed-form-phase-free", "general", |d, j| {
        let (cfg, s, m, k) = (d.config(), d.strategies(false), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
        (printed::general_closed_form(&cfg, &s, &m, k), expected_payoffs_oracle(&cfg, &s, &m).get(k))
    });
    for (id, phases) in [("tapped-general-closed-form", true), ("tapped-general-closed-form-phase-free", false)] {
        b.entry(id, "general", |d, j| {
            let (cfg, s, m, k) = (d.config(), d.strategies(phases), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
            let p = d.angle("p", 0.0, 1.0);
            let tap = EavesdropConfig::single_forward(p).expect("p in range");
            let oracle = tapped_payoffs_oracle(&cfg, &s, &m, &tap).expect("valid tap").get(k);
            (printed::general_closed_form_tapped(&cfg, &s, &m, k, 1.0 - p), oracle)
        });
    }

    let max = EntanglementConfig::MAX_ENTANGLED;
    for (id, sign) in [("maxentangled-trivial-point-plus", 1.0), ("maxentangled-trivial-point-minus", -1.0)] {
        b.entry(id, "max-entangled", |d, j| {
            let ta = d.angle("theta_a", 0.0, PI);
            let s = StrategyTriple::from_thetas([ta, 0.0, 0.0]).expect("in range");
            let (m, k) = (d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
            (printed::maxentangled_trivial_point(&s, &m, k, sign), expected_payoffs_oracle(&max, &s, &m).get(k))
        });
    }
    b.entry("maxentangled-expansion", "max-entangled", |d, j| {
        let (cs, m, k) = (d.cs(), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
        let s = StrategyTriple::from_cs(cs).expect("in range");
        (printed::maxentangled_expansion(cs, &m, k), expected_payoffs_oracle(&max, &s, &m).get(k))
    });
    for (id, viewer) in [
        ("maxentangled-primed-view-alice", Player::Alice),
        ("maxentangled-primed-view-bob", Player::Bob),
        ("maxentangled-primed-view-charlie", Player::Charlie),
    ] {
        b.entry(id, "max-entangled", |d, j| {
            let (cs, m, k) = (d.cs(), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
            let s = StrategyTriple::from_cs(cs).expect("in range");
            (printed::maxentangled_primed_view(cs, &m, k, viewer), expected_payoffs_oracle(&max, &s, &m).get(k))
        });
    }
    b.entry("tapped-maxentangled-expansion", "max-entangled", |d, j| {
        let (cs, m, k) = (d.cs(), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
        let p = d.angle("p", 0.0, 1.0);
        let s = StrategyTriple::from_cs(cs).expect("in range");
        let tap = EavesdropConfig::single_forward(p).expect("p in range");
        let oracle = tapped_payoffs_oracle(&max, &s, &m, &tap).expect("valid tap").get(k);
        (printed::maxentangled_tapped_expansion(cs, &m, k, 1.0 - p), oracle)
    });
    for (id, regime, cfg) in [
        ("phase-transform-nonentangled", "non-entangled", EntanglementConfig::NON_ENTANGLED),
        ("phase-transform-maxentangled", "max-entangled", max),
    ] {
        b.entry(id, regime, |d, j| {
            let (s, m, k) = (d.strategies(true), d.matrix(MatrixGenerator::Random), d.player(cycle(j)));
            let moved = printed::phase_transformed_matrix(&cfg, &s, &m);
            let printed = expected_payoffs_oracle(&cfg, &s.without_phases(), &moved).get(k);
            (printed, expected_payoffs_oracle(&cfg, &s, &m).get(k))
        });
    }
}

fn partial_entries(b: &mut Builder) {
    for branch in [PartialBranch::EntangledState, PartialBranch::EntangledBasis] {
        let regime = branch_name(branch);
        let cfg = branch.config();
        let sign = branch.sign();
        let pick = |state: &'static str, basis: &'static str| match branch {
            PartialBranch::EntangledState => state,
            PartialBranch::EntangledBasis => basis,
        };
        b.entry(pick("partial-interference-sign-state", "partial-interference-sign-basis"), regime, |d, j| {
            let k = d.player(cycle(j));
            let (s, m, oracle) = partial_point(d, branch, MatrixGenerator::Random, k);
            (printed::partial_half_sum(s.cs(), &m, k) + printed::partial_last_term(&cfg, &s, &m, k), oracle)
        });
        b.entry(pick("partial-root-form-state", "partial-root-form-basis"), regime, |d, j| {
            let k = d.player(cycle(j));
            let (s, m, oracle) = partial_point(d, branch, MatrixGenerator::Random, k);
            (printed::partial_half_sum(s.cs(), &m, k) + printed::partial_sqrt_term(s.cs(), &m, k, sign), oracle)
        });
        b.entry(pick("partial-squared-amplitude-state", "partial-squared-amplitude-basis"), regime, |d, j| {
            let k = d.player(cycle(j));
            let (s, m, oracle) = partial_point(d, branch, MatrixGenerator::Random, k);
            (printed::partial_squared_amplitudes(&s, &m, k, sign), oracle)
        });
        for (ids, theta_a) in [
            (("partial-half-angle-theta_a-pi-over-4-state", "partial-half-angle-theta_a-pi-over-4-basis"), FRAC_PI_4),
            (("partial-half-angle-theta_a-pi-over-2-state", "partial-half-angle-theta_a-pi-over-2-basis"), FRAC_PI_2),
        ] {
            b.entry(pick(ids.0, ids.1), regime, |d, j| {
                let k = d.player(cycle(j));
                d.note("theta_a", format_args!("{theta_a:.6}"));
                let tb = d.angle("theta_b", 0.0, PI);
                let tc = d.angle("theta_c", 0.0, PI);
                let s = crate::forms::partial_strategies([theta_a, tb, tc]).expect("in range");
                let m = d.matrix(MatrixGenerator::Random);
                let oracle = expected_payoffs_oracle(&cfg, &s, &m).get(k);
                (printed::partial_half_angle(&s, &m, k, sign), oracle)
            });
        }
        b.entry(pick("tapped-partial-interference-state", "tapped-partial-interference-basis"), regime, |d, j| {
            let k = d.player(cycle(j));
            let cs = d.cs();
            let s = crate::forms::partial_strategies_from_cs(cs).expect("in range");
            let m = d.matrix(MatrixGenerator::Random);
            let p = d.angle("p", 0.0, 1.0);
            let tap = EavesdropConfig::single_forward(p).expect("p in range");
            let oracle = tapped_payoffs_oracle(&cfg, &s, &m, &tap).expect("valid tap").get(k);
            let printed = printed::partial_half_sum(cs, &m, k) + printed::partial_last_term_tapped(&cfg, &s, &m, k, 1.0 - p);
            (printed, oracle)
        });
    }

    let branch = PartialBranch::EntangledState;
    b.entry("partial-not-dual-expansion", branch_name(branch), |d, j| {
        let k = d.player([Player::Alice, Player::Charlie][j as usize % 2]);
        let (s, m, oracle) = partial_point(d, branch, MatrixGenerator::NotDual, k);
        (printed::not_dual_expansion(s.cs(), &m, k), oracle)
    });
    for (id, viewer) in [
        ("partial-not-dual-view-alice", Player::Alice),
        ("partial-not-dual-view-bob", Player::Bob),
        ("partial-not-dual-view-charlie", Player::Charlie),
    ] {
        b.entry(id, branch_name(branch), |d, _| {
            let k = d.player(Player::Alice);
            let (s, m, oracle) = partial_point(d, branch, MatrixGenerator::NotDual, k);
            (printed::not_dual_view(s.cs(), &m, k, viewer), oracle)
        });
    }
}

/// True strategy weights and oracle payoffs of a non-entangled round.
fn plain_round(d: &mut Draw, generator: MatrixGenerator) -> ([f64; 3], PayoffMatrix, [f64; 3]) {
    let cs = d.cs();
    let m = d.matrix(generator);
    let s = StrategyTriple::from_cs(cs).expect("in range");
    let p = expected_payoffs_oracle(&EntanglementConfig::NON_ENTANGLED, &s, &m).0;
    (cs, m, p)
}

fn recovery_entries(b: &mut Builder) {
    let (a, bo, c) = (Player::Alice, Player::Bob, Player::Charlie);
    // (id, generator, slot, viewer, which output, index of the true value)
    let two_payoff = [
        ("recovery-case-i-bob-c_a", MatrixGenerator::CaseI, 1, bo, 0, 0),
        ("recovery-case-i-bob-c_c", MatrixGenerator::CaseI, 1, bo, 1, 2),
        ("recovery-case-i-charlie-c_a", MatrixGenerator::CaseI, 1, c, 0, 0),
        ("recovery-case-i-charlie-c_b", MatrixGenerator::CaseI, 1, c, 1, 1),
        ("recovery-case-ii-bob-c_c", MatrixGenerator::CaseII, 2, bo, 0, 2),
        ("recovery-case-ii-bob-c_a", MatrixGenerator::CaseII, 2, bo, 1, 0),
        ("recovery-case-ii-charlie-c_b", MatrixGenerator::CaseII, 2, c, 0, 1),
        ("recovery-case-ii-charlie-c_a", MatrixGenerator::CaseII, 2, c, 1, 0),
    ];
    for (id, generator, slot, viewer, output, truth) in two_payoff {
        b.entry(id, "non-entangled", |d, _| {
            let (cs, m, p) = plain_round(d, generator);
            let (first, second) = printed::two_payoff_quotients(&m, viewer, cs[viewer.index()], p[0], p[1], slot);
            ([first, second][output], cs[truth])
        });
    }
    for (id, viewer, truth) in [("recovery-alice-disclosure-bob-c_c", bo, 2), ("recovery-alice-disclosure-charlie-c_b", c, 1)] {
        b.entry(id, "non-entangled", |d, _| {
            let (cs, m, p) = plain_round(d, MatrixGenerator::CaseII);
            (printed::alice_disclosure_quotient(&m, viewer, cs[viewer.index()], p[0], cs[0], cs[2]), cs[truth])
        });
    }
    for (id, viewer, truth) in [("recovery-case-iii-bob-c_c", bo, 2), ("recovery-case-iii-charlie-c_b", c, 1)] {
        b.entry(id, "non-entangled", |d, _| {
            let (cs, m, p) = plain_round(d, MatrixGenerator::CaseIII);
            (printed::case_iii_quotient(&m, viewer, cs[viewer.index()], p[0], cs[0]), cs[truth])
        });
    }
    for (id, viewer) in [("case-iii-payoff-form-bob", bo), ("case-iii-payoff-form-charlie", c)] {
        b.entry(id, "non-entangled", |d, j| {
            let k = d.player([a, bo][j as usize % 2]);
            let (cs, m, p) = plain_round(d, MatrixGenerator::CaseIII);
            (printed::case_iii_payoff(cs, &m, k, viewer), p[k.index()])
        });
    }

    let branch = PartialBranch::EntangledState;
    for (id, viewer, truth) in [("recovery-partial-bob-c_c", bo, 2), ("recovery-partial-charlie-c_b", c, 1)] {
        b.entry(id, branch_name(branch), |d, _| {
            let (s, m, p_a) = partial_point(d, branch, MatrixGenerator::NotDual, a);
            let cs = s.cs();
            (printed::partial_quotient(&m, viewer, cs[viewer.index()], p_a, cs[0], cs[1]), cs[truth])
        });
    }
    for (id, generator, case_ii, viewer, truth) in [
        ("recovery-partial-symmetric-i-bob-c_c", MatrixGenerator::PartialSymI, false, bo, 2),
        ("recovery-partial-symmetric-i-charlie-c_b", MatrixGenerator::PartialSymI, false, c, 1),
        ("recovery-partial-symmetric-ii-bob-c_c", MatrixGenerator::PartialSymII, true, bo, 2),
        ("recovery-partial-symmetric-ii-charlie-c_b", MatrixGenerator::PartialSymII, true, c, 1),
    ] {
        b.entry(id, branch_name(branch), |d, _| {
            let (s, m, p_a) = partial_point(d, branch, generator, a);
            let cs = s.cs();
            (printed::partial_symmetric_quotient(&m, case_ii, viewer, cs[viewer.index()], p_a), cs[truth])
        });
    }
}

/// Every ledger row in a fixed order.
pub fn ledger_rows() -> Vec<LedgerRow> {
    let mut b = Builder { rows: Vec::new(), entry: 0 };
    payoff_entries(&mut b);
    partial_entries(&mut b);
    recovery_entries(&mut b);
    b.rows
}

/// Ids with at least one diverging row, in ledger order.
pub fn diverging_ids(rows: &[LedgerRow]) -> Vec<&'static str> {
    let mut ids: Vec<&'static str> = Vec::new();
    for r in rows.iter().filter(|r| r.verdict() == Verdict::Diverges) {
        if !ids.contains(&r.id) {
            ids.push(r.id);
        }
    }
    ids
}

pub fn to_tsv(rows: &[LedgerRow]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.9e}\t{:.9e}\t{:.9e}\t{}",
            r.id,
            r.regime,
            r.point,
            r.printed,
            r.oracle,
            r.abs_diff(),
            r.verdict().as_str()
        );
    }
    out
}

pub fn ledger_tsv() -> String {
    to_tsv(&ledger_rows())
}
