use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use qgame_qkd::adversary::{
    detect_eavesdropper, sampled_sensitivity, tapped_outcome_distribution, tapped_payoffs_oracle, Audit, EavesdropConfig, Verdict,
};
use qgame_qkd::forms::{expected_payoffs_closed, symmetry_permute_matrix, PartialBranch};
use qgame_qkd::ledger;
use qgame_qkd::printed;
use qgame_qkd::protocol::{run_round, run_session, Mode, ProtocolError, SessionStatus};
use qgame_qkd::recovery::{classify_symmetry_case, validate_ratio_distinctness, CaseFamily, DisclosurePolicy, RecoveryError};
use qgame_qkd::state::{expected_payoffs_oracle, round_distribution, sample_counts, OutcomeDistribution};
use qgame_qkd::tolerance;
use qgame_qkd::{Payoffs, Player, Regime, SimRng, StrategyTriple};

use crate::config::{Loaded, ScenarioConfig};

/// Process exit codes; a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Invalid = 1,
    Mismatch = 2,
    Eavesdropper = 3,
    Singular = 4,
}

pub struct Invocation<'a> {
    pub command: &'static str,
    pub loaded: &'a Loaded,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

impl Invocation<'_> {
    fn config(&self) -> &ScenarioConfig {
        &self.loaded.config
    }

    /// Config and seed, so any output can be reproduced.
    fn echo(&self) -> serde_json::Value {
        serde_json::json!({ "command": self.command, "seed": self.seed, "config": self.config() })
    }

    fn csv_header(&self) -> String {
        format!("# qgame {}\n# seed: {}\n# config: {}\n", self.command, self.seed, serde_json::to_string(self.config()).expect("serializable"))
    }

    /// Writes to `<out>/<name>` when an output directory is set, stdout otherwise.
    fn emit(&self, name: &str, body: &str) -> Result<()> {
        match self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(name);
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            None => match std::io::stdout().write_all(body.as_bytes()) {
                // A closed pipe (`| head`) is the reader's choice, not a failure.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            },
        }
        Ok(())
    }
}

fn csv_body<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn rows_label(rows: &[Player]) -> String {
    rows.iter().map(|p| p.letter().to_string()).collect::<Vec<_>>().join(", ")
}

pub fn validate(ctx: &Invocation) -> Result<Exit> {
    let cfg = ctx.config();
    let regime = cfg.regime()?;
    let session = cfg.session_config(&ctx.loaded.base)?;
    let m = &session.matrix;
    println!("regime: {regime}");
    let (family, work) = match regime {
        Regime::Partial { .. } => (CaseFamily::PartialDual, m.clone()),
        Regime::MaxEntangled => (CaseFamily::NonEntangled, symmetry_permute_matrix(m)),
        _ => (CaseFamily::NonEntangled, m.clone()),
    };
    let class = classify_symmetry_case(&work, family);
    let ratios = validate_ratio_distinctness(m);
    println!("{:?}, ratio-distinct: {}", class.case, if ratios.distinct { "yes" } else { "no" });
    println!("case rows: [{}], exactly two: {}", rows_label(&class.players), class.two_index);
    if regime == Regime::MaxEntangled {
        println!("classified on the relabeled table");
    }
    if matches!(regime, Regime::Partial { .. }) {
        let dual: Vec<Player> = Player::ALL.into_iter().filter(|&k| m.is_not_dual_for(k, tolerance::MATRIX_EQUALITY)).collect();
        println!("NOT-dual rows: [{}]", rows_label(&dual));
    }
    if !ratios.collisions.is_empty() {
        let pairs: Vec<String> = ratios.collisions.iter().map(|(a, b)| format!("{}~{}", a.label(), b.label())).collect();
        println!("colliding pairs: {}", pairs.join(" "));
    }
    if !ratios.degenerate.is_empty() {
        let zero: Vec<String> = ratios.degenerate.iter().map(|p| p.label()).collect();
        println!("zero payoff triples: {}", zero.join(" "));
    }

    let checked = if session.policy == DisclosurePolicy::PayoffAOnly { session.validate_round() } else { session.validate() };
    let plan = match checked {
        Ok(plan) => plan,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(Exit::Invalid);
        }
    };
    println!("plan: {plan:?}");

    // Singularity margin over the strategy grid, in exact mode and untapped.
    let mut audit = session.clone();
    audit.mode = Mode::Exact;
    audit.eavesdrop = None;
    let (mut points, mut singular, mut margin) = (0, 0, f64::INFINITY);
    let mut failed = std::collections::BTreeMap::<String, usize>::new();
    let values = &cfg.strategies.values;
    for &a in values {
        for &b in values {
            for &c in values {
                let s = regime.strategies_from_cs([a, b, c])?;
                let r = run_round(&audit, &s, 0, ctx.seed)?;
                points += 1;
                match &r.failure {
                    Some(f) if f.singular => singular += 1,
                    Some(f) => *failed.entry(format!("{:?}", f.stage)).or_insert(0) += 1,
                    None => {}
                }
                for info in &r.recovered {
                    margin = margin.min(info.min_abs_denominator);
                }
            }
        }
    }
    let margin = if margin.is_finite() { format!("{margin:.3e}") } else { "n/a".to_string() };
    println!("singularity margin: min |denominator| {margin} over {points} grid strategies; singular {singular}");
    for (stage, n) in &failed {
        println!("other failures at {stage}: {n}");
    }
    // Isolated singular points are expected; a table that is singular everywhere is not.
    Ok(if points > 0 && singular == points { Exit::Singular } else { Exit::Ok })
}

#[derive(Serialize)]
struct PayoffRow {
    draw: usize,
    source: String,
    theta_a: f64,
    theta_b: f64,
    theta_c: f64,
    alpha_a: f64,
    alpha_b: f64,
    alpha_c: f64,
    beta_a: f64,
    beta_b: f64,
    beta_c: f64,
    p_a: f64,
    p_b: f64,
    p_c: f64,
    oracle_a: f64,
    oracle_b: f64,
    oracle_c: f64,
    max_delta: f64,
    status: &'static str,
}

fn payoff_row(draw: usize, source: String, s: &StrategyTriple, p: Payoffs, oracle: Payoffs, status: &'static str) -> PayoffRow {
    let [theta_a, theta_b, theta_c] = s.thetas();
    let [alpha_a, alpha_b, alpha_c] = s.alphas();
    let [beta_a, beta_b, beta_c] = s.betas();
    PayoffRow {
        draw,
        source,
        theta_a,
        theta_b,
        theta_c,
        alpha_a,
        alpha_b,
        alpha_c,
        beta_a,
        beta_b,
        beta_c,
        p_a: p.0[0],
        p_b: p.0[1],
        p_c: p.0[2],
        oracle_a: oracle.0[0],
        oracle_b: oracle.0[1],
        oracle_c: oracle.0[2],
        max_delta: p.max_abs_diff(&oracle),
        status,
    }
}

/// Printed forms worth showing next to the closed form at this draw.
fn printed_forms(regime: &Regime, s: &StrategyTriple, m: &qgame_qkd::PayoffMatrix) -> Result<Vec<(&'static str, Payoffs)>> {
    let cfg = regime.config()?;
    let each = |f: &dyn Fn(Player) -> f64| Payoffs(Player::ALL.map(f));
    let mut out = Vec::new();
    match regime {
        Regime::Partial { branch } => {
            let id = match branch {
                PartialBranch::EntangledState => "partial-interference-sign-state",
                PartialBranch::EntangledBasis => "partial-interference-sign-basis",
            };
            out.push((id, each(&|k| printed::partial_half_sum(s.cs(), m, k) + printed::partial_last_term(&cfg, s, m, k))));
        }
        _ => {
            out.push(("general-closed-form", each(&|k| printed::general_closed_form(&cfg, s, m, k))));
            let [_, tb, tc] = s.thetas();
            if *regime == Regime::MaxEntangled && tb.abs() < tolerance::ANGLE && tc.abs() < tolerance::ANGLE && s.phases_zero() {
                out.push(("maxentangled-trivial-point-plus", each(&|k| printed::maxentangled_trivial_point(s, m, k, 1.0))));
            }
        }
    }
    Ok(out)
}

pub fn payoffs(ctx: &Invocation) -> Result<Exit> {
    let cfg = ctx.config();
    let regime = cfg.regime()?;
    let ec = regime.config()?;
    let m = cfg.matrix.build(&ctx.loaded.base)?;
    let mut rows = Vec::new();
    let mut mismatches = 0;
    for (i, s) in cfg.strategy_draws(ctx.seed)?.iter().enumerate() {
        let oracle = expected_payoffs_oracle(&ec, s, &m);
        let closed = expected_payoffs_closed(&ec, s, &m);
        let ok = closed.max_abs_diff(&oracle) <= tolerance::CLOSED_FORM;
        if !ok {
            mismatches += 1;
        }
        rows.push(payoff_row(i, "closed".into(), s, closed, oracle, if ok { "ok" } else { "mismatch" }));
        for (id, p) in printed_forms(&regime, s, &m)? {
            let status = if p.max_abs_diff(&oracle) <= tolerance::CLOSED_FORM { "ok" } else { "ledgered" };
            rows.push(payoff_row(i, format!("printed:{id}"), s, p, oracle, status));
        }
    }
    ctx.emit("payoffs.csv", &(ctx.csv_header() + &csv_body(&rows)?))?;
    eprintln!("{} draws, {mismatches} closed-form mismatches", rows.iter().filter(|r| r.source == "closed").count());
    Ok(if mismatches > 0 { Exit::Mismatch } else { Exit::Ok })
}

pub fn session(ctx: &Invocation) -> Result<Exit> {
    let cfg = ctx.config().session_config(&ctx.loaded.base)?;
    let report = match run_session(&cfg, ctx.seed) {
        Ok(r) => r,
        Err(ProtocolError::Recovery(e @ RecoveryError::Singular { .. })) => {
            eprintln!("singular configuration: {e}");
            return Ok(Exit::Singular);
        }
        Err(e) => {
            eprintln!("{e}");
            return Ok(Exit::Invalid);
        }
    };
    let doc = serde_json::json!({ "echo": ctx.echo(), "report": report });
    ctx.emit("session.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let d = &report.detection;
    eprintln!(
        "status {:?}; rounds {} (retries {}); detection clean {} tapped {} undetectable {}",
        report.status,
        report.rounds.len(),
        report.retries,
        d.clean,
        d.tapped,
        d.undetectable
    );
    Ok(match &report.status {
        SessionStatus::Completed if report.keys_agree() => Exit::Ok,
        SessionStatus::Completed => Exit::Mismatch,
        SessionStatus::Compromised => Exit::Eavesdropper,
        SessionStatus::Aborted { .. } => {
            let singular = report.rounds.last().and_then(|r| r.failure.as_ref()).is_some_and(|f| f.singular);
            if singular {
                Exit::Singular
            } else {
                Exit::Invalid
            }
        }
    })
}

/// `start:stop:step`, both ends included.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().context("p-grid must be start:stop:step")?;
    let [start, stop, step] = parts[..] else { bail!("p-grid must be start:stop:step") };
    if !(step > 0.0 && start <= stop && (0.0..=1.0).contains(&start) && (0.0..=1.0).contains(&stop)) {
        bail!("p-grid needs 0 <= start <= stop <= 1 and step > 0");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // Rounded so that 0.1 steps print as 0.3, not 0.30000000000000004.
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).map(|p| p.min(stop)).collect())
}

#[derive(Serialize)]
struct ScanRow {
    p: f64,
    mu: f64,
    p_a: f64,
    p_b: f64,
    p_c: f64,
    delta_a: f64,
    delta_b: f64,
    delta_c: f64,
    max_abs_delta: f64,
    verdict: String,
    p_hat: Option<f64>,
}

pub fn eve_scan(ctx: &Invocation, grid: &[f64]) -> Result<Exit> {
    let cfg = ctx.config();
    let regime = cfg.regime()?;
    let ec = regime.config()?;
    let m = cfg.matrix.build(&ctx.loaded.base)?;
    let Some(s) = cfg.strategy_draws(ctx.seed)?.into_iter().next() else { bail!("no strategies to scan") };
    let taps = cfg.eavesdrop.clone().unwrap_or(EavesdropConfig::single_forward(0.0)?);
    let clean = expected_payoffs_oracle(&ec, &s, &m);
    let clean_dist = round_distribution(&ec, &s);
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &p) in grid.iter().enumerate() {
        let e = taps.with_p(p)?;
        let (observed, sensitivity) = match cfg.mode() {
            Mode::Exact => (tapped_payoffs_oracle(&ec, &s, &m, &e)?, tolerance::DETECTION_EXACT),
            Mode::Sampled { shots } => {
                let counts = sample_counts(&tapped_outcome_distribution(&ec, &s, &e)?, shots, &mut SimRng::stream(ctx.seed, i as u64));
                let freq = OutcomeDistribution::new(counts.map(|n| n as f64 / shots as f64))?;
                (freq.mean_payoffs(&m), sampled_sensitivity(&clean_dist, &m, shots, tolerance::DETECTION_SIGMAS))
            }
        };
        let report = detect_eavesdropper(&observed, Audit { regime: &regime, strategies: &s, matrix: &m }, sensitivity)?;
        let delta = Payoffs(std::array::from_fn(|k| observed.0[k] - clean.0[k]));
        let verdict = match report.verdict {
            Verdict::Clean => "clean".to_string(),
            Verdict::Tapped { .. } => "tapped".to_string(),
            Verdict::Undetectable { cause } => format!("undetectable:{}", serde_json::to_value(cause)?.as_str().unwrap_or("unknown")),
        };
        rows.push(ScanRow {
            p,
            mu: e.mu(),
            p_a: observed.0[0],
            p_b: observed.0[1],
            p_c: observed.0[2],
            delta_a: delta.0[0],
            delta_b: delta.0[1],
            delta_c: delta.0[2],
            max_abs_delta: delta.0.iter().fold(0.0, |a: f64, d| a.max(d.abs())),
            verdict,
            p_hat: report.p_hat,
        });
    }
    ctx.emit("eve_scan.csv", &(ctx.csv_header() + &csv_body(&rows)?))?;
    Ok(Exit::Ok)
}

pub fn ledger(ctx: &Invocation) -> Result<Exit> {
    let rows = ledger::ledger_rows();
    ctx.emit("discrepancies.tsv", &ledger::to_tsv(&rows))?;
    eprintln!(
        "ledger seed {:#x}: {} rows, diverging entries: {}",
        ledger::LEDGER_SEED,
        rows.len(),
        ledger::diverging_ids(&rows).join(", ")
    );
    Ok(Exit::Ok)
}
