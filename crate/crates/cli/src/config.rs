//! Scenario files: TOML with optional `pi/4`-style angle literals and
//! `QGAME_`-prefixed environment overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Deserializer, Serialize};

use qgame_qkd::adversary::EavesdropConfig;
use qgame_qkd::forms::{partial_strategies, symmetry_permute_matrix, PartialBranch};
use qgame_qkd::generators::MatrixGenerator;
use qgame_qkd::protocol::{Codebook, Mode, SessionConfig, StrategySource};
use qgame_qkd::recovery::DisclosurePolicy;
use qgame_qkd::{PayoffMatrix, Regime, SimRng, StrategyParams, StrategyTriple};

pub const ENV_PREFIX: &str = "QGAME_";

/// Radians, written either as a number or as a literal like `3pi/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Angle(pub f64);

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Angle(v)),
            Raw::Text(s) => parse_angle(&s).map(Angle).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses `1.2`, `pi`, `-pi/2`, `3pi/4`, `3*pi/4` or `pi*0.5`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let bad = || anyhow!("not an angle: {text:?}");
    let Some(at) = s.find("pi") else {
        return s.parse().map_err(|_| bad());
    };
    let (head, tail) = (&s[..at], &s[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coeff = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let value = if tail.is_empty() {
        coeff
    } else if let Some(den) = tail.strip_prefix('/') {
        coeff / den.parse::<f64>().map_err(|_| bad())?
    } else if let Some(factor) = tail.strip_prefix('*') {
        coeff * factor.parse::<f64>().map_err(|_| bad())?
    } else {
        return Err(bad());
    };
    Ok(value * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeName {
    NonEntangled,
    MaxEntangled,
    PartialState,
    PartialBasis,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisclosureName {
    PayoffsAb,
    AliceAll,
    PayoffAOnly,
}

impl From<DisclosureName> for DisclosurePolicy {
    fn from(d: DisclosureName) -> Self {
        match d {
            DisclosureName::PayoffsAb => DisclosurePolicy::PayoffsAB,
            DisclosureName::AliceAll => DisclosurePolicy::AliceAll,
            DisclosureName::PayoffAOnly => DisclosurePolicy::PayoffAOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSource {
    pub generator: Option<MatrixGenerator>,
    #[serde(default)]
    pub seed: u64,
    /// Rows A, B, C over profiles 000..111.
    pub entries: Option<[[f64; 8]; 3]>,
    /// TOML file holding an `entries` table.
    pub file: Option<PathBuf>,
    /// Apply the entangled relabeling to the generated or given table.
    #[serde(default)]
    pub relabel: bool,
}

impl Default for MatrixSource {
    fn default() -> Self {
        MatrixSource {
            generator: Some(MatrixGenerator::CaseI),
            seed: 1,
            entries: None,
            file: None,
            relabel: false,
        }
    }
}

#[derive(Deserialize)]
struct EntriesFile {
    entries: [[f64; 8]; 3],
}

impl MatrixSource {
    pub fn build(&self, base: &Path) -> Result<PayoffMatrix> {
        let given = [self.generator.is_some(), self.entries.is_some(), self.file.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            bail!("matrix: give exactly one of generator, entries, file");
        }
        let m = if let Some(g) = self.generator {
            g.generate(self.seed)
        } else if let Some(e) = self.entries {
            PayoffMatrix::new(e)?
        } else {
            let path = base.join(self.file.as_ref().expect("checked above"));
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let f: EntriesFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            PayoffMatrix::new(f.entries)?
        };
        Ok(if self.relabel { symmetry_permute_matrix(&m) } else { m })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Fixed,
    #[default]
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategiesConfig {
    #[serde(default)]
    pub source: StrategyKind,
    /// Fixed weights `C = cos^2(theta/2)`.
    pub cs: Option<[f64; 3]>,
    /// Fixed angles; phases default to the regime's convention.
    pub thetas: Option<[Angle; 3]>,
    pub alphas: Option<[Angle; 3]>,
    pub betas: Option<[Angle; 3]>,
    #[serde(default = "default_grid")]
    pub values: Vec<f64>,
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_hi")]
    pub hi: f64,
    /// Random draws for the payoff table.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Random draws also pick phases (not in the partial regime, which fixes them).
    #[serde(default)]
    pub phases: bool,
}

fn default_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}
fn default_lo() -> f64 {
    0.05
}
fn default_hi() -> f64 {
    0.95
}
fn default_draws() -> usize {
    20
}

impl Default for StrategiesConfig {
    fn default() -> Self {
        StrategiesConfig {
            source: StrategyKind::Grid,
            cs: None,
            thetas: None,
            alphas: None,
            betas: None,
            values: default_grid(),
            lo: default_lo(),
            hi: default_hi(),
            draws: default_draws(),
            phases: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionParams {
    #[serde(default = "default_pairs")]
    pub round_pairs: usize,
    #[serde(default = "default_bits")]
    pub strategy_bits: u32,
    #[serde(default = "default_digits")]
    pub payoff_digits: u32,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retries")]
    pub replays: u32,
}

fn default_pairs() -> usize {
    4
}
fn default_bits() -> u32 {
    3
}
fn default_digits() -> u32 {
    2
}
fn default_retries() -> u32 {
    3
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            round_pairs: default_pairs(),
            strategy_bits: default_bits(),
            payoff_digits: default_digits(),
            max_retries: default_retries(),
            replays: default_retries(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub regime: RegimeName,
    /// Only for the general regime.
    pub gamma: Option<Angle>,
    pub delta: Option<Angle>,
    #[serde(default)]
    pub matrix: MatrixSource,
    #[serde(default)]
    pub strategies: StrategiesConfig,
    #[serde(default = "default_disclosure")]
    pub disclosure: DisclosureName,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_shots")]
    pub shots: u64,
    pub eavesdrop: Option<EavesdropConfig>,
    #[serde(default)]
    pub session: SessionParams,
}

fn default_disclosure() -> DisclosureName {
    DisclosureName::PayoffsAb
}
fn default_mode() -> ModeName {
    ModeName::Exact
}
fn default_shots() -> u64 {
    100_000
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            regime: RegimeName::NonEntangled,
            gamma: None,
            delta: None,
            matrix: MatrixSource::default(),
            strategies: StrategiesConfig::default(),
            disclosure: default_disclosure(),
            mode: default_mode(),
            shots: default_shots(),
            eavesdrop: None,
            session: SessionParams::default(),
        }
    }
}

/// Scenario plus the directory relative paths resolve against.
pub struct Loaded {
    pub config: ScenarioConfig,
    pub base: PathBuf,
}

/// Reads `path` (or the defaults), then applies environment overrides.
pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Loaded> {
    let (mut table, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let table: toml::Table = text.parse().map_err(|e| anyhow!("{}: {e}", p.display()))?;
            (table, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (toml::Table::try_from(ScenarioConfig::default())?, PathBuf::from(".")),
    };
    let mut overrides: Vec<(String, String)> =
        env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.len() > ENV_PREFIX.len()).collect();
    overrides.sort();
    for (key, raw) in overrides {
        apply_override(&mut table, &key[ENV_PREFIX.len()..], &raw)?;
    }
    let config: ScenarioConfig = table.try_into().map_err(|e| anyhow!("invalid scenario: {e}"))?;
    Ok(Loaded { config, base })
}

/// `QGAME_MATRIX__SEED=3` sets `matrix.seed`. Values parse as TOML when
/// they can and are kept as strings otherwise.
fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let path: Vec<String> = key.split("__").map(str::to_lowercase).collect();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("split yields at least one part");
    let mut node = table;
    for part in parents {
        node = node
            .entry(part.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {ENV_PREFIX}{key}: {part} is not a table"))?;
    }
    node.insert(last.clone(), value);
    Ok(())
}

impl ScenarioConfig {
    pub fn regime(&self) -> Result<Regime> {
        let general = self.regime == RegimeName::General;
        if general && (self.gamma.is_none() || self.delta.is_none()) {
            bail!("the general regime needs gamma and delta");
        }
        if !general && (self.gamma.is_some() || self.delta.is_some()) {
            bail!("gamma and delta are only read by the general regime");
        }
        Ok(match self.regime {
            RegimeName::NonEntangled => Regime::NonEntangled,
            RegimeName::MaxEntangled => Regime::MaxEntangled,
            RegimeName::PartialState => Regime::Partial { branch: PartialBranch::EntangledState },
            RegimeName::PartialBasis => Regime::Partial { branch: PartialBranch::EntangledBasis },
            RegimeName::General => Regime::General {
                gamma: self.gamma.expect("checked").0,
                delta: self.delta.expect("checked").0,
            },
        })
    }

    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeName::Exact => Mode::Exact,
            ModeName::Sampled => Mode::Sampled { shots: self.shots },
        }
    }

    pub fn session_config(&self, base: &Path) -> Result<SessionConfig> {
        let m = self.matrix.build(base)?;
        let p = &self.session;
        let codebook = Codebook::for_matrix(p.strategy_bits, p.payoff_digits, &m)?;
        let mut cfg = SessionConfig::exact(self.regime()?, m, self.disclosure.into(), codebook, p.round_pairs);
        cfg.mode = self.mode();
        cfg.eavesdrop = self.eavesdrop.clone();
        cfg.max_retries = p.max_retries;
        cfg.replays = p.replays;
        let s = &self.strategies;
        cfg.strategies = match s.source {
            StrategyKind::Fixed => StrategySource::Fixed { cs: self.fixed_cs()? },
            StrategyKind::Grid => StrategySource::Grid { values: s.values.clone() },
            StrategyKind::Random => StrategySource::Uniform { lo: s.lo, hi: s.hi },
        };
        Ok(cfg)
    }

    fn fixed_cs(&self) -> Result<[f64; 3]> {
        let s = &self.strategies;
        match (s.cs, s.thetas) {
            (Some(cs), None) => Ok(cs),
            (None, Some(t)) => Ok(t.map(|a| (a.0 / 2.0).cos().powi(2))),
            _ => bail!("fixed strategies need exactly one of cs, thetas"),
        }
    }

    /// Strategy triples for the payoff table, in a fixed order.
    pub fn strategy_draws(&self, seed: u64) -> Result<Vec<StrategyTriple>> {
        let regime = self.regime()?;
        let s = &self.strategies;
        let from_cs = |cs: [f64; 3]| regime.strategies_from_cs(cs).map_err(anyhow::Error::from);
        match s.source {
            StrategyKind::Fixed => {
                if s.alphas.is_none() && s.betas.is_none() {
                    // Angles are used as given rather than round-tripped through C.
                    return Ok(vec![match (s.thetas, regime) {
                        (Some(t), Regime::Partial { .. }) => partial_strategies(t.map(|a| a.0))?,
                        (Some(t), _) => StrategyTriple::from_thetas(t.map(|a| a.0))?,
                        (None, _) => from_cs(self.fixed_cs()?)?,
                    }]);
                }
                let t = s.thetas.ok_or_else(|| anyhow!("phases need thetas"))?;
                let zero = [Angle(0.0); 3];
                let (a, b) = (s.alphas.unwrap_or(zero), s.betas.unwrap_or(zero));
                let p = |i: usize| StrategyParams::new(t[i].0, a[i].0, b[i].0);
                Ok(vec![StrategyTriple::new(p(0)?, p(1)?, p(2)?)])
            }
            StrategyKind::Grid => {
                let v = &s.values;
                let mut out = Vec::with_capacity(v.len().pow(3));
                for &a in v {
                    for &b in v {
                        for &c in v {
                            out.push(from_cs([a, b, c])?);
                        }
                    }
                }
                Ok(out)
            }
            StrategyKind::Random => {
                let mut rng = SimRng::stream(seed, 0x7061_796f);
                (0..s.draws)
                    .map(|_| {
                        let cs = [0, 1, 2].map(|_| rng.uniform_in(s.lo, s.hi));
                        if s.phases && !matches!(regime, Regime::Partial { .. }) {
                            let t = StrategyTriple::from_cs(cs)?.thetas();
                            let mut p = |i: usize| StrategyParams::new(t[i], rng.uniform_in(-PI, PI), rng.uniform_in(-PI, PI));
                            Ok(StrategyTriple::new(p(0)?, p(1)?, p(2)?))
                        } else {
                            from_cs(cs)
                        }
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_literals() {
        let close = |s: &str, v: f64| assert!((parse_angle(s).unwrap() - v).abs() < 1e-15, "{s}");
        close("pi/4", PI / 4.0);
        close("3pi/4", 0.75 * PI);
        close("-pi/2", -PI / 2.0);
        close(" 2 * pi / 3 ", 2.0 * PI / 3.0);
        close("pi*0.5", PI / 2.0);
        close("PI", PI);
        close("0.25", 0.25);
        for bad in ["pie", "pi/", "x", "pi/four", "1..2"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn env_overrides_reach_nested_fields() {
        let env = [
            ("QGAME_REGIME", "max-entangled"),
            ("QGAME_MATRIX__SEED", "7"),
            ("QGAME_EAVESDROP__P", "0.25"),
            ("QGAME_STRATEGIES__THETAS", r#"["pi/2", 0, "pi"]"#),
            ("QGAME_STRATEGIES__SOURCE", "fixed"),
            ("OTHER", "ignored"),
        ]
        .map(|(k, v)| (k.to_string(), v.to_string()));
        let c = load(None, env).unwrap().config;
        assert_eq!(c.regime, RegimeName::MaxEntangled);
        assert_eq!(c.matrix.seed, 7);
        assert_eq!(c.eavesdrop.unwrap().p(), 0.25);
        assert_eq!(c.strategies.thetas.unwrap()[2], Angle(PI));
    }

    #[test]
    fn general_regime_needs_its_angles() {
        let mut c = ScenarioConfig { regime: RegimeName::General, ..Default::default() };
        assert!(c.regime().is_err());
        c.gamma = Some(Angle(0.3));
        c.delta = Some(Angle(0.2));
        assert_eq!(c.regime().unwrap(), Regime::General { gamma: 0.3, delta: 0.2 });
        c.regime = RegimeName::NonEntangled;
        assert!(c.regime().is_err());
    }
}
