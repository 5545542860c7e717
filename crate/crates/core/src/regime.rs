use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::forms::{partial_strategies_from_cs, PartialBranch, QuadVariant};
use crate::state::{EntanglementConfig, StrategyTriple};

/// Entanglement setting of a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regime {
    NonEntangled,
    MaxEntangled,
    Partial { branch: PartialBranch },
    General { gamma: f64, delta: f64 },
}

impl Regime {
    pub fn config(&self) -> Result<EntanglementConfig, DomainError> {
        match *self {
            Regime::NonEntangled => Ok(EntanglementConfig::NON_ENTANGLED),
            Regime::MaxEntangled => Ok(EntanglementConfig::MAX_ENTANGLED),
            Regime::Partial { branch } => Ok(branch.config()),
            Regime::General { gamma, delta } => EntanglementConfig::new(gamma, delta),
        }
    }

    /// Quads whose bilinear view reproduces this regime's phase-free payoffs.
    pub fn quad_variant(&self) -> Option<QuadVariant> {
        match self {
            Regime::NonEntangled => Some(QuadVariant::NonEntangled),
            Regime::MaxEntangled => Some(QuadVariant::MaxEntangled),
            Regime::Partial { .. } => Some(QuadVariant::PartialDual),
            Regime::General { .. } => None,
        }
    }

    /// Strategies with the given C values and this regime's phase convention.
    pub fn strategies_from_cs(&self, cs: [f64; 3]) -> Result<StrategyTriple, DomainError> {
        match self {
            Regime::Partial { .. } => partial_strategies_from_cs(cs),
            _ => StrategyTriple::from_cs(cs),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::NonEntangled => f.write_str("non-entangled"),
            Regime::MaxEntangled => f.write_str("max-entangled"),
            Regime::Partial { branch: PartialBranch::EntangledState } => f.write_str("partial-state"),
            Regime::Partial { branch: PartialBranch::EntangledBasis } => f.write_str("partial-basis"),
            Regime::General { gamma, delta } => write!(f, "general(gamma={gamma}, delta={delta})"),
        }
    }
}
