//! Exact simulator for a three-player quantum-game key distribution protocol.
//!
//! Three qubits in a generalized GHZ state are handed to Alice, Bob and
//! Charlie, who each apply a parameterized unitary. Alice measures in an
//! entangled basis whose projectors carry the payoff table, discloses part of
//! what she learns, and the other two invert the payoff algebra to recover
//! every strategy. The recovered values feed a shared key.

pub mod adversary;
pub mod error;
pub mod forms;
pub mod game;
pub mod generators;
pub mod ledger;
pub mod printed;
pub mod protocol;
pub mod recovery;
pub mod regime;
pub mod rng;
pub mod state;
pub mod tolerance;

pub use error::DomainError;
pub use game::{prof, PayoffMatrix, Player, Profile};
pub use regime::Regime;
pub use rng::SimRng;
pub use state::{EntanglementConfig, Payoffs, StrategyParams, StrategyTriple};
