//! Players, strategy profiles and the classical payoff table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    Alice,
    Bob,
    Charlie,
}

impl Player {
    pub const ALL: [Player; 3] = [Player::Alice, Player::Bob, Player::Charlie];

    pub fn index(self) -> usize {
        match self {
            Player::Alice => 0,
            Player::Bob => 1,
            Player::Charlie => 2,
        }
    }

    pub fn from_index(i: usize) -> Player {
        Player::ALL[i]
    }

    pub fn letter(self) -> char {
        match self {
            Player::Alice => 'A',
            Player::Bob => 'B',
            Player::Charlie => 'C',
        }
    }

    /// The other two players, in A, B, C order.
    pub fn opponents(self) -> (Player, Player) {
        match self {
            Player::Alice => (Player::Bob, Player::Charlie),
            Player::Bob => (Player::Alice, Player::Charlie),
            Player::Charlie => (Player::Alice, Player::Bob),
        }
    }

    /// Bit position of this player's qubit inside a profile index.
    fn shift(self) -> u8 {
        2 - self.index() as u8
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Player::Alice => "Alice",
            Player::Bob => "Bob",
            Player::Charlie => "Charlie",
        };
        f.write_str(name)
    }
}

impl FromStr for Player {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "alice" => Ok(Player::Alice),
            "b" | "bob" => Ok(Player::Bob),
            "c" | "charlie" => Ok(Player::Charlie),
            _ => Err(format!("unknown player `{s}`")),
        }
    }
}

/// A pure strategy profile `abc`, bit 1 meaning the flipped move.
///
/// The integer value is `4a + 2b + c`; it doubles as the computational basis
/// index of the three-qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Profile(u8);

impl Profile {
    pub const ALL: [Profile; 8] = [
        Profile(0),
        Profile(1),
        Profile(2),
        Profile(3),
        Profile(4),
        Profile(5),
        Profile(6),
        Profile(7),
    ];

    pub fn new(index: usize) -> Option<Profile> {
        (index < 8).then_some(Profile(index as u8))
    }

    pub const fn from_bits(a: u8, b: u8, c: u8) -> Profile {
        Profile(((a & 1) << 2) | ((b & 1) << 1) | (c & 1))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bit(self, p: Player) -> u8 {
        (self.0 >> p.shift()) & 1
    }

    pub fn with_bit(self, p: Player, bit: u8) -> Profile {
        let mask = 1 << p.shift();
        Profile((self.0 & !mask) | ((bit & 1) << p.shift()))
    }

    /// Bitwise NOT of all three moves.
    pub fn complement(self) -> Profile {
        Profile(7 - self.0)
    }

    /// `(-1)^(a+b+c)`.
    pub fn parity_sign(self) -> f64 {
        if self.0.count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn label(self) -> String {
        format!("{:03b}", self.0)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 3 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(format!("profile label must be three binary digits, got `{s}`"));
        }
        Ok(Profile(u8::from_str_radix(s, 2).expect("validated binary")))
    }
}

impl TryFrom<String> for Profile {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        p.label()
    }
}

/// Shorthand for profile literals: `prof("011")`.
pub fn prof(label: &str) -> Profile {
    label.parse().expect("valid profile label")
}

/// Classical payoff table: one real per (player, profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 8]; 3]", into = "[[f64; 8]; 3]")]
pub struct PayoffMatrix {
    entries: [[f64; 8]; 3],
}

impl PayoffMatrix {
    pub fn new(entries: [[f64; 8]; 3]) -> Result<Self, DomainError> {
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DomainError::NonFinite("payoff entry"));
        }
        Ok(PayoffMatrix { entries })
    }

    pub fn from_fn(mut f: impl FnMut(Player, Profile) -> f64) -> Result<Self, DomainError> {
        let mut entries = [[0.0; 8]; 3];
        for k in Player::ALL {
            for abc in Profile::ALL {
                entries[k.index()][abc.index()] = f(k, abc);
            }
        }
        PayoffMatrix::new(entries)
    }

    pub fn uniform(v: f64) -> Result<Self, DomainError> {
        PayoffMatrix::new([[v; 8]; 3])
    }

    pub fn get(&self, k: Player, abc: Profile) -> f64 {
        self.entries[k.index()][abc.index()]
    }

    pub fn set(&mut self, k: Player, abc: Profile, v: f64) -> Result<(), DomainError> {
        if !v.is_finite() {
            return Err(DomainError::NonFinite("payoff entry"));
        }
        self.entries[k.index()][abc.index()] = v;
        Ok(())
    }

    pub fn row(&self, k: Player) -> &[f64; 8] {
        &self.entries[k.index()]
    }

    pub fn entries(&self) -> &[[f64; 8]; 3] {
        &self.entries
    }

    /// The payoff triple of one profile.
    pub fn triple(&self, abc: Profile) -> [f64; 3] {
        Player::ALL.map(|k| self.get(k, abc))
    }

    /// `self + lambda * other`, entrywise.
    pub fn add_scaled(&self, other: &PayoffMatrix, lambda: f64) -> Result<PayoffMatrix, DomainError> {
        PayoffMatrix::from_fn(|k, abc| self.get(k, abc) + lambda * other.get(k, abc))
    }

    /// Relabel profiles: entry `abc` of the result is entry `f(abc)` of `self`.
    pub fn relabel(&self, f: impl Fn(Profile) -> Profile) -> PayoffMatrix {
        PayoffMatrix::from_fn(|k, abc| self.get(k, f(abc))).expect("entries already finite")
    }

    /// Whether player `k`'s row is invariant under complementing all moves.
    pub fn is_not_dual_for(&self, k: Player, tol: f64) -> bool {
        Profile::ALL
            .iter()
            .all(|&abc| (self.get(k, abc) - self.get(k, abc.complement())).abs() <= tol)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<[[f64; 8]; 3]> for PayoffMatrix {
    type Error = DomainError;

    fn try_from(entries: [[f64; 8]; 3]) -> Result<Self, Self::Error> {
        PayoffMatrix::new(entries)
    }
}

impl From<PayoffMatrix> for [[f64; 8]; 3] {
    fn from(m: PayoffMatrix) -> Self {
        m.entries
    }
}
