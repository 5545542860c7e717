//! Seeded payoff matrices with the symmetry constraints the solvers need.
//!
//! Constrained rows are A and B (A and C for plain NOT-duality); the
//! remaining row is drawn freely so that payoff ratios still identify every
//! profile wherever the constraint allows it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::{prof, PayoffMatrix, Player, Profile};
use crate::recovery::validate_ratio_distinctness;
use crate::rng::SimRng;

// Serialized through `name` because kebab-casing splits "CaseII" into "case-i-i".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MatrixGenerator {
    Random,
    CaseI,
    CaseII,
    CaseIII,
    /// Case III rows that are constant, so the disclosure says nothing.
    CaseIIITrivial,
    NotDual,
    PartialSymI,
    PartialSymII,
    PartialSymIII,
    AllEqual,
}

impl MatrixGenerator {
    pub const ALL: [MatrixGenerator; 10] = [
        MatrixGenerator::Random,
        MatrixGenerator::CaseI,
        MatrixGenerator::CaseII,
        MatrixGenerator::CaseIII,
        MatrixGenerator::CaseIIITrivial,
        MatrixGenerator::NotDual,
        MatrixGenerator::PartialSymI,
        MatrixGenerator::PartialSymII,
        MatrixGenerator::PartialSymIII,
        MatrixGenerator::AllEqual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixGenerator::Random => "random",
            MatrixGenerator::CaseI => "case-i",
            MatrixGenerator::CaseII => "case-ii",
            MatrixGenerator::CaseIII => "case-iii",
            MatrixGenerator::CaseIIITrivial => "case-iii-trivial",
            MatrixGenerator::NotDual => "not-dual",
            MatrixGenerator::PartialSymI => "partial-sym-i",
            MatrixGenerator::PartialSymII => "partial-sym-ii",
            MatrixGenerator::PartialSymIII => "partial-sym-iii",
            MatrixGenerator::AllEqual => "all-equal",
        }
    }

    /// Rows the constraint is imposed on.
    pub fn constrained_rows(self) -> &'static [Player] {
        match self {
            MatrixGenerator::Random => &[],
            MatrixGenerator::NotDual => &[Player::Alice, Player::Charlie],
            MatrixGenerator::AllEqual => &Player::ALL,
            _ => &[Player::Alice, Player::Bob],
        }
    }

    /// Whether generated matrices identify every profile by its payoff ratio.
    pub fn ratio_distinct(self) -> bool {
        self != MatrixGenerator::AllEqual
    }

    /// Deterministic matrix for `seed`.
    pub fn generate(self, seed: u64) -> PayoffMatrix {
        let mut rng = SimRng::stream(seed, 0x6d61_7472);
        loop {
            let m = self.draw(&mut rng);
            if !self.ratio_distinct() || validate_ratio_distinctness(&m).distinct {
                return m;
            }
        }
    }

    fn draw(self, rng: &mut SimRng) -> PayoffMatrix {
        // Two decimals keep generated configs readable.
        let mut value = || (rng.uniform_in(1.0, 9.0) * 100.0).round() / 100.0;
        let mut rows = [[0.0; 8]; 3];
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                *v = value();
            }
        }
        for &k in self.constrained_rows() {
            let row = &mut rows[k.index()];
            let copy = |row: &mut [f64; 8], from: &str, to: &[&str]| {
                for t in to {
                    row[prof(t).index()] = row[prof(from).index()];
                }
            };
            match self {
                MatrixGenerator::Random => {}
                MatrixGenerator::CaseI => {
                    copy(row, "001", &["101"]);
                    copy(row, "011", &["111"]);
                    copy(row, "010", &["110"]);
                }
                MatrixGenerator::CaseII => copy(row, "100", &["101", "110", "111"]),
                MatrixGenerator::CaseIII => copy(row, "001", &["010", "011", "100", "101", "110", "111"]),
                MatrixGenerator::CaseIIITrivial | MatrixGenerator::PartialSymIII | MatrixGenerator::AllEqual => {
                    copy(row, "000", &["001", "010", "011", "100", "101", "110", "111"])
                }
                MatrixGenerator::NotDual => {
                    for abc in Profile::ALL.into_iter().filter(|p| p.bit(Player::Alice) == 1) {
                        row[abc.index()] = row[abc.complement().index()];
                    }
                }
                MatrixGenerator::PartialSymI => {
                    copy(row, "000", &["001", "110", "111"]);
                    copy(row, "100", &["101", "011", "010"]);
                }
                MatrixGenerator::PartialSymII => {
                    copy(row, "000", &["100", "011", "111"]);
                    copy(row, "001", &["101", "110", "010"]);
                }
            }
        }
        if self == MatrixGenerator::AllEqual {
            rows = [[1.0; 8]; 3];
        }
        PayoffMatrix::new(rows).expect("finite entries")
    }
}

impl fmt::Display for MatrixGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixGenerator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MatrixGenerator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = MatrixGenerator::ALL.iter().map(|g| g.name()).collect();
                format!("unknown generator {s:?}; expected one of {}", names.join(", "))
            })
    }
}

impl From<MatrixGenerator> for String {
    fn from(g: MatrixGenerator) -> String {
        g.name().to_string()
    }
}

impl TryFrom<String> for MatrixGenerator {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::{classify_symmetry_case, CaseFamily, SymmetryCase};

    #[test]
    fn generators_hit_their_case() {
        let expect = [
            (MatrixGenerator::CaseI, CaseFamily::NonEntangled, SymmetryCase::CaseI),
            (MatrixGenerator::CaseII, CaseFamily::NonEntangled, SymmetryCase::CaseII),
            (MatrixGenerator::CaseIII, CaseFamily::NonEntangled, SymmetryCase::CaseIII),
            (MatrixGenerator::PartialSymI, CaseFamily::PartialDual, SymmetryCase::PartialSymI),
            (MatrixGenerator::PartialSymII, CaseFamily::PartialDual, SymmetryCase::PartialSymII),
            (MatrixGenerator::PartialSymIII, CaseFamily::PartialDual, SymmetryCase::PartialSymIII),
            (MatrixGenerator::Random, CaseFamily::NonEntangled, SymmetryCase::None),
        ];
        for seed in 0..20 {
            for (g, family, case) in expect {
                let c = classify_symmetry_case(&g.generate(seed), family);
                assert_eq!(c.case, case, "{g} seed {seed}");
                if case != SymmetryCase::None {
                    assert!(c.two_index, "{g} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn not_dual_rows() {
        let m = MatrixGenerator::NotDual.generate(3);
        assert!(m.is_not_dual_for(Player::Alice, 0.0));
        assert!(m.is_not_dual_for(Player::Charlie, 0.0));
        assert!(!m.is_not_dual_for(Player::Bob, 0.0));
    }

    #[test]
    fn names_round_trip_and_seeds_are_stable() {
        for g in MatrixGenerator::ALL {
            assert_eq!(g.name().parse::<MatrixGenerator>().unwrap(), g);
            assert_eq!(g.generate(11), g.generate(11));
        }
        assert!("case-iv".parse::<MatrixGenerator>().is_err());
    }
}
