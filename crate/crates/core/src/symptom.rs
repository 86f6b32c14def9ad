use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The nine PHQ-9 symptom categories, in questionnaire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symptom {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
}

impl Symptom {
    pub const COUNT: usize = 9;

    pub const ALL: [Symptom; 9] = [
        Symptom::S1,
        Symptom::S2,
        Symptom::S3,
        Symptom::S4,
        Symptom::S5,
        Symptom::S6,
        Symptom::S7,
        Symptom::S8,
        Symptom::S9,
    ];

    /// Zero-based index; also the seeded topic this symptom owns.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Symptom> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        ["S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9"][self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            Symptom::S1 => "lack of interest",
            Symptom::S2 => "feeling down",
            Symptom::S3 => "sleep disorder",
            Symptom::S4 => "lack of energy",
            Symptom::S5 => "eating disorder",
            Symptom::S6 => "low self-esteem",
            Symptom::S7 => "concentration problems",
            Symptom::S8 => "hyper/lower activity",
            Symptom::S9 => "suicidal thoughts",
        }
    }
}

impl fmt::Display for Symptom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Symptom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .strip_prefix('S')
            .or_else(|| t.strip_prefix('s'))
            .ok_or_else(|| Error::format("symptom code", t))?;
        match digits.parse::<usize>() {
            Ok(n @ 1..=9) => Ok(Symptom::ALL[n - 1]),
            _ => Err(Error::format("symptom code", t)),
        }
    }
}

/// A subset of S1..S9 packed into a bitmask.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(try_from = "String", into = "String")]
pub struct SymptomSet(u16);

impl SymptomSet {
    pub fn empty() -> Self {
        SymptomSet(0)
    }

    pub fn insert(&mut self, s: Symptom) {
        self.0 |= 1 << s.index();
    }

    pub fn contains(&self, s: Symptom) -> bool {
        self.0 & (1 << s.index()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: SymptomSet) -> SymptomSet {
        SymptomSet(self.0 | other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Symptom> + '_ {
        Symptom::ALL.into_iter().filter(|s| self.contains(*s))
    }

    /// `;`-joined codes, e.g. `S1;S3`. Empty set renders as the empty string.
    pub fn to_codes(&self) -> String {
        self.iter().map(Symptom::code).collect::<Vec<_>>().join(";")
    }

    pub fn parse_codes(s: &str) -> Result<Self, Error> {
        let mut set = SymptomSet::empty();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            set.insert(part.parse()?);
        }
        Ok(set)
    }
}

impl TryFrom<String> for SymptomSet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        SymptomSet::parse_codes(&s)
    }
}

impl From<SymptomSet> for String {
    fn from(s: SymptomSet) -> String {
        s.to_codes()
    }
}

impl FromIterator<Symptom> for SymptomSet {
    fn from_iter<I: IntoIterator<Item = Symptom>>(iter: I) -> Self {
        let mut set = SymptomSet::empty();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_roundtrip() {
        let set: SymptomSet = [Symptom::S1, Symptom::S9].into_iter().collect();
        assert_eq!(set.to_codes(), "S1;S9");
        assert_eq!(SymptomSet::parse_codes("S1; S9").unwrap(), set);
        assert!(SymptomSet::parse_codes("").unwrap().is_empty());
        assert!(SymptomSet::parse_codes("S10").is_err());
        assert!("S0".parse::<Symptom>().is_err());
    }
}
