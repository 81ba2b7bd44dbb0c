use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, FPM};

/// Vertical direction commanded by an advisory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Up,
    Down,
}

impl Sense {
    pub fn opposite(self) -> Sense {
        match self {
            Sense::Up => Sense::Down,
            Sense::Down => Sense::Up,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sense::Up => "up",
            Sense::Down => "down",
        }
    }
}

/// Closed vertical-rate interval `[lo, hi]` in ft/s; either edge may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBand {
    pub lo: f64,
    pub hi: f64,
}

impl RateBand {
    pub fn at_least(lo: f64) -> Self {
        Self { lo, hi: f64::INFINITY }
    }

    pub fn at_most(hi: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi }
    }

    pub fn exactly(rate: f64) -> Self {
        Self { lo: rate, hi: rate }
    }

    pub fn contains(&self, rate: f64) -> bool {
        rate >= self.lo && rate <= self.hi
    }

    pub fn clamp(&self, rate: f64) -> f64 {
        rate.max(self.lo).min(self.hi)
    }

    /// Mirror image under negation of all vertical quantities.
    pub fn mirrored(&self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }
}

/// Vertical resolution advisories.
///
/// The declaration order is the canonical priority order used to break ties
/// in action selection: COC first, weaker before stronger, down before up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Advisory {
    #[serde(rename = "COC")]
    Coc,
    #[serde(rename = "DNC")]
    Dnc,
    #[serde(rename = "DND")]
    Dnd,
    #[serde(rename = "DES1500")]
    Des1500,
    #[serde(rename = "CL1500")]
    Cl1500,
    #[serde(rename = "DES2500")]
    Des2500,
    #[serde(rename = "CL2500")]
    Cl2500,
}

impl Advisory {
    /// Every advisory in canonical priority order.
    pub const ALL: [Advisory; 7] = [
        Advisory::Coc,
        Advisory::Dnc,
        Advisory::Dnd,
        Advisory::Des1500,
        Advisory::Cl1500,
        Advisory::Des2500,
        Advisory::Cl2500,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Advisory::Coc => "COC",
            Advisory::Dnc => "DNC",
            Advisory::Dnd => "DND",
            Advisory::Des1500 => "DES1500",
            Advisory::Cl1500 => "CL1500",
            Advisory::Des2500 => "DES2500",
            Advisory::Cl2500 => "CL2500",
        }
    }

    pub fn sense(self) -> Option<Sense> {
        match self {
            Advisory::Coc => None,
            Advisory::Dnd | Advisory::Cl1500 | Advisory::Cl2500 => Some(Sense::Up),
            Advisory::Dnc | Advisory::Des1500 | Advisory::Des2500 => Some(Sense::Down),
        }
    }

    /// 0 for COC, then 1 (DNC/DND) < 2 (1500) < 3 (2500) within a sense.
    pub fn strength(self) -> u8 {
        match self {
            Advisory::Coc => 0,
            Advisory::Dnc | Advisory::Dnd => 1,
            Advisory::Des1500 | Advisory::Cl1500 => 2,
            Advisory::Des2500 | Advisory::Cl2500 => 3,
        }
    }

    pub fn is_coc(self) -> bool {
        self == Advisory::Coc
    }

    /// Target rate band in ft/min, the unit advisories are expressed in.
    pub fn band_fpm(self) -> Option<(f64, f64)> {
        let inf = f64::INFINITY;
        match self {
            Advisory::Coc => None,
            Advisory::Dnc => Some((-inf, 0.0)),
            Advisory::Dnd => Some((0.0, inf)),
            Advisory::Des1500 => Some((-inf, -1500.0)),
            Advisory::Cl1500 => Some((1500.0, inf)),
            Advisory::Des2500 => Some((-inf, -2500.0)),
            Advisory::Cl2500 => Some((2500.0, inf)),
        }
    }

    /// Target rate band in ft/s.
    pub fn band(self) -> Option<RateBand> {
        self.band_fpm().map(|(lo, hi)| RateBand { lo: lo * FPM, hi: hi * FPM })
    }

    /// The advisory of the other sense with the same strength.
    pub fn mirrored(self) -> Advisory {
        match self {
            Advisory::Coc => Advisory::Coc,
            Advisory::Dnc => Advisory::Dnd,
            Advisory::Dnd => Advisory::Dnc,
            Advisory::Des1500 => Advisory::Cl1500,
            Advisory::Cl1500 => Advisory::Des1500,
            Advisory::Des2500 => Advisory::Cl2500,
            Advisory::Cl2500 => Advisory::Des2500,
        }
    }

    /// Advisories of one sense, weakest first.
    pub fn of_sense(sense: Sense) -> [Advisory; 3] {
        match sense {
            Sense::Down => [Advisory::Dnc, Advisory::Des1500, Advisory::Des2500],
            Sense::Up => [Advisory::Dnd, Advisory::Cl1500, Advisory::Cl2500],
        }
    }

    /// True when `self` is strictly stronger than `prev` in the same sense.
    pub fn strengthens(self, prev: Advisory) -> bool {
        match (self.sense(), prev.sense()) {
            (Some(a), Some(b)) => a == b && self.strength() > prev.strength(),
            _ => false,
        }
    }

    /// True when `self` and `prev` are both advisories of opposite senses.
    pub fn reverses(self, prev: Advisory) -> bool {
        match (self.sense(), prev.sense()) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        }
    }
}

impl fmt::Display for Advisory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Advisory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Advisory::ALL
            .iter()
            .copied()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Contract(format!("unknown advisory `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_coc_and_senses() {
        assert_eq!(Advisory::ALL.iter().filter(|a| a.is_coc()).count(), 1);
        for a in [Advisory::Dnd, Advisory::Cl1500, Advisory::Cl2500] {
            assert_eq!(a.sense(), Some(Sense::Up));
        }
        for a in [Advisory::Dnc, Advisory::Des1500, Advisory::Des2500] {
            assert_eq!(a.sense(), Some(Sense::Down));
        }
    }

    #[test]
    fn strength_order_within_sense() {
        for sense in [Sense::Up, Sense::Down] {
            let s = Advisory::of_sense(sense);
            assert!(s[0].strength() < s[1].strength());
            assert!(s[1].strength() < s[2].strength());
        }
        assert!(Advisory::Des2500.strengthens(Advisory::Dnc));
        assert!(!Advisory::Cl2500.strengthens(Advisory::Dnc));
        assert!(Advisory::Des1500.reverses(Advisory::Cl1500));
        assert!(!Advisory::Des1500.reverses(Advisory::Coc));
    }

    #[test]
    fn des1500_means_descend_at_least_1500_fpm() {
        let band = Advisory::Des1500.band().unwrap();
        assert_eq!(band.hi, -25.0);
        assert!(band.contains(-30.0));
        assert!(!band.contains(-20.0));
    }

    #[test]
    fn names_round_trip() {
        for a in Advisory::ALL {
            assert_eq!(a.name().parse::<Advisory>().unwrap(), a);
            assert_eq!(a.mirrored().mirrored(), a);
        }
        assert!("CL9000".parse::<Advisory>().is_err());
    }
}
