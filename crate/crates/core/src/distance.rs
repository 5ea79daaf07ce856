//! Distances and diameters that may be infinite.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A graph distance or diameter; `Infinite` for disconnected pairs.
///
/// Ordering puts every finite value below `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    pub const ZERO: Distance = Distance::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    /// Saturating addition; anything plus infinity is infinity.
    pub fn plus(self, k: u32) -> Distance {
        match self {
            Distance::Finite(d) => Distance::Finite(d.saturating_add(k)),
            Distance::Infinite => Distance::Infinite,
        }
    }
}

impl From<u32> for Distance {
    fn from(d: u32) -> Self {
        Distance::Finite(d)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "+inf" => Ok(Distance::Infinite),
            t => t
                .parse::<u32>()
                .map(Distance::Finite)
                .map_err(|e| format!("bad distance {t:?}: {e}")),
        }
    }
}

// Finite values serialize as plain integers, infinity as the string "inf".
impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(d) => serializer.serialize_u32(*d),
            Distance::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(d) => Ok(Distance::Finite(d)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(Distance::Finite(u32::MAX) < Distance::Infinite);
        assert!(Distance::Finite(2) < Distance::Finite(3));
        assert_eq!(
            [Distance::Finite(4), Distance::Infinite, Distance::Finite(1)]
                .into_iter()
                .max(),
            Some(Distance::Infinite)
        );
    }

    #[test]
    fn json_round_trip() {
        let v = vec![Distance::Finite(3), Distance::Infinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[3,"inf"]"#);
        let back: Vec<Distance> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
