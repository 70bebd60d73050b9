use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number or `+∞`.
///
/// Young functions take values in `[0, ∞]`; the conjugate of a linear
/// function is genuinely infinite past its slope, so infinity is a variant
/// here rather than an IEEE sentinel. Addition and ordering treat `+∞` as
/// absorbing, `x · ∞ = ∞` for `x > 0` and `0 · ∞ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE `+inf` (overflow) to [`ExtReal::Infinity`].
    pub fn from_f64(v: f64) -> ExtReal {
        if v == f64::INFINITY {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinity => None,
        }
    }

    /// Lossy view for numerical kernels: `Infinity` becomes `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    /// Multiplication by a nonnegative scalar with the `0 · ∞ = 0` convention.
    pub fn scale(self, factor: f64) -> ExtReal {
        debug_assert!(factor >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * factor),
            ExtReal::Infinity if factor == 0.0 => ExtReal::ZERO,
            ExtReal::Infinity => ExtReal::Infinity,
        }
    }

    /// `self - rhs` for finite `rhs`.
    pub fn minus(self, rhs: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v - rhs),
            ExtReal::Infinity => ExtReal::Infinity,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinity,
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::Finite(rhs)
    }
}

impl Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.fold(ExtReal::ZERO, |acc, v| acc + v)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &ExtReal) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Infinity, ExtReal::Infinity) => Some(Ordering::Equal),
            (ExtReal::Infinity, _) => Some(Ordering::Greater),
            (_, ExtReal::Infinity) => Some(Ordering::Less),
        }
    }
}

impl PartialEq<f64> for ExtReal {
    fn eq(&self, other: &f64) -> bool {
        matches!(self, ExtReal::Finite(v) if v == other)
    }
}

impl PartialOrd<f64> for ExtReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.partial_cmp(&ExtReal::Finite(*other))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Text(s) if s == "inf" => Ok(ExtReal::Infinity),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_is_absorbing() {
        let inf = ExtReal::Infinity;
        assert_eq!(inf + 3.0, ExtReal::Infinity);
        assert_eq!(ExtReal::Finite(2.0) + inf, ExtReal::Infinity);
        assert!(inf > ExtReal::Finite(1e308));
        assert_eq!(inf.scale(0.0), ExtReal::ZERO);
        assert_eq!(inf.scale(0.5), ExtReal::Infinity);
        let s: ExtReal = [1.0, 2.0].iter().map(|&v| ExtReal::Finite(v)).sum();
        assert_eq!(s, 3.0);
    }

    #[test]
    fn serde_uses_inf_string() {
        let v = vec![ExtReal::Finite(1.5), ExtReal::Infinity];
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "[1.5,\"inf\"]");
        let back: Vec<ExtReal> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
