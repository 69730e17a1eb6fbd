//! Extended nonnegative-or-real values with a tagged infinity.
//!
//! Singular kernels have `G(0) = +inf` and the additional cost of a strategy
//! may be `+inf` (liquidation violated, block trades under a rate cost). These
//! are carried as [`Extended::PosInfinity`] and never as large floats.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }

    /// The finite value, or an error naming `what` was infinite.
    pub fn finite(self, what: &str) -> Result<f64> {
        match self {
            Extended::Finite(v) => Ok(v),
            Extended::PosInfinity => Err(Error::InfiniteValue(what.to_string())),
        }
    }

    pub fn as_option(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInfinity => None,
        }
    }

    /// Scale by a nonnegative weight. `0 * inf` is taken as `+inf` because a
    /// weight of zero never reaches here for probabilities (all are positive).
    pub fn scale(self, w: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(w * v),
            Extended::PosInfinity => Extended::PosInfinity,
        }
    }
}

impl Add for Extended {
    type Output = Extended;

    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::PosInfinity,
        }
    }
}

impl Add<f64> for Extended {
    type Output = Extended;

    fn add(self, rhs: f64) -> Extended {
        self + Extended::Finite(rhs)
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        Extended::Finite(v)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PosInfinity => f.write_str("+inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::PosInfinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Extended::Finite(v)),
            Raw::Str(s) if s == "+inf" => Ok(Extended::PosInfinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"+inf\", got {s:?}"
            ))),
        }
    }
}
