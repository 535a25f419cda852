//! Triangular fuzzy numbers and the seven-level linguistic scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("non-finite value {0} cannot be embedded as a fuzzy number")]
    NonFinite(f64),
    #[error("triangular fuzzy number requires a <= b <= c, got ({a}, {b}, {c})")]
    Unordered { a: f64, b: f64, c: f64 },
    #[error("fuzzy product requires nonnegative operands")]
    NegativeOperand,
    #[error("unknown linguistic level `{0}`")]
    UnknownLevel(String),
}

/// A triangular fuzzy number `(a, b, c)` with `a <= b <= c`.
///
/// Membership rises linearly from `a` to the modal value `b` and falls back to zero at `c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TriangularFuzzyNumber<T> {
    a: T,
    b: T,
    c: T,
}

impl<T: Scalar> TriangularFuzzyNumber<T> {
    pub fn new(a: T, b: T, c: T) -> Result<Self, FuzzyError> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            let bad = [a, b, c].into_iter().find(|v| !v.is_finite()).unwrap();
            return Err(FuzzyError::NonFinite(bad.to_f64().unwrap_or(f64::NAN)));
        }
        if a > b || b > c {
            return Err(FuzzyError::Unordered {
                a: a.to_f64().unwrap_or(f64::NAN),
                b: b.to_f64().unwrap_or(f64::NAN),
                c: c.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { a, b, c })
    }

    /// Builds a number whose ordering is guaranteed by construction.
    pub(crate) fn new_unchecked(a: T, b: T, c: T) -> Self {
        debug_assert!(a <= b && b <= c, "unordered fuzzy number");
        Self { a, b, c }
    }

    /// Degenerate number `(x, x, x)`.
    pub fn crisp(x: T) -> Result<Self, FuzzyError> {
        tfn_from_crisp(x)
    }

    pub fn lower(&self) -> T {
        self.a
    }

    pub fn modal(&self) -> T {
        self.b
    }

    pub fn upper(&self) -> T {
        self.c
    }

    pub fn components(&self) -> [T; 3] {
        [self.a, self.b, self.c]
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b && self.b == self.c
    }

    pub fn is_nonnegative(&self) -> bool {
        self.a >= T::zero()
    }

    /// Multiplies every component by `k >= 0`.
    pub fn scale(&self, k: T) -> Self {
        debug_assert!(k >= T::zero());
        Self::new_unchecked(self.a * k, self.b * k, self.c * k)
    }

    /// Component-wise maximum. The result is a valid fuzzy number because each component
    /// maximum preserves the ordering.
    pub fn max_components(&self, other: &Self) -> Self {
        Self::new_unchecked(self.a.max(other.a), self.b.max(other.b), self.c.max(other.c))
    }

    pub fn min_components(&self, other: &Self) -> Self {
        Self::new_unchecked(self.a.min(other.a), self.b.min(other.b), self.c.min(other.c))
    }

    pub fn cast<U: Scalar>(&self) -> TriangularFuzzyNumber<U> {
        let conv = |v: T| U::from(v).expect("scalar conversion");
        TriangularFuzzyNumber::new_unchecked(conv(self.a), conv(self.b), conv(self.c))
    }
}

impl<T: Scalar> fmt::Display for TriangularFuzzyNumber<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl<T: Scalar + Serialize> Serialize for TriangularFuzzyNumber<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.a, self.b, self.c].serialize(serializer)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for TriangularFuzzyNumber<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [a, b, c] = <[T; 3]>::deserialize(deserializer)?;
        Self::new(a, b, c).map_err(serde::de::Error::custom)
    }
}

/// Seven-level linguistic variable, totally ordered from `VeryLow` to `VeryHigh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LinguisticRank {
    VeryLow,
    Low,
    MoLLow,
    Medium,
    MoLHigh,
    High,
    VeryHigh,
}

impl LinguisticRank {
    pub const ALL: [LinguisticRank; 7] = [
        LinguisticRank::VeryLow,
        LinguisticRank::Low,
        LinguisticRank::MoLLow,
        LinguisticRank::Medium,
        LinguisticRank::MoLHigh,
        LinguisticRank::High,
        LinguisticRank::VeryHigh,
    ];

    /// Zero-based position on the scale.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            LinguisticRank::VeryLow => "VL",
            LinguisticRank::Low => "L",
            LinguisticRank::MoLLow => "ML",
            LinguisticRank::Medium => "M",
            LinguisticRank::MoLHigh => "MH",
            LinguisticRank::High => "H",
            LinguisticRank::VeryHigh => "VH",
        }
    }

    /// `(m, l, r)` membership tuple: modal value with left and right spreads.
    pub fn membership_tuple(self) -> (u8, u8, u8) {
        match self {
            LinguisticRank::VeryLow => (30, 0, 10),
            LinguisticRank::Low => (40, 10, 10),
            LinguisticRank::MoLLow => (50, 10, 10),
            LinguisticRank::Medium => (60, 10, 10),
            LinguisticRank::MoLHigh => (70, 10, 10),
            LinguisticRank::High => (80, 10, 10),
            LinguisticRank::VeryHigh => (90, 10, 0),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            LinguisticRank::VeryLow => 1,
            LinguisticRank::Low => 3,
            LinguisticRank::MoLLow => 4,
            LinguisticRank::Medium => 5,
            LinguisticRank::MoLHigh => 6,
            LinguisticRank::High => 7,
            LinguisticRank::VeryHigh => 9,
        }
    }
}

impl fmt::Display for LinguisticRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for LinguisticRank {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String =
            s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let rank = match norm.as_str() {
            "vl" | "verylow" => LinguisticRank::VeryLow,
            "l" | "low" => LinguisticRank::Low,
            "ml" | "mollow" | "moreorlesslow" => LinguisticRank::MoLLow,
            "m" | "medium" => LinguisticRank::Medium,
            "mh" | "molhigh" | "moreorlesshigh" => LinguisticRank::MoLHigh,
            "h" | "high" => LinguisticRank::High,
            "vh" | "veryhigh" => LinguisticRank::VeryHigh,
            _ => return Err(FuzzyError::UnknownLevel(s.to_string())),
        };
        Ok(rank)
    }
}

impl TryFrom<String> for LinguisticRank {
    type Error = FuzzyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<LinguisticRank> for String {
    fn from(value: LinguisticRank) -> Self {
        value.abbreviation().to_string()
    }
}

/// Fuzzy membership of a linguistic level on the 0–100 axis: `(m, l, r)` decodes to
/// `(m - l, m, m + r)`.
pub fn tfn_from_linguistic<T: Scalar>(rank: LinguisticRank) -> TriangularFuzzyNumber<T> {
    let (m, l, r) = rank.membership_tuple();
    let (m, l, r) = (f64::from(m), f64::from(l), f64::from(r));
    TriangularFuzzyNumber::new_unchecked(T::lit(m - l), T::lit(m), T::lit(m + r))
}

/// Crisp number of a linguistic level (1, 3, 4, 5, 6, 7, 9).
pub fn crisp_from_linguistic<T: Scalar>(rank: LinguisticRank) -> T {
    T::lit(f64::from(rank.number()))
}

pub fn tfn_from_crisp<T: Scalar>(x: T) -> Result<TriangularFuzzyNumber<T>, FuzzyError> {
    if !x.is_finite() {
        return Err(FuzzyError::NonFinite(x.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(TriangularFuzzyNumber::new_unchecked(x, x, x))
}

/// Component-wise product of two nonnegative triangular numbers.
pub fn tfn_multiply<T: Scalar>(
    x: &TriangularFuzzyNumber<T>,
    y: &TriangularFuzzyNumber<T>,
) -> Result<TriangularFuzzyNumber<T>, FuzzyError> {
    if !x.is_nonnegative() || !y.is_nonnegative() {
        return Err(FuzzyError::NegativeOperand);
    }
    Ok(TriangularFuzzyNumber::new_unchecked(x.a * y.a, x.b * y.b, x.c * y.c))
}

/// Vertex distance: Euclidean distance between the two vertex triples.
pub fn vertex_distance<T: Scalar>(x: &TriangularFuzzyNumber<T>, y: &TriangularFuzzyNumber<T>) -> T {
    let da = x.a - y.a;
    let db = x.b - y.b;
    let dc = x.c - y.c;
    (da * da + db * db + dc * dc).sqrt()
}
