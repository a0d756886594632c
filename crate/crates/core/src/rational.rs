//! Exact rationals and centre/radius intervals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"-7"` or `"+3/4"` exactly. Whitespace around the parts is ignored.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::RationalParse(s.to_string());
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.trim_start_matches('+').parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

/// `p/q` in lowest terms, or a bare integer when the denominator is one.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn ceil_i64(x: &Q) -> i64 {
    x.ceil().to_integer().to_i64().expect("ceiling fits in i64")
}

pub fn floor_i64(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().expect("floor fits in i64")
}

pub fn max_q(a: Q, b: Q) -> Q {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_q(a: Q, b: Q) -> Q {
    if a <= b {
        a
    } else {
        b
    }
}

/// Greatest common divisor of two rationals: the positive generator of `aZ + bZ`.
pub fn gcd_q(a: &Q, b: &Q) -> Q {
    let l = a.denom().lcm(b.denom());
    let an = (a * Q::from_integer(l.clone())).to_integer();
    let bn = (b * Q::from_integer(l.clone())).to_integer();
    Q::new(an.gcd(&bn), l)
}

pub fn serialize_q<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

pub fn deserialize_q<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        S(String),
        I(i64),
    }
    match Raw::deserialize(d)? {
        Raw::S(s) => parse_q(&s).map_err(serde::de::Error::custom),
        Raw::I(i) => Ok(qi(i)),
    }
}

/// A closed interval `[center - radius, center + radius]` with exact endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub center: Q,
    pub radius: Q,
}

impl Interval {
    pub fn exact(x: Q) -> Self {
        Interval { center: x, radius: Q::zero() }
    }

    pub fn new(center: Q, radius: Q) -> Self {
        debug_assert!(!radius.is_negative());
        Interval { center, radius }
    }

    pub fn lo(&self) -> Q {
        &self.center - &self.radius
    }

    pub fn hi(&self) -> Q {
        &self.center + &self.radius
    }

    pub fn contains(&self, x: &Q) -> bool {
        (x - &self.center).abs() <= self.radius
    }

    pub fn is_exact(&self) -> bool {
        self.radius.is_zero()
    }

    /// Certified lower bound on `|x|` for every `x` in the interval.
    pub fn abs_lower(&self) -> Q {
        max_q(self.center.abs() - &self.radius, Q::zero())
    }

    pub fn abs_upper(&self) -> Q {
        self.center.abs() + &self.radius
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(&self.center + &other.center, &self.radius + &other.radius)
    }

    pub fn scale(&self, k: &Q) -> Interval {
        Interval::new(&self.center * k, &self.radius * k.abs())
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        self.lo() >= other.lo() && self.hi() <= other.hi()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_q(&self.lo()), fmt_q(&self.hi()))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Interval", 4)?;
        st.serialize_field("center", &fmt_q(&self.center))?;
        st.serialize_field("radius", &fmt_q(&self.radius))?;
        st.serialize_field("lo", &fmt_q(&self.lo()))?;
        st.serialize_field("hi", &fmt_q(&self.hi()))?;
        st.end()
    }
}
