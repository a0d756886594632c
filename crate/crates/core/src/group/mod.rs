//! Finitely generated groups behind a uniform oracle.
//!
//! Every concrete group implements [`GroupOracle`] over the shared
//! [`Element`] representation, so word metrics, balls and powers are written
//! once. Groups are selected at runtime by name through [`crate::registry`].

mod bfs;
mod free;
mod heisenberg;
mod lattice;

pub use bfs::{word_ball, word_distance, Ball, BallIndex, WordMetric, DEFAULT_BFS_BUDGET};
pub use free::{FreeGroup, FreeWord};
pub use heisenberg::{Heisenberg, HeisenbergElement};
pub use lattice::{Lattice, LatticeVector};

use std::fmt;

use crate::error::{Error, Result};

/// A group element in normal form. Equality of values is equality in the group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Word(FreeWord),
    Lattice(LatticeVector),
    Heisenberg(HeisenbergElement),
    /// `(g, p)` in the coordinates of a central extension `G x Z`.
    Extension(Box<Element>, i64),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Word(w) => write!(f, "{w}"),
            Element::Lattice(v) => write!(f, "{v}"),
            Element::Heisenberg(h) => write!(f, "{h}"),
            Element::Extension(g, p) => write!(f, "({g}; {p})"),
        }
    }
}

pub trait GroupOracle: Send + Sync {
    fn name(&self) -> String;
    fn identity(&self) -> Element;
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element>;
    fn invert(&self, a: &Element) -> Result<Element>;
    /// Symmetric generating set used for the word metric.
    fn generators(&self) -> &[Element];
    /// Injective byte encoding of the normal form.
    fn canonical_key(&self, a: &Element) -> Result<Vec<u8>>;
    fn parse_element(&self, s: &str) -> Result<Element>;

    fn is_identity(&self, a: &Element) -> bool {
        *a == self.identity()
    }

    /// Coordinates for groups that are canonically `Z^n`.
    fn abelian_coordinates(&self, _a: &Element) -> Option<Vec<i64>> {
        None
    }

    fn from_abelian_coordinates(&self, _c: &[i64]) -> Option<Element> {
        None
    }

    fn format_element(&self, a: &Element) -> String {
        a.to_string()
    }
}

/// `g^n` by repeated squaring; negative exponents invert first.
pub fn power(oracle: &dyn GroupOracle, g: &Element, n: i64) -> Result<Element> {
    let mut base = if n < 0 { oracle.invert(g)? } else { g.clone() };
    let mut e = n.unsigned_abs();
    let mut acc = oracle.identity();
    while e > 0 {
        if e & 1 == 1 {
            acc = oracle.multiply(&acc, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = oracle.multiply(&base, &base)?;
        }
    }
    Ok(acc)
}

pub fn commutator(oracle: &dyn GroupOracle, g: &Element, h: &Element) -> Result<Element> {
    let gh = oracle.multiply(g, h)?;
    let gi = oracle.invert(g)?;
    let hi = oracle.invert(h)?;
    oracle.multiply(&oracle.multiply(&gh, &gi)?, &hi)
}

pub fn product(oracle: &dyn GroupOracle, xs: &[Element]) -> Result<Element> {
    xs.iter().try_fold(oracle.identity(), |acc, x| oracle.multiply(&acc, x))
}

/// Splits `"a^3 t^-2 b"` / `"x^1y^0z^5"` / `"aB"` into `(name, exponent)` pairs.
/// A name is one letter; `^` introduces a signed integer exponent and `⁻¹`
/// is accepted as `^-1`. `"1"` and the empty string are the identity.
pub(crate) fn parse_power_word(s: &str) -> Result<Vec<(char, i64)>> {
    let bad = |why: &str| Error::ElementParse(s.to_string(), why.to_string());
    if s.trim() == "1" {
        return Ok(Vec::new());
    }
    let chars: Vec<char> = s.replace("⁻¹", "^-1").chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '*' || c == '·' {
            i += 1;
            continue;
        }
        if !c.is_alphabetic() {
            return Err(bad(&format!("unexpected {c:?}")));
        }
        i += 1;
        let mut exp = 1i64;
        if i < chars.len() && chars[i] == '^' {
            i += 1;
            let start = i;
            if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            exp = lit.trim_start_matches('+').parse().map_err(|_| bad("bad exponent"))?;
        }
        out.push((c, exp));
    }
    Ok(out)
}

/// A product of `len` generators drawn uniformly, `len` uniform in `0..=max_len`.
pub fn random_element<R: rand::Rng>(oracle: &dyn GroupOracle, rng: &mut R, max_len: usize) -> Result<Element> {
    let gens = oracle.generators();
    let len = rng.gen_range(0..=max_len);
    (0..len).try_fold(oracle.identity(), |acc, _| oracle.multiply(&acc, &gens[rng.gen_range(0..gens.len())]))
}

pub(crate) fn key_i64s(tag: u8, xs: &[i64]) -> Vec<u8> {
    let mut k = Vec::with_capacity(1 + 8 * xs.len());
    k.push(tag);
    for x in xs {
        k.extend_from_slice(&x.to_le_bytes());
    }
    k
}
