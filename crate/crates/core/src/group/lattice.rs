use std::fmt;

use super::{key_i64s, parse_power_word, Element, GroupOracle};
use crate::error::{Error, Result};

/// An element of `Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(pub Vec<i64>);

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `Z^n` with the standard generators. In rank one and two the generators are
/// named `a` and `a, t`; higher ranks use `a, b, c, ...`.
pub struct Lattice {
    rank: usize,
    gens: Vec<Element>,
}

impl Lattice {
    pub fn new(rank: usize) -> Self {
        assert!((1..=8).contains(&rank), "lattice rank must be in 1..=8");
        let gens = (0..rank)
            .flat_map(|i| {
                [1i64, -1].map(move |s| {
                    let mut v = vec![0; rank];
                    v[i] = s;
                    Element::Lattice(LatticeVector(v))
                })
            })
            .collect();
        Lattice { rank, gens }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vector(&self, coords: &[i64]) -> Element {
        assert_eq!(coords.len(), self.rank);
        Element::Lattice(LatticeVector(coords.to_vec()))
    }

    fn names(&self) -> Vec<char> {
        match self.rank {
            1 => vec!['a'],
            2 => vec!['a', 't'],
            n => "abcdefgh".chars().take(n).collect(),
        }
    }

    fn coords<'a>(&self, a: &'a Element) -> Result<&'a [i64]> {
        match a {
            Element::Lattice(v) if v.0.len() == self.rank => Ok(&v.0),
            _ => Err(Error::ForeignElement(self.name())),
        }
    }
}

impl GroupOracle for Lattice {
    fn name(&self) -> String {
        format!("lattice:{}", self.rank)
    }

    fn identity(&self) -> Element {
        Element::Lattice(LatticeVector(vec![0; self.rank]))
    }

    fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        let (x, y) = (self.coords(a)?, self.coords(b)?);
        Ok(Element::Lattice(LatticeVector(x.iter().zip(y).map(|(u, v)| u + v).collect())))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        Ok(Element::Lattice(LatticeVector(self.coords(a)?.iter().map(|u| -u).collect())))
    }

    fn generators(&self) -> &[Element] {
        &self.gens
    }

    fn canonical_key(&self, a: &Element) -> Result<Vec<u8>> {
        Ok(key_i64s(b'Z', self.coords(a)?))
    }

    /// Accepts `"(3,-2)"` or a power word such as `"a^3 t^-2"`.
    fn parse_element(&self, s: &str) -> Result<Element> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let v = inner
                .split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::ElementParse(s.into(), e.to_string()))?;
            if v.len() != self.rank {
                return Err(Error::ElementParse(s.into(), format!("expected {} coordinates", self.rank)));
            }
            return Ok(Element::Lattice(LatticeVector(v)));
        }
        let names = self.names();
        let mut v = vec![0i64; self.rank];
        for (c, e) in parse_power_word(t)? {
            let i = names
                .iter()
                .position(|&n| n == c)
                .ok_or_else(|| Error::ElementParse(s.into(), format!("unknown generator {c}")))?;
            v[i] += e;
        }
        Ok(Element::Lattice(LatticeVector(v)))
    }

    fn abelian_coordinates(&self, a: &Element) -> Option<Vec<i64>> {
        self.coords(a).ok().map(<[i64]>::to_vec)
    }

    fn from_abelian_coordinates(&self, c: &[i64]) -> Option<Element> {
        (c.len() == self.rank).then(|| Element::Lattice(LatticeVector(c.to_vec())))
    }

    fn format_element(&self, a: &Element) -> String {
        match self.coords(a) {
            Ok(c) => {
                let names = self.names();
                let parts: Vec<String> =
                    c.iter().zip(&names).filter(|(x, _)| **x != 0).map(|(x, n)| format!("{n}^{x}")).collect();
                if parts.is_empty() {
                    "1".into()
                } else {
                    parts.join(" ")
                }
            }
            Err(_) => a.to_string(),
        }
    }
}
