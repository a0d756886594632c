use std::fmt;

use super::{key_i64s, parse_power_word, Element, GroupOracle};
use crate::error::{Error, Result};

/// A freely reduced word. Letter `k > 0` is the `k`-th generator and `-k` its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FreeWord {
    letters: Vec<i8>,
}

const NAMES: &[u8] = b"abcdefgh";

impl FreeWord {
    pub fn empty() -> Self {
        FreeWord::default()
    }

    /// Free reduction by a stack scan.
    pub fn reduce(letters: &[i8], rank: usize) -> Result<FreeWord> {
        let mut out: Vec<i8> = Vec::with_capacity(letters.len());
        for &l in letters {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(Error::BadLetter(l.to_string()));
            }
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(FreeWord { letters: out })
    }

    /// Parses `"a b b⁻¹ a"`, `"abAB"` (capitals are inverses) or `"a^3 b^-2"`.
    pub fn parse(s: &str, rank: usize) -> Result<FreeWord> {
        let mut letters = Vec::new();
        for (c, e) in parse_power_word(s)? {
            let lower = c.to_ascii_lowercase();
            let idx = NAMES
                .iter()
                .position(|&n| n as char == lower)
                .filter(|&i| i < rank)
                .ok_or_else(|| Error::BadLetter(c.to_string()))?;
            let mut l = (idx + 1) as i8;
            if c.is_uppercase() {
                l = -l;
            }
            if e < 0 {
                l = -l;
            }
            letters.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
        }
        FreeWord::reduce(&letters, rank)
    }

    pub fn letters(&self) -> &[i8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord { letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    pub fn concat(&self, other: &FreeWord) -> FreeWord {
        let mut k = 0;
        let (a, b) = (&self.letters, &other.letters);
        while k < a.len() && k < b.len() && a[a.len() - 1 - k] == -b[k] {
            k += 1;
        }
        let mut letters = a[..a.len() - k].to_vec();
        letters.extend_from_slice(&b[k..]);
        FreeWord { letters }
    }

    /// Reduced and the last letter is not the inverse of the first.
    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(f), Some(l)) => *f != -*l || self.letters.len() == 1,
            _ => true,
        }
    }

    /// The word repeated `n` times, freely reduced (so `n < 0` gives the inverse power).
    pub fn pow(&self, n: i64) -> FreeWord {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(FreeWord::empty(), |acc, _| acc.concat(&base))
    }

    pub(crate) fn from_reduced(letters: Vec<i8>) -> FreeWord {
        debug_assert!(letters.windows(2).all(|w| w[0] != -w[1]));
        FreeWord { letters }
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.letters {
            let c = NAMES[l.unsigned_abs() as usize - 1] as char;
            let c = if l < 0 { c.to_ascii_uppercase() } else { c };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The free group on `rank` generators `a, b, ...`.
pub struct FreeGroup {
    rank: usize,
    gens: Vec<Element>,
}

impl FreeGroup {
    pub fn new(rank: usize) -> Self {
        assert!((1..=NAMES.len()).contains(&rank), "free group rank must be in 1..=8");
        let gens = (1..=rank as i8)
            .flat_map(|k| [k, -k])
            .map(|l| Element::Word(FreeWord::from_reduced(vec![l])))
            .collect();
        FreeGroup { rank, gens }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn word<'a>(&self, a: &'a Element) -> Result<&'a FreeWord> {
        match a {
            Element::Word(w) if w.letters.iter().all(|l| l.unsigned_abs() as usize <= self.rank) => Ok(w),
            _ => Err(Error::ForeignElement(self.name())),
        }
    }
}

impl GroupOracle for FreeGroup {
    fn name(&self) -> String {
        format!("free:{}", self.rank)
    }

    fn identity(&self) -> Element {
        Element::Word(FreeWord::empty())
    }

    fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        Ok(Element::Word(self.word(a)?.concat(self.word(b)?)))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        Ok(Element::Word(self.word(a)?.inverse()))
    }

    fn generators(&self) -> &[Element] {
        &self.gens
    }

    fn canonical_key(&self, a: &Element) -> Result<Vec<u8>> {
        let w = self.word(a)?;
        let mut k = key_i64s(b'F', &[w.len() as i64]);
        k.extend(w.letters.iter().map(|&l| l as u8));
        Ok(k)
    }

    fn parse_element(&self, s: &str) -> Result<Element> {
        Ok(Element::Word(FreeWord::parse(s, self.rank)?))
    }
}
