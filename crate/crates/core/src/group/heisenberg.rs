use std::fmt;

use super::{key_i64s, parse_power_word, Element, GroupOracle};
use crate::error::{Error, Result};

/// `x^a y^b z^c` in the integer Heisenberg group `<x,y,z | [x,z]=[y,z]=1, [x,y]=z>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeisenbergElement {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl HeisenbergElement {
    pub fn new(x: i64, y: i64, z: i64) -> Self {
        HeisenbergElement { x, y, z }
    }

    /// From `xy = zyx` we get `y^b x^a' = x^a' y^b z^(-a'b)`.
    pub fn mul(self, o: HeisenbergElement) -> HeisenbergElement {
        HeisenbergElement { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z - o.x * self.y }
    }

    pub fn inv(self) -> HeisenbergElement {
        HeisenbergElement { x: -self.x, y: -self.y, z: -self.z - self.x * self.y }
    }
}

impl fmt::Display for HeisenbergElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^{} y^{} z^{}", self.x, self.y, self.z)
    }
}

/// The Heisenberg group with generating set `{x, y}^±` (so `z = [x,y]` is distorted).
pub struct Heisenberg {
    gens: Vec<Element>,
}

impl Default for Heisenberg {
    fn default() -> Self {
        Self::new()
    }
}

impl Heisenberg {
    pub fn new() -> Self {
        Self::with_generators(&[(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)])
    }

    pub fn with_generators(gens: &[(i64, i64, i64)]) -> Self {
        Heisenberg {
            gens: gens.iter().map(|&(x, y, z)| Element::Heisenberg(HeisenbergElement { x, y, z })).collect(),
        }
    }

    pub fn elem(x: i64, y: i64, z: i64) -> Element {
        Element::Heisenberg(HeisenbergElement { x, y, z })
    }

    fn h(&self, a: &Element) -> Result<HeisenbergElement> {
        match a {
            Element::Heisenberg(h) => Ok(*h),
            _ => Err(Error::ForeignElement(self.name())),
        }
    }
}

impl GroupOracle for Heisenberg {
    fn name(&self) -> String {
        "heisenberg".into()
    }

    fn identity(&self) -> Element {
        Heisenberg::elem(0, 0, 0)
    }

    fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        Ok(Element::Heisenberg(self.h(a)?.mul(self.h(b)?)))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        Ok(Element::Heisenberg(self.h(a)?.inv()))
    }

    fn generators(&self) -> &[Element] {
        &self.gens
    }

    fn canonical_key(&self, a: &Element) -> Result<Vec<u8>> {
        let h = self.h(a)?;
        Ok(key_i64s(b'H', &[h.x, h.y, h.z]))
    }

    /// Words in `x, y, z` (capitals invert), multiplied left to right; the
    /// normal form `"x^1 y^0 z^5"` is a special case.
    fn parse_element(&self, s: &str) -> Result<Element> {
        let mut acc = HeisenbergElement::new(0, 0, 0);
        for (c, e) in parse_power_word(s)? {
            let sign = if c.is_uppercase() { -1 } else { 1 };
            let e = e * sign;
            let step = match c.to_ascii_lowercase() {
                'x' => HeisenbergElement::new(e, 0, 0),
                'y' => HeisenbergElement::new(0, e, 0),
                'z' => HeisenbergElement::new(0, 0, e),
                _ => return Err(Error::ElementParse(s.into(), format!("unknown generator {c}"))),
            };
            acc = acc.mul(step);
        }
        Ok(Element::Heisenberg(acc))
    }
}
