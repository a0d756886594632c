use std::collections::HashMap;

use super::{Element, GroupOracle};
use crate::error::{Error, Result};

pub const DEFAULT_BFS_BUDGET: usize = 5_000_000;

/// The closed word-metric ball of a given radius, with exact distances from the identity.
pub struct Ball {
    pub radius: u32,
    elements: Vec<Element>,
    dists: Vec<u32>,
    index: HashMap<Vec<u8>, usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, u32)> {
        self.elements.iter().zip(self.dists.iter().copied())
    }

    pub fn distance_of_key(&self, key: &[u8]) -> Option<u32> {
        self.index.get(key).map(|&i| self.dists[i])
    }

    pub fn sphere(&self, r: u32) -> impl Iterator<Item = &Element> {
        self.iter().filter(move |(_, d)| *d == r).map(|(e, _)| e)
    }

    /// Counts per radius, `sizes[r] = |S(r)|`.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.radius as usize + 1];
        for &d in &self.dists {
            s[d as usize] += 1;
        }
        s
    }
}

/// Breadth-first layers over the generators, up to radius `r`.
pub fn word_ball(oracle: &dyn GroupOracle, r: u32, budget: usize) -> Result<Ball> {
    let id = oracle.identity();
    let mut index = HashMap::new();
    index.insert(oracle.canonical_key(&id)?, 0usize);
    let mut elements = vec![id];
    let mut dists = vec![0u32];
    let mut layer_start = 0;
    for d in 1..=r {
        let layer_end = elements.len();
        for i in layer_start..layer_end {
            for s in oracle.generators() {
                let h = oracle.multiply(&elements[i], s)?;
                let k = oracle.canonical_key(&h)?;
                if !index.contains_key(&k) {
                    if elements.len() >= budget {
                        return Err(Error::BudgetExceeded(budget));
                    }
                    index.insert(k, elements.len());
                    elements.push(h);
                    dists.push(d);
                }
            }
        }
        layer_start = layer_end;
        if layer_start == elements.len() {
            break;
        }
    }
    Ok(Ball { radius: r, elements, dists, index })
}

/// Exact `d(1, g)` when it is at most `cap`, by bidirectional breadth-first search.
pub fn word_distance(oracle: &dyn GroupOracle, g: &Element, cap: u32, budget: usize) -> Result<Option<u32>> {
    let id = oracle.identity();
    let (ki, kg) = (oracle.canonical_key(&id)?, oracle.canonical_key(g)?);
    if ki == kg {
        return Ok(Some(0));
    }
    // side 0 grows from the identity, side 1 from g; both multiply generators on the right
    let mut seen: [HashMap<Vec<u8>, u32>; 2] = [HashMap::from([(ki, 0)]), HashMap::from([(kg, 0)])];
    let mut frontier: [Vec<Element>; 2] = [vec![id], vec![g.clone()]];
    let mut depth = [0u32; 2];
    while depth[0] + depth[1] < cap {
        let side = if frontier[0].len() <= frontier[1].len() { 0 } else { 1 };
        if frontier[side].is_empty() {
            return Ok(None);
        }
        let other = 1 - side;
        let nd = depth[side] + 1;
        let mut next = Vec::new();
        let mut best: Option<u32> = None;
        for e in &frontier[side] {
            for s in oracle.generators() {
                let h = oracle.multiply(e, s)?;
                let k = oracle.canonical_key(&h)?;
                if seen[side].contains_key(&k) {
                    continue;
                }
                if let Some(&od) = seen[other].get(&k) {
                    best = Some(best.map_or(nd + od, |b| b.min(nd + od)));
                }
                if seen[0].len() + seen[1].len() >= budget {
                    return Err(Error::BudgetExceeded(budget));
                }
                seen[side].insert(k, nd);
                next.push(h);
            }
        }
        if let Some(b) = best {
            return Ok((b <= cap).then_some(b));
        }
        frontier[side] = next;
        depth[side] = nd;
    }
    Ok(None)
}

/// A precomputed ball answering many distance queries exactly up to twice its radius.
///
/// For `R < d(1,g) <= 2R` some geodesic passes through the sphere of radius `R`,
/// so `d(1,g) = R + min { |h^-1 g| : h in S(R), h^-1 g in B(R) }`.
pub struct BallIndex<'a> {
    oracle: &'a dyn GroupOracle,
    ball: Ball,
    sphere: Vec<Element>,
    sphere_inv: Vec<Element>,
}

impl<'a> BallIndex<'a> {
    pub fn new(oracle: &'a dyn GroupOracle, radius: u32, budget: usize) -> Result<Self> {
        let ball = word_ball(oracle, radius, budget)?;
        let sphere: Vec<Element> = ball.sphere(radius).cloned().collect();
        let sphere_inv = sphere.iter().map(|h| oracle.invert(h)).collect::<Result<Vec<_>>>()?;
        Ok(BallIndex { oracle, ball, sphere, sphere_inv })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn radius(&self) -> u32 {
        self.ball.radius
    }

    /// `Some(d)` exactly if `d(1,g) <= 2R`, otherwise `None`.
    pub fn distance(&self, g: &Element) -> Result<Option<u32>> {
        if let Some(d) = self.ball.distance_of_key(&self.oracle.canonical_key(g)?) {
            return Ok(Some(d));
        }
        if self.sphere.is_empty() {
            // the group is exhausted inside the ball
            return Ok(None);
        }
        let mut best: Option<u32> = None;
        for hi in &self.sphere_inv {
            let rest = self.oracle.multiply(hi, g)?;
            if let Some(d) = self.ball.distance_of_key(&self.oracle.canonical_key(&rest)?) {
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        Ok(best.map(|b| self.ball.radius + b))
    }
}

/// Word-metric distances from the identity with an optional precomputed ball.
pub struct WordMetric<'a> {
    oracle: &'a dyn GroupOracle,
    index: Option<BallIndex<'a>>,
    pub cap: u32,
    pub budget: usize,
}

impl<'a> WordMetric<'a> {
    /// Plain bidirectional search for every query.
    pub fn new(oracle: &'a dyn GroupOracle, cap: u32, budget: usize) -> Self {
        WordMetric { oracle, index: None, cap, budget }
    }

    /// Precomputes the ball of radius `radius`; queries up to `2 * radius` are then table lookups.
    pub fn indexed(oracle: &'a dyn GroupOracle, radius: u32, cap: u32, budget: usize) -> Result<Self> {
        Ok(WordMetric { oracle, index: Some(BallIndex::new(oracle, radius, budget)?), cap, budget })
    }

    pub fn oracle(&self) -> &'a dyn GroupOracle {
        self.oracle
    }

    /// `Some(d(1,g))` when it is at most `cap`.
    pub fn distance(&self, g: &Element) -> Result<Option<u32>> {
        if let Some(idx) = &self.index {
            if let Some(d) = idx.distance(g)? {
                return Ok((d <= self.cap).then_some(d));
            }
            if 2 * idx.radius() >= self.cap {
                return Ok(None);
            }
        }
        word_distance(self.oracle, g, self.cap, self.budget)
    }

    pub fn distance_between(&self, g: &Element, h: &Element) -> Result<Option<u32>> {
        let gi = self.oracle.invert(g)?;
        self.distance(&self.oracle.multiply(&gi, h)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{FreeGroup, FreeWord, Heisenberg, Lattice};

    #[test]
    fn z2_unit_ball_has_five_elements() {
        let b = word_ball(&Lattice::new(2), 1, 100).unwrap();
        assert_eq!(b.len(), 5);
    }

    #[test]
    fn free_group_radius_two() {
        // 1 + 4 + 4*3 reduced words
        let b = word_ball(&FreeGroup::new(2), 2, 100).unwrap();
        assert_eq!(b.len(), 17);
        assert_eq!(b.sphere_sizes(), vec![1, 4, 12]);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(word_ball(&FreeGroup::new(2), 3, 20), Err(Error::BudgetExceeded(20))));
    }

    #[test]
    fn heisenberg_z_has_length_four() {
        let h = Heisenberg::new();
        let b = word_ball(&h, 4, 10_000).unwrap();
        let key = h.canonical_key(&Heisenberg::elem(0, 0, 1)).unwrap();
        assert_eq!(b.distance_of_key(&key), Some(4));
        assert_eq!(word_distance(&h, &Heisenberg::elem(0, 0, 1), 10, 100_000).unwrap(), Some(4));
    }

    #[test]
    fn free_distance_is_reduced_length() {
        let f = FreeGroup::new(2);
        let g = Element::Word(FreeWord::parse("abab", 2).unwrap());
        assert_eq!(word_distance(&f, &g, 10, 100_000).unwrap(), Some(4));
        assert_eq!(word_distance(&f, &g, 3, 100_000).unwrap(), None);
        assert_eq!(word_distance(&f, &f.identity(), 0, 10).unwrap(), Some(0));
    }

    #[test]
    fn ball_index_agrees_with_bidirectional_search() {
        let h = Heisenberg::new();
        let idx = BallIndex::new(&h, 4, 100_000).unwrap();
        for c in 0..=5 {
            let g = Heisenberg::elem(1, -1, c);
            let a = idx.distance(&g).unwrap();
            let b = word_distance(&h, &g, 8, 1_000_000).unwrap();
            assert_eq!(a, b, "z-exponent {c}");
        }
    }
}
