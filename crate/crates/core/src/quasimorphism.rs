//! Quasimorphisms `q` with `|q(g) + q(h) - q(gh)| <= D`, Brooks counting
//! quasimorphisms on free groups, and homogenisation with error intervals.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{power, Element, FreeWord, GroupOracle};
use crate::rational::{fmt_q, max_q, qi, serialize_q, Interval, Q};

pub trait Quasimorphism: Send + Sync {
    fn name(&self) -> String;
    fn evaluate(&self, g: &Element) -> Result<Q>;
    /// A proven upper bound on the defect.
    fn defect_bound(&self) -> Q;
    /// True when `q(g^n) = n q(g)` (so homogenisation is exact).
    fn is_homogeneous(&self) -> bool {
        false
    }
}

/// A homogeneous quasimorphism known only up to an interval at each element.
pub trait HomogeneousQm: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, g: &Element) -> Result<Interval>;
    /// Defect of the homogeneous map itself.
    fn defect(&self) -> Q;
    /// Coefficients `c` with `s(g) = sum c_i x_i` on abelian coordinates, when exact.
    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        None
    }
}

/// Maximum number of pairwise disjoint occurrences of `w` in `x`.
///
/// All occurrences have the same length, so taking the leftmost one that
/// starts after the previous pick is optimal (earliest-endpoint greedy).
pub fn count_disjoint(w: &FreeWord, x: &FreeWord) -> Result<usize> {
    if w.is_empty() {
        return Err(Error::EmptyPattern);
    }
    Ok(count_letters(w.letters(), x.letters()))
}

fn count_letters(w: &[i8], x: &[i8]) -> usize {
    let (m, mut i, mut count) = (w.len(), 0, 0);
    while i + m <= x.len() {
        if &x[i..i + m] == w {
            count += 1;
            i += m;
        } else {
            i += 1;
        }
    }
    count
}

/// `h_w(x) = #_w(x) - #_{w^-1}(x)`.
#[derive(Clone, Debug)]
pub struct Brooks {
    w: FreeWord,
    w_inv: FreeWord,
}

pub fn brooks(w: &FreeWord) -> Result<Brooks> {
    if w.is_empty() {
        return Err(Error::EmptyPattern);
    }
    if !w.is_cyclically_reduced() {
        return Err(Error::NotCyclicallyReduced);
    }
    Ok(Brooks { w: w.clone(), w_inv: w.inverse() })
}

impl Brooks {
    pub fn pattern(&self) -> &FreeWord {
        &self.w
    }

    pub fn count(&self, x: &FreeWord) -> i64 {
        count_letters(self.w.letters(), x.letters()) as i64 - count_letters(self.w_inv.letters(), x.letters()) as i64
    }
}

impl Quasimorphism for Brooks {
    fn name(&self) -> String {
        format!("brooks({})", self.w)
    }

    fn evaluate(&self, g: &Element) -> Result<Q> {
        match g {
            Element::Word(x) => Ok(qi(self.count(x))),
            _ => Err(Error::ForeignElement("free group".into())),
        }
    }

    fn defect_bound(&self) -> Q {
        qi(2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomogenisedValue {
    #[serde(serialize_with = "serialize_q")]
    pub center: Q,
    #[serde(serialize_with = "serialize_q")]
    pub radius: Q,
    pub n_used: u64,
}

impl HomogenisedValue {
    pub fn interval(&self) -> Interval {
        Interval::new(self.center.clone(), self.radius.clone())
    }
}

/// `q(g^n)/n` with radius `D/n`, from `|q(g^n)/n - q_hat(g)| <= D/n`.
pub fn homogenize(q: &dyn Quasimorphism, oracle: &dyn GroupOracle, g: &Element, n: u64) -> Result<HomogenisedValue> {
    if n == 0 {
        return Err(Error::Input("homogenisation needs n >= 1".into()));
    }
    let nq = qi(n as i64);
    if q.is_homogeneous() {
        return Ok(HomogenisedValue { center: q.evaluate(g)?, radius: Q::zero(), n_used: 1 });
    }
    let gn = power(oracle, g, n as i64)?;
    Ok(HomogenisedValue { center: q.evaluate(&gn)? / &nq, radius: q.defect_bound() / nq, n_used: n })
}

/// Largest `|q(g) + q(h) - q(gh)|` over the pairs; a lower bound on the defect.
pub fn defect_sample(q: &dyn Quasimorphism, oracle: &dyn GroupOracle, pairs: &[(Element, Element)]) -> Result<Q> {
    pairs
        .par_iter()
        .map(|(g, h)| {
            let gh = oracle.multiply(g, h)?;
            Ok((q.evaluate(g)? + q.evaluate(h)? - q.evaluate(&gh)?).abs())
        })
        .try_reduce(Q::zero, |a, b| Ok(max_q(a, b)))
}

/// A uniformly random freely reduced word of the given length.
pub fn random_reduced_word<R: Rng>(rng: &mut R, rank: usize, len: usize) -> FreeWord {
    let mut letters: Vec<i8> = Vec::with_capacity(len);
    while letters.len() < len {
        let k = rng.gen_range(1..=rank as i8);
        let l = if rng.gen_bool(0.5) { k } else { -k };
        if letters.last() != Some(&-l) {
            letters.push(l);
        }
    }
    FreeWord::reduce(&letters, rank).expect("letters are in range")
}

/// `count` pairs of reduced words of lengths uniform in `0..=max_len`.
pub fn random_word_pairs(rank: usize, max_len: usize, count: usize, seed: u64) -> Vec<(Element, Element)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (a, b) = (rng.gen_range(0..=max_len), rng.gen_range(0..=max_len));
            (Element::Word(random_reduced_word(&mut rng, rank, a)), Element::Word(random_reduced_word(&mut rng, rank, b)))
        })
        .collect()
}

/// `sum lambda_i q_i`, with defect at most `sum |lambda_i| D(q_i)`.
#[derive(Clone)]
pub struct LinearCombination {
    terms: Vec<(Q, Arc<dyn Quasimorphism>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(Q, Arc<dyn Quasimorphism>)>) -> Self {
        LinearCombination { terms }
    }

    pub fn scaled(lambda: Q, q: Arc<dyn Quasimorphism>) -> Self {
        LinearCombination { terms: vec![(lambda, q)] }
    }
}

impl Quasimorphism for LinearCombination {
    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(l, q)| format!("{}*{}", fmt_q(l), q.name())).collect();
        parts.join(" + ")
    }

    fn evaluate(&self, g: &Element) -> Result<Q> {
        self.terms.iter().try_fold(Q::zero(), |acc, (l, q)| Ok(acc + l * q.evaluate(g)?))
    }

    fn defect_bound(&self) -> Q {
        self.terms.iter().map(|(l, q)| l.abs() * q.defect_bound()).sum()
    }

    fn is_homogeneous(&self) -> bool {
        self.terms.iter().all(|(_, q)| q.is_homogeneous())
    }
}

/// Finitely many weighted Brooks patterns.
#[derive(Clone, Debug)]
pub struct CombinationSpec {
    pub terms: Vec<(Q, FreeWord)>,
}

/// `sum lambda_i h_{w_i}`. Terms with `|w_i| > |x|` vanish at `x` and are skipped.
#[derive(Clone, Debug)]
pub struct BrooksCombination {
    terms: Vec<(Q, Brooks)>,
}

pub fn combine(spec: &CombinationSpec) -> Result<BrooksCombination> {
    let terms = spec
        .terms
        .iter()
        .map(|(l, w)| {
            if l.is_zero() {
                return Err(Error::Input(format!("zero weight on {w}")));
            }
            Ok((l.clone(), brooks(w)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BrooksCombination { terms })
}

impl Quasimorphism for BrooksCombination {
    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(l, b)| format!("{}*h[{}]", fmt_q(l), b.w)).collect();
        parts.join(" + ")
    }

    fn evaluate(&self, g: &Element) -> Result<Q> {
        let Element::Word(x) = g else {
            return Err(Error::ForeignElement("free group".into()));
        };
        Ok(self
            .terms
            .iter()
            .filter(|(_, b)| b.w.len() <= x.len())
            .map(|(l, b)| l * qi(b.count(x)))
            .sum())
    }

    fn defect_bound(&self) -> Q {
        qi(2) * self.terms.iter().map(|(l, _)| l.abs()).sum::<Q>()
    }
}

pub type ElementMap = dyn Fn(&Element) -> Result<Element> + Send + Sync;

/// `e -> q(phi(e))`.
#[derive(Clone)]
pub struct Pullback {
    q: Arc<dyn Quasimorphism>,
    phi: Arc<ElementMap>,
}

pub fn pullback(q: Arc<dyn Quasimorphism>, phi: Arc<ElementMap>) -> Pullback {
    Pullback { q, phi }
}

impl Quasimorphism for Pullback {
    fn name(&self) -> String {
        format!("{}∘φ", self.q.name())
    }

    fn evaluate(&self, g: &Element) -> Result<Q> {
        self.q.evaluate(&(self.phi)(g)?)
    }

    fn defect_bound(&self) -> Q {
        self.q.defect_bound()
    }

    fn is_homogeneous(&self) -> bool {
        self.q.is_homogeneous()
    }
}

/// The homomorphism `g -> sum c_i x_i` on abelian coordinates.
#[derive(Clone, Debug)]
pub struct LinearHom {
    pub coeffs: Vec<Q>,
}

impl LinearHom {
    pub fn new(coeffs: Vec<Q>) -> Self {
        LinearHom { coeffs }
    }

    fn coords(&self, g: &Element) -> Result<Vec<i64>> {
        let c = match g {
            Element::Lattice(v) => v.0.clone(),
            Element::Heisenberg(h) => vec![h.x, h.y],
            _ => return Err(Error::ForeignElement("abelian group".into())),
        };
        if c.len() != self.coeffs.len() {
            return Err(Error::Input(format!("expected {} coordinates, got {}", self.coeffs.len(), c.len())));
        }
        Ok(c)
    }

    pub fn apply(&self, coords: &[i64]) -> Q {
        coords.iter().zip(&self.coeffs).map(|(x, c)| c * qi(*x)).sum()
    }
}

impl Quasimorphism for LinearHom {
    fn name(&self) -> String {
        format!("linear({})", self.coeffs.iter().map(fmt_q).collect::<Vec<_>>().join(","))
    }

    fn evaluate(&self, g: &Element) -> Result<Q> {
        Ok(self.apply(&self.coords(g)?))
    }

    fn defect_bound(&self) -> Q {
        Q::zero()
    }

    fn is_homogeneous(&self) -> bool {
        true
    }
}

impl HomogeneousQm for LinearHom {
    fn name(&self) -> String {
        Quasimorphism::name(self)
    }

    fn value(&self, g: &Element) -> Result<Interval> {
        Ok(Interval::exact(self.evaluate(g)?))
    }

    fn defect(&self) -> Q {
        Q::zero()
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        Some(self.coeffs.clone())
    }
}

/// The homogenisation of `q` evaluated at a fixed power `n`; its defect is at most `2D(q)`.
#[derive(Clone)]
pub struct Homogenised {
    q: Arc<dyn Quasimorphism>,
    oracle: Arc<dyn GroupOracle>,
    pub n: u64,
}

impl Homogenised {
    pub fn new(q: Arc<dyn Quasimorphism>, oracle: Arc<dyn GroupOracle>, n: u64) -> Self {
        Homogenised { q, oracle, n }
    }
}

impl HomogeneousQm for Homogenised {
    fn name(&self) -> String {
        format!("hom({})", self.q.name())
    }

    fn value(&self, g: &Element) -> Result<Interval> {
        Ok(homogenize(self.q.as_ref(), self.oracle.as_ref(), g, self.n)?.interval())
    }

    fn defect(&self) -> Q {
        if self.q.is_homogeneous() {
            self.q.defect_bound()
        } else {
            qi(2) * self.q.defect_bound()
        }
    }
}

/// `sum lambda_i s_i` over homogeneous quasimorphisms.
#[derive(Clone)]
pub struct HomogeneousSum {
    pub terms: Vec<(Q, Arc<dyn HomogeneousQm>)>,
}

impl HomogeneousQm for HomogeneousSum {
    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(l, s)| format!("{}*{}", fmt_q(l), s.name())).collect();
        parts.join(" + ")
    }

    fn value(&self, g: &Element) -> Result<Interval> {
        self.terms.iter().try_fold(Interval::exact(Q::zero()), |acc, (l, s)| Ok(acc.add(&s.value(g)?.scale(l))))
    }

    fn defect(&self) -> Q {
        self.terms.iter().map(|(l, s)| l.abs() * s.defect()).sum()
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        let mut acc: Option<Vec<Q>> = None;
        for (l, s) in &self.terms {
            let c = s.linear_coefficients()?;
            let scaled: Vec<Q> = c.iter().map(|x| x * l).collect();
            acc = Some(match acc {
                None => scaled,
                Some(a) if a.len() == scaled.len() => a.iter().zip(&scaled).map(|(x, y)| x + y).collect(),
                Some(_) => return None,
            });
        }
        acc
    }
}

/// `g_i = (a^i b^i)^101`.
pub fn brooks_family_word(i: usize) -> FreeWord {
    let mut letters = vec![1i8; i];
    letters.extend(std::iter::repeat_n(2i8, i));
    FreeWord::reduce(&letters, 2).expect("valid letters").pow(101)
}
