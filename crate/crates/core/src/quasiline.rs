//! The quasiline attached to a homogeneous quasimorphism `s`: the Cayley graph
//! of the group on the infinite generating set `A = {g : |s(g)| < C}`.
//!
//! The graph is never built. Distances from the identity and stable
//! translation lengths are reported as certified brackets.

use std::collections::HashSet;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{power, word_ball, Element, GroupOracle, DEFAULT_BFS_BUDGET};
use crate::quasimorphism::HomogeneousQm;
use crate::rational::{ceil_i64, fmt_q, q, Interval, Q};
use crate::translation::{BoundMethod, TauBracket};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Yes,
    No,
    Unknown,
}

/// Integer form of an exact linear `s`: `s(v) = (nums . v) / den`.
#[derive(Clone, Debug)]
struct LinearForm {
    nums: Vec<i128>,
    den: i128,
    /// gcd of `nums`; the values of `s` are exactly `(step / den) Z`.
    step: i128,
    /// A vector with `nums . bezout = step`.
    bezout: Vec<i128>,
    /// Largest multiple count `k` with `k * step / den < C`.
    max_steps: i128,
}

impl LinearForm {
    fn new(coeffs: &[Q], c: &Q) -> Option<Self> {
        let den = coeffs.iter().try_fold(1i128, |acc, x| Some(acc.lcm(&x.denom().to_i128()?)))?;
        let nums: Vec<i128> =
            coeffs.iter().map(|x| x.numer().to_i128()?.checked_mul(den)?.checked_div(x.denom().to_i128()?)).collect::<Option<_>>()?;
        let mut step = 0i128;
        let mut bezout = vec![0i128; nums.len()];
        for (i, &n) in nums.iter().enumerate() {
            let e = step.extended_gcd(&n);
            let (mut g, mut x, mut y) = (e.gcd, e.x, e.y);
            if g < 0 {
                (g, x, y) = (-g, -x, -y);
            }
            for b in bezout.iter_mut() {
                *b = b.checked_mul(x)?;
            }
            bezout[i] = bezout[i].checked_add(y)?;
            step = g;
        }
        let max_steps = if step == 0 {
            0
        } else {
            // C / (step/den), strictly below
            let ratio = c * Q::from_integer(den.into()) / Q::from_integer(step.into());
            ceil_i64(&ratio) as i128 - 1
        };
        Some(LinearForm { nums, den, step, bezout, max_steps })
    }

    fn eval(&self, v: &[i128]) -> i128 {
        self.nums.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn value(&self, v: &[i128]) -> Q {
        Q::new(self.eval(v).into(), self.den.into())
    }

    /// Splits `v` into the fewest summands with `|s| < C`, or `None` when `A`
    /// sits inside `ker s` and `s(v) != 0`.
    fn decompose(&self, v: &[i128], c: &Q) -> Option<Vec<Vec<i128>>> {
        let total = self.eval(v);
        if total == 0 {
            return Some(vec![v.to_vec()]);
        }
        if self.max_steps <= 0 {
            return None;
        }
        let j = total / self.step;
        let k = (j.abs() + self.max_steps - 1) / self.max_steps;
        let (base, rem) = (j / k, j % k);
        let mut parts = Vec::with_capacity(k as usize);
        let mut acc = vec![0i128; v.len()];
        for i in 0..k - 1 {
            let ji = base + if i < rem.abs() { rem.signum() } else { 0 };
            let p: Vec<i128> = self.bezout.iter().map(|b| b * ji).collect();
            for (a, x) in acc.iter_mut().zip(&p) {
                *a += x;
            }
            parts.push(p);
        }
        parts.push(v.iter().zip(&acc).map(|(x, a)| x - a).collect());
        let ok = parts.iter().all(|p| self.value(p).abs() < *c);
        debug_assert!(ok);
        ok.then_some(parts)
    }
}

/// Everything needed to query the quasiline of `s` with threshold `C`.
pub struct QuasilineConfig {
    group: Arc<dyn GroupOracle>,
    s_hat: Arc<dyn HomogeneousQm>,
    c: Q,
    c0: Q,
    d: Q,
    witness: Element,
    linear: Option<LinearForm>,
    /// Budget for each breadth-first search over `A`-members.
    pub budget: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceBounds {
    pub lower: u64,
    pub upper: Option<u64>,
    pub upper_method: BoundMethod,
}

impl QuasilineConfig {
    /// Looks for the witness `g` with `s(g)` in `(0, C/2)` in the ball of
    /// radius `witness_radius`.
    pub fn new(group: Arc<dyn GroupOracle>, s_hat: Arc<dyn HomogeneousQm>, c: Q, witness_radius: u32) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::QuasilineConfig("C must be positive".into()));
        }
        let d = s_hat.defect();
        let two_d = &d * Q::from_integer(2.into());
        if c < two_d {
            return Err(Error::QuasilineConfig(format!("C = {} is below 2D = {}", fmt_q(&c), fmt_q(&two_d))));
        }
        let half = &c / Q::from_integer(2.into());
        let ball = word_ball(group.as_ref(), witness_radius, DEFAULT_BFS_BUDGET)?;
        let mut witness = None;
        for (g, _) in ball.iter() {
            let v = s_hat.value(g)?;
            if v.lo().is_positive() && v.hi() < half {
                witness = Some((g.clone(), v.center.abs()));
                break;
            }
        }
        let (witness, c0) = witness.ok_or_else(|| {
            Error::QuasilineConfig(format!("no element with s in (0, C/2) within radius {witness_radius}"))
        })?;
        let linear = match s_hat.linear_coefficients() {
            Some(coeffs) if check_coefficients(group.as_ref(), s_hat.as_ref(), &coeffs)? => LinearForm::new(&coeffs, &c),
            _ => None,
        };
        Ok(QuasilineConfig { group, s_hat, c, c0, d, witness, linear, budget: 200_000 })
    }

    pub fn group(&self) -> &Arc<dyn GroupOracle> {
        &self.group
    }

    pub fn s_hat(&self) -> &Arc<dyn HomogeneousQm> {
        &self.s_hat
    }

    pub fn c(&self) -> &Q {
        &self.c
    }

    pub fn c0(&self) -> &Q {
        &self.c0
    }

    pub fn defect(&self) -> &Q {
        &self.d
    }

    pub fn witness(&self) -> &Element {
        &self.witness
    }

    /// Exact values of `s` form `step * Z` on abelian groups with linear `s`.
    pub fn value_step(&self) -> Option<Q> {
        self.linear.as_ref().map(|l| Q::new(l.step.into(), l.den.into()))
    }

    pub fn in_generating_set(&self, g: &Element) -> Result<Membership> {
        let v = self.s_hat.value(g)?;
        Ok(if v.abs_upper() < self.c {
            Membership::Yes
        } else if v.abs_lower() >= self.c {
            Membership::No
        } else {
            Membership::Unknown
        })
    }

    /// A product of `k` members of `A` has `|s| < kC + (k-1)D`.
    fn telescoping_lower(&self, v: &Interval) -> u64 {
        let x = v.abs_lower() / (&self.c + &self.d);
        ceil_i64(&x).max(0) as u64
    }

    fn coords(&self, g: &Element) -> Option<Vec<i128>> {
        self.group.abelian_coordinates(g).map(|c| c.into_iter().map(i128::from).collect())
    }

    /// Certified `lower <= d_L(1, g) <= upper`.
    pub fn distance_bounds(&self, g: &Element, effort: u32) -> Result<DistanceBounds> {
        if self.group.is_identity(g) {
            return Ok(DistanceBounds { lower: 0, upper: Some(0), upper_method: BoundMethod::Decomposition });
        }
        let v = self.s_hat.value(g)?;
        let lower = self.telescoping_lower(&v).max(1);
        if self.in_generating_set(g)? == Membership::Yes {
            return Ok(DistanceBounds { lower, upper: Some(1), upper_method: BoundMethod::Decomposition });
        }
        if let (Some(lin), Some(x)) = (&self.linear, self.coords(g)) {
            if x.len() == lin.nums.len() {
                let upper = lin.decompose(&x, &self.c).map(|p| p.len() as u64);
                let method = if upper.is_some() { BoundMethod::Decomposition } else { BoundMethod::None };
                return Ok(DistanceBounds { lower, upper, upper_method: method });
            }
        }
        let mut best: Option<u64> = None;
        for r in 1..=effort {
            if let Some(u) = self.search_upper(g, r)? {
                best = Some(best.map_or(u, |b| b.min(u)));
            }
        }
        let method = if best.is_some() { BoundMethod::Decomposition } else { BoundMethod::None };
        Ok(DistanceBounds { lower, upper: best, upper_method: method })
    }

    /// Breadth-first search over the certified members of `A` in the ball of radius `r`.
    fn search_upper(&self, g: &Element, r: u32) -> Result<Option<u64>> {
        let oracle = self.group.as_ref();
        let ball = word_ball(oracle, r, self.budget)?;
        let mut members = Vec::new();
        for (h, d) in ball.iter() {
            if d > 0 && self.in_generating_set(h)? == Membership::Yes {
                members.push(h.clone());
            }
        }
        let target = oracle.canonical_key(g)?;
        let mut seen = HashSet::new();
        seen.insert(oracle.canonical_key(&oracle.identity())?);
        let mut frontier = vec![oracle.identity()];
        let mut depth = 0u64;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for x in &frontier {
                for m in &members {
                    let y = oracle.multiply(x, m)?;
                    let k = oracle.canonical_key(&y)?;
                    if k == target {
                        return Ok(Some(depth));
                    }
                    if seen.len() >= self.budget {
                        return Ok(None);
                    }
                    if seen.insert(k) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        Ok(None)
    }
}

/// Confirms the claimed coefficients on unit vectors and a few mixed vectors.
fn check_coefficients(group: &dyn GroupOracle, s: &dyn HomogeneousQm, coeffs: &[Q]) -> Result<bool> {
    let n = coeffs.len();
    let mut probes: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    probes.push((0..n as i64).map(|j| 3 * j - 7).collect());
    probes.push((0..n as i64).map(|j| 11 - 5 * j * j).collect());
    for v in probes {
        let Some(g) = group.from_abelian_coordinates(&v) else { return Ok(false) };
        let want: Q = coeffs.iter().zip(&v).map(|(c, x)| c * Q::from_integer((*x).into())).sum();
        if s.value(&g)? != Interval::exact(want) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `[|s(g)| / (C + D), min_n upper(g^n) / n]`.
pub fn tau_quasiline_bracket(cfg: &QuasilineConfig, g: &Element, n_max: u32, effort: u32) -> Result<TauBracket> {
    if n_max == 0 {
        return Err(Error::Input("N must be at least 1".into()));
    }
    let v = cfg.s_hat.value(g)?;
    let lower = v.abs_lower() / (&cfg.c + &cfg.d);
    let uppers = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let gn = power(cfg.group.as_ref(), g, n as i64)?;
            Ok(cfg.distance_bounds(&gn, effort)?.upper.map(|u| Q::new((u as i64).into(), (n as i64).into())))
        })
        .collect::<Result<Vec<Option<Q>>>>()?;
    let upper = uppers.into_iter().flatten().min();
    let upper_method = if upper.is_some() { BoundMethod::Decomposition } else { BoundMethod::None };
    let bracket = TauBracket { lower, upper, n_used: n_max, lower_method: BoundMethod::Telescoping, upper_method };
    if !bracket.is_sound() {
        return Err(Error::QuasilineConfig(format!("unsound bracket at {g}")));
    }
    Ok(bracket)
}

#[derive(Clone, Debug, Serialize)]
pub struct KFitSample {
    pub g: String,
    pub s: Interval,
    pub bracket: TauBracket,
}

#[derive(Clone, Debug, Serialize)]
pub struct KFit {
    /// Smallest `K` with `|s|/K <= tau <= K|s|` for every sample, or `None` if some bracket was open.
    #[serde(serialize_with = "crate::translation::serialize_opt_q")]
    pub k: Option<Q>,
    pub samples: Vec<KFitSample>,
}

/// Fits the two-sided constant of `tau_L` against `|s|` over elements with `|s| >= 1/10`.
pub fn fit_two_sided_constant(cfg: &QuasilineConfig, elements: &[Element], n_max: u32, effort: u32) -> Result<KFit> {
    let floor = q(1, 10);
    let mut samples = Vec::new();
    let mut k: Option<Q> = Some(Q::zero());
    for g in elements {
        let s = cfg.s_hat.value(g)?;
        if s.abs_lower() < floor {
            continue;
        }
        let b = tau_quasiline_bracket(cfg, g, n_max, effort)?;
        match (&b.upper, &mut k) {
            (Some(u), Some(kk)) if b.lower.is_positive() => {
                let ratio = (u / s.abs_lower()).max(s.abs_upper() / &b.lower);
                if ratio > *kk {
                    *kk = ratio;
                }
            }
            _ => k = None,
        }
        samples.push(KFitSample { g: cfg.group.format_element(g), s, bracket: b });
    }
    Ok(KFit { k, samples })
}
