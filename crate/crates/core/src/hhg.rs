//! Toy hierarchical structures on small groups.
//!
//! A structure is a finite set of domains (points, real lines or quasilines),
//! a relation table of nesting and orthogonality, and one projection per
//! domain. Everything is exact or interval-certified; the full axiom system is
//! not checked, only the relation, `rho` and Lipschitz conditions below.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::extension::{build_r_hat, ExtensionGroup, ZeroCocycle};
use crate::group::{power, random_element, word_ball, Element, GroupOracle, Lattice, WordMetric, DEFAULT_BFS_BUDGET};
use crate::quasiline::{tau_quasiline_bracket, QuasilineConfig};
use crate::quasimorphism::{ElementMap, HomogeneousQm, LinearHom};
use crate::rational::{fmt_q, gcd_q, parse_q, q, qi, to_f64, Interval, Q};
use crate::registry::Registry;
use crate::translation::{serialize_opt_q, tau_upper, BoundMethod, TauBracket};

/// Coordinate names used by projection formulas, in abelian-coordinate order.
pub const COORDINATE_VARS: [&str; 4] = ["p", "q", "r", "s"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Point,
    RealLine,
    Quasiline,
}

impl SpaceKind {
    /// Points match points; real lines and quasilines are both lines up to quasi-isometry.
    fn shape(self) -> u8 {
        match self {
            SpaceKind::Point => 0,
            SpaceKind::RealLine | SpaceKind::Quasiline => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Domain {
    pub id: String,
    pub kind: SpaceKind,
    /// `rho^{id}_V` for other domains `V`.
    pub rho: BTreeMap<String, Interval>,
}

impl Domain {
    pub fn new(id: &str, kind: SpaceKind) -> Self {
        Domain { id: id.into(), kind, rho: BTreeMap::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    NestedIn,
    Contains,
    Orthogonal,
    Transverse,
}

/// Strict nesting pairs `(U, V)` meaning `U` is properly nested in `V`, and a
/// symmetric orthogonality relation. Transversality is everything else.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RelationTable {
    pub nested: BTreeSet<(String, String)>,
    pub orthogonal: BTreeSet<(String, String)>,
    pub maximal: String,
    pub complexity: usize,
}

impl RelationTable {
    pub fn nest(&mut self, u: &str, v: &str) {
        self.nested.insert((u.into(), v.into()));
    }

    pub fn orthogonalize(&mut self, u: &str, v: &str) {
        self.orthogonal.insert((u.into(), v.into()));
        self.orthogonal.insert((v.into(), u.into()));
    }

    pub fn strictly_nested(&self, u: &str, v: &str) -> bool {
        self.nested.contains(&(u.to_string(), v.to_string()))
    }

    pub fn nested_in(&self, u: &str, v: &str) -> bool {
        u == v || self.strictly_nested(u, v)
    }

    pub fn is_orthogonal(&self, u: &str, v: &str) -> bool {
        self.orthogonal.contains(&(u.to_string(), v.to_string()))
    }

    pub fn relation(&self, u: &str, v: &str) -> Relation {
        if u == v {
            Relation::Equal
        } else if self.strictly_nested(u, v) {
            Relation::NestedIn
        } else if self.strictly_nested(v, u) {
            Relation::Contains
        } else if self.is_orthogonal(u, v) {
            Relation::Orthogonal
        } else {
            Relation::Transverse
        }
    }
}

/// A projection `G -> CU`, returned as an interval in the line (or `0` for points).
pub trait Projection: Send + Sync {
    fn project(&self, group: &dyn GroupOracle, g: &Element) -> Result<Interval>;
    fn describe(&self) -> String;
    /// Coefficients on abelian coordinates when the projection is exactly linear.
    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        None
    }
    /// Source text for projections defined by a formula.
    fn formula(&self) -> Option<String> {
        None
    }
}

pub struct PointProjection;

impl Projection for PointProjection {
    fn project(&self, _: &dyn GroupOracle, _: &Element) -> Result<Interval> {
        Ok(Interval::exact(Q::zero()))
    }

    fn describe(&self) -> String {
        "point".into()
    }
}

/// A rational expression in the abelian coordinates `p, q, r, s`.
pub struct FormulaProjection {
    source: String,
    expr: Expr,
    dim: usize,
    coeffs: Option<Vec<Q>>,
}

impl FormulaProjection {
    pub fn new(source: &str, params: &Bindings, dim: usize) -> Result<Self> {
        if dim > COORDINATE_VARS.len() {
            return Err(Error::Input(format!("formulas support at most {} coordinates", COORDINATE_VARS.len())));
        }
        let expr = Expr::parse(source)?.substitute(params);
        let vars = &COORDINATE_VARS[..dim];
        let env = |x: &[i64]| -> Bindings { vars.iter().zip(x).map(|(v, x)| ((*v).to_string(), qi(*x))).collect() };
        // rejects unbound names early
        expr.eval(&env(&vec![0; dim]))?;
        let coeffs = if expr.is_linear_in(vars) {
            let mut c = Vec::with_capacity(dim);
            for i in 0..dim {
                let unit: Vec<i64> = (0..dim).map(|j| i64::from(i == j)).collect();
                c.push(expr.eval(&env(&unit))?);
            }
            Some(c)
        } else {
            None
        };
        Ok(FormulaProjection { source: source.into(), expr, dim, coeffs })
    }
}

impl Projection for FormulaProjection {
    fn project(&self, group: &dyn GroupOracle, g: &Element) -> Result<Interval> {
        let x = group
            .abelian_coordinates(g)
            .filter(|x| x.len() == self.dim)
            .ok_or_else(|| Error::Input(format!("formula projection needs {} abelian coordinates", self.dim)))?;
        if let Some(c) = &self.coeffs {
            return Ok(Interval::exact(c.iter().zip(&x).map(|(c, x)| c * qi(*x)).sum()));
        }
        let env: Bindings = COORDINATE_VARS.iter().zip(&x).map(|(v, x)| ((*v).to_string(), qi(*x))).collect();
        Ok(Interval::exact(self.expr.eval(&env)?))
    }

    fn describe(&self) -> String {
        self.source.clone()
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        self.coeffs.clone()
    }

    fn formula(&self) -> Option<String> {
        Some(self.source.clone())
    }
}

/// The coordinate of a homogeneous quasimorphism, used for quasiline domains.
pub struct QmProjection(pub Arc<dyn HomogeneousQm>);

impl Projection for QmProjection {
    fn project(&self, _: &dyn GroupOracle, g: &Element) -> Result<Interval> {
        self.0.value(g)
    }

    fn describe(&self) -> String {
        self.0.name()
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        self.0.linear_coefficients()
    }
}

/// `inner` applied after a homomorphism `phi` to another group.
pub struct Composed {
    pub inner: Arc<dyn Projection>,
    pub target: Arc<dyn GroupOracle>,
    pub phi: Arc<ElementMap>,
    pub coeffs: Option<Vec<Q>>,
}

impl Projection for Composed {
    fn project(&self, _: &dyn GroupOracle, g: &Element) -> Result<Interval> {
        self.inner.project(self.target.as_ref(), &(self.phi)(g)?)
    }

    fn describe(&self) -> String {
        format!("({})∘φ", self.inner.describe())
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        self.coeffs.clone()
    }
}

#[derive(Clone)]
pub struct ToyHHGStructure {
    pub name: String,
    pub group: Arc<dyn GroupOracle>,
    /// Registry spec of the group, when it has one.
    pub group_spec: Option<String>,
    pub domains: Vec<Domain>,
    pub relations: RelationTable,
    pub projections: BTreeMap<String, Arc<dyn Projection>>,
    pub e: Q,
    pub quasilines: BTreeMap<String, Arc<QuasilineConfig>>,
    additive: Arc<OnceLock<BTreeMap<String, bool>>>,
}

/// Number of sampled pairs behind the additivity check of real-line projections.
pub const ADDITIVITY_SAMPLES: usize = 10_000;

fn diff(a: &Interval, b: &Interval) -> Interval {
    Interval::new(&a.center - &b.center, &a.radius + &b.radius)
}

impl ToyHHGStructure {
    pub fn new(
        name: &str,
        group: Arc<dyn GroupOracle>,
        domains: Vec<Domain>,
        relations: RelationTable,
        projections: BTreeMap<String, Arc<dyn Projection>>,
        e: Q,
    ) -> Self {
        ToyHHGStructure {
            name: name.into(),
            group,
            group_spec: None,
            domains,
            relations,
            projections,
            e,
            quasilines: BTreeMap::new(),
            additive: Arc::new(OnceLock::new()),
        }
    }

    pub fn domain(&self, id: &str) -> Option<&Domain> {
        self.domains.iter().find(|d| d.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.domains.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn project(&self, id: &str, g: &Element) -> Result<Interval> {
        let p = self.projections.get(id).ok_or_else(|| Error::Input(format!("no projection for domain {id}")))?;
        p.project(self.group.as_ref(), g)
    }

    /// `pi_U(y) - pi_U(x)` as an interval; `d_U(x,y)` is its absolute value.
    pub fn displacement(&self, id: &str, x: &Element, y: &Element) -> Result<Interval> {
        Ok(diff(&self.project(id, y)?, &self.project(id, x)?))
    }

    /// Whether `pi(gh) = pi(g) + pi(h)` held exactly on the sampled pairs, per real-line domain.
    pub fn additivity(&self) -> Result<&BTreeMap<String, bool>> {
        if let Some(a) = self.additive.get() {
            return Ok(a);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xadd);
        let pairs: Vec<(Element, Element)> = (0..ADDITIVITY_SAMPLES)
            .map(|_| Ok((random_element(self.group.as_ref(), &mut rng, 24)?, random_element(self.group.as_ref(), &mut rng, 24)?)))
            .collect::<Result<_>>()?;
        let mut out = BTreeMap::new();
        for d in self.domains.iter().filter(|d| d.kind == SpaceKind::RealLine) {
            let ok = pairs.par_iter().try_fold(
                || true,
                |acc, (g, h)| -> Result<bool> {
                    if !acc {
                        return Ok(false);
                    }
                    let gh = self.group.multiply(g, h)?;
                    let (a, b, c) = (self.project(&d.id, g)?, self.project(&d.id, h)?, self.project(&d.id, &gh)?);
                    Ok(a.is_exact() && b.is_exact() && c.is_exact() && c.center == a.center + b.center)
                },
            );
            let ok = ok.try_reduce(|| true, |a, b| Ok(a && b))?;
            out.insert(d.id.clone(), ok);
        }
        let _ = self.additive.set(out);
        Ok(self.additive.get().expect("just set"))
    }

    /// Longest strict chain and largest pairwise-orthogonal set.
    pub fn complexity_bounds(&self) -> (usize, usize) {
        let ids = self.ids();
        fn chain(t: &RelationTable, ids: &[&str], top: &str, memo: &mut BTreeMap<String, usize>) -> usize {
            if let Some(&v) = memo.get(top) {
                return v;
            }
            let best = 1 + ids.iter().filter(|u| t.strictly_nested(u, top)).map(|u| chain(t, ids, u, memo)).max().unwrap_or(0);
            memo.insert(top.to_string(), best);
            best
        }
        let mut memo = BTreeMap::new();
        let longest = ids.iter().map(|u| chain(&self.relations, &ids, u, &mut memo)).max().unwrap_or(0);
        let mut widest = 0;
        for mask in 0u32..(1u32 << ids.len().min(20)) {
            let set: Vec<&str> = (0..ids.len()).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
            if set.len() > widest
                && set.iter().enumerate().all(|(i, u)| set[i + 1..].iter().all(|v| self.relations.is_orthogonal(u, v)))
            {
                widest = set.len();
            }
        }
        (longest, widest)
    }

    /// `c!` for the structure's complexity `c`.
    pub fn complexity_factorial(&self) -> u64 {
        (1..=self.relations.complexity as u64).product()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub instances: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub structure: String,
    pub checks: Vec<Check>,
    pub chain_length: usize,
    pub orthogonal_width: usize,
}

/// Pairs tested for the coarse Lipschitz condition.
#[derive(Clone, Debug)]
pub struct LipschitzSample {
    /// Every `(g, gs)` with `g` in this ball and `s` a generator.
    pub adjacent_radius: u32,
    pub random_pairs: usize,
    pub random_radius: u32,
    pub seed: u64,
}

impl Default for LipschitzSample {
    fn default() -> Self {
        LipschitzSample { adjacent_radius: 5, random_pairs: 400, random_radius: 8, seed: 7 }
    }
}

pub fn validate_structure(s: &ToyHHGStructure) -> Result<ValidationReport> {
    validate_structure_with(s, &LipschitzSample::default())
}

pub fn validate_structure_with(s: &ToyHHGStructure, sample: &LipschitzSample) -> Result<ValidationReport> {
    let violation = |m: String| Err(Error::StructureViolation(m));
    let t = &s.relations;
    let ids = s.ids();
    let known: BTreeSet<&str> = ids.iter().copied().collect();
    let mut checks = Vec::new();

    if known.len() != ids.len() {
        return violation("duplicate domain id".into());
    }
    for (u, v) in t.nested.iter().chain(&t.orthogonal) {
        if !known.contains(u.as_str()) || !known.contains(v.as_str()) {
            return violation(format!("relation mentions unknown domain in ({u}, {v})"));
        }
    }
    for id in &ids {
        if !s.projections.contains_key(*id) {
            return violation(format!("domain {id} has no projection"));
        }
    }

    let mut n = 0;
    for (i, u) in ids.iter().enumerate() {
        if t.strictly_nested(u, u) || t.is_orthogonal(u, u) {
            return violation(format!("{u} is related to itself"));
        }
        for v in &ids[i + 1..] {
            n += 1;
            let nested = t.strictly_nested(u, v) || t.strictly_nested(v, u);
            if nested && t.is_orthogonal(u, v) {
                return violation(format!("relations overlap on ({u}, {v})"));
            }
            if t.is_orthogonal(u, v) != t.is_orthogonal(v, u) {
                return violation(format!("orthogonality is not symmetric on ({u}, {v})"));
            }
        }
    }
    checks.push(Check { name: "relations partition pairs", instances: n });

    let mut n = 0;
    for u in &ids {
        for v in &ids {
            if t.strictly_nested(u, v) && t.strictly_nested(v, u) {
                return violation(format!("nesting is not antisymmetric on ({u}, {v})"));
            }
            for w in &ids {
                n += 1;
                if t.strictly_nested(u, v) && t.strictly_nested(v, w) && !t.strictly_nested(u, w) {
                    return violation(format!("nesting is not transitive on ({u}, {v}, {w})"));
                }
                if t.nested_in(u, v) && t.is_orthogonal(v, w) && !t.is_orthogonal(u, w) {
                    return violation(format!("orthogonality inheritance fails: {u} ⊑ {v}, {v} ⊥ {w}, but not {u} ⊥ {w}"));
                }
            }
        }
    }
    checks.push(Check { name: "partial order and orthogonality inheritance", instances: n });

    let max = t.maximal.as_str();
    if !known.contains(max) {
        return violation(format!("maximal domain {max} is not a domain"));
    }
    for u in &ids {
        if *u != max && !t.strictly_nested(u, max) {
            return violation(format!("{u} is not nested in the maximal domain {max}"));
        }
    }
    checks.push(Check { name: "unique maximal domain", instances: ids.len() });

    let (chain_length, orthogonal_width) = s.complexity_bounds();
    if chain_length > t.complexity || orthogonal_width > t.complexity {
        return violation(format!(
            "complexity {} is below chain length {chain_length} or orthogonal width {orthogonal_width}",
            t.complexity
        ));
    }
    checks.push(Check { name: "complexity bounds", instances: 2 });

    let mut n = 0;
    for d in &s.domains {
        for (target, r) in &d.rho {
            if !known.contains(target.as_str()) {
                return violation(format!("rho^{}_{target} names an unknown domain", d.id));
            }
            if &r.radius * qi(2) > s.e {
                return violation(format!("rho^{}_{target} has diameter above E", d.id));
            }
        }
    }
    for u in &s.domains {
        for v in &s.domains {
            if !t.strictly_nested(&u.id, &v.id) {
                continue;
            }
            for w in &ids {
                let (Some(a), Some(b)) = (u.rho.get(*w), v.rho.get(*w)) else { continue };
                if !t.strictly_nested(&v.id, w) {
                    continue;
                }
                n += 1;
                let gap = diff(a, b).center.abs() - &a.radius - &b.radius;
                if gap > s.e {
                    return violation(format!("rho consistency fails on ({}, {}, {w})", u.id, v.id));
                }
            }
        }
    }
    checks.push(Check { name: "rho consistency", instances: n });

    let n = check_lipschitz(s, sample)?;
    checks.push(Check { name: "coarse Lipschitz projections", instances: n });

    Ok(ValidationReport { structure: s.name.clone(), checks, chain_length, orthogonal_width })
}

fn check_lipschitz(s: &ToyHHGStructure, sample: &LipschitzSample) -> Result<usize> {
    let group = s.group.as_ref();
    let mut pairs: Vec<(Element, Element, u32)> = Vec::new();
    let near = word_ball(group, sample.adjacent_radius, DEFAULT_BFS_BUDGET)?;
    for (g, _) in near.iter() {
        for gen in group.generators() {
            pairs.push((g.clone(), group.multiply(g, gen)?, 1));
        }
    }
    let metric = WordMetric::indexed(group, sample.random_radius, 2 * sample.random_radius, DEFAULT_BFS_BUDGET)?;
    let far: Vec<Element> = word_ball(group, sample.random_radius, DEFAULT_BFS_BUDGET)?.iter().map(|(g, _)| g.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sample.seed);
    for _ in 0..sample.random_pairs {
        let g = far[rng.gen_range(0..far.len())].clone();
        let h = far[rng.gen_range(0..far.len())].clone();
        let d = metric.distance_between(&g, &h)?.ok_or(Error::DistanceUnknown(metric.cap))?;
        pairs.push((g, h, d));
    }
    for d in &s.domains {
        let bad = pairs.par_iter().find_map_first(|(g, h, dist)| {
            let disp = match s.displacement(&d.id, g, h) {
                Ok(x) => x,
                Err(e) => return Some(Err(e)),
            };
            let bound = &s.e * qi(i64::from(*dist)) + &s.e;
            (disp.abs_lower() > bound).then(|| Ok((g.clone(), h.clone())))
        });
        match bad {
            Some(Ok((g, h))) => {
                return Err(Error::StructureViolation(format!(
                    "projection to {} is not ({e},{e})-coarsely Lipschitz at ({}, {})",
                    d.id,
                    group.format_element(&g),
                    group.format_element(&h),
                    e = fmt_q(&s.e)
                )))
            }
            Some(Err(e)) => return Err(e),
            None => {}
        }
    }
    Ok(pairs.len() * s.domains.len())
}

/// Domains `U` with `d_U(x, y) >= D`, certified from below for interval projections.
pub fn relevant_domains(s: &ToyHHGStructure, x: &Element, y: &Element, d: &Q) -> Result<Vec<String>> {
    if !d.is_positive() {
        return Err(Error::Input("the threshold D must be positive".into()));
    }
    let mut out = Vec::new();
    for dom in &s.domains {
        if &s.displacement(&dom.id, x, y)?.abs_lower() >= d {
            out.push(dom.id.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DfSide {
    /// `sum <= A d + A`
    Upper,
    /// `d / A - A <= sum`
    Lower,
}

#[derive(Clone, Debug, Serialize)]
pub struct DfWitness {
    pub g: String,
    pub distance: u32,
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub sum: Q,
    pub side: DfSide,
    /// The smallest `A` this element alone forces, for ranking.
    pub required: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DfScan {
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub a_emp: Q,
    pub a_emp_float: f64,
    pub radius: u32,
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub threshold: Q,
    pub scanned: usize,
    pub witnesses: Vec<DfWitness>,
}

/// Smallest dyadic `A` with `A^2 + sum A >= d`, to within `2^-30`.
fn lower_side_root(sum: &Q, d: u32) -> Q {
    let dq = qi(i64::from(d));
    let f = |a: &Q| a * a + sum * a >= dq;
    let (mut lo, mut hi) = (Q::zero(), dq.clone() + Q::one());
    let tol = Q::new(1.into(), (1i64 << 30).into());
    while &hi - &lo > tol {
        let mid = (&lo + &hi) / qi(2);
        if f(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The smallest `A` (up to `2^-30` on the lower side) with
/// `d/A - A <= sum_U d_U(1,g) <= A d + A` for every `g` in the ball, with the
/// sum over domains relevant at threshold `D`.
pub fn df_ratio_scan(s: &ToyHHGStructure, radius: u32, threshold: &Q, budget: usize) -> Result<DfScan> {
    if !threshold.is_positive() {
        return Err(Error::Input("the threshold D must be positive".into()));
    }
    let ball = word_ball(s.group.as_ref(), radius, budget)?;
    let id = s.group.identity();
    let items: Vec<(&Element, u32)> = ball.iter().collect();
    let rows: Vec<(Q, u32)> = items
        .par_iter()
        .map(|(g, d)| {
            let mut sum = Q::zero();
            for dom in &s.domains {
                let disp = s.displacement(&dom.id, &id, g)?;
                if &disp.abs_lower() >= threshold {
                    sum += disp.center.abs();
                }
            }
            Ok((sum, *d))
        })
        .collect::<Result<_>>()?;
    let upper_req = |(sum, d): &(Q, u32)| sum / qi(i64::from(*d) + 1);
    let lower_req_f = |(sum, d): &(Q, u32)| {
        let x = to_f64(sum);
        (-x + (x * x + 4.0 * f64::from(*d)).sqrt()) / 2.0
    };
    let mut a = rows.iter().map(upper_req).max().unwrap_or_else(Q::zero);
    if let Some(best) = rows.iter().max_by(|x, y| lower_req_f(x).total_cmp(&lower_req_f(y))) {
        a = a.max(lower_side_root(&best.0, best.1));
    }
    // re-verification pass; any element the float ranking missed raises A exactly
    loop {
        let failing = rows.iter().find(|(sum, d)| {
            let dq = qi(i64::from(*d));
            sum > &(&a * &dq + &a) || dq > &a * sum + &a * &a
        });
        match failing {
            None => break,
            Some((sum, d)) => a = a.max(lower_side_root(sum, *d)).max(sum / qi(i64::from(*d) + 1)),
        }
    }
    let mut ranked: Vec<DfWitness> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let g = s.group.format_element(items[i].0);
        ranked.push(DfWitness { g: g.clone(), distance: row.1, sum: row.0.clone(), side: DfSide::Upper, required: to_f64(&upper_req(row)) });
        ranked.push(DfWitness { g, distance: row.1, sum: row.0.clone(), side: DfSide::Lower, required: lower_req_f(row) });
    }
    ranked.sort_by(|x, y| y.required.total_cmp(&x.required).then_with(|| x.g.cmp(&y.g)));
    ranked.truncate(8);
    Ok(DfScan {
        a_emp_float: to_f64(&a),
        a_emp: a,
        radius,
        threshold: threshold.clone(),
        scanned: rows.len(),
        witnesses: ranked,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum OrbitClass {
    Growing,
    Bounded {
        #[serde(serialize_with = "crate::rational::serialize_q")]
        diameter: Q,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitDiameter {
    pub domain: String,
    /// Upper estimate of `diam pi_U({g^i : |i| <= N/2})`.
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub half_horizon: Q,
    /// Certified lower bound on `diam pi_U({g^i : |i| <= N})`.
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub horizon: Q,
    #[serde(flatten)]
    pub class: OrbitClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct BigSetReport {
    pub g: String,
    pub horizon: u64,
    pub domains: Vec<OrbitDiameter>,
}

impl BigSetReport {
    pub fn growing(&self) -> Vec<&str> {
        self.domains.iter().filter(|d| d.class == OrbitClass::Growing).map(|d| d.domain.as_str()).collect()
    }
}

/// Orbit diameters at horizons `N/2` and `N`. A domain counts as growing when
/// the certified diameter at `N` exceeds the diameter at `N/2` by more than `E`.
pub fn bigset_report(s: &ToyHHGStructure, g: &Element, horizon: u64) -> Result<BigSetReport> {
    if horizon < 2 {
        return Err(Error::Input("bigset horizon must be at least 2".into()));
    }
    let grp = s.group.as_ref();
    let gi = grp.invert(g)?;
    let half = horizon / 2;
    let domains = s
        .domains
        .par_iter()
        .map(|d| {
            let start = s.project(&d.id, &grp.identity())?;
            let (mut lo_min, mut lo_max, mut hi_min, mut hi_max) = (start.lo(), start.lo(), start.hi(), start.hi());
            let mut half_diam = Q::zero();
            let (mut fwd, mut back) = (grp.identity(), grp.identity());
            for i in 1..=horizon {
                fwd = grp.multiply(&fwd, g)?;
                back = grp.multiply(&back, &gi)?;
                for x in [&fwd, &back] {
                    let v = s.project(&d.id, x)?;
                    let (lo, hi) = (v.lo(), v.hi());
                    if lo < lo_min {
                        lo_min = lo.clone();
                    }
                    if lo > lo_max {
                        lo_max = lo;
                    }
                    if hi < hi_min {
                        hi_min = hi.clone();
                    }
                    if hi > hi_max {
                        hi_max = hi;
                    }
                }
                if i == half {
                    half_diam = &hi_max - &lo_min;
                }
            }
            let certified = (&lo_max - &hi_min).max(Q::zero());
            let class = if certified > &half_diam + &s.e {
                OrbitClass::Growing
            } else {
                OrbitClass::Bounded { diameter: &hi_max - &lo_min }
            };
            Ok(OrbitDiameter { domain: d.id.clone(), half_horizon: half_diam, horizon: certified, class })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BigSetReport { g: grp.format_element(g), horizon, domains })
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainTau {
    pub bracket: TauBracket,
    /// Signed drift for additive real-line projections.
    #[serde(serialize_with = "serialize_opt_q")]
    pub translation_number: Option<Q>,
}

/// Stable translation length of `g` on each domain.
pub fn tau_per_domain(s: &ToyHHGStructure, g: &Element, n_max: u32) -> Result<BTreeMap<String, DomainTau>> {
    let mut out = BTreeMap::new();
    for d in &s.domains {
        let entry = match d.kind {
            SpaceKind::Point => DomainTau { bracket: TauBracket::exact(Q::zero(), BoundMethod::ExactDrift), translation_number: None },
            SpaceKind::RealLine => {
                let additive = s.additivity()?.get(&d.id).copied().unwrap_or(false);
                let v = s.project(&d.id, g)?;
                if additive && v.is_exact() {
                    DomainTau {
                        bracket: TauBracket::exact(v.center.abs(), BoundMethod::ExactDrift),
                        translation_number: Some(v.center),
                    }
                } else {
                    DomainTau {
                        bracket: TauBracket {
                            lower: Q::zero(),
                            upper: None,
                            n_used: 0,
                            lower_method: BoundMethod::None,
                            upper_method: BoundMethod::None,
                        },
                        translation_number: None,
                    }
                }
            }
            SpaceKind::Quasiline => {
                let cfg = s
                    .quasilines
                    .get(&d.id)
                    .ok_or_else(|| Error::Input(format!("quasiline domain {} has no configuration", d.id)))?;
                DomainTau { bracket: tau_quasiline_bracket(cfg, g, n_max, 0)?, translation_number: None }
            }
        };
        out.insert(d.id.clone(), entry);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ProbeSpec {
    /// Radius of the sample: an l1 coordinate ball on abelian groups, a word ball otherwise.
    pub radius: u32,
    pub tau0: Q,
    pub tau_n: u32,
    pub horizon: u64,
    /// Candidates examined in full, in enumeration order.
    pub max_candidates: usize,
}

impl ProbeSpec {
    pub fn new(radius: u32, tau0: Q) -> Self {
        ProbeSpec { radius, tau0, tau_n: 256, horizon: 4096, max_candidates: 512 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeWitness {
    pub g: String,
    pub power: u64,
    pub domain: String,
    pub bracket: TauBracket,
    /// Whether the horizon classification also puts the domain in the bigset.
    pub classified_growing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub structure: String,
    pub radius: u32,
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub tau0: Q,
    pub power: u64,
    pub sample: &'static str,
    pub examined: usize,
    pub candidates: usize,
    pub truncated: bool,
    /// Growing domains of every examined candidate were pairwise orthogonal.
    pub orthogonal_bigsets: bool,
    pub witnesses: Vec<ProbeWitness>,
}

/// Cheap necessary condition `0 < k |pi_U(g)| < threshold` in integer arithmetic.
struct LinearFilter {
    nums: Vec<i128>,
    /// `k * |nums . x| * lhs_den < rhs`
    lhs_scale: i128,
    rhs: i128,
}

impl LinearFilter {
    fn new(coeffs: &[Q], k: u64, threshold: &Q) -> Option<Self> {
        let den = coeffs.iter().try_fold(1i128, |acc, c| {
            let d = c.denom().to_i128()?;
            Some(acc / num_integer::gcd(acc, d) * d)
        })?;
        let nums = coeffs
            .iter()
            .map(|c| c.numer().to_i128()?.checked_mul(den)?.checked_div(c.denom().to_i128()?))
            .collect::<Option<Vec<_>>>()?;
        let lhs_scale = i128::from(k).checked_mul(threshold.denom().to_i128()?)?;
        let rhs = threshold.numer().to_i128()?.checked_mul(den)?;
        Some(LinearFilter { nums, lhs_scale, rhs })
    }

    fn admits(&self, x: &[i64]) -> bool {
        let v: i128 = self.nums.iter().zip(x).map(|(a, b)| a * i128::from(*b)).sum();
        v != 0 && v.abs() * self.lhs_scale < self.rhs
    }
}

fn l1_ball(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    fn rec(dim: usize, budget: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for x in -budget..=budget {
            prefix.push(x);
            rec(dim, budget - x.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, radius, &mut Vec::new(), &mut out);
    out
}

/// Searches the sample for `(g, U)` with certified `0 < tau_U(g^{c!}) < tau0`.
pub fn discreteness_probe(s: &ToyHHGStructure, spec: &ProbeSpec) -> Result<ProbeReport> {
    if !spec.tau0.is_positive() {
        return Err(Error::Input("tau0 must be positive".into()));
    }
    let grp = s.group.as_ref();
    let k = s.complexity_factorial();
    // quasiline brackets have lower end |s|/(C+D), so the filter threshold scales
    let mut filters: Vec<Option<LinearFilter>> = Vec::new();
    let mut all_linear = true;
    for d in s.domains.iter().filter(|d| d.kind != SpaceKind::Point) {
        let threshold = match d.kind {
            SpaceKind::Quasiline => {
                let cfg = &s.quasilines[&d.id];
                &spec.tau0 * (cfg.c() + cfg.defect())
            }
            _ => spec.tau0.clone(),
        };
        let f = s.projections[&d.id].linear_coefficients().and_then(|c| LinearFilter::new(&c, k, &threshold));
        all_linear &= f.is_some();
        filters.push(f);
    }
    let dim = grp.abelian_coordinates(&grp.identity()).map(|c| c.len());
    let (sample, candidates): (&'static str, Vec<Element>) = match dim {
        Some(dim) if all_linear => {
            let pts = l1_ball(dim, i64::from(spec.radius));
            let hits: Vec<Vec<i64>> = pts
                .into_par_iter()
                .filter(|x| filters.iter().flatten().any(|f| f.admits(x)))
                .collect();
            let hits = hits
                .iter()
                .map(|x| grp.from_abelian_coordinates(x).ok_or_else(|| Error::Input("coordinate round trip failed".into())))
                .collect::<Result<Vec<_>>>()?;
            ("coordinate_l1_ball", hits)
        }
        _ => {
            let ball = word_ball(grp, spec.radius, DEFAULT_BFS_BUDGET)?;
            ("word_ball", ball.iter().map(|(g, _)| g.clone()).collect())
        }
    };
    let examined_total = match dim {
        Some(dim) if all_linear => l1_count(dim, i64::from(spec.radius)),
        _ => candidates.len(),
    };
    let truncated = candidates.len() > spec.max_candidates;
    let chosen = &candidates[..candidates.len().min(spec.max_candidates)];
    let results = chosen
        .par_iter()
        .map(|g| -> Result<(Vec<ProbeWitness>, bool)> {
            let h = power(grp, g, k as i64)?;
            let taus = tau_per_domain(s, &h, spec.tau_n)?;
            let hits: Vec<(&String, &DomainTau)> = taus
                .iter()
                .filter(|(_, t)| t.bracket.lower.is_positive() && t.bracket.upper.as_ref().is_some_and(|u| u < &spec.tau0))
                .collect();
            if hits.is_empty() {
                return Ok((Vec::new(), true));
            }
            let big = bigset_report(s, &h, spec.horizon)?;
            let growing = big.growing();
            let orthogonal = growing
                .iter()
                .enumerate()
                .all(|(i, u)| growing[i + 1..].iter().all(|v| s.relations.is_orthogonal(u, v)));
            let ws = hits
                .into_iter()
                .map(|(d, t)| ProbeWitness {
                    g: grp.format_element(g),
                    power: k,
                    domain: d.clone(),
                    bracket: t.bracket.clone(),
                    classified_growing: growing.contains(&d.as_str()),
                })
                .collect();
            Ok((ws, orthogonal))
        })
        .collect::<Result<Vec<_>>>()?;
    let orthogonal_bigsets = results.iter().all(|(_, o)| *o);
    let witnesses = results.into_iter().flat_map(|(w, _)| w).collect();
    Ok(ProbeReport {
        structure: s.name.clone(),
        radius: spec.radius,
        tau0: spec.tau0.clone(),
        power: k,
        sample,
        examined: examined_total,
        candidates: candidates.len(),
        truncated,
        orthogonal_bigsets,
        witnesses,
    })
}

fn l1_count(dim: usize, r: i64) -> usize {
    if dim == 0 {
        return 1;
    }
    (-r..=r).map(|x| l1_count(dim - 1, r - x.abs())).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct UndistortionRow {
    pub g: String,
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub tau_upper: Q,
    /// `min_n d(1, g^n) / n` over the tabulated range.
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub min_ratio: Q,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UndistortionReport {
    /// The fitted `K` with `d(1, g^n) >= K n` across the sample.
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub k_fit: Q,
    pub n_max: u32,
    pub rows: Vec<UndistortionRow>,
    pub holds: bool,
}

/// `d(1, g^n) >= n (tau_hat - tol)` for every sampled `g` and `n <= n_max`.
pub fn uniform_undistortion(metric: &WordMetric<'_>, samples: &[Element], n_max: u32, tol: &Q) -> Result<UndistortionReport> {
    let grp = metric.oracle();
    let mut rows = Vec::new();
    for g in samples.iter().filter(|g| !grp.is_identity(g)) {
        let tau = tau_upper(metric, g, n_max)?;
        let mut min_ratio: Option<Q> = None;
        let mut holds = true;
        for n in 1..=n_max {
            let d = metric.distance(&power(grp, g, i64::from(n))?)?.ok_or(Error::DistanceUnknown(metric.cap))?;
            let nq = qi(i64::from(n));
            let r = qi(i64::from(d)) / &nq;
            holds &= qi(i64::from(d)) >= &nq * (&tau - tol);
            min_ratio = Some(min_ratio.map_or(r.clone(), |m| m.min(r)));
        }
        rows.push(UndistortionRow {
            g: grp.format_element(g),
            tau_upper: tau,
            min_ratio: min_ratio.expect("n_max >= 1"),
            holds,
        });
    }
    let k_fit = rows.iter().map(|r| r.min_ratio.clone()).min().unwrap_or_else(Q::zero);
    let holds = rows.iter().all(|r| r.holds) && k_fit.is_positive();
    Ok(UndistortionReport { k_fit, n_max, rows, holds })
}

fn formula_structure(
    name: &str,
    group: Arc<dyn GroupOracle>,
    group_spec: &str,
    params: &Bindings,
    lines: &[(&str, &str)],
    e: Q,
) -> Result<ToyHHGStructure> {
    let dim = group.abelian_coordinates(&group.identity()).map_or(0, |c| c.len());
    let mut domains = vec![Domain::new("S", SpaceKind::Point)];
    let mut rel = RelationTable { maximal: "S".into(), ..Default::default() };
    let mut projections: BTreeMap<String, Arc<dyn Projection>> = BTreeMap::new();
    projections.insert("S".into(), Arc::new(PointProjection));
    for (id, f) in lines {
        let mut d = Domain::new(id, SpaceKind::RealLine);
        d.rho.insert("S".into(), Interval::exact(Q::zero()));
        domains.push(d);
        rel.nest(id, "S");
        projections.insert((*id).into(), Arc::new(FormulaProjection::new(f, params, dim)?));
    }
    for (i, (u, _)) in lines.iter().enumerate() {
        for (v, _) in &lines[i + 1..] {
            rel.orthogonalize(u, v);
        }
    }
    let mut s = ToyHHGStructure::new(name, group, domains, rel, projections, e);
    let (chain, width) = s.complexity_bounds();
    s.relations.complexity = chain.max(width);
    s.group_spec = Some(group_spec.into());
    Ok(s)
}

fn z2_family(name: &str, eps: &Q, delta: Option<&Q>) -> Result<ToyHHGStructure> {
    let mut params = Bindings::new();
    params.insert("eps".into(), eps.clone());
    let v = match delta {
        Some(d) => {
            params.insert("delta".into(), d.clone());
            "(p+q)*delta - q"
        }
        None => "p",
    };
    let s = formula_structure(name, Arc::new(Lattice::new(2)), "lattice:2", &params, &[("U", "(p+q)*eps - p"), ("V", v)], qi(1))?;
    Ok(s)
}

fn unit_interval_open(x: &Q) -> bool {
    x.is_positive() && x < &qi(1)
}

/// `Z^2 = <a, t>` with `pi_U(a^p t^q) = (p+q) eps - p` and `pi_V(a^p t^q) = p`.
pub fn make_z2_epsilon(eps: &Q) -> Result<ToyHHGStructure> {
    if !unit_interval_open(eps) {
        return Err(Error::EpsilonRange);
    }
    z2_family(&format!("z2_epsilon({})", fmt_q(eps)), eps, None)
}

/// As [`make_z2_epsilon`] with `pi_V(a^p t^q) = (p+q) delta - q`.
pub fn make_z2_delta_epsilon(delta: &Q, eps: &Q) -> Result<ToyHHGStructure> {
    if !unit_interval_open(eps) || !unit_interval_open(delta) {
        return Err(Error::ParamRange);
    }
    z2_family(&format!("z2_delta_epsilon({},{})", fmt_q(delta), fmt_q(eps)), eps, Some(delta))
}

/// The boundary case `delta = eps = 1`: coordinate projections `pi_U = q`, `pi_V = p`.
pub fn make_z2_coordinate() -> Result<ToyHHGStructure> {
    z2_family("z2_coordinate", &qi(1), Some(&qi(1)))
}

/// `Z` with a single real-line domain and `pi_S(a^p) = p`.
pub fn make_trivial_z() -> Result<ToyHHGStructure> {
    let grp: Arc<dyn GroupOracle> = Arc::new(Lattice::new(1));
    let mut projections: BTreeMap<String, Arc<dyn Projection>> = BTreeMap::new();
    projections.insert("S".into(), Arc::new(FormulaProjection::new("p", &Bindings::new(), 1)?));
    let rel = RelationTable { maximal: "S".into(), complexity: 1, ..Default::default() };
    let mut s = ToyHHGStructure::new("trivial_z", grp, vec![Domain::new("S", SpaceKind::RealLine)], rel, projections, qi(1));
    s.group_spec = Some("lattice:1".into());
    Ok(s)
}

pub const QUASILINE_DOMAIN: &str = "A";
pub const TOP_DOMAIN: &str = "S_E";

/// The structure on `E` from a structure on `G = E / <t>` and a quasiline on `E`:
/// the base domains (through `phi`), a quasiline domain `A` orthogonal to all of
/// them, and a point `S_E` on top.
pub fn extend_with_quasiline(
    base: &ToyHHGStructure,
    cfg: Arc<QuasilineConfig>,
    ext: Arc<ExtensionGroup>,
) -> Result<ToyHHGStructure> {
    if cfg.group().name() != ext.name() {
        return Err(Error::Input("the quasiline must live on the extension".into()));
    }
    if ext.base().name() != base.group.name() {
        return Err(Error::Input("the extension must be over the base structure's group".into()));
    }
    if base.domain(QUASILINE_DOMAIN).is_some() || base.domain(TOP_DOMAIN).is_some() {
        return Err(Error::Input(format!("base already uses the ids {QUASILINE_DOMAIN} or {TOP_DOMAIN}")));
    }
    let t = ext.t();
    let b = tau_quasiline_bracket(&cfg, &t, 8, 0)?;
    if !b.lower.is_positive() {
        return Err(Error::TauNotCertified);
    }

    let mut domains = Vec::new();
    let mut rel = base.relations.clone();
    for d in &base.domains {
        let mut d = d.clone();
        d.rho.insert(TOP_DOMAIN.into(), Interval::exact(Q::zero()));
        rel.nest(&d.id, TOP_DOMAIN);
        rel.orthogonalize(&d.id, QUASILINE_DOMAIN);
        domains.push(d);
    }
    let mut a = Domain::new(QUASILINE_DOMAIN, SpaceKind::Quasiline);
    a.rho.insert(TOP_DOMAIN.into(), Interval::exact(Q::zero()));
    domains.push(a);
    domains.push(Domain::new(TOP_DOMAIN, SpaceKind::Point));
    rel.nest(QUASILINE_DOMAIN, TOP_DOMAIN);
    rel.maximal = TOP_DOMAIN.into();

    let lifted = ext.abelian_coordinates(&ext.identity()).is_some();
    let proj_ext = ext.clone();
    let phi: Arc<ElementMap> = Arc::new(move |g: &Element| proj_ext.project(g));
    let mut projections: BTreeMap<String, Arc<dyn Projection>> = BTreeMap::new();
    for (id, p) in &base.projections {
        let coeffs = if lifted {
            p.linear_coefficients().map(|mut c| {
                c.push(Q::zero());
                c
            })
        } else {
            None
        };
        let composed = Composed { inner: p.clone(), target: base.group.clone(), phi: phi.clone(), coeffs };
        projections.insert(id.clone(), Arc::new(composed));
    }
    projections.insert(QUASILINE_DOMAIN.into(), Arc::new(QmProjection(cfg.s_hat().clone())));
    projections.insert(TOP_DOMAIN.into(), Arc::new(PointProjection));

    // the quasiline coordinate moves by at most max |s(gen)| + D per generator
    let mut e = base.e.clone();
    for gen in ext.generators() {
        let step = cfg.s_hat().value(gen)?.abs_upper() + cfg.defect();
        let step = Q::from_integer(step.ceil().to_integer());
        if step > e {
            e = step;
        }
    }

    let group: Arc<dyn GroupOracle> = ext;
    let mut s = ToyHHGStructure::new(&format!("{}+quasiline", base.name), group, domains, rel, projections, e);
    let (chain, width) = s.complexity_bounds();
    s.relations.complexity = chain.max(width);
    s.quasilines.insert(QUASILINE_DOMAIN.into(), cfg);
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct Isomorphism {
    /// Domain of the first structure to domain of the second.
    pub mapping: BTreeMap<String, String>,
    /// Value groups `gamma Z` of matched linear projections, where both are linear.
    pub value_groups: BTreeMap<String, String>,
}

fn value_group(c: &[Q]) -> Q {
    c.iter().fold(Q::zero(), |acc, x| if acc.is_zero() { x.abs() } else if x.is_zero() { acc } else { gcd_q(&acc, x) })
}

/// A bijection of domains preserving space shape (real lines and quasilines
/// agree), nesting, orthogonality and the maximal domain, with equal value
/// groups on matched linear projections.
pub fn structural_isomorphism(a: &ToyHHGStructure, b: &ToyHHGStructure) -> Option<Isomorphism> {
    if a.domains.len() != b.domains.len() {
        return None;
    }
    let ia = a.ids();
    let ib = b.ids();
    fn extend(
        a: &ToyHHGStructure,
        b: &ToyHHGStructure,
        ia: &[&str],
        ib: &[&str],
        m: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let i = m.len();
        if i == ia.len() {
            return true;
        }
        for j in 0..ib.len() {
            if used[j] {
                continue;
            }
            let (da, db) = (&a.domains[i], &b.domains[j]);
            if da.kind.shape() != db.kind.shape() || (ia[i] == a.relations.maximal) != (ib[j] == b.relations.maximal) {
                continue;
            }
            if let (Some(ca), Some(cb)) = (a.projections[ia[i]].linear_coefficients(), b.projections[ib[j]].linear_coefficients()) {
                if value_group(&ca) != value_group(&cb) {
                    continue;
                }
            }
            let consistent = m
                .iter()
                .enumerate()
                .all(|(k, &l)| a.relations.relation(ia[k], ia[i]) == b.relations.relation(ib[l], ib[j]) && a.relations.relation(ia[i], ia[k]) == b.relations.relation(ib[j], ib[l]));
            if !consistent {
                continue;
            }
            m.push(j);
            used[j] = true;
            if extend(a, b, ia, ib, m, used) {
                return true;
            }
            m.pop();
            used[j] = false;
        }
        false
    }
    let mut m = Vec::new();
    let mut used = vec![false; ib.len()];
    if !extend(a, b, &ia, &ib, &mut m, &mut used) {
        return None;
    }
    let mut mapping = BTreeMap::new();
    let mut value_groups = BTreeMap::new();
    for (i, &j) in m.iter().enumerate() {
        mapping.insert(ia[i].to_string(), ib[j].to_string());
        if let Some(c) = a.projections[ia[i]].linear_coefficients() {
            value_groups.insert(ia[i].to_string(), fmt_q(&value_group(&c)));
        }
    }
    Some(Isomorphism { mapping, value_groups })
}

/// JSON form of a formula-defined structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub name: String,
    pub group: String,
    pub e: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub domains: Vec<DomainFile>,
    #[serde(default)]
    pub nested: Vec<(String, String)>,
    #[serde(default)]
    pub orthogonal: Vec<(String, String)>,
    pub maximal: String,
    pub complexity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainFile {
    pub id: String,
    pub kind: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<String>,
    /// Target domain to the centre of `rho`, with an optional `radius` entry per target as `"c+-r"`.
    #[serde(default)]
    pub rho: BTreeMap<String, String>,
}

fn parse_rho(s: &str) -> Result<Interval> {
    match s.split_once("+-") {
        Some((c, r)) => Ok(Interval::new(parse_q(c.trim())?, parse_q(r.trim())?)),
        None => Ok(Interval::exact(parse_q(s.trim())?)),
    }
}

fn fmt_rho(i: &Interval) -> String {
    if i.is_exact() {
        fmt_q(&i.center)
    } else {
        format!("{}+-{}", fmt_q(&i.center), fmt_q(&i.radius))
    }
}

impl StructureFile {
    pub fn build(&self, registry: &Registry) -> Result<ToyHHGStructure> {
        let group = registry.group(&self.group)?;
        let dim = group.abelian_coordinates(&group.identity()).map_or(0, |c| c.len());
        let mut params = registry.params.clone();
        for (k, v) in &self.params {
            params.insert(k.clone(), parse_q(v)?);
        }
        let mut domains = Vec::new();
        let mut projections: BTreeMap<String, Arc<dyn Projection>> = BTreeMap::new();
        for d in &self.domains {
            let p: Arc<dyn Projection> = match (d.kind, &d.projection) {
                (SpaceKind::Point, None) => Arc::new(PointProjection),
                (SpaceKind::RealLine, Some(f)) => Arc::new(FormulaProjection::new(f, &params, dim)?),
                (SpaceKind::Quasiline, _) => {
                    return Err(Error::Input(format!("domain {}: quasiline domains are built by the pipeline", d.id)))
                }
                _ => return Err(Error::Input(format!("domain {}: real lines need a projection, points none", d.id))),
            };
            let mut dom = Domain::new(&d.id, d.kind);
            for (t, r) in &d.rho {
                dom.rho.insert(t.clone(), parse_rho(r)?);
            }
            domains.push(dom);
            projections.insert(d.id.clone(), p);
        }
        let mut rel = RelationTable { maximal: self.maximal.clone(), complexity: self.complexity, ..Default::default() };
        for (u, v) in &self.nested {
            rel.nest(u, v);
        }
        for (u, v) in &self.orthogonal {
            rel.orthogonalize(u, v);
        }
        let mut s = ToyHHGStructure::new(&self.name, group, domains, rel, projections, parse_q(&self.e)?);
        s.group_spec = Some(self.group.clone());
        Ok(s)
    }

    /// The file form of a structure whose projections are all points or formulas.
    pub fn from_structure(s: &ToyHHGStructure, params: &Bindings) -> Result<Self> {
        let group = s.group_spec.clone().ok_or_else(|| Error::Input("structure has no group spec".into()))?;
        let mut domains = Vec::new();
        for d in &s.domains {
            let projection = match d.kind {
                SpaceKind::Point => None,
                SpaceKind::RealLine => Some(
                    s.projections[&d.id].formula().ok_or_else(|| Error::Input(format!("domain {} has no formula", d.id)))?,
                ),
                SpaceKind::Quasiline => return Err(Error::Input("quasiline domains have no file form".into())),
            };
            domains.push(DomainFile {
                id: d.id.clone(),
                kind: d.kind,
                projection,
                rho: d.rho.iter().map(|(k, v)| (k.clone(), fmt_rho(v))).collect(),
            });
        }
        let mut orthogonal: Vec<(String, String)> = s.relations.orthogonal.iter().filter(|(u, v)| u < v).cloned().collect();
        orthogonal.sort();
        Ok(StructureFile {
            name: s.name.clone(),
            group,
            e: fmt_q(&s.e),
            params: params.iter().map(|(k, v)| (k.clone(), fmt_q(v))).collect(),
            domains,
            nested: s.relations.nested.iter().cloned().collect(),
            orthogonal,
            maximal: s.relations.maximal.clone(),
            complexity: s.relations.complexity,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub eps: Q,
    pub c: Q,
    pub tau0: Q,
    pub radius: u32,
    pub tau_n: u32,
    pub horizon: u64,
    pub hom_n: u64,
}

impl PipelineConfig {
    pub fn new(eps: Q, c: Q, tau0: Q) -> Self {
        PipelineConfig { eps, c, tau0, radius: 300, tau_n: 256, horizon: 4096, hom_n: 64 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureSummary {
    pub name: String,
    pub group: String,
    pub domains: Vec<Domain>,
    pub relations: RelationTable,
    pub projections: BTreeMap<String, String>,
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub e: Q,
}

impl StructureSummary {
    pub fn of(s: &ToyHHGStructure) -> Self {
        StructureSummary {
            name: s.name.clone(),
            group: s.group.name(),
            domains: s.domains.clone(),
            relations: s.relations.clone(),
            projections: s.projections.iter().map(|(k, p)| (k.clone(), p.describe())).collect(),
            e: s.e.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub eps: Q,
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub c: Q,
    pub s_hat: String,
    /// Spacing of the values of `s` on the extension.
    #[serde(serialize_with = "serialize_opt_q")]
    pub value_step: Option<Q>,
    pub structure: StructureSummary,
    pub validation: ValidationReport,
    /// Matching against the planar example, when `eps` lies in `(0,1)`.
    pub isomorphism: Option<Isomorphism>,
    pub tau_t: TauBracket,
    pub bigset_t: BigSetReport,
    pub probe: ProbeReport,
    pub undistortion: UndistortionReport,
}

/// Zero cocycle on `Z`, `r = q_a + eps p` on `E = Z x Z`, the quasiline of `r`,
/// the extended structure and the discreteness probe.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let base = make_trivial_z()?;
    let ext = Arc::new(ExtensionGroup::new(Arc::new(ZeroCocycle::new(base.group.clone())), true)?);
    let p_hat: Arc<dyn HomogeneousQm> = Arc::new(LinearHom::new(vec![qi(1)]));
    let r_hat: Arc<dyn HomogeneousQm> = Arc::new(build_r_hat(ext.clone(), p_hat, qi(1), cfg.eps.clone(), cfg.hom_n)?);
    let egroup: Arc<dyn GroupOracle> = ext.clone();
    let qcfg = Arc::new(QuasilineConfig::new(egroup, r_hat.clone(), cfg.c.clone(), 4)?);
    let s = extend_with_quasiline(&base, qcfg.clone(), ext.clone())?;
    let validation = validate_structure(&s)?;
    let isomorphism = match make_z2_epsilon(&cfg.eps) {
        Ok(reference) => structural_isomorphism(&s, &reference),
        Err(_) => None,
    };
    let t = ext.t();
    let tau_t = tau_quasiline_bracket(&qcfg, &t, cfg.tau_n, 0)?;
    let bigset_t = bigset_report(&s, &t, cfg.horizon)?;
    let mut spec = ProbeSpec::new(cfg.radius, cfg.tau0.clone());
    spec.tau_n = cfg.tau_n;
    spec.horizon = cfg.horizon;
    let probe = discreteness_probe(&s, &spec)?;
    let metric = WordMetric::indexed(s.group.as_ref(), 16, 64, DEFAULT_BFS_BUDGET)?;
    let samples: Vec<Element> =
        ["(a; 0)", "t", "(a; 1)", "(a^2; -1)", "(a^3; 2)"].iter().map(|x| s.group.parse_element(x)).collect::<Result<_>>()?;
    let undistortion = uniform_undistortion(&metric, &samples, 8, &q(1, 100))?;
    Ok(PipelineReport {
        eps: cfg.eps.clone(),
        c: cfg.c.clone(),
        s_hat: r_hat.name(),
        value_step: qcfg.value_step(),
        structure: StructureSummary::of(&s),
        validation,
        isomorphism,
        tau_t,
        bigset_t,
        probe,
        undistortion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2(s: &ToyHHGStructure, p: i64, q: i64) -> Element {
        s.group.from_abelian_coordinates(&[p, q]).unwrap()
    }

    #[test]
    fn planar_example_projections() {
        let s = make_z2_epsilon(&q(1, 3)).unwrap();
        let g = z2(&s, 2, 1);
        assert_eq!(s.project("U", &g).unwrap(), Interval::exact(qi(-1)));
        assert_eq!(s.project("V", &g).unwrap(), Interval::exact(qi(2)));
        assert_eq!(s.project("U", &s.group.identity()).unwrap(), Interval::exact(qi(0)));
        assert_eq!(s.relations.complexity, 2);
        assert!(matches!(make_z2_epsilon(&qi(1)), Err(Error::EpsilonRange)));
        assert!(matches!(make_z2_epsilon(&qi(0)), Err(Error::EpsilonRange)));
    }

    #[test]
    fn delta_variant() {
        let s = make_z2_delta_epsilon(&q(2, 5), &q(1, 3)).unwrap();
        assert_eq!(s.project("V", &z2(&s, 1, 1)).unwrap(), Interval::exact(q(-1, 5)));
        assert!(matches!(make_z2_delta_epsilon(&qi(1), &q(1, 3)), Err(Error::ParamRange)));
        let c = make_z2_coordinate().unwrap();
        assert_eq!(c.project("U", &z2(&c, 4, -3)).unwrap(), Interval::exact(qi(-3)));
        assert_eq!(c.project("V", &z2(&c, 4, -3)).unwrap(), Interval::exact(qi(4)));
    }

    #[test]
    fn shipped_structures_validate() {
        for s in [make_z2_epsilon(&q(2, 5)).unwrap(), make_z2_delta_epsilon(&q(1, 7), &q(3, 4)).unwrap(), make_trivial_z().unwrap()] {
            validate_structure(&s).unwrap();
        }
    }

    #[test]
    fn inheritance_violation() {
        let mut s = make_z2_epsilon(&q(2, 5)).unwrap();
        s.domains.push(Domain::new("W", SpaceKind::Point));
        s.projections.insert("W".into(), Arc::new(PointProjection));
        s.relations.nest("W", "S");
        s.relations.nest("U", "W");
        s.relations.orthogonal.clear();
        s.relations.orthogonalize("W", "V");
        let err = validate_structure(&s).unwrap_err().to_string();
        assert!(err.contains("orthogonality inheritance"), "{err}");
    }

    #[test]
    fn overlapping_relations_rejected() {
        let mut s = make_z2_epsilon(&q(2, 5)).unwrap();
        s.relations.nest("U", "V");
        assert!(validate_structure(&s).is_err());
    }

    #[test]
    fn lipschitz_violation_found() {
        let mut s = make_z2_epsilon(&q(2, 5)).unwrap();
        s.projections.insert("V".into(), Arc::new(FormulaProjection::new("3*p", &Bindings::new(), 2).unwrap()));
        let err = validate_structure(&s).unwrap_err().to_string();
        assert!(err.contains("coarsely Lipschitz"), "{err}");
    }

    #[test]
    fn relevant_domain_thresholds() {
        let s = make_z2_epsilon(&q(1, 10)).unwrap();
        let (one, a) = (s.group.identity(), z2(&s, 1, 0));
        assert!(relevant_domains(&s, &one, &one, &q(1, 2)).unwrap().is_empty());
        assert_eq!(relevant_domains(&s, &one, &a, &q(1, 2)).unwrap(), vec!["U", "V"]);
        assert_eq!(relevant_domains(&s, &one, &a, &qi(1)).unwrap(), vec!["V"]);
    }

    #[test]
    fn per_domain_translation() {
        let s = make_z2_epsilon(&q(2, 5)).unwrap();
        let t = tau_per_domain(&s, &z2(&s, 1, 0), 8).unwrap();
        assert_eq!(t["U"].bracket, TauBracket::exact(q(3, 5), BoundMethod::ExactDrift));
        assert_eq!(t["U"].translation_number, Some(q(-3, 5)));
        assert_eq!(t["V"].bracket.upper, Some(qi(1)));
        let t = tau_per_domain(&s, &z2(&s, 2, -2), 8).unwrap();
        assert_eq!(t["U"].bracket.upper, Some(qi(2)));
        assert_eq!(t["V"].bracket.upper, Some(qi(2)));
        let t = tau_per_domain(&s, &s.group.identity(), 8).unwrap();
        assert!(t.values().all(|x| x.bracket.upper == Some(qi(0))));
    }

    #[test]
    fn df_scan_small_epsilon() {
        let s = make_z2_epsilon(&q(1, 10)).unwrap();
        let r = df_ratio_scan(&s, 64, &q(1, 2), DEFAULT_BFS_BUDGET).unwrap();
        assert!(r.a_emp >= qi(5));
        let c = df_ratio_scan(&make_z2_coordinate().unwrap(), 64, &q(1, 2), DEFAULT_BFS_BUDGET).unwrap();
        assert!(c.a_emp <= qi(2));
    }

    #[test]
    fn lower_root_is_tight() {
        let r = lower_side_root(&q(32, 5), 64);
        let f = |a: &Q| a * a + q(32, 5) * a - qi(64);
        assert!(f(&r) >= Q::zero());
        assert!(f(&(&r - Q::new(1.into(), (1i64 << 29).into()))) < Q::zero());
    }

    #[test]
    fn bigsets_of_planar_elements() {
        let s = make_z2_epsilon(&q(2, 5)).unwrap();
        let r = bigset_report(&s, &z2(&s, 0, 1), 64).unwrap();
        assert_eq!(r.growing(), vec!["U"]);
        let r = bigset_report(&s, &z2(&s, 1, 0), 64).unwrap();
        assert_eq!(r.growing(), vec!["U", "V"]);
        let r = bigset_report(&s, &s.group.identity(), 64).unwrap();
        assert!(r.growing().is_empty());
    }

    #[test]
    fn probe_half_has_no_witness() {
        let s = make_z2_epsilon(&q(1, 2)).unwrap();
        let r = discreteness_probe(&s, &ProbeSpec::new(40, q(1, 4))).unwrap();
        assert!(r.witnesses.is_empty());
        assert_eq!(r.examined, l1_count(2, 40));
    }

    #[test]
    fn probe_finds_small_translation() {
        let s = make_z2_epsilon(&q(408, 985)).unwrap();
        let mut spec = ProbeSpec::new(420, q(1, 100));
        spec.horizon = 2048;
        let r = discreteness_probe(&s, &spec).unwrap();
        assert!(r.orthogonal_bigsets);
        assert!(r.witnesses.iter().any(|w| w.domain == "U" && w.g == "a^169 t^239" && w.classified_growing));
    }

    #[test]
    fn structure_file_round_trip() {
        let s = make_z2_epsilon(&q(2, 5)).unwrap();
        let mut params = Bindings::new();
        params.insert("eps".into(), q(2, 5));
        let f = StructureFile::from_structure(&s, &params).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: StructureFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let s2 = back.build(&Registry::with_defaults()).unwrap();
        validate_structure(&s2).unwrap();
        let g = z2(&s, 3, -7);
        assert_eq!(s.project("U", &g).unwrap(), s2.project("U", &g).unwrap());
        assert!(structural_isomorphism(&s, &s2).is_some());
    }

    #[test]
    fn pipeline_matches_planar_example() {
        let mut cfg = PipelineConfig::new(q(2, 5), qi(1), q(1, 10));
        cfg.radius = 30;
        cfg.tau_n = 32;
        cfg.horizon = 256;
        let r = run_pipeline(&cfg).unwrap();
        assert_eq!(r.structure.domains.len(), 3);
        let iso = r.isomorphism.unwrap();
        assert_eq!(iso.mapping["A"], "U");
        assert_eq!(iso.mapping["S"], "V");
        assert_eq!(iso.mapping["S_E"], "S");
        assert!(r.tau_t.contains(&qi(1)));
        assert!(r.bigset_t.growing() == vec!["A"]);
        assert!(r.probe.witnesses.is_empty());
        assert!(r.undistortion.holds);
    }

    #[test]
    fn extension_needs_positive_tau_t() {
        let base = make_trivial_z().unwrap();
        let ext = Arc::new(ExtensionGroup::new(Arc::new(ZeroCocycle::new(base.group.clone())), true).unwrap());
        // s = q_a . 0 + p phi vanishes on t
        let s: Arc<dyn HomogeneousQm> = Arc::new(LinearHom::new(vec![q(1, 3), qi(0)]));
        let g: Arc<dyn GroupOracle> = ext.clone();
        let cfg = Arc::new(QuasilineConfig::new(g, s, qi(1), 4));
        // LinearHom does not read extension coordinates
        assert!(cfg.is_err());
        let s: Arc<dyn HomogeneousQm> = Arc::new(build_r_hat(ext.clone(), Arc::new(LinearHom::new(vec![qi(1)])), qi(0), q(1, 3), 8).unwrap());
        let g: Arc<dyn GroupOracle> = ext.clone();
        let cfg = Arc::new(QuasilineConfig::new(g, s, qi(1), 4).unwrap());
        assert!(matches!(extend_with_quasiline(&base, cfg, ext), Err(Error::TauNotCertified)));
    }
}
