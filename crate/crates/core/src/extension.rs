//! Central extensions `E_a = G x Z` of a group by a 2-cocycle `a`, with
//! `(g,p)(h,q) = (gh, p + q + a(g,h))`, and the quasimorphism `q_a(g,p) = p`.

use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::group::{key_i64s, power, Element, GroupOracle, Lattice};
use crate::quasimorphism::{HomogeneousQm, HomogeneousSum, HomogenisedValue, Quasimorphism};
use crate::rational::{fmt_q, qi, Interval, Q};

pub trait Cocycle: Send + Sync {
    fn id(&self) -> String;
    fn base(&self) -> &Arc<dyn GroupOracle>;
    fn alpha(&self, g: &Element, h: &Element) -> Result<i64>;
    /// `sup |a|` when the cocycle is bounded.
    fn declared_bound(&self) -> Option<Q>;
    fn is_zero(&self) -> bool {
        false
    }
}

pub struct ZeroCocycle {
    base: Arc<dyn GroupOracle>,
}

impl ZeroCocycle {
    pub fn new(base: Arc<dyn GroupOracle>) -> Self {
        ZeroCocycle { base }
    }
}

impl Cocycle for ZeroCocycle {
    fn id(&self) -> String {
        "zero".into()
    }

    fn base(&self) -> &Arc<dyn GroupOracle> {
        &self.base
    }

    fn alpha(&self, _g: &Element, _h: &Element) -> Result<i64> {
        Ok(0)
    }

    fn declared_bound(&self) -> Option<Q> {
        Some(Q::zero())
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `a((p1,q1),(p2,q2)) = p1 q2` on `Z^2`; the extension is the Heisenberg group.
pub struct HeisenbergCocycle {
    base: Arc<dyn GroupOracle>,
}

impl Default for HeisenbergCocycle {
    fn default() -> Self {
        HeisenbergCocycle { base: Arc::new(Lattice::new(2)) }
    }
}

impl Cocycle for HeisenbergCocycle {
    fn id(&self) -> String {
        "heisenberg".into()
    }

    fn base(&self) -> &Arc<dyn GroupOracle> {
        &self.base
    }

    fn alpha(&self, g: &Element, h: &Element) -> Result<i64> {
        match (g, h) {
            (Element::Lattice(a), Element::Lattice(b)) if a.0.len() == 2 && b.0.len() == 2 => Ok(a.0[0] * b.0[1]),
            _ => Err(Error::ForeignElement("lattice:2".into())),
        }
    }

    fn declared_bound(&self) -> Option<Q> {
        None
    }
}

/// `a(g,h) = b(g) + b(h) - b(gh)` for an integer-valued expression `b` in the
/// abelian coordinates `p, q` of the base.
pub struct Coboundary {
    base: Arc<dyn GroupOracle>,
    beta: Expr,
    params: Bindings,
    bound: Option<Q>,
}

const COORD_NAMES: [&str; 4] = ["p", "q", "r", "s"];

impl Coboundary {
    pub fn new(base: Arc<dyn GroupOracle>, beta: Expr, params: Bindings, bound: Option<Q>) -> Result<Self> {
        let c = Coboundary { base, beta, params, bound };
        let id = c.base.identity();
        if c.beta_at(&id)? != 0 {
            return Err(Error::NormalisationFailure(format!("beta(1) = {} for {}", c.beta_at(&id)?, c.beta)));
        }
        Ok(c)
    }

    pub fn beta_at(&self, g: &Element) -> Result<i64> {
        let coords = self
            .base
            .abelian_coordinates(g)
            .ok_or_else(|| Error::Input(format!("coboundaries need abelian coordinates on {}", self.base.name())))?;
        let mut env = self.params.clone();
        for (name, x) in COORD_NAMES.iter().zip(&coords) {
            env.insert((*name).to_string(), qi(*x));
        }
        let v = self.beta.eval(&env)?;
        if !v.is_integer() {
            return Err(Error::Expression(format!("beta is not integer-valued at {g}: {}", fmt_q(&v))));
        }
        v.to_integer().to_i64().ok_or_else(|| Error::Expression("beta overflows i64".into()))
    }
}

impl Cocycle for Coboundary {
    fn id(&self) -> String {
        format!("coboundary:{}", self.beta)
    }

    fn base(&self) -> &Arc<dyn GroupOracle> {
        &self.base
    }

    fn alpha(&self, g: &Element, h: &Element) -> Result<i64> {
        let gh = self.base.multiply(g, h)?;
        Ok(self.beta_at(g)? + self.beta_at(h)? - self.beta_at(&gh)?)
    }

    fn declared_bound(&self) -> Option<Q> {
        self.bound.clone()
    }
}

/// The config form `{"type": "zero"|"coboundary"|"heisenberg", "beta": ..., "bound": ...}`.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub beta: Option<String>,
    #[serde(default)]
    pub bound: Option<String>,
    /// Base group; defaults to `lattice:1`, or `lattice:2` for the Heisenberg cocycle.
    #[serde(default)]
    pub base: Option<String>,
}

impl CocycleSpec {
    /// `"zero"`, `"heisenberg"`, `"coboundary:<beta>"`, each optionally followed by
    /// `"@<base>"`; a coboundary may carry `"|<bound>"` after `beta`.
    pub fn parse(s: &str) -> Result<Self> {
        let (body, base) = match s.rsplit_once('@') {
            Some((b, g)) => (b, Some(g.trim().to_string())),
            None => (s, None),
        };
        let body = body.trim();
        if let Some(rest) = body.strip_prefix("coboundary:") {
            let (beta, bound) = match rest.split_once('|') {
                Some((b, d)) => (b.trim().to_string(), Some(d.trim().to_string())),
                None => (rest.trim().to_string(), None),
            };
            return Ok(CocycleSpec { kind: "coboundary".into(), beta: Some(beta), bound, base });
        }
        match body {
            "zero" | "heisenberg" => Ok(CocycleSpec { kind: body.into(), beta: None, bound: None, base }),
            _ => Err(Error::UnknownCocycle(s.into())),
        }
    }
}

/// `E_a` in the coordinates `(g, p)`, so `psi_a` is the identity.
pub struct ExtensionGroup {
    cocycle: Arc<dyn Cocycle>,
    gens: Vec<Element>,
}

impl ExtensionGroup {
    /// Generators are the lifts `(s, 0)` of base generators, plus `t^{+-1}` when `include_t`.
    pub fn new(cocycle: Arc<dyn Cocycle>, include_t: bool) -> Result<Self> {
        let mut gens = Vec::new();
        for s in cocycle.base().generators() {
            gens.push(Element::Extension(Box::new(s.clone()), 0));
        }
        if include_t {
            let id = cocycle.base().identity();
            gens.push(Element::Extension(Box::new(id.clone()), 1));
            gens.push(Element::Extension(Box::new(id), -1));
        }
        let mut e = ExtensionGroup { cocycle, gens };
        // inverses of lifts are lifts only when a(s, s^-1) = 0; close the set otherwise
        let inverses = e.gens.iter().map(|s| e.invert(s)).collect::<Result<Vec<_>>>()?;
        for s in inverses {
            if !e.gens.contains(&s) {
                e.gens.push(s);
            }
        }
        Ok(e)
    }

    pub fn cocycle(&self) -> &Arc<dyn Cocycle> {
        &self.cocycle
    }

    pub fn base(&self) -> &Arc<dyn GroupOracle> {
        self.cocycle.base()
    }

    pub fn elem(g: Element, p: i64) -> Element {
        Element::Extension(Box::new(g), p)
    }

    pub fn t(&self) -> Element {
        Self::elem(self.base().identity(), 1)
    }

    fn parts<'a>(&self, e: &'a Element) -> Result<(&'a Element, i64)> {
        match e {
            Element::Extension(g, p) => Ok((g, *p)),
            _ => Err(Error::CocycleMismatch),
        }
    }

    /// `phi(g, p) = g`.
    pub fn project(&self, e: &Element) -> Result<Element> {
        Ok(self.parts(e)?.0.clone())
    }
}

pub fn ext_mult(ext: &ExtensionGroup, a: &Element, b: &Element) -> Result<Element> {
    ext.multiply(a, b)
}

pub fn ext_inv(ext: &ExtensionGroup, a: &Element) -> Result<Element> {
    ext.invert(a)
}

pub fn ext_power(ext: &ExtensionGroup, a: &Element, n: i64) -> Result<Element> {
    power(ext, a, n)
}

impl GroupOracle for ExtensionGroup {
    fn name(&self) -> String {
        format!("extension:{}@{}", self.cocycle.id(), self.base().name())
    }

    fn identity(&self) -> Element {
        Self::elem(self.base().identity(), 0)
    }

    fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        let ((g, p), (h, q)) = (self.parts(a)?, self.parts(b)?);
        let gh = self.base().multiply(g, h)?;
        Ok(Self::elem(gh, p + q + self.cocycle.alpha(g, h)?))
    }

    fn invert(&self, a: &Element) -> Result<Element> {
        let (g, p) = self.parts(a)?;
        let gi = self.base().invert(g)?;
        let c = self.cocycle.alpha(g, &gi)?;
        Ok(Self::elem(gi, -p - c))
    }

    fn generators(&self) -> &[Element] {
        &self.gens
    }

    fn canonical_key(&self, a: &Element) -> Result<Vec<u8>> {
        let (g, p) = self.parts(a)?;
        let mut k = key_i64s(b'E', &[p]);
        k.extend(self.base().canonical_key(g)?);
        Ok(k)
    }

    /// `"(g; p)"`, `"t^n"`, or a base element (with `p = 0`).
    fn parse_element(&self, s: &str) -> Result<Element> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            if let Some((g, p)) = inner.rsplit_once(';') {
                let p = p.trim().parse::<i64>().map_err(|e| Error::ElementParse(s.into(), e.to_string()))?;
                return Ok(Self::elem(self.base().parse_element(g)?, p));
            }
        }
        if let Some(rest) = t.strip_prefix('t') {
            let n = match rest.trim() {
                "" => 1,
                r => r
                    .strip_prefix('^')
                    .and_then(|x| x.trim().parse::<i64>().ok())
                    .ok_or_else(|| Error::ElementParse(s.into(), "expected t^n".into()))?,
            };
            return Ok(Self::elem(self.base().identity(), n));
        }
        Ok(Self::elem(self.base().parse_element(t)?, 0))
    }

    fn abelian_coordinates(&self, a: &Element) -> Option<Vec<i64>> {
        if !self.cocycle.is_zero() {
            return None;
        }
        let (g, p) = self.parts(a).ok()?;
        let mut c = self.base().abelian_coordinates(g)?;
        c.push(p);
        Some(c)
    }

    fn from_abelian_coordinates(&self, c: &[i64]) -> Option<Element> {
        if !self.cocycle.is_zero() || c.is_empty() {
            return None;
        }
        let (p, g) = c.split_last()?;
        Some(Self::elem(self.base().from_abelian_coordinates(g)?, *p))
    }

    fn format_element(&self, a: &Element) -> String {
        match self.parts(a) {
            Ok((g, p)) => format!("({}; {p})", self.base().format_element(g)),
            Err(_) => a.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CocycleReport {
    pub cocycle: String,
    pub elements_checked: usize,
    pub triples_checked: usize,
    pub max_abs_alpha: i64,
    pub bound_respected: bool,
}

/// Normalisation on every sampled element, and the cocycle identity together
/// with associativity of the extension law on every triple.
pub fn validate_cocycle(ext: &ExtensionGroup, triples: &[(Element, Element, Element)]) -> Result<CocycleReport> {
    let c = ext.cocycle();
    let base = ext.base();
    let id = base.identity();
    let mut max_abs = 0i64;
    let mut seen = std::collections::BTreeSet::new();
    for (g, h, k) in triples {
        for x in [g, h, k] {
            if seen.insert(base.canonical_key(x)?) && (c.alpha(x, &id)? != 0 || c.alpha(&id, x)? != 0) {
                return Err(Error::NormalisationFailure(base.format_element(x)));
            }
        }
        let (gh, hk) = (base.multiply(g, h)?, base.multiply(h, k)?);
        let a_gh = c.alpha(g, h)?;
        max_abs = max_abs.max(a_gh.abs());
        let identity = a_gh + c.alpha(&gh, k)? == c.alpha(h, k)? + c.alpha(g, &hk)?;
        let lift = |x: &Element| ExtensionGroup::elem(x.clone(), 0);
        let (eg, eh, ek) = (lift(g), lift(h), lift(k));
        let left = ext.multiply(&ext.multiply(&eg, &eh)?, &ek)?;
        let right = ext.multiply(&eg, &ext.multiply(&eh, &ek)?)?;
        let assoc = left == right;
        let names = || (base.format_element(g), base.format_element(h), base.format_element(k));
        if !identity {
            let (a, b, d) = names();
            return Err(Error::CocycleIdentityFailure(a, b, d));
        }
        if !assoc {
            let (a, b, d) = names();
            return Err(Error::AssociativityFailure(a, b, d));
        }
    }
    let bound_respected = c.declared_bound().is_none_or(|b| qi(max_abs) <= b);
    Ok(CocycleReport {
        cocycle: c.id(),
        elements_checked: seen.len(),
        triples_checked: triples.len(),
        max_abs_alpha: max_abs,
        bound_respected,
    })
}

/// `q_a(g, p) = p`, a quasimorphism with defect `sup |a|`.
pub struct QAlpha {
    ext: Arc<ExtensionGroup>,
    bound: Q,
}

impl QAlpha {
    pub fn new(ext: Arc<ExtensionGroup>) -> Result<Self> {
        let bound = ext.cocycle().declared_bound().ok_or(Error::UnboundedCocycle)?;
        Ok(QAlpha { ext, bound })
    }
}

pub fn q_alpha(e: &Element) -> Result<i64> {
    match e {
        Element::Extension(_, p) => Ok(*p),
        _ => Err(Error::CocycleMismatch),
    }
}

impl Quasimorphism for QAlpha {
    fn name(&self) -> String {
        format!("q_alpha[{}]", self.ext.cocycle().id())
    }

    fn evaluate(&self, g: &Element) -> Result<Q> {
        Ok(qi(q_alpha(g)?))
    }

    fn defect_bound(&self) -> Q {
        self.bound.clone()
    }

    fn is_homogeneous(&self) -> bool {
        self.ext.cocycle().is_zero()
    }
}

/// `q_a(e^n)/n` with radius `sup|a| / n`.
pub fn q_alpha_hat(ext: &ExtensionGroup, e: &Element, n: u64) -> Result<HomogenisedValue> {
    let bound = ext.cocycle().declared_bound().ok_or(Error::UnboundedCocycle)?;
    if n == 0 {
        return Err(Error::Input("homogenisation needs n >= 1".into()));
    }
    let en = power(ext, e, n as i64)?;
    let nq = qi(n as i64);
    Ok(HomogenisedValue { center: qi(q_alpha(&en)?) / &nq, radius: bound / nq, n_used: n })
}

/// `q_hat_a` as a homogeneous evaluator at a fixed power.
pub struct QAlphaHat {
    ext: Arc<ExtensionGroup>,
    pub n: u64,
}

impl QAlphaHat {
    pub fn new(ext: Arc<ExtensionGroup>, n: u64) -> Result<Self> {
        ext.cocycle().declared_bound().ok_or(Error::UnboundedCocycle)?;
        Ok(QAlphaHat { ext, n })
    }
}

impl HomogeneousQm for QAlphaHat {
    fn name(&self) -> String {
        "q_alpha_hat".into()
    }

    fn value(&self, g: &Element) -> Result<Interval> {
        if self.ext.cocycle().is_zero() {
            return Ok(Interval::exact(qi(q_alpha(g)?)));
        }
        Ok(q_alpha_hat(&self.ext, g, self.n)?.interval())
    }

    fn defect(&self) -> Q {
        qi(2) * self.ext.cocycle().declared_bound().expect("checked in new")
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        let c = self.ext.abelian_coordinates(&self.ext.identity())?;
        let mut v = vec![Q::zero(); c.len()];
        *v.last_mut()? = qi(1);
        Some(v)
    }
}

/// `e -> s(phi(e))` for a homogeneous `s` on the base.
pub struct PullbackHat {
    ext: Arc<ExtensionGroup>,
    s: Arc<dyn HomogeneousQm>,
}

impl HomogeneousQm for PullbackHat {
    fn name(&self) -> String {
        format!("{}∘φ", self.s.name())
    }

    fn value(&self, g: &Element) -> Result<Interval> {
        self.s.value(&self.ext.project(g)?)
    }

    fn defect(&self) -> Q {
        self.s.defect()
    }

    fn linear_coefficients(&self) -> Option<Vec<Q>> {
        self.ext.abelian_coordinates(&self.ext.identity())?;
        let mut c = self.s.linear_coefficients()?;
        c.push(Q::zero());
        Some(c)
    }
}

/// `r_hat = delta q_hat_a + eps p_hat phi`, so `r_hat(t) = delta`.
pub fn build_r_hat(
    ext: Arc<ExtensionGroup>,
    p_hat: Arc<dyn HomogeneousQm>,
    delta: Q,
    eps: Q,
    hom_n: u64,
) -> Result<HomogeneousSum> {
    let qa: Arc<dyn HomogeneousQm> = Arc::new(QAlphaHat::new(ext.clone(), hom_n)?);
    let pb: Arc<dyn HomogeneousQm> = Arc::new(PullbackHat { ext, s: p_hat });
    Ok(HomogeneousSum { terms: vec![(delta, qa), (eps, pb)] })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PeripheralMode {
    KernelFound,
    /// Only for callers with an exact argument; interval search cannot reach it.
    Injective,
    /// The pair with the smallest certified distance from zero among those searched.
    Undetermined { closest_kappa: i64, closest: Interval },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeripheralAnalysis {
    pub g: String,
    pub kappa: Option<i64>,
    pub theta: Option<i64>,
    pub gbar: Option<String>,
    #[serde(flatten)]
    pub mode: PeripheralMode,
    pub search_bound: i64,
    pub n_used: u64,
}

/// Looks for `g_bar = (g^k, theta)` with `q_hat_a(g_bar) = 0`, `1 <= k <= search_bound`.
///
/// `q_hat_a` is a homomorphism on the abelian group `<(g,0), t>` with
/// `q_hat_a(t) = 1`, so `q_hat_a((g^k, theta)) = k q_hat_a((g,0)) + theta` and
/// only the nearest integer `theta` needs checking for each `k`.
pub fn peripheral_analysis(
    ext: &ExtensionGroup,
    g: &Element,
    search_bound: i64,
    tol: &Q,
    n: u64,
) -> Result<PeripheralAnalysis> {
    let base = ext.base();
    let mut closest: Option<(Q, i64, Interval)> = None;
    for k in 1..=search_bound {
        let gk = power(base.as_ref(), g, k)?;
        let v = q_alpha_hat(ext, &ExtensionGroup::elem(gk.clone(), 0), n)?;
        let theta = -round_half_up(&v.center);
        let shifted = Interval::new(&v.center + qi(theta), v.radius.clone());
        if shifted.contains(&Q::zero()) && &shifted.radius < tol {
            let gbar = ExtensionGroup::elem(gk, theta);
            return Ok(PeripheralAnalysis {
                g: base.format_element(g),
                kappa: Some(k),
                theta: Some(theta),
                gbar: Some(ext.format_element(&gbar)),
                mode: PeripheralMode::KernelFound,
                search_bound,
                n_used: n,
            });
        }
        let gap = shifted.abs_lower();
        if closest.as_ref().is_none_or(|(best, _, _)| gap < *best) {
            closest = Some((gap, k, shifted));
        }
    }
    let (closest_kappa, closest) = match closest {
        Some((_, k, i)) => (k, i),
        None => (0, Interval::exact(Q::zero())),
    };
    Ok(PeripheralAnalysis {
        g: base.format_element(g),
        kappa: None,
        theta: None,
        gbar: None,
        mode: PeripheralMode::Undetermined { closest_kappa, closest },
        search_bound,
        n_used: n,
    })
}

fn round_half_up(x: &Q) -> i64 {
    (x + Q::new(1.into(), 2.into())).floor().to_integer().to_i64().expect("rounded value fits in i64")
}
