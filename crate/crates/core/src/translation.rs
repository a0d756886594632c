//! Stable translation lengths `tau(g) = lim d(1, g^n) / n` in word metrics.
//!
//! `n -> d(1, g^n)` is subadditive, so the limit is the infimum and every
//! `d(1, g^n) / n` is an upper bound. Lower bounds come from Lipschitz maps to
//! normed abelian groups that are homogeneous on `<g>`.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{power, word_ball, Element, GroupOracle, WordMetric};
use crate::metric::{sup_distance, FiniteMetricSpace};
use crate::rational::{fmt_q, min_q, parse_q, qi, serialize_q, to_f64, Q};
use crate::tight_span::{barycentre, RetractConfig};

/// How a bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// `min_n d(1,g^n)/n` over exact word distances.
    WordPowers,
    /// A validated Lipschitz certificate.
    Certificate,
    /// Constructive decompositions into quasiline generators.
    Decomposition,
    /// The defect telescoping bound on a homogeneous quasimorphism.
    Telescoping,
    /// Exact translation on a line where the projection is additive.
    ExactDrift,
    /// Nothing is known beyond `0 <= tau < infinity`.
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TauBracket {
    #[serde(serialize_with = "serialize_q")]
    pub lower: Q,
    /// `None` is an unbounded upper end.
    #[serde(serialize_with = "serialize_opt_q")]
    pub upper: Option<Q>,
    pub n_used: u32,
    pub lower_method: BoundMethod,
    pub upper_method: BoundMethod,
}

pub(crate) fn serialize_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&fmt_q(v)),
        None => s.serialize_none(),
    }
}

impl TauBracket {
    pub fn exact(v: Q, method: BoundMethod) -> Self {
        TauBracket { lower: v.clone(), upper: Some(v), n_used: 1, lower_method: method, upper_method: method }
    }

    pub fn contains(&self, x: &Q) -> bool {
        &self.lower <= x && self.upper.as_ref().is_none_or(|u| x <= u)
    }

    pub fn width(&self) -> Option<Q> {
        self.upper.as_ref().map(|u| u - &self.lower)
    }

    pub fn is_sound(&self) -> bool {
        self.upper.as_ref().is_none_or(|u| &self.lower <= u)
    }
}

/// Distances `d(1, g^n)` for `n = 1..=n_max`, computed in parallel.
fn power_distances(metric: &WordMetric<'_>, g: &Element, n_max: u32) -> Result<Vec<Option<u32>>> {
    let oracle = metric.oracle();
    (1..=n_max)
        .into_par_iter()
        .map(|n| metric.distance(&power(oracle, g, i64::from(n))?))
        .collect()
}

/// `min_{1 <= n <= n_max} d(1, g^n) / n`, skipping powers beyond the search cap.
pub fn tau_upper(metric: &WordMetric<'_>, g: &Element, n_max: u32) -> Result<Q> {
    if n_max == 0 {
        return Err(Error::Input("tau_upper needs N >= 1".into()));
    }
    power_distances(metric, g, n_max)?
        .into_iter()
        .zip(1..)
        .filter_map(|(d, n): (Option<u32>, i64)| d.map(|d| Q::new(i64::from(d).into(), n.into())))
        .reduce(min_q)
        .ok_or(Error::DistanceUnknown(metric.cap))
}

/// Upper bound from word powers with a lower bound from an optional certificate.
pub fn tau_bracket(
    metric: &WordMetric<'_>,
    g: &Element,
    n_max: u32,
    cert: Option<&LipschitzCertificate>,
) -> Result<TauBracket> {
    let upper = tau_upper(metric, g, n_max)?;
    let (lower, lower_method) = match cert {
        Some(c) => (c.tau_lower(g)?, BoundMethod::Certificate),
        None => (Q::zero(), BoundMethod::None),
    };
    Ok(TauBracket { lower, upper: Some(upper), n_used: n_max, lower_method, upper_method: BoundMethod::WordPowers })
}

type VectorMap = dyn Fn(&Element) -> Result<Vec<Q>> + Send + Sync;

/// A map `G -> Q^k` with `||map(g)||_1 <= L d(1,g) + L`, checked on a ball before use.
#[derive(Clone)]
pub struct LipschitzCertificate {
    pub name: String,
    map: Arc<VectorMap>,
    pub lip: Q,
    /// Zero when the map is a homomorphism, so its values are already homogeneous.
    pub homogeneity_defect: Q,
    validated_radius: Option<u32>,
}

impl std::fmt::Debug for LipschitzCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LipschitzCertificate")
            .field("name", &self.name)
            .field("lip", &fmt_q(&self.lip))
            .field("validated_radius", &self.validated_radius)
            .finish()
    }
}

/// Exponent sums: the abelianisation for free groups, lattices and the Heisenberg group.
pub fn abelianization(oracle: &dyn GroupOracle, g: &Element) -> Option<Vec<i64>> {
    match g {
        Element::Lattice(v) => Some(v.0.clone()),
        Element::Heisenberg(h) => Some(vec![h.x, h.y]),
        Element::Word(w) => {
            let rank = oracle.generators().len() / 2;
            let mut v = vec![0i64; rank];
            for &l in w.letters() {
                v[l.unsigned_abs() as usize - 1] += i64::from(l.signum());
            }
            Some(v)
        }
        Element::Extension(..) => None,
    }
}

impl LipschitzCertificate {
    pub fn new(name: &str, map: Arc<VectorMap>, lip: Q, homogeneity_defect: Q) -> Self {
        LipschitzCertificate { name: name.into(), map, lip, homogeneity_defect, validated_radius: None }
    }

    /// The abelianisation `G -> Z^k`, 1-Lipschitz for the l1 norm and standard generators.
    pub fn abelianization(oracle: Arc<dyn GroupOracle>) -> Self {
        let map = move |g: &Element| {
            abelianization(oracle.as_ref(), g)
                .map(|v| v.into_iter().map(qi).collect())
                .ok_or_else(|| Error::ForeignElement(oracle.name()))
        };
        Self::new("abelianization", Arc::new(map), qi(1), Q::zero())
    }

    /// `g -> sum_i c_i ab(g)_i`; Lipschitz with `L = max |c_i|`.
    pub fn linear_form(oracle: Arc<dyn GroupOracle>, coeffs: Vec<Q>) -> Self {
        let lip = coeffs.iter().map(|c| c.abs()).fold(Q::zero(), |a, b| if b > a { b } else { a });
        let name = format!("linear:{}", coeffs.iter().map(fmt_q).collect::<Vec<_>>().join(","));
        let map = move |g: &Element| {
            let v = abelianization(oracle.as_ref(), g).ok_or_else(|| Error::ForeignElement(oracle.name()))?;
            if v.len() != coeffs.len() {
                return Err(Error::Input(format!("linear form has {} coefficients, group has rank {}", coeffs.len(), v.len())));
            }
            Ok(vec![v.iter().zip(&coeffs).map(|(x, c)| c * qi(*x)).sum()])
        };
        Self::new(&name, Arc::new(map), lip, Q::zero())
    }

    /// `"abelianization"`, `"sum"` or `"linear:c1,c2,..."`.
    pub fn parse(spec: &str, oracle: Arc<dyn GroupOracle>) -> Result<Self> {
        let spec = spec.trim();
        if spec == "abelianization" || spec == "ab" {
            return Ok(Self::abelianization(oracle));
        }
        let rank = oracle.generators().len() / 2;
        let rank = if matches!(oracle.identity(), Element::Heisenberg(_)) { 2 } else { rank };
        if spec == "sum" {
            return Ok(Self::linear_form(oracle, vec![qi(1); rank]));
        }
        if let Some(rest) = spec.strip_prefix("linear:") {
            let coeffs = rest.split(',').map(parse_q).collect::<Result<Vec<_>>>()?;
            return Ok(Self::linear_form(oracle, coeffs));
        }
        Err(Error::Input(format!("unknown certificate {spec:?}")))
    }

    pub fn value(&self, g: &Element) -> Result<Vec<Q>> {
        (self.map)(g)
    }

    pub fn norm(&self, g: &Element) -> Result<Q> {
        Ok(self.value(g)?.iter().map(|x| x.abs()).sum())
    }

    /// Checks the Lipschitz inequality on every element of the ball of `radius`.
    pub fn validate(&mut self, oracle: &dyn GroupOracle, radius: u32, budget: usize) -> Result<()> {
        let ball = word_ball(oracle, radius, budget)?;
        for (g, d) in ball.iter() {
            let lhs = self.norm(g)?;
            let rhs = &self.lip * qi(i64::from(d)) + &self.lip;
            if lhs > rhs {
                return Err(Error::CertificateViolated(oracle.format_element(g)));
            }
        }
        self.validated_radius = Some(radius);
        Ok(())
    }

    pub fn validated_radius(&self) -> Option<u32> {
        self.validated_radius
    }

    /// `tau_lower_certified` applied to the map's own value, valid for homomorphisms.
    pub fn tau_lower(&self, g: &Element) -> Result<Q> {
        if !self.homogeneity_defect.is_zero() {
            return Err(Error::Input(format!("{} is not homogeneous; supply the homogeneous value", self.name)));
        }
        tau_lower_certified(self, &self.norm(g)?)
    }
}

/// `|homogeneous_value| / L`, since `|s(g)| = |s(g^n)|/n <= (L d(1,g^n) + L)/n -> L tau(g)`.
pub fn tau_lower_certified(cert: &LipschitzCertificate, homogeneous_value: &Q) -> Result<Q> {
    if cert.validated_radius.is_none() {
        return Err(Error::CertificateNotValidated);
    }
    Ok(homogeneous_value.abs() / &cert.lip)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub n: u32,
    pub distance: Option<u32>,
    /// Running minimum of `d(1,g^k)/k` for `k <= n`.
    #[serde(serialize_with = "serialize_opt_q")]
    pub upper: Option<Q>,
}

/// `d(1, g^n)` for `n = 1..=n_max` with the running upper bound.
pub fn distortion_profile(metric: &WordMetric<'_>, g: &Element, n_max: u32) -> Result<Vec<ProfileRow>> {
    let ds = power_distances(metric, g, n_max)?;
    let mut best: Option<Q> = None;
    Ok(ds
        .into_iter()
        .zip(1u32..)
        .map(|(d, n)| {
            if let Some(d) = d {
                let r = Q::new(i64::from(d).into(), i64::from(n).into());
                best = Some(best.take().map_or(r.clone(), |b| min_q(b, r)));
            }
            ProfileRow { n, distance: d, upper: best.clone() }
        })
        .collect())
}

/// CSV body `n,distance,upper,lower,uncertified_lower,upper_float`. The
/// certified `lower` column is filled only when a certified bound is supplied.
pub fn profile_csv(rows: &[ProfileRow], certified_lower: Option<&Q>, header: &[String]) -> Result<String> {
    let mut out = String::new();
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    let d1 = rows.first().and_then(|r| r.distance);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(["n", "distance", "upper", "lower", "uncertified_lower", "upper_float"]).map_err(io)?;
    for r in rows {
        let heuristic = match (r.distance, d1) {
            (Some(d), Some(d1)) => {
                let v = Q::new((i64::from(d) - i64::from(d1)).into(), i64::from(r.n).into());
                format!("{} uncertified", fmt_q(&if v.is_negative() { Q::zero() } else { v }))
            }
            _ => String::new(),
        };
        w.write_record([
            r.n.to_string(),
            r.distance.map(|d| d.to_string()).unwrap_or_default(),
            r.upper.as_ref().map(fmt_q).unwrap_or_default(),
            certified_lower.map(fmt_q).unwrap_or_default(),
            heuristic,
            r.upper.as_ref().map(|u| format!("{:.9}", to_f64(u))).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct Displacement {
    pub n: u32,
    #[serde(serialize_with = "serialize_q")]
    pub displacement: Q,
    /// `d(1, g^n) / n`.
    #[serde(serialize_with = "serialize_q")]
    pub bound: Q,
    #[serde(serialize_with = "serialize_q")]
    pub slack: Q,
    pub holds: bool,
    pub patch_distances: Vec<u32>,
    pub iterations: (usize, usize),
    pub scope: &'static str,
}

/// Compares the barycentres of `(x, gx, ..., g^{n-1}x)` and `(g^n x, gx, ..., g^{n-1}x)`
/// in the injective hull of the orbit patch `{g^i : 0 <= i <= n}`. The two tuples
/// differ in one slot, so the `1/n`-Lipschitz barycentre moves by at most `d(1,g^n)/n`.
pub fn barycentric_displacement(
    metric: &WordMetric<'_>,
    g: &Element,
    n: u32,
    cfg: &RetractConfig,
) -> Result<Displacement> {
    if n == 0 {
        return Err(Error::Input("barycentric displacement needs n >= 1".into()));
    }
    let mut dk = vec![0u32];
    for d in power_distances(metric, g, n)? {
        match d {
            Some(0) => return Err(Error::Input("element has finite order within the patch".into())),
            Some(d) => dk.push(d),
            None => return Err(Error::DistanceUnknown(metric.cap)),
        }
    }
    let size = n as usize + 1;
    let dist: Vec<Vec<Q>> =
        (0..size).map(|i| (0..size).map(|j| qi(i64::from(dk[i.abs_diff(j)]))).collect()).collect();
    let labels = (0..size).map(|i| format!("g^{i}")).collect();
    let space = Arc::new(FiniteMetricSpace::validate(labels, dist)?);
    let first: Vec<usize> = (0..n as usize).collect();
    let mut second = first.clone();
    second[0] = n as usize;
    let f1 = barycentre(&space, &first, cfg)?;
    let f2 = barycentre(&space, &second, cfg)?;
    let displacement = sup_distance(&f1.f, &f2.f)?;
    let bound = Q::new(i64::from(dk[n as usize]).into(), i64::from(n).into());
    let slack = qi(2) * &cfg.eta;
    let holds = displacement <= &bound + &slack;
    Ok(Displacement {
        n,
        displacement,
        bound,
        slack,
        holds,
        patch_distances: dk,
        iterations: (f1.iterations, f2.iterations),
        scope: "injective hull of the finite orbit patch",
    })
}
