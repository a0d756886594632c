//! Injective-hull machinery on a finite metric space.
//!
//! `P_X` is the set of functions with `f(x) + f(y) >= d(x,y)`; the tight span
//! `T_X` is the set of extremal functions, those with `f = star(f)`. The
//! retraction `P_X -> T_X` is the monotone iteration `g -> (g + star(g)) / 2`,
//! run in exact arithmetic until the residual `sup |g - star(g)|` drops to the
//! tolerance (or vanishes).

use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{kuratowski, sup_distance, FiniteMetricSpace, MetricFunction};
use crate::rational::{fmt_q, q, qi, Q};

#[derive(Clone, Debug)]
pub struct RetractConfig {
    pub eta: Q,
    pub budget: usize,
}

impl Default for RetractConfig {
    fn default() -> Self {
        RetractConfig { eta: q(1, 1_000_000_000), budget: 10_000 }
    }
}

impl RetractConfig {
    pub fn with_eta(eta: Q) -> Self {
        RetractConfig { eta, ..Default::default() }
    }
}

/// A point of `P_X` that is extremal up to its certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightSpanPoint {
    pub f: MetricFunction,
    /// `sup_x |f(x) - star(f)(x)|`.
    pub certificate: Q,
    pub iterations: usize,
}

impl TightSpanPoint {
    pub fn is_exact(&self) -> bool {
        self.certificate.is_zero()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            labels: &'a [String],
            values: Vec<String>,
            values_float: Vec<f64>,
            certificate: String,
            iterations: usize,
            exact: bool,
        }
        serde_json::to_value(Out {
            labels: self.f.space().labels(),
            values: self.f.values().iter().map(fmt_q).collect(),
            values_float: self.f.values().iter().map(crate::rational::to_f64).collect(),
            certificate: fmt_q(&self.certificate),
            iterations: self.iterations,
            exact: self.is_exact(),
        })
        .expect("serialisable")
    }
}

/// `x -> max_y (d(x,y) - f(y))`.
pub fn star(f: &MetricFunction) -> MetricFunction {
    let space = f.space();
    let vals = f.values();
    let n = space.len();
    let out = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| space.d(x, y) - &vals[y])
                .max()
                .expect("nonempty space")
        })
        .collect();
    MetricFunction::from_parts(space.clone(), out)
}

/// First pair violating `f(x) + f(y) >= d(x,y)`, if any.
pub fn px_violation(f: &MetricFunction) -> Option<(usize, usize)> {
    let space = f.space();
    let v = f.values();
    let n = space.len();
    (0..n)
        .flat_map(|x| (x..n).map(move |y| (x, y)))
        .find(|&(x, y)| &(&v[x] + &v[y]) < space.d(x, y))
}

pub fn in_px(f: &MetricFunction) -> bool {
    px_violation(f).is_none()
}

fn residual(f: &MetricFunction, s: &MetricFunction) -> Q {
    sup_distance(f, s).expect("same space")
}

pub fn retract(f: &MetricFunction, cfg: &RetractConfig) -> Result<TightSpanPoint> {
    if let Some((x, y)) = px_violation(f) {
        return Err(Error::NotInPX(x, y));
    }
    let half = q(1, 2);
    let mut g = f.clone();
    let mut iterations = 0;
    loop {
        let s = star(&g);
        let r = residual(&g, &s);
        if r.is_zero() || r <= cfg.eta {
            return Ok(TightSpanPoint { f: g, certificate: r, iterations });
        }
        if iterations >= cfg.budget {
            return Err(Error::IterationBudgetExceeded(cfg.budget));
        }
        let next: Vec<Q> = g
            .values()
            .iter()
            .zip(s.values())
            .map(|(a, b)| (a + b) * &half)
            .collect();
        let next = MetricFunction::from_parts(g.space().clone(), next);
        debug_assert!(next.values().iter().zip(g.values()).all(|(a, b)| a <= b), "iterate increased");
        debug_assert!(in_px(&next), "iterate left P_X");
        g = next;
        iterations += 1;
    }
}

/// Pointwise mean of functions on a common space.
pub fn affine_mean(fs: &[&MetricFunction]) -> Result<MetricFunction> {
    let first = fs.first().ok_or(Error::EmptyTuple)?;
    if fs.iter().any(|f| !f.same_space_as(first)) {
        return Err(Error::SpaceMismatch);
    }
    let n = first.values().len();
    let k = qi(fs.len() as i64);
    let vals = (0..n)
        .map(|i| fs.iter().map(|f| f.values()[i].clone()).sum::<Q>() / &k)
        .collect();
    Ok(MetricFunction::from_parts(first.space().clone(), vals))
}

/// Retraction of the mean of the distance functions of the listed points.
pub fn barycentre(space: &Arc<FiniteMetricSpace>, indices: &[usize], cfg: &RetractConfig) -> Result<TightSpanPoint> {
    if indices.is_empty() {
        return Err(Error::EmptyTuple);
    }
    let ks = indices
        .iter()
        .map(|&i| kuratowski(space, i))
        .collect::<Result<Vec<_>>>()?;
    if indices.iter().all(|&i| i == indices[0]) {
        return Ok(TightSpanPoint { f: ks[0].clone(), certificate: Q::zero(), iterations: 0 });
    }
    let refs: Vec<&MetricFunction> = ks.iter().collect();
    retract(&affine_mean(&refs)?, cfg)
}

/// `b_2` on two tight-span points.
pub fn midpoint(f: &TightSpanPoint, g: &TightSpanPoint, cfg: &RetractConfig) -> Result<TightSpanPoint> {
    if !f.f.same_space_as(&g.f) {
        return Err(Error::SpaceMismatch);
    }
    if f.f == g.f {
        return Ok(f.clone());
    }
    retract(&affine_mean(&[&f.f, &g.f])?, cfg)
}

/// `2^depth + 1` points from `f` to `g` by recursive midpoint subdivision.
pub fn dyadic_geodesic(
    f: &TightSpanPoint,
    g: &TightSpanPoint,
    depth: u32,
    cfg: &RetractConfig,
) -> Result<Vec<TightSpanPoint>> {
    if !f.f.same_space_as(&g.f) {
        return Err(Error::SpaceMismatch);
    }
    let mut pts = vec![f.clone(), g.clone()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(2 * pts.len() - 1);
        for w in pts.windows(2) {
            next.push(w[0].clone());
            next.push(midpoint(&w[0], &w[1], cfg)?);
        }
        next.push(pts.last().expect("nonempty").clone());
        pts = next;
    }
    Ok(pts)
}

/// Extremal point wrapping a Kuratowski function.
pub fn point(space: &Arc<FiniteMetricSpace>, i: usize) -> Result<TightSpanPoint> {
    Ok(TightSpanPoint { f: kuratowski(space, i)?, certificate: Q::zero(), iterations: 0 })
}
