//! Exact finite metric spaces and the sup-metric function space over them.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rational::{parse_q, Q};

/// A finite metric space with exact rational distances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<Q>>,
}

impl FiniteMetricSpace {
    /// Checks every metric axiom and returns the space, or the first witness
    /// of failure in row-major order. Pointwise axioms are checked before the
    /// triangle inequality.
    pub fn validate(labels: Vec<String>, dist: Vec<Vec<Q>>) -> Result<Self> {
        let n = dist.len();
        if labels.len() != n {
            return Err(Error::Input(format!("{} labels for a {n}x{n} matrix", labels.len())));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = &dist[i][j];
                if d.is_negative() {
                    return Err(Error::NegativeEntry(i, j));
                }
                if i == j && !d.is_zero() {
                    return Err(Error::NonzeroDiagonal(i));
                }
                if d != &dist[j][i] {
                    return Err(Error::Asymmetric(i, j));
                }
                if i != j && d.is_zero() {
                    return Err(Error::ZeroOffDiagonal(i, j));
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    if dist[i][k] > &dist[i][j] + &dist[j][k] {
                        return Err(Error::TriangleViolation(i, k, j));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Validates with generated labels `"0"`, `"1"`, ...
    pub fn from_matrix(dist: Vec<Vec<Q>>) -> Result<Self> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::validate(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn d(&self, i: usize, j: usize) -> &Q {
        &self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Q>] {
        &self.dist
    }

    /// Whether the point permutation `perm` (point `i` goes to `perm[i]`) preserves distances.
    pub fn is_isometry(&self, perm: &[usize]) -> bool {
        let n = self.len();
        perm.len() == n
            && (0..n).all(|i| (0..n).all(|j| self.dist[perm[i]][perm[j]] == self.dist[i][j]))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let labels: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Input(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut dist = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
            dist.push(rec.iter().map(parse_q).collect::<Result<Vec<_>>>()?);
        }
        Self::validate(labels, dist)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            labels: Vec<String>,
            dist: Vec<Vec<serde_json::Value>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        let dist = raw
            .dist
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => parse_q(s),
                        serde_json::Value::Number(n) if n.is_i64() => parse_q(&n.to_string()),
                        other => Err(Error::RationalParse(other.to_string())),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::validate(raw.labels, dist)
    }
}

/// A point of the function space `R^X` over a finite space `X`.
#[derive(Clone, Debug)]
pub struct MetricFunction {
    space: Arc<FiniteMetricSpace>,
    values: Vec<Q>,
}

impl PartialEq for MetricFunction {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

impl Eq for MetricFunction {}

fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl MetricFunction {
    pub fn new(space: Arc<FiniteMetricSpace>, values: Vec<Q>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Input(format!(
                "function has {} values on a space of {} points",
                values.len(),
                space.len()
            )));
        }
        Ok(MetricFunction { space, values })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Q> {
        self.values
    }

    pub fn same_space_as(&self, other: &MetricFunction) -> bool {
        same_space(&self.space, &other.space)
    }

    /// Precomposition with a point permutation: `(σ·f)(σ(x)) = f(x)`.
    pub fn permuted(&self, perm: &[usize]) -> MetricFunction {
        let mut values = vec![Q::zero(); self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            values[perm[i]] = v.clone();
        }
        MetricFunction { space: self.space.clone(), values }
    }

    pub(crate) fn from_parts(space: Arc<FiniteMetricSpace>, values: Vec<Q>) -> Self {
        debug_assert_eq!(space.len(), values.len());
        MetricFunction { space, values }
    }
}

/// `max_i |f_i - g_i|`, exactly.
pub fn sup_distance(f: &MetricFunction, g: &MetricFunction) -> Result<Q> {
    if !f.same_space_as(g) {
        return Err(Error::SpaceMismatch);
    }
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Q::zero))
}

/// The distance function `dist(x_i, ·)`.
pub fn kuratowski(space: &Arc<FiniteMetricSpace>, i: usize) -> Result<MetricFunction> {
    if i >= space.len() {
        return Err(Error::IndexOutOfRange { index: i, size: space.len() });
    }
    Ok(MetricFunction { space: space.clone(), values: space.dist[i].clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    #[test]
    fn two_point_space() {
        let x = FiniteMetricSpace::from_matrix(m(&[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(x.len(), 2);
    }

    #[test]
    fn triangle_witness_is_named() {
        let err = FiniteMetricSpace::from_matrix(m(&[&[0, 1, 3], &[1, 0, 1], &[3, 1, 0]])).unwrap_err();
        assert_eq!(err, Error::TriangleViolation(0, 2, 1));
    }

    #[test]
    fn pointwise_axioms() {
        assert_eq!(
            FiniteMetricSpace::from_matrix(m(&[&[0, 1], &[2, 0]])).unwrap_err(),
            Error::Asymmetric(0, 1)
        );
        assert_eq!(
            FiniteMetricSpace::from_matrix(m(&[&[0, -1], &[-1, 0]])).unwrap_err(),
            Error::NegativeEntry(0, 1)
        );
        assert_eq!(
            FiniteMetricSpace::from_matrix(m(&[&[1, 1], &[1, 0]])).unwrap_err(),
            Error::NonzeroDiagonal(0)
        );
        assert_eq!(
            FiniteMetricSpace::from_matrix(m(&[&[0, 0], &[0, 0]])).unwrap_err(),
            Error::ZeroOffDiagonal(0, 1)
        );
        assert!(matches!(
            FiniteMetricSpace::from_matrix(vec![vec![qi(0), qi(1)], vec![qi(1)]]),
            Err(Error::NotSquare { row: 1, .. })
        ));
    }

    #[test]
    fn kuratowski_rows() {
        let x = Arc::new(FiniteMetricSpace::from_matrix(m(&[&[0, 2, 2], &[2, 0, 2], &[2, 2, 0]])).unwrap());
        let k = kuratowski(&x, 1).unwrap();
        assert_eq!(k.values(), &[qi(2), qi(0), qi(2)]);
        assert_eq!(sup_distance(&k, &kuratowski(&x, 0).unwrap()).unwrap(), qi(2));
        assert!(matches!(kuratowski(&x, 3), Err(Error::IndexOutOfRange { index: 3, size: 3 })));
    }

    #[test]
    fn sup_distance_componentwise() {
        let x = Arc::new(FiniteMetricSpace::from_matrix(m(&[&[0, 1], &[1, 0]])).unwrap());
        let f = MetricFunction::new(x.clone(), vec![qi(0), qi(1)]).unwrap();
        let g = MetricFunction::new(x.clone(), vec![qi(1), qi(0)]).unwrap();
        assert_eq!(sup_distance(&f, &g).unwrap(), qi(1));
        assert_eq!(sup_distance(&f, &f).unwrap(), qi(0));
        let y = Arc::new(FiniteMetricSpace::from_matrix(m(&[&[0, 2], &[2, 0]])).unwrap());
        let h = MetricFunction::new(y, vec![qi(0), qi(1)]).unwrap();
        assert_eq!(sup_distance(&f, &h).unwrap_err(), Error::SpaceMismatch);
    }

    #[test]
    fn csv_and_json_inputs() {
        let csv = "# comment\na,b,c\n0,1/2,1\n1/2,0,1/2\n1,1/2,0\n";
        let x = FiniteMetricSpace::from_csv(csv).unwrap();
        assert_eq!(x.labels(), &["a", "b", "c"]);
        assert_eq!(x.d(0, 1), &q(1, 2));
        let json = r#"{"labels":["u","v"],"dist":[[0,"3/2"],["3/2",0]]}"#;
        let y = FiniteMetricSpace::from_json(json).unwrap();
        assert_eq!(y.d(1, 0), &q(3, 2));
        assert!(FiniteMetricSpace::from_json(r#"{"labels":[],"dist":[],"x":1}"#).is_err());
    }
}
