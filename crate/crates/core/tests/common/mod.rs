//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use num_traits::Signed;
use rand::Rng;
use translen::metric::FiniteMetricSpace;
use translen::Q;

/// Shortest-path closure of random positive rational weights; always a metric.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize) -> Arc<FiniteMetricSpace> {
    let mut d = vec![vec![Q::from_integer(0.into()); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = Q::new(rng.gen_range(1..=12i64).into(), rng.gen_range(1..=4i64).into());
            d[i][j] = w.clone();
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    Arc::new(FiniteMetricSpace::from_matrix(d).expect("closure is a metric"))
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            go(k - 1, a, out);
            let j = if k % 2 == 0 { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    go(n, &mut a, &mut out);
    out
}

/// Maximum number of pairwise disjoint occurrences of `w` in `x`, by trying
/// every include/exclude choice over the occurrence list.
pub fn brute_disjoint(w: &[i8], x: &[i8]) -> usize {
    if w.is_empty() || w.len() > x.len() {
        return 0;
    }
    let starts: Vec<usize> = (0..=x.len() - w.len()).filter(|&i| &x[i..i + w.len()] == w).collect();
    fn best(starts: &[usize], len: usize, free_from: usize) -> usize {
        match starts.split_first() {
            None => 0,
            Some((&s, rest)) => {
                let skip = best(rest, len, free_from);
                if s >= free_from {
                    skip.max(1 + best(rest, len, s + len))
                } else {
                    skip
                }
            }
        }
    }
    best(&starts, w.len(), 0)
}

/// Every freely reduced word over `±1, ±2` of length exactly `len`.
pub fn reduced_words(len: usize) -> Vec<Vec<i8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &out {
            for l in [1i8, -1, 2, -2] {
                if w.last() != Some(&-l) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

/// Heisenberg elements as upper unitriangular integer matrices `(x, y, z)`,
/// `[[1,x,z],[0,1,y],[0,0,1]]`.
pub fn unitriangular_mul(a: (i64, i64, i64), b: (i64, i64, i64)) -> (i64, i64, i64) {
    (a.0 + b.0, a.1 + b.1, a.2 + b.2 + a.0 * b.1)
}

/// Word distances in `Z^2` for the generating set `{v : |c . v| < bound}` restricted to
/// a coordinate box, by breadth-first search from the origin.
pub struct BoxBfs {
    pub dist: HashMap<(i64, i64), u32>,
}

impl BoxBfs {
    pub fn new(coeffs: (Q, Q), bound: &Q, gen_box: i64, box_radius: i64, max_depth: u32) -> Self {
        let mut gens = Vec::new();
        for p in -gen_box..=gen_box {
            for q in -gen_box..=gen_box {
                let v = &coeffs.0 * Q::from_integer(p.into()) + &coeffs.1 * Q::from_integer(q.into());
                if (p, q) != (0, 0) && &v.abs() < bound {
                    gens.push((p, q));
                }
            }
        }
        let mut dist = HashMap::new();
        dist.insert((0, 0), 0);
        let mut queue = VecDeque::from([(0i64, 0i64)]);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == max_depth {
                continue;
            }
            for g in &gens {
                let w = (v.0 + g.0, v.1 + g.1);
                if w.0.abs() <= box_radius && w.1.abs() <= box_radius && !dist.contains_key(&w) {
                    dist.insert(w, d + 1);
                    queue.push_back(w);
                }
            }
        }
        BoxBfs { dist }
    }
}
