//! Integer realization of a local degree distribution for a given lifting factor.

use super::distribution::LocalDegreeDistribution;
use crate::error::{Error, Result};

/// Number of variable nodes of each degree within one `S x S` subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeCounts {
    counts: Vec<usize>,
}

impl DegreeCounts {
    pub fn from_dense(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    /// Count of degree `k`.
    pub fn count(&self, k: u32) -> usize {
        if k == 0 {
            return 0;
        }
        self.counts.get(k as usize - 1).copied().unwrap_or(0)
    }

    /// Dense counts indexed by `degree - 1`.
    pub fn as_slice(&self) -> &[usize] {
        &self.counts
    }

    /// `(degree, count)` for every degree with a nonzero count.
    pub fn iter(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32 + 1, c))
    }

    /// Number of nodes.
    pub fn nodes(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of edges.
    pub fn edges(&self) -> usize {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) * c)
            .sum()
    }

    pub fn max_degree(&self) -> u32 {
        self.iter().map(|(k, _)| k).max().unwrap_or(0)
    }

    /// Degree of every node, ascending.
    pub fn degree_sequence(&self) -> Vec<u32> {
        self.iter()
            .flat_map(|(k, c)| std::iter::repeat(k).take(c))
            .collect()
    }
}

/// Rounds `S * L(k)` to integer counts with `sum c(k) = S` and
/// `sum k c(k) = S d^C` exactly.
///
/// Counts start from largest-remainder rounding. A repair pass then moves single
/// nodes between neighbouring support degrees, cheapest deviation per unit of
/// edge change first, until the edge total matches. When the support alone
/// cannot hit the edge total, moves into any degree of `{1, ..., d_max}` are
/// allowed. A repaired result on the support is then replaced by the exact
/// minimizer of `sum |c(k) - S L(k)|` if one is strictly better.
pub fn quantize_distribution(
    dist: &LocalDegreeDistribution,
    lifting: usize,
) -> Result<DegreeCounts> {
    if lifting == 0 {
        return Err(Error::Domain("lifting factor must be at least 1".into()));
    }
    let d_max = dist.d_max() as usize;
    let target_deg = dist.target() as usize;
    if target_deg == 0 || target_deg > d_max {
        return Err(Error::Infeasible(format!(
            "edge total S*d^C = {lifting}*{target_deg} cannot be met with degrees in 1..={d_max}"
        )));
    }
    let s = lifting as f64;
    let ideal: Vec<f64> = dist.masses().iter().map(|p| s * p.max(0.0)).collect();
    let mut counts: Vec<i64> = ideal.iter().map(|t| t.floor() as i64).collect();

    // largest remainder, ties to the lower degree
    let mut order: Vec<usize> = (0..d_max).filter(|&i| ideal[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut missing = lifting as i64 - counts.iter().sum::<i64>();
    if order.is_empty() && missing != 0 {
        return Err(Error::Infeasible("distribution has empty support".into()));
    }
    let mut idx = 0;
    while missing > 0 {
        counts[order[idx % order.len()]] += 1;
        missing -= 1;
        idx += 1;
    }
    // masses summing above one: take nodes back from the smallest remainders
    let mut idx = order.len();
    while missing < 0 {
        idx = if idx == 0 { order.len() - 1 } else { idx - 1 };
        if counts[order[idx]] > 0 {
            counts[order[idx]] -= 1;
            missing += 1;
        }
    }

    let support: Vec<usize> = dist.support().iter().map(|&k| k as usize - 1).collect();
    let want_edges = (lifting * target_deg) as i64;
    loop {
        let have: i64 = counts
            .iter()
            .enumerate()
            .map(|(i, c)| (i as i64 + 1) * c)
            .sum();
        let gap = want_edges - have;
        if gap == 0 {
            break;
        }
        let mv = best_move(&counts, &ideal, gap, adjacent_pairs(&support))
            .or_else(|| best_move(&counts, &ideal, gap, all_pairs(&support, &support)))
            .or_else(|| {
                let omega: Vec<usize> = (0..d_max).collect();
                best_move(&counts, &ideal, gap, all_pairs(&omega, &omega))
            });
        match mv {
            Some((from, to)) => {
                counts[from] -= 1;
                counts[to] += 1;
            }
            None => {
                return Err(Error::Infeasible(format!(
                    "edge total off by {gap} and no single-node move can close it"
                )))
            }
        }
    }
    let on_support = counts
        .iter()
        .enumerate()
        .all(|(i, &c)| c == 0 || support.binary_search(&i).is_ok());
    if on_support {
        if let Some(better) =
            exact_on_support(&counts, &ideal, &support, lifting as i64, want_edges)
        {
            counts = better;
        }
    }
    Ok(DegreeCounts {
        counts: counts.into_iter().map(|c| c as usize).collect(),
    })
}

fn deviation(counts: &[i64], ideal: &[f64]) -> f64 {
    counts
        .iter()
        .zip(ideal)
        .map(|(&c, t)| (c as f64 - t).abs())
        .sum()
}

/// Dynamic program over the support with state `(nodes, edges)`. Any count
/// vector beating `start` deviates from the ideal by less than its deviation in
/// every coordinate, which bounds the per-degree window.
fn exact_on_support(
    start: &[i64],
    ideal: &[f64],
    support: &[usize],
    nodes: i64,
    edges: i64,
) -> Option<Vec<i64>> {
    use std::collections::BTreeMap;
    let bound = deviation(start, ideal);
    let radius = bound.ceil() as i64 + 1;
    // state -> (deviation so far, counts chosen so far)
    let mut states: BTreeMap<(i64, i64), (f64, Vec<i64>)> = BTreeMap::new();
    states.insert((0, 0), (0.0, Vec::new()));
    for &i in support {
        let lo = (ideal[i].floor() as i64 - radius).max(0);
        let hi = ideal[i].ceil() as i64 + radius;
        let mut next: BTreeMap<(i64, i64), (f64, Vec<i64>)> = BTreeMap::new();
        for (&(n, e), (dev, chosen)) in &states {
            for c in lo..=hi {
                let (n2, e2) = (n + c, e + c * (i as i64 + 1));
                let d2 = dev + (c as f64 - ideal[i]).abs();
                if n2 > nodes || e2 > edges || d2 >= bound {
                    continue;
                }
                let better = next.get(&(n2, e2)).map_or(true, |(d, _)| d2 < *d);
                if better {
                    let mut v = chosen.clone();
                    v.push(c);
                    next.insert((n2, e2), (d2, v));
                }
            }
        }
        states = next;
    }
    let (dev, chosen) = states.remove(&(nodes, edges))?;
    // ignore float noise: only a real improvement replaces the repaired counts
    if dev > bound - 1e-9 {
        return None;
    }
    let mut out = vec![0; start.len()];
    for (&i, c) in support.iter().zip(chosen) {
        out[i] = c;
    }
    Some(out)
}

fn adjacent_pairs(support: &[usize]) -> Vec<(usize, usize)> {
    support
        .windows(2)
        .flat_map(|w| [(w[0], w[1]), (w[1], w[0])])
        .collect()
}

fn all_pairs(from: &[usize], to: &[usize]) -> Vec<(usize, usize)> {
    from.iter()
        .flat_map(|&a| to.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
        .collect()
}

/// Cheapest admissible move: changes the edge total towards `gap` without
/// overshooting, ranked by added deviation per unit of edge change.
fn best_move(
    counts: &[i64],
    ideal: &[f64],
    gap: i64,
    pairs: Vec<(usize, usize)>,
) -> Option<(usize, usize)> {
    let dev = |i: usize, c: i64| (c as f64 - ideal[i]).abs();
    pairs
        .into_iter()
        .filter(|&(from, to)| {
            let step = to as i64 - from as i64;
            counts[from] > 0 && step.signum() == gap.signum() && step.abs() <= gap.abs()
        })
        .map(|(from, to)| {
            let cost = dev(from, counts[from] - 1) - dev(from, counts[from])
                + dev(to, counts[to] + 1)
                - dev(to, counts[to]);
            let step = (to as i64 - from as i64).abs() as f64;
            (cost / step, from, to)
        })
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        })
        .map(|(_, from, to)| (from, to))
}
