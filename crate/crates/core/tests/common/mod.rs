//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;

use pli_core::lifting::SparsePcm;
use pli_core::protograph::{DegreeCounts, LocalDegreeDistribution};

/// Every codeword of a code with at most 16 columns.
pub fn codewords(h: &SparsePcm) -> Vec<Vec<u8>> {
    let n = h.cols();
    assert!(n <= 16);
    (0u32..1 << n)
        .map(|w| (0..n).map(|b| ((w >> b) & 1) as u8).collect::<Vec<u8>>())
        .filter(|w| h.is_codeword(w))
        .collect()
}

/// Block MAP decision for equiprobable codewords and its margin: the
/// log-likelihood gap to the runner-up codeword (infinite if there is none).
pub fn block_map(words: &[Vec<u8>], llr: &[f64]) -> (Vec<u8>, f64) {
    // log P(y | c) up to a constant: sum over ones of -LLR
    let score = |w: &[u8]| -> f64 {
        w.iter()
            .zip(llr)
            .map(|(&b, &l)| if b == 1 { -l } else { 0.0 })
            .sum()
    };
    let mut scored: Vec<(f64, &Vec<u8>)> = words.iter().map(|w| (score(w), w)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let margin = if scored.len() > 1 {
        scored[0].0 - scored[1].0
    } else {
        f64::INFINITY
    };
    (scored[0].1.clone(), margin)
}

/// Bitwise MAP log-likelihood ratios `ln P(c_i = 0 | y) / P(c_i = 1 | y)` for
/// equiprobable codewords.
pub fn bitwise_map(words: &[Vec<u8>], llr: &[f64]) -> Vec<f64> {
    let score = |w: &[u8]| -> f64 {
        w.iter()
            .zip(llr)
            .map(|(&b, &l)| if b == 1 { -l } else { 0.0 })
            .sum()
    };
    let scores: Vec<f64> = words.iter().map(|w| score(w)).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..llr.len())
        .map(|i| {
            let (mut p0, mut p1) = (0.0, 0.0);
            for (w, s) in words.iter().zip(&scores) {
                let e = (s - top).exp();
                if w[i] == 0 {
                    p0 += e;
                } else {
                    p1 += e;
                }
            }
            (p0 / p1).ln()
        })
        .collect()
}

/// Random parity-check matrix with `n` columns, every row of weight >= 2 and
/// every column covered. Needs `5 m >= n`.
pub fn random_code<R: Rng>(n: usize, m: usize, rng: &mut R) -> SparsePcm {
    assert!(
        m * n.min(5) >= n,
        "{m} rows of weight <= 5 cannot cover {n} columns"
    );
    loop {
        let rows: Vec<Vec<usize>> = (0..m)
            .map(|_| {
                let w = rng.gen_range(2..=n.min(5));
                rand::seq::index::sample(rng, n, w).into_vec()
            })
            .collect();
        let mut covered = vec![false; n];
        rows.iter().flatten().for_each(|&c| covered[c] = true);
        if covered.iter().all(|&c| c) {
            return SparsePcm::from_rows(n, &rows).expect("rows have distinct columns");
        }
    }
}

/// 4-cycles by comparing every pair of rows column by column.
/// Row count for a random code: at least 2 and enough to cover `n` columns.
pub fn random_rows<R: Rng>(n: usize, rng: &mut R) -> usize {
    rng.gen_range(2.max(n.div_ceil(5))..n)
}

pub fn brute_4_cycles(h: &SparsePcm) -> u64 {
    let mut total = 0;
    for a in 0..h.rows() {
        for b in a + 1..h.rows() {
            let shared = h.row(a).iter().filter(|&&c| h.has_edge(b, c)).count() as u64;
            total += shared * shared.saturating_sub(1) / 2;
        }
    }
    total
}

/// Minimum of `sum |c(k) - S L(k)|` over integer counts on the support with
/// both exact sums, searching `floor - radius ..= ceil + radius` per degree.
pub fn best_quantization(
    dist: &LocalDegreeDistribution,
    lifting: usize,
    radius: i64,
) -> (f64, Vec<(u32, i64)>) {
    let support = dist.support().to_vec();
    let ideal: Vec<f64> = support
        .iter()
        .map(|&k| lifting as f64 * dist.mass(k))
        .collect();
    let ranges: Vec<(i64, i64)> = ideal
        .iter()
        .map(|t| ((t.floor() as i64 - radius).max(0), t.ceil() as i64 + radius))
        .collect();
    let want_edges = (lifting * dist.target() as usize) as i64;
    let mut best = (f64::INFINITY, Vec::new());
    let mut c: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let nodes: i64 = c.iter().sum();
        let edges: i64 = c.iter().zip(&support).map(|(x, &k)| x * k as i64).sum();
        if nodes == lifting as i64 && edges == want_edges {
            let dev: f64 = c
                .iter()
                .zip(&ideal)
                .map(|(&x, t)| (x as f64 - t).abs())
                .sum();
            if dev < best.0 {
                best = (
                    dev,
                    support.iter().copied().zip(c.iter().copied()).collect(),
                );
            }
        }
        // odometer
        let mut p = c.len();
        loop {
            if p == 0 {
                return best;
            }
            p -= 1;
            if c[p] < ranges[p].1 {
                c[p] += 1;
                break;
            }
            c[p] = ranges[p].0;
        }
    }
}

/// BPSK over AWGN with noise deviation `sigma`, as channel LLRs.
pub fn noisy_llr<R: Rng>(word: &[u8], sigma: f64, rng: &mut R) -> Vec<f64> {
    word.iter()
        .map(|&b| {
            let y = if b == 0 { 1.0 } else { -1.0 }
                + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
            2.0 * y / (sigma * sigma)
        })
        .collect()
}

/// Sum-product run to a message fixed point (or `max_iter`), for oracle comparisons.
pub fn converged_spa(h: &SparsePcm, llr: &[f64], max_iter: usize) -> pli_core::sim::DecodeResult {
    let config = pli_core::sim::DecoderConfig {
        max_iter,
        early_stop: false,
        ..Default::default()
    };
    pli_core::sim::SpaDecoder::new(h, config).decode(llr)
}

pub fn deviation(dist: &LocalDegreeDistribution, counts: &DegreeCounts, lifting: usize) -> f64 {
    (1..=dist.d_max())
        .map(|k| (counts.count(k) as f64 - lifting as f64 * dist.mass(k)).abs())
        .sum()
}
