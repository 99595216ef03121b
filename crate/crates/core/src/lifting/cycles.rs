//! 4-cycle counting and removal by block-preserving edge swaps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SparsePcm;

/// Result of [`remove_4_cycles`].
#[derive(Debug, Clone)]
pub struct CycleRemoval {
    pub pcm: SparsePcm,
    pub initial: u64,
    pub residual: u64,
    pub swaps: usize,
    pub attempts: usize,
}

/// Number of 4-cycles: over unordered row pairs, `C(shared columns, 2)`.
pub fn count_4_cycles(pcm: &SparsePcm) -> u64 {
    let mut scan = PairScan::new(pcm.rows());
    (0..pcm.rows())
        .map(|r| scan.cycles(pcm, r, |r2| r2 > r))
        .sum()
}

struct PairScan {
    shared: Vec<u32>,
    touched: Vec<usize>,
}

impl PairScan {
    fn new(rows: usize) -> Self {
        Self {
            shared: vec![0; rows],
            touched: Vec::new(),
        }
    }

    /// Fills `shared` with column overlaps between `r` and accepted rows.
    fn fill(&mut self, pcm: &SparsePcm, r: usize, accept: impl Fn(usize) -> bool) {
        for &c in pcm.row(r) {
            for &r2 in pcm.col(c) {
                if r2 != r && accept(r2) {
                    if self.shared[r2] == 0 {
                        self.touched.push(r2);
                    }
                    self.shared[r2] += 1;
                }
            }
        }
    }

    fn cycles(&mut self, pcm: &SparsePcm, r: usize, accept: impl Fn(usize) -> bool) -> u64 {
        self.fill(pcm, r, accept);
        let mut total = 0;
        for r2 in self.touched.drain(..) {
            let s = self.shared[r2] as u64;
            total += s * s.saturating_sub(1) / 2;
            self.shared[r2] = 0;
        }
        total
    }

    /// Edges lying on some 4-cycle through `r` and a later row.
    fn cycle_edges(&mut self, pcm: &SparsePcm, r: usize, out: &mut Vec<(usize, usize)>) {
        self.fill(pcm, r, |r2| r2 > r);
        for r2 in self.touched.drain(..) {
            if self.shared[r2] >= 2 {
                for &c in pcm.row(r) {
                    if pcm.has_edge(r2, c) {
                        out.push((r, c));
                        out.push((r2, c));
                    }
                }
            }
            self.shared[r2] = 0;
        }
    }

    /// 4-cycles involving row `a` or row `b`.
    fn local(&mut self, pcm: &SparsePcm, a: usize, b: usize) -> u64 {
        let both = self.cycles(pcm, a, |_| true) + self.cycles(pcm, b, |_| true);
        let shared = pcm.row(a).iter().filter(|&&c| pcm.has_edge(b, c)).count() as u64;
        both - shared * shared.saturating_sub(1) / 2
    }
}

/// Hill descent on the 4-cycle count. Each attempt picks an edge `(r,c)` on a
/// 4-cycle and a random edge `(r2,c2)` of the same block, replaces them by
/// `(r,c2)` and `(r2,c)`, and keeps the swap only if the count drops. Block
/// row and column degrees are unchanged by construction.
pub fn remove_4_cycles(pcm: &SparsePcm, max_swaps: usize, seed: u64) -> CycleRemoval {
    let mut pcm = pcm.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scan = PairScan::new(pcm.rows());
    let initial = count_4_cycles(&pcm);
    let (mut attempts, mut swaps) = (0, 0);
    let mut bad = Vec::new();
    'outer: while attempts < max_swaps {
        bad.clear();
        for r in 0..pcm.rows() {
            scan.cycle_edges(&pcm, r, &mut bad);
        }
        if bad.is_empty() {
            break;
        }
        bad.sort_unstable();
        bad.dedup();
        bad.shuffle(&mut rng);
        for &(r, c) in &bad {
            if attempts >= max_swaps {
                break 'outer;
            }
            if !pcm.has_edge(r, c) {
                continue;
            }
            attempts += 1;
            let (rows, cols) = pcm.block_of(r, c);
            let r2 = rng.gen_range(rows);
            if r2 == r {
                continue;
            }
            let in_block: Vec<usize> = pcm
                .row(r2)
                .iter()
                .copied()
                .filter(|c2| cols.contains(c2))
                .collect();
            let Some(&c2) = in_block.choose(&mut rng) else {
                continue;
            };
            if c2 == c || pcm.has_edge(r, c2) || pcm.has_edge(r2, c) {
                continue;
            }
            let before = scan.local(&pcm, r, r2);
            pcm.move_edge(r, c, c2);
            pcm.move_edge(r2, c2, c);
            if scan.local(&pcm, r, r2) < before {
                swaps += 1;
            } else {
                pcm.move_edge(r, c2, c);
                pcm.move_edge(r2, c, c2);
            }
        }
    }
    let residual = count_4_cycles(&pcm);
    log::debug!("4-cycles {initial} -> {residual} after {swaps} swaps in {attempts} attempts");
    CycleRemoval {
        pcm,
        initial,
        residual,
        swaps,
        attempts,
    }
}
