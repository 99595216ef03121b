//! Lifting protographs into binary parity-check matrices.
//!
//! A conventional base entry `B(i,j)` becomes the sum of `B(i,j)` random,
//! non-overlapping `S x S` permutation matrices. A PLI entry becomes a random
//! bipartite graph in which every check node has degree `d^C(i,j)` and the
//! variable-node degrees follow the quantized local distribution; it is built
//! by stub matching with swap repair of parallel edges.

mod alist;
mod cycles;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use alist::{read_alist, write_alist, PcmSidecar};
pub use cycles::{count_4_cycles, remove_4_cycles, CycleRemoval};

use crate::error::{Error, Result};
use crate::optimize::derive_seed;
use crate::protograph::{quantize_distribution, BaseMatrix, DegreeCounts, PliProtograph};

/// Default lifting factor for desk-scale runs.
pub const DEFAULT_LIFTING: usize = 1000;

/// How the matrix was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub protograph: String,
    pub lifting: usize,
    pub seed: u64,
}

/// Shape of the protograph the matrix was lifted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub base_rows: usize,
    pub base_cols: usize,
    pub lifting: usize,
}

/// Binary sparse parity-check matrix with row and column adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePcm {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<usize>>,
    col_adj: Vec<Vec<usize>>,
    punctured: Vec<usize>,
    layout: Option<BlockLayout>,
    provenance: Option<Provenance>,
}

impl SparsePcm {
    /// Builds a matrix from `(row, col)` pairs; duplicates are an error.
    pub fn from_edges(
        rows: usize,
        cols: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut row_adj = vec![Vec::new(); rows];
        let mut col_adj = vec![Vec::new(); cols];
        for (r, c) in edges {
            if r >= rows || c >= cols {
                return Err(Error::Lifting(format!(
                    "edge ({r},{c}) outside {rows}x{cols}"
                )));
            }
            row_adj[r].push(c);
            col_adj[c].push(r);
        }
        for (r, adj) in row_adj.iter_mut().enumerate() {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Lifting(format!("row {r} has a parallel edge")));
            }
        }
        col_adj.iter_mut().for_each(|a| a.sort_unstable());
        Ok(Self {
            rows,
            cols,
            row_adj,
            col_adj,
            punctured: Vec::new(),
            layout: None,
            provenance: None,
        })
    }

    /// Builds from per-row column lists.
    pub fn from_rows(cols: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let edges = rows
            .iter()
            .enumerate()
            .flat_map(|(r, cs)| cs.iter().map(move |&c| (r, c)));
        Self::from_edges(rows.len(), cols, edges)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Columns of row `r`, ascending.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    /// Rows of column `c`, ascending.
    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn edge_count(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&c).is_ok()
    }

    /// Expanded punctured columns, ascending.
    pub fn punctured(&self) -> &[usize] {
        &self.punctured
    }

    pub fn with_punctured(mut self, mut punctured: Vec<usize>) -> Result<Self> {
        punctured.sort_unstable();
        punctured.dedup();
        if punctured.last().is_some_and(|&c| c >= self.cols) {
            return Err(Error::Lifting("punctured column out of range".into()));
        }
        self.punctured = punctured;
        Ok(self)
    }

    pub fn layout(&self) -> Option<BlockLayout> {
        self.layout
    }

    pub fn with_layout(mut self, layout: BlockLayout) -> Result<Self> {
        if layout.base_rows * layout.lifting != self.rows
            || layout.base_cols * layout.lifting != self.cols
        {
            return Err(Error::Lifting(format!(
                "layout {}x{} with S = {} does not match {}x{}",
                layout.base_rows, layout.base_cols, layout.lifting, self.rows, self.cols
            )));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    /// `H x` over GF(2) is zero.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.row_adj
            .iter()
            .all(|adj| adj.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) == 0)
    }

    /// Moves edge `(r, c_old)` to `(r, c_new)`. Caller guarantees `(r, c_new)` is absent.
    pub(crate) fn move_edge(&mut self, r: usize, c_old: usize, c_new: usize) {
        let row = &mut self.row_adj[r];
        let p = row.binary_search(&c_old).expect("edge present");
        row.remove(p);
        let q = row.binary_search(&c_new).unwrap_err();
        row.insert(q, c_new);
        let col = &mut self.col_adj[c_old];
        let p = col.binary_search(&r).expect("edge present");
        col.remove(p);
        let col = &mut self.col_adj[c_new];
        let q = col.binary_search(&r).unwrap_err();
        col.insert(q, r);
    }

    /// Block containing row `r` and column `c` under the layout, or the whole matrix.
    pub(crate) fn block_of(
        &self,
        r: usize,
        c: usize,
    ) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        match self.layout {
            Some(l) => {
                let (bi, bj) = (r / l.lifting, c / l.lifting);
                (
                    bi * l.lifting..(bi + 1) * l.lifting,
                    bj * l.lifting..(bj + 1) * l.lifting,
                )
            }
            None => (0..self.rows, 0..self.cols),
        }
    }

    /// Number of edges of row `r` that fall in column block `bj`.
    pub fn block_row_degree(&self, r: usize, bj: usize, lifting: usize) -> usize {
        let lo = bj * lifting;
        self.row_adj[r]
            .iter()
            .filter(|&&c| c >= lo && c < lo + lifting)
            .count()
    }

    /// Number of edges of column `c` that fall in row block `bi`.
    pub fn block_col_degree(&self, c: usize, bi: usize, lifting: usize) -> usize {
        let lo = bi * lifting;
        self.col_adj[c]
            .iter()
            .filter(|&&r| r >= lo && r < lo + lifting)
            .count()
    }
}

/// Replaces each entry of `base` by a sum of non-overlapping random permutation
/// matrices. Blocks use independent streams derived from `(seed, i, j)`.
pub fn lift_conventional(base: &BaseMatrix, lifting: usize, seed: u64) -> Result<SparsePcm> {
    let max = base.max_entry() as usize;
    if lifting < max.max(1) {
        return Err(Error::Lifting(format!(
            "lifting factor {lifting} below the largest base entry {max}"
        )));
    }
    let mut edges = Vec::new();
    for (i, j) in base.edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64, j as u64]));
        let block = permutation_block(base.entry(i, j) as usize, lifting, &mut rng)?;
        edges.extend(
            block
                .into_iter()
                .map(|(r, c)| (i * lifting + r, j * lifting + c)),
        );
    }
    finish(base, lifting, edges)
}

fn finish(base: &BaseMatrix, lifting: usize, edges: Vec<(usize, usize)>) -> Result<SparsePcm> {
    let punctured = base
        .punctured()
        .iter()
        .flat_map(|&j| j * lifting..(j + 1) * lifting)
        .collect();
    SparsePcm::from_edges(base.rows() * lifting, base.cols() * lifting, edges)?
        .with_punctured(punctured)?
        .with_layout(BlockLayout {
            base_rows: base.rows(),
            base_cols: base.cols(),
            lifting,
        })
}

/// `count` disjoint permutations of `0..size`, as `(row, col)` pairs.
fn permutation_block<R: Rng>(
    count: usize,
    size: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let mut used: Vec<Vec<usize>> = vec![Vec::with_capacity(count); size];
    for _ in 0..count {
        let mut perm: Vec<usize> = (0..size).collect();
        let mut placed = false;
        for _attempt in 0..20 {
            perm.shuffle(rng);
            if resolve_overlaps(&mut perm, &used, rng) {
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Lifting(format!(
                "no permutation disjoint from {} others at S = {size}",
                used[0].len()
            )));
        }
        for (r, &c) in perm.iter().enumerate() {
            used[r].push(c);
        }
    }
    Ok(used
        .into_iter()
        .enumerate()
        .flat_map(|(r, cs)| cs.into_iter().map(move |c| (r, c)))
        .collect())
}

/// Swaps entries of `perm` until no row reuses a column; false if stuck.
fn resolve_overlaps<R: Rng>(perm: &mut [usize], used: &[Vec<usize>], rng: &mut R) -> bool {
    let size = perm.len();
    let clash = |r: usize, c: usize| used[r].contains(&c);
    for r in 0..size {
        let mut tries = 0;
        while clash(r, perm[r]) {
            let r2 = rng.gen_range(0..size);
            if r2 != r && !clash(r, perm[r2]) && !clash(r2, perm[r]) {
                perm.swap(r, r2);
            }
            tries += 1;
            if tries > 50 * size + 100 {
                return false;
            }
        }
    }
    true
}

/// Lifts a PLI: every block gets exactly the quantized degree counts.
pub fn lift_pli(pli: &PliProtograph, lifting: usize, seed: u64) -> Result<SparsePcm> {
    pli.ensure_valid()?;
    if lifting == 0 {
        return Err(Error::Lifting("lifting factor must be positive".into()));
    }
    let mut edges = Vec::new();
    for ((i, j), dist) in pli.dists() {
        let counts = quantize_distribution(dist, lifting)?;
        if counts.max_degree() as usize > lifting {
            return Err(Error::Infeasible(format!(
                "({},{}): degree {} exceeds lifting factor {lifting}",
                i + 1,
                j + 1,
                counts.max_degree()
            )));
        }
        let mut block = None;
        for retry in 0..4u64 {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64, j as u64, retry]));
            if let Some(b) = stub_block(dist.target() as usize, &counts, lifting, &mut rng) {
                block = Some(b);
                break;
            }
        }
        let block = block.ok_or_else(|| {
            Error::Lifting(format!(
                "stub matching failed for block ({},{})",
                i + 1,
                j + 1
            ))
        })?;
        edges.extend(
            block
                .into_iter()
                .map(|(r, c)| (i * lifting + r, j * lifting + c)),
        );
    }
    finish(pli.base(), lifting, edges)
}

/// Random simple bipartite graph with row degree `row_degree` and the given
/// column degree counts; `None` when parallel edges cannot be repaired.
fn stub_block<R: Rng>(
    row_degree: usize,
    counts: &DegreeCounts,
    size: usize,
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let mut col_degrees = counts.degree_sequence();
    col_degrees.shuffle(rng);
    let mut col_stubs: Vec<usize> = col_degrees
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat(c).take(k as usize))
        .collect();
    col_stubs.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..size)
        .flat_map(|r| std::iter::repeat(r).take(row_degree))
        .zip(col_stubs)
        .collect();
    let mut rows: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); size];
    for &(r, c) in &edges {
        *rows[r].entry(c).or_insert(0) += 1;
    }
    let n = edges.len();
    let mut budget = 200 * n + 1000;
    for e in 0..n {
        loop {
            let (r, c) = edges[e];
            if rows[r][&c] == 1 {
                break;
            }
            if budget == 0 {
                return None;
            }
            budget -= 1;
            let f = rng.gen_range(0..n);
            let (r2, c2) = edges[f];
            if r2 == r || c2 == c || rows[r].contains_key(&c2) || rows[r2].contains_key(&c) {
                continue;
            }
            // (r,c),(r2,c2) -> (r,c2),(r2,c)
            for (row, col, delta) in [(r, c, -1i64), (r2, c2, -1), (r, c2, 1), (r2, c, 1)] {
                let slot = rows[row].entry(col).or_insert(0);
                *slot = (*slot as i64 + delta) as usize;
                if *slot == 0 {
                    rows[row].remove(&col);
                }
            }
            edges[e] = (r, c2);
            edges[f] = (r2, c);
        }
    }
    Some(edges)
}

/// One failed invariant found by [`audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditIssue(pub String);

/// Checks the block structure of `pcm` against `pli`: dimensions, exact local
/// check-node degrees and exact variable-node degree histograms per block.
pub fn audit(pcm: &SparsePcm, pli: &PliProtograph) -> Result<Vec<AuditIssue>> {
    let layout = pcm
        .layout()
        .ok_or_else(|| Error::Lifting("matrix carries no block layout".into()))?;
    let s = layout.lifting;
    let mut issues = Vec::new();
    if layout.base_rows != pli.rows() || layout.base_cols != pli.cols() {
        issues.push(AuditIssue(format!(
            "layout {}x{} does not match base {}x{}",
            layout.base_rows,
            layout.base_cols,
            pli.rows(),
            pli.cols()
        )));
        return Ok(issues);
    }
    for r in 0..pcm.rows() {
        if pcm.row(r).windows(2).any(|w| w[0] >= w[1]) {
            issues.push(AuditIssue(format!(
                "row {r} has parallel or unsorted edges"
            )));
        }
    }
    for i in 0..pli.rows() {
        for j in 0..pli.cols() {
            let d = pli.base().entry(i, j) as usize;
            let bad_rows = (i * s..(i + 1) * s)
                .filter(|&r| pcm.block_row_degree(r, j, s) != d)
                .count();
            if bad_rows > 0 {
                issues.push(AuditIssue(format!(
                    "block ({},{}): {bad_rows} rows without local degree {d}",
                    i + 1,
                    j + 1
                )));
            }
            let mut hist = vec![0usize; 0];
            for c in j * s..(j + 1) * s {
                let k = pcm.block_col_degree(c, i, s);
                if k >= hist.len() {
                    hist.resize(k + 1, 0);
                }
                hist[k] += 1;
            }
            let expected = match pli.dist(i, j) {
                Some(dist) => quantize_distribution(dist, s)?,
                None => DegreeCounts::from_dense(Vec::new()),
            };
            let zero_cols = if d == 0 { s } else { 0 };
            let got_zero = hist.first().copied().unwrap_or(0);
            let mismatch = got_zero != zero_cols
                || (1..hist.len().max(expected.as_slice().len() + 1))
                    .any(|k| hist.get(k).copied().unwrap_or(0) != expected.count(k as u32));
            if mismatch {
                issues.push(AuditIssue(format!(
                    "block ({},{}): column degree histogram {:?} differs from quantization {:?}",
                    i + 1,
                    j + 1,
                    hist,
                    expected.iter().collect::<Vec<_>>()
                )));
            }
        }
    }
    Ok(issues)
}

/// Per-block `(row degree, column degree histogram)` summary used to compare
/// matrices before and after edge swaps.
pub fn degree_signature(pcm: &SparsePcm) -> Vec<(Vec<usize>, Vec<usize>)> {
    let Some(l) = pcm.layout() else {
        return vec![(
            (0..pcm.rows()).map(|r| pcm.row(r).len()).collect(),
            (0..pcm.cols()).map(|c| pcm.col(c).len()).collect(),
        )];
    };
    let s = l.lifting;
    let mut out = Vec::new();
    for i in 0..l.base_rows {
        for j in 0..l.base_cols {
            out.push((
                (i * s..(i + 1) * s)
                    .map(|r| pcm.block_row_degree(r, j, s))
                    .collect(),
                (j * s..(j + 1) * s)
                    .map(|c| pcm.block_col_degree(c, i, s))
                    .collect(),
            ));
        }
    }
    out
}
