//! alist serialization (MacKay layout, one-based, zero padded) and the JSON
//! sidecar that carries puncturing, block layout and provenance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BlockLayout, Provenance, SparsePcm};
use crate::error::{Error, Result};

/// Writes `pcm` as alist text.
///
/// Lines: `N M`, max column and row degree, column degrees, row degrees, then
/// one line per column and per row listing neighbors, padded with zeros to the
/// maximum degree.
pub fn write_alist(pcm: &SparsePcm) -> String {
    let col_deg: Vec<usize> = (0..pcm.cols()).map(|c| pcm.col(c).len()).collect();
    let row_deg: Vec<usize> = (0..pcm.rows()).map(|r| pcm.row(r).len()).collect();
    let max_c = col_deg.iter().copied().max().unwrap_or(0);
    let max_r = row_deg.iter().copied().max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", pcm.cols(), pcm.rows());
    let _ = writeln!(out, "{max_c} {max_r}");
    push_line(&mut out, col_deg.iter().copied());
    push_line(&mut out, row_deg.iter().copied());
    for c in 0..pcm.cols() {
        let adj = pcm.col(c);
        push_line(&mut out, padded(adj, max_c));
    }
    for r in 0..pcm.rows() {
        push_line(&mut out, padded(pcm.row(r), max_r));
    }
    out
}

fn padded(adj: &[usize], width: usize) -> impl Iterator<Item = usize> + '_ {
    adj.iter()
        .map(|&x| x + 1)
        .chain(std::iter::repeat(0))
        .take(width)
}

fn push_line(out: &mut String, values: impl Iterator<Item = usize>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Parses alist text. Zero padding is optional; the column and row lists must
/// describe the same edges.
pub fn read_alist(text: &str) -> Result<SparsePcm> {
    let mut tokens = text.split_whitespace().enumerate().map(|(k, t)| {
        t.parse::<usize>()
            .map_err(|_| Error::Parse(format!("alist token {} is not an integer: {t:?}", k + 1)))
    });
    let mut next = |what: &str| -> Result<usize> {
        tokens.next().unwrap_or_else(|| {
            Err(Error::Parse(format!(
                "alist ends early while reading {what}"
            )))
        })
    };
    let (n, m) = (next("N")?, next("M")?);
    let (max_c, max_r) = (next("max column degree")?, next("max row degree")?);
    let col_deg = (0..n)
        .map(|_| next("column degrees"))
        .collect::<Result<Vec<_>>>()?;
    let row_deg = (0..m)
        .map(|_| next("row degrees"))
        .collect::<Result<Vec<_>>>()?;
    if col_deg.iter().any(|&d| d > max_c) || row_deg.iter().any(|&d| d > max_r) {
        return Err(Error::Parse("alist degree exceeds declared maximum".into()));
    }
    let padded = |deg: &[usize], max: usize| deg.iter().all(|&d| d == max);
    // Padding is detectable only when some node is below the maximum degree.
    let pad_cols = !padded(&col_deg, max_c);
    let pad_rows = !padded(&row_deg, max_r);
    let mut from_cols = Vec::new();
    for (c, &d) in col_deg.iter().enumerate() {
        for k in 0..d {
            let r = next("column adjacency")?;
            if r == 0 || r > m {
                return Err(Error::Parse(format!(
                    "column {} entry {} out of range: {r}",
                    c + 1,
                    k + 1
                )));
            }
            from_cols.push((r - 1, c));
        }
        if pad_cols {
            read_padding(&mut next, max_c - d)?;
        }
    }
    let mut from_rows = Vec::new();
    for (r, &d) in row_deg.iter().enumerate() {
        for k in 0..d {
            let c = next("row adjacency")?;
            if c == 0 || c > n {
                return Err(Error::Parse(format!(
                    "row {} entry {} out of range: {c}",
                    r + 1,
                    k + 1
                )));
            }
            from_rows.push((r, c - 1));
        }
        if pad_rows {
            read_padding(&mut next, max_r - d)?;
        }
    }
    from_cols.sort_unstable();
    from_rows.sort_unstable();
    if from_cols != from_rows {
        return Err(Error::Parse("alist column and row lists disagree".into()));
    }
    SparsePcm::from_edges(m, n, from_rows)
}

/// Consumes `count` zero tokens. Files without padding are accepted only when
/// every node has maximum degree, so missing zeros surface as a mismatch.
fn read_padding(next: &mut impl FnMut(&str) -> Result<usize>, count: usize) -> Result<()> {
    for _ in 0..count {
        if next("padding")? != 0 {
            return Err(Error::Parse("expected zero padding in alist".into()));
        }
    }
    Ok(())
}

/// Metadata stored next to an alist file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcmSidecar {
    pub rows: usize,
    pub cols: usize,
    /// Punctured columns of the lifted matrix, one-based.
    pub punctured_columns: Vec<usize>,
    pub layout: Option<BlockLayout>,
    pub provenance: Option<Provenance>,
    pub four_cycles: u64,
}

impl PcmSidecar {
    pub fn describe(pcm: &SparsePcm) -> Self {
        Self {
            rows: pcm.rows(),
            cols: pcm.cols(),
            punctured_columns: pcm.punctured().iter().map(|c| c + 1).collect(),
            layout: pcm.layout(),
            provenance: pcm.provenance().cloned(),
            four_cycles: super::count_4_cycles(pcm),
        }
    }

    /// Attaches puncturing, layout and provenance to a matrix read from alist.
    pub fn apply(&self, pcm: SparsePcm) -> Result<SparsePcm> {
        if (pcm.rows(), pcm.cols()) != (self.rows, self.cols) {
            return Err(Error::Parse(format!(
                "sidecar describes {}x{}, alist holds {}x{}",
                self.rows,
                self.cols,
                pcm.rows(),
                pcm.cols()
            )));
        }
        if self.punctured_columns.contains(&0) {
            return Err(Error::Parse("punctured columns are one-based".into()));
        }
        let mut pcm = pcm.with_punctured(self.punctured_columns.iter().map(|c| c - 1).collect())?;
        if let Some(layout) = self.layout {
            pcm = pcm.with_layout(layout)?;
        }
        if let Some(p) = &self.provenance {
            pcm = pcm.with_provenance(p.clone());
        }
        Ok(pcm)
    }
}
