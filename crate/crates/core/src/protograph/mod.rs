//! Base matrices and protographs with local irregularity (PLI).
//!
//! A conventional protograph is described by its base matrix alone. A PLI keeps
//! the base matrix entries as local check-node degrees and attaches a local
//! variable-node degree distribution to every nonzero entry. A conventional
//! protograph is the PLI whose distributions are all point masses.

mod distribution;
mod json;
mod quantize;

use std::collections::BTreeSet;
use std::fmt;

pub use distribution::{
    joint_realizations, DistributionViolation, EdgePerspectiveDistribution, JointRealizations,
    LocalDegreeDistribution, Realization, CONSTRAINT_TOL, DEFAULT_MAX_DEGREE, SUPPORT_TOL,
};
pub use json::ProtographFile;
pub use quantize::{quantize_distribution, DegreeCounts};

use crate::error::{Error, Result};

/// Zero-based `(row, column)` index of a base-matrix entry.
pub type EdgeIndex = (usize, usize);

/// Protomatrix of local check-node degrees plus the set of punctured columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    punctured: BTreeSet<usize>,
}

impl BaseMatrix {
    /// Builds a base matrix of positive design rate.
    pub fn new(entries: Vec<Vec<u32>>, punctured: impl IntoIterator<Item = usize>) -> Result<Self> {
        let base = Self::new_sub_rate(entries, punctured)?;
        if base.cols <= base.rows {
            return Err(Error::InvalidBase(format!(
                "{} columns do not exceed {} rows (design rate would be non-positive)",
                base.cols, base.rows
            )));
        }
        Ok(base)
    }

    /// Like [`BaseMatrix::new`] but accepts `n <= m`, for rate-zero analysis.
    pub fn new_sub_rate(
        entries: Vec<Vec<u32>>,
        punctured: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let rows = entries.len();
        if rows == 0 {
            return Err(Error::InvalidBase("no rows".into()));
        }
        let cols = entries[0].len();
        if cols == 0 {
            return Err(Error::InvalidBase("no columns".into()));
        }
        if let Some(i) = entries.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidBase(format!(
                "row {} has {} entries, expected {cols}",
                i + 1,
                entries[i].len()
            )));
        }
        let flat: Vec<u32> = entries.into_iter().flatten().collect();
        for i in 0..rows {
            if (0..cols).all(|j| flat[i * cols + j] == 0) {
                return Err(Error::InvalidBase(format!(
                    "check node {} is isolated",
                    i + 1
                )));
            }
        }
        for j in 0..cols {
            if (0..rows).all(|i| flat[i * cols + j] == 0) {
                return Err(Error::InvalidBase(format!(
                    "variable node {} is isolated",
                    j + 1
                )));
            }
        }
        let punctured: BTreeSet<usize> = punctured.into_iter().collect();
        if let Some(&j) = punctured.iter().find(|&&j| j >= cols) {
            return Err(Error::InvalidBase(format!(
                "punctured column {} out of range",
                j + 1
            )));
        }
        if punctured.len() >= cols {
            return Err(Error::DegenerateRate(cols));
        }
        Ok(Self {
            rows,
            cols,
            entries: flat,
            punctured,
        })
    }

    /// Number of check nodes `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of variable nodes `n`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    /// Nonzero entries in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeIndex> + '_ {
        (0..self.rows)
            .flat_map(move |i| (0..self.cols).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.entry(i, j) > 0)
    }

    pub fn is_punctured(&self, j: usize) -> bool {
        self.punctured.contains(&j)
    }

    /// Zero-based punctured column indices.
    pub fn punctured(&self) -> &BTreeSet<usize> {
        &self.punctured
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    /// `(n - m) / (n - n_punc)`.
    pub fn design_rate(&self) -> Result<DesignRate> {
        let den = self.cols - self.punctured.len();
        if den == 0 {
            return Err(Error::DegenerateRate(self.cols));
        }
        let num = self.cols.saturating_sub(self.rows);
        Ok(DesignRate::new(num, den))
    }
}

/// Design rate as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DesignRate {
    pub numerator: usize,
    pub denominator: usize,
}

impl DesignRate {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        let g = gcd(numerator, denominator).max(1);
        Self {
            numerator: numerator / g,
            denominator: denominator / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for DesignRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Base matrix together with a local degree distribution per nonzero entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PliProtograph {
    base: BaseMatrix,
    dists: Vec<Option<LocalDegreeDistribution>>,
}

impl PliProtograph {
    /// Assembles a PLI without checking the distributions against the base.
    ///
    /// Use [`validate`] to inspect the result or [`PliProtograph::new`] to reject
    /// invalid input up front.
    pub fn from_parts(
        base: BaseMatrix,
        dists: impl IntoIterator<Item = (EdgeIndex, LocalDegreeDistribution)>,
    ) -> Result<Self> {
        let mut slots = vec![None; base.rows * base.cols];
        for ((i, j), d) in dists {
            if i >= base.rows || j >= base.cols {
                return Err(Error::InvalidProtograph(format!(
                    "distribution index ({},{}) outside {}x{} base",
                    i + 1,
                    j + 1,
                    base.rows,
                    base.cols
                )));
            }
            slots[i * base.cols + j] = Some(d);
        }
        Ok(Self { base, dists: slots })
    }

    /// Assembles and validates a PLI.
    pub fn new(
        base: BaseMatrix,
        dists: impl IntoIterator<Item = (EdgeIndex, LocalDegreeDistribution)>,
    ) -> Result<Self> {
        let pli = Self::from_parts(base, dists)?;
        pli.ensure_valid()?;
        Ok(pli)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidProtograph(report.to_string()))
        }
    }

    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    pub fn rows(&self) -> usize {
        self.base.rows
    }

    pub fn cols(&self) -> usize {
        self.base.cols
    }

    /// Distribution of entry `(i, j)`; `None` for a zero entry.
    pub fn dist(&self, i: usize, j: usize) -> Option<&LocalDegreeDistribution> {
        self.dists[i * self.base.cols + j].as_ref()
    }

    /// Distributions of the nonzero entries, row-major.
    pub fn dists(&self) -> impl Iterator<Item = (EdgeIndex, &LocalDegreeDistribution)> {
        let cols = self.base.cols;
        self.dists
            .iter()
            .enumerate()
            .filter_map(move |(p, d)| d.as_ref().map(|d| ((p / cols, p % cols), d)))
    }

    /// True when every distribution is a point mass at its base entry.
    pub fn is_regular(&self) -> bool {
        self.dists().all(|(_, d)| d.is_regular())
    }

    /// Copy of `self` with the distribution of `edge` replaced.
    pub fn with_dist(&self, edge: EdgeIndex, dist: LocalDegreeDistribution) -> Result<Self> {
        let (i, j) = edge;
        if i >= self.rows() || j >= self.cols() || self.base.entry(i, j) == 0 {
            return Err(Error::InvalidProtograph(format!(
                "({},{}) is not an edge of the base matrix",
                i + 1,
                j + 1
            )));
        }
        let mut out = self.clone();
        out.dists[i * self.base.cols + j] = Some(dist);
        Ok(out)
    }

    pub fn design_rate(&self) -> Result<DesignRate> {
        self.base.design_rate()
    }
}

/// Attaches a point mass `L(d^C) = 1` to every nonzero entry.
pub fn make_regular(base: &BaseMatrix) -> PliProtograph {
    let dists = base
        .edges()
        .map(|(i, j)| ((i, j), LocalDegreeDistribution::regular(base.entry(i, j))))
        .collect::<Vec<_>>();
    PliProtograph::from_parts(base.clone(), dists).expect("edges come from the base")
}

/// One broken invariant of a [`PliProtograph`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A nonzero entry has no distribution.
    MissingDistribution { edge: EdgeIndex },
    /// A zero entry carries a distribution.
    UnexpectedDistribution { edge: EdgeIndex },
    /// The distribution's `d^C` differs from the base entry.
    TargetMismatch {
        edge: EdgeIndex,
        entry: u32,
        target: u32,
    },
    /// A constraint of the distribution itself is broken.
    Distribution {
        edge: EdgeIndex,
        violation: DistributionViolation,
    },
}

impl Violation {
    pub fn edge(&self) -> EdgeIndex {
        match *self {
            Violation::MissingDistribution { edge }
            | Violation::UnexpectedDistribution { edge }
            | Violation::TargetMismatch { edge, .. }
            | Violation::Distribution { edge, .. } => edge,
        }
    }

    /// Size of the violation; `1` for structural problems.
    pub fn magnitude(&self) -> f64 {
        match self {
            Violation::TargetMismatch { entry, target, .. } => {
                (*entry as f64 - *target as f64).abs()
            }
            Violation::Distribution { violation, .. } => violation.magnitude(),
            _ => 1.0,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.edge();
        write!(f, "({},{}): ", i + 1, j + 1)?;
        match self {
            Violation::MissingDistribution { .. } => write!(f, "nonzero entry has no distribution"),
            Violation::UnexpectedDistribution { .. } => {
                write!(f, "zero entry carries a distribution")
            }
            Violation::TargetMismatch { entry, target, .. } => {
                write!(
                    f,
                    "distribution targets d^C = {target} but entry is {entry}"
                )
            }
            Violation::Distribution { violation, .. } => write!(f, "{violation}"),
        }
    }
}

/// Result of [`validate`]: empty iff every invariant holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every violated invariant of `proto`.
pub fn validate(proto: &PliProtograph) -> ValidationReport {
    let mut violations = Vec::new();
    for i in 0..proto.rows() {
        for j in 0..proto.cols() {
            let entry = proto.base.entry(i, j);
            let edge = (i, j);
            match (entry, proto.dist(i, j)) {
                (0, None) => {}
                (0, Some(_)) => violations.push(Violation::UnexpectedDistribution { edge }),
                (_, None) => violations.push(Violation::MissingDistribution { edge }),
                (entry, Some(d)) => {
                    if d.target() != entry {
                        violations.push(Violation::TargetMismatch {
                            edge,
                            entry,
                            target: d.target(),
                        });
                    }
                    violations.extend(
                        d.violations()
                            .into_iter()
                            .map(|violation| Violation::Distribution { edge, violation }),
                    );
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Design rate of the underlying base matrix.
pub fn design_rate(proto: &PliProtograph) -> Result<DesignRate> {
    proto.design_rate()
}
