//! JSON protograph files.
//!
//! ```json
//! { "m": 2, "n": 3, "base": [[3,1,1],[0,1,2]], "punctured": [],
//!   "dists": { "2,3": { "1": 0.5, "3": 0.5 } } }
//! ```
//!
//! Indices are one-based. Entries missing from `dists` are regular.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BaseMatrix, LocalDegreeDistribution, PliProtograph, DEFAULT_MAX_DEGREE};
use crate::error::{Error, Result};

/// Serialized form of a [`PliProtograph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtographFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub m: usize,
    pub n: usize,
    pub base: Vec<Vec<u32>>,
    #[serde(default)]
    pub punctured: Vec<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dists: BTreeMap<EntryKey, BTreeMap<DegreeKey, f64>>,
}

/// One-based `"i,j"` map key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntryKey(pub usize, pub usize);

/// Degree map key, ordered numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DegreeKey(pub u32);

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

impl FromStr for EntryKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("entry key {s:?} is not of the form \"i,j\""))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("entry key {s:?} is not of the form \"i,j\""))
        };
        Ok(EntryKey(parse(a)?, parse(b)?))
    }
}

impl Serialize for EntryKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntryKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for DegreeKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for DegreeKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.trim()
            .parse()
            .map(DegreeKey)
            .map_err(|_| serde::de::Error::custom(format!("degree key {s:?} is not an integer")))
    }
}

impl ProtographFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Captures `pli`; regular distributions are left implicit.
    pub fn from_pli(pli: &PliProtograph, name: Option<String>) -> Self {
        let dists = pli
            .dists()
            .filter(|(_, d)| !d.is_regular())
            .map(|((i, j), d)| {
                let masses = d
                    .masses()
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(k, &p)| (DegreeKey(k as u32 + 1), p))
                    .collect();
                (EntryKey(i + 1, j + 1), masses)
            })
            .collect();
        Self {
            name,
            m: pli.rows(),
            n: pli.cols(),
            base: pli.base().to_rows(),
            punctured: pli.base().punctured().iter().map(|j| j + 1).collect(),
            dists,
        }
    }

    /// Builds the protograph without checking the distribution constraints;
    /// call [`super::validate`] on the result.
    pub fn to_pli(&self) -> Result<PliProtograph> {
        if self.base.len() != self.m {
            return Err(Error::Parse(format!(
                "base has {} rows but m = {}",
                self.base.len(),
                self.m
            )));
        }
        if let Some(i) = self.base.iter().position(|r| r.len() != self.n) {
            return Err(Error::Parse(format!(
                "base row {} has {} entries but n = {}",
                i + 1,
                self.base[i].len(),
                self.n
            )));
        }
        if let Some(&j) = self.punctured.iter().find(|&&j| j == 0 || j > self.n) {
            return Err(Error::Parse(format!(
                "punctured column {j} outside 1..={}",
                self.n
            )));
        }
        let base =
            BaseMatrix::new_sub_rate(self.base.clone(), self.punctured.iter().map(|j| j - 1))?;
        let mut dists = Vec::new();
        for (i, j) in base.edges() {
            let target = base.entry(i, j);
            let dist = match self.dists.get(&EntryKey(i + 1, j + 1)) {
                None => LocalDegreeDistribution::regular(target),
                Some(masses) => {
                    let top = masses.keys().map(|k| k.0).max().unwrap_or(0);
                    let d_max = DEFAULT_MAX_DEGREE.max(target).max(top);
                    LocalDegreeDistribution::raw(
                        target,
                        d_max,
                        masses.iter().map(|(k, &p)| (k.0, p)),
                    )
                    .map_err(|e| Error::Parse(format!("dists[\"{},{}\"]: {e}", i + 1, j + 1)))?
                }
            };
            dists.push(((i, j), dist));
        }
        for key in self.dists.keys() {
            let EntryKey(i, j) = *key;
            if i == 0 || j == 0 || i > self.m || j > self.n || base.entry(i - 1, j - 1) == 0 {
                return Err(Error::Parse(format!(
                    "dists[\"{key}\"] does not name a nonzero base entry"
                )));
            }
        }
        PliProtograph::from_parts(base, dists)
    }
}

impl PliProtograph {
    /// Parses a protograph file and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let pli = ProtographFile::from_json(text)?.to_pli()?;
        pli.ensure_valid()?;
        Ok(pli)
    }

    pub fn to_json(&self, name: Option<String>) -> Result<String> {
        ProtographFile::from_pli(self, name).to_json()
    }
}
