//! Local variable-node degree distributions and their joint realizations.

use crate::error::{Error, Result};

/// Default upper end of the degree alphabet `{1, ..., d_max}`.
pub const DEFAULT_MAX_DEGREE: u32 = 20;

/// Tolerance for the normalization and mean constraints on user input.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Masses at or below this value are not part of the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Fraction of variable nodes of each degree inside one lifted subgraph.
///
/// Masses are stored densely over `{1, ..., d_max}`; iteration goes through the
/// support list so enumeration cost scales with the number of active degrees.
/// Construction through [`LocalDegreeDistribution::raw`] does not enforce the
/// sum and mean constraints so that invalid input can be reported by
/// `validate`; [`LocalDegreeDistribution::new`] does.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDegreeDistribution {
    target: u32,
    masses: Vec<f64>,
    support: Vec<u32>,
}

impl LocalDegreeDistribution {
    /// Builds a distribution without checking the sum and mean constraints.
    ///
    /// Degrees must lie in `1..=d_max` and masses must be finite.
    pub fn raw<I>(target: u32, d_max: u32, masses: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        if d_max == 0 {
            return Err(Error::InvalidDistribution("d_max must be positive".into()));
        }
        let mut dense = vec![0.0; d_max as usize];
        for (k, p) in masses {
            if k == 0 || k > d_max {
                return Err(Error::InvalidDistribution(format!(
                    "degree {k} outside 1..={d_max}"
                )));
            }
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "mass for degree {k} is not finite"
                )));
            }
            dense[k as usize - 1] += p;
        }
        Ok(Self::from_dense(target, dense))
    }

    pub(crate) fn from_dense(target: u32, masses: Vec<f64>) -> Self {
        let support = masses
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > SUPPORT_TOL)
            .map(|(i, _)| i as u32 + 1)
            .collect();
        Self {
            target,
            masses,
            support,
        }
    }

    /// Builds a distribution and rejects it unless every constraint holds.
    pub fn new<I>(target: u32, d_max: u32, masses: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let dist = Self::raw(target, d_max, masses)?;
        if let Some(problem) = dist.violations().into_iter().next() {
            return Err(Error::InvalidDistribution(problem.to_string()));
        }
        Ok(dist)
    }

    /// Point mass at `target`, the distribution of a conventional protograph edge.
    pub fn regular(target: u32) -> Self {
        let d_max = target.max(DEFAULT_MAX_DEGREE);
        let mut dense = vec![0.0; d_max as usize];
        if target > 0 {
            dense[target as usize - 1] = 1.0;
        }
        Self::from_dense(target, dense)
    }

    /// Local check-node degree `d^C` this distribution has to average to.
    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn d_max(&self) -> u32 {
        self.masses.len() as u32
    }

    /// Mass of degree `k`; zero outside `1..=d_max`.
    pub fn mass(&self, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.masses.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    /// Dense masses indexed by `degree - 1`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Degrees with mass above [`SUPPORT_TOL`], ascending.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// `(degree, mass)` pairs over the support.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.support.iter().map(move |&k| (k, self.mass(k)))
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn is_regular(&self) -> bool {
        self.support == [self.target]
    }

    /// Every constraint this distribution breaks, in a stable order.
    pub fn violations(&self) -> Vec<DistributionViolation> {
        let mut out = Vec::new();
        for (i, &p) in self.masses.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                out.push(DistributionViolation::MassRange {
                    degree: i as u32 + 1,
                    mass: p,
                });
            }
        }
        let sum = self.total_mass();
        if (sum - 1.0).abs() > CONSTRAINT_TOL {
            out.push(DistributionViolation::Sum {
                deviation: sum - 1.0,
            });
        }
        let mean = self.mean();
        if (mean - self.target as f64).abs() > CONSTRAINT_TOL {
            out.push(DistributionViolation::Mean {
                deviation: mean - self.target as f64,
            });
        }
        out
    }

    /// Rescales the masses so they sum to one. The mean is not repaired.
    pub fn normalize(&self) -> Result<Self> {
        let sum = self.total_mass();
        if sum <= 0.0 || self.masses.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidDistribution(
                "cannot normalize non-positive masses".into(),
            ));
        }
        Ok(Self::from_dense(
            self.target,
            self.masses.iter().map(|p| p / sum).collect(),
        ))
    }

    /// Edge-perspective distribution `lambda(k) = k L(k) / d^C`.
    pub fn to_edge_perspective(&self) -> Result<EdgePerspectiveDistribution> {
        if self.target == 0 {
            return Err(Error::Domain(
                "edge perspective undefined for d^C = 0".into(),
            ));
        }
        let d = self.target as f64;
        let masses = self
            .masses
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p / d)
            .collect();
        Ok(EdgePerspectiveDistribution { masses })
    }
}

/// A single broken constraint of a [`LocalDegreeDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionViolation {
    /// A mass lies outside `[0, 1]`.
    MassRange { degree: u32, mass: f64 },
    /// `sum L(k) - 1`.
    Sum { deviation: f64 },
    /// `sum k L(k) - d^C`.
    Mean { deviation: f64 },
}

impl DistributionViolation {
    pub fn magnitude(&self) -> f64 {
        match *self {
            DistributionViolation::MassRange { mass, .. } => {
                if mass < 0.0 {
                    -mass
                } else {
                    mass - 1.0
                }
            }
            DistributionViolation::Sum { deviation }
            | DistributionViolation::Mean { deviation } => deviation.abs(),
        }
    }
}

impl std::fmt::Display for DistributionViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistributionViolation::MassRange { degree, mass } => {
                write!(f, "mass {mass} of degree {degree} outside [0, 1]")
            }
            DistributionViolation::Sum { deviation } => {
                write!(f, "masses sum to 1 {deviation:+e}")
            }
            DistributionViolation::Mean { deviation } => {
                write!(f, "mean degree off target by {deviation:+e}")
            }
        }
    }
}

/// Probability that an edge of a lifted subgraph attaches to a degree-`k` node.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePerspectiveDistribution {
    masses: Vec<f64>,
}

impl EdgePerspectiveDistribution {
    pub fn mass(&self, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.masses.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// One joint draw of local degrees with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub degrees: Vec<u32>,
    pub weight: f64,
}

/// Odometer over the cartesian product of the supports of several distributions.
///
/// Each realization is weighted by the product of the individual masses. The
/// position named by `edge_perspective` is weighted by its edge-perspective
/// mass instead.
#[derive(Debug, Clone)]
pub struct JointRealizations<'a> {
    dists: Vec<&'a LocalDegreeDistribution>,
    edge_perspective: Option<usize>,
    cursor: Vec<usize>,
    done: bool,
}

/// Enumerates every joint degree realization of `dists`.
pub fn joint_realizations<'a>(
    dists: &[&'a LocalDegreeDistribution],
    edge_perspective: Option<usize>,
) -> Result<JointRealizations<'a>> {
    if let Some((pos, _)) = dists
        .iter()
        .enumerate()
        .find(|(_, d)| d.support().is_empty())
    {
        return Err(Error::InvalidDistribution(format!(
            "distribution at position {pos} has empty support"
        )));
    }
    if let Some(e) = edge_perspective {
        if e >= dists.len() {
            return Err(Error::Domain(format!(
                "edge-perspective index {e} out of range for {} distributions",
                dists.len()
            )));
        }
        if dists[e].target() == 0 {
            return Err(Error::Domain(
                "edge perspective undefined for d^C = 0".into(),
            ));
        }
    }
    Ok(JointRealizations {
        dists: dists.to_vec(),
        edge_perspective,
        cursor: vec![0; dists.len()],
        done: false,
    })
}

impl Iterator for JointRealizations<'_> {
    type Item = Realization;

    fn next(&mut self) -> Option<Realization> {
        if self.done {
            return None;
        }
        let mut degrees = Vec::with_capacity(self.dists.len());
        let mut weight = 1.0;
        for (pos, (dist, &c)) in self.dists.iter().zip(&self.cursor).enumerate() {
            let k = dist.support()[c];
            let p = dist.mass(k);
            weight *= if self.edge_perspective == Some(pos) {
                k as f64 * p / dist.target() as f64
            } else {
                p
            };
            degrees.push(k);
        }
        // advance the odometer, last position fastest
        self.done = true;
        for pos in (0..self.cursor.len()).rev() {
            self.cursor[pos] += 1;
            if self.cursor[pos] < self.dists[pos].support().len() {
                self.done = false;
                break;
            }
            self.cursor[pos] = 0;
        }
        Some(Realization { degrees, weight })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(target: u32, a: (u32, f64), b: (u32, f64)) -> LocalDegreeDistribution {
        LocalDegreeDistribution::raw(target, 20, [a, b]).unwrap()
    }

    #[test]
    fn mean_two_from_one_and_three_is_valid() {
        let d = two_point(2, (1, 0.5), (3, 0.5));
        assert!(d.violations().is_empty());
        assert_eq!(d.support(), &[1, 3]);
    }

    #[test]
    fn point_mass_at_one_for_target_two_violates_mean() {
        let d = LocalDegreeDistribution::raw(2, 20, [(1, 1.0)]).unwrap();
        let v = d.violations();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], DistributionViolation::Mean { .. }));
        assert!((v[0].magnitude() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degree_outside_alphabet_is_rejected() {
        assert!(LocalDegreeDistribution::raw(2, 20, [(21, 1.0)]).is_err());
        assert!(LocalDegreeDistribution::raw(2, 20, [(0, 1.0)]).is_err());
    }

    #[test]
    fn edge_perspective_of_regular_is_identity() {
        let d = LocalDegreeDistribution::regular(3);
        let lam = d.to_edge_perspective().unwrap();
        assert_eq!(lam.mass(3), 1.0);
        assert_eq!(lam.total_mass(), 1.0);
    }

    #[test]
    fn edge_perspective_weights_by_degree() {
        let d = two_point(2, (1, 0.5), (3, 0.5));
        let lam = d.to_edge_perspective().unwrap();
        assert!((lam.mass(1) - 0.25).abs() < 1e-15);
        assert!((lam.mass(3) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn edge_perspective_needs_positive_target() {
        let d = LocalDegreeDistribution::raw(0, 20, [(1, 1.0)]).unwrap();
        assert!(d.to_edge_perspective().is_err());
    }

    #[test]
    fn joint_weights_match_one_in_twelve() {
        let a = two_point(3, (2, 0.5), (4, 0.5));
        let b = two_point(6, (1, 1.0 / 6.0), (7, 5.0 / 6.0));
        let all: Vec<_> = joint_realizations(&[&a, &b], None).unwrap().collect();
        assert_eq!(all.len(), 4);
        let w = |ka, kb| {
            all.iter()
                .find(|r| r.degrees == [ka, kb])
                .map(|r| r.weight)
                .unwrap()
        };
        assert!((w(2, 1) - 1.0 / 12.0).abs() < 1e-15);
        assert!((w(2, 7) - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn single_regular_gives_one_realization() {
        let d = LocalDegreeDistribution::regular(4);
        let all: Vec<_> = joint_realizations(&[&d], None).unwrap().collect();
        assert_eq!(
            all,
            vec![Realization {
                degrees: vec![4],
                weight: 1.0
            }]
        );
    }

    #[test]
    fn three_two_point_distributions_give_eight() {
        let a = two_point(2, (1, 0.5), (3, 0.5));
        let b = two_point(3, (2, 0.5), (4, 0.5));
        let c = two_point(2, (1, 0.75), (5, 0.25));
        // exhaustive oracle: weights are products taken directly from the tables
        let mut expected = Vec::new();
        for (ka, pa) in [(1, 0.5), (3, 0.5)] {
            for (kb, pb) in [(2, 0.5), (4, 0.5)] {
                for (kc, pc) in [(1, 0.75), (5, 0.25)] {
                    expected.push((vec![ka, kb, kc], pa * pb * pc));
                }
            }
        }
        let got: Vec<_> = joint_realizations(&[&a, &b, &c], None).unwrap().collect();
        assert_eq!(got.len(), 8);
        for (r, (deg, w)) in got.iter().zip(&expected) {
            assert_eq!(&r.degrees, deg);
            assert!((r.weight - w).abs() < 1e-15);
        }
        let total: f64 = got.iter().map(|r| r.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_perspective_position_uses_lambda() {
        let a = two_point(2, (1, 0.5), (3, 0.5));
        let b = LocalDegreeDistribution::regular(1);
        let got: Vec<_> = joint_realizations(&[&a, &b], Some(0)).unwrap().collect();
        assert!((got[0].weight - 0.25).abs() < 1e-15);
        assert!((got[1].weight - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_support_is_an_error() {
        let d = LocalDegreeDistribution::raw(2, 20, []).unwrap();
        assert!(joint_realizations(&[&d], None).is_err());
    }

    #[test]
    fn normalize_rescales_only() {
        let d = LocalDegreeDistribution::raw(2, 20, [(1, 1.0), (3, 1.0)]).unwrap();
        let n = d.normalize().unwrap();
        assert!((n.mass(1) - 0.5).abs() < 1e-15);
        assert!(n.violations().is_empty());
    }
}
