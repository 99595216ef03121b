//! Reference protographs: the rate-1/2 AR4JA base matrix and two PLIs built
//! on it with optimized local degree distributions.
//!
//! The published distributions omit every degree whose mass is below 0.01 in
//! all columns, so the listed masses neither sum to one nor meet the mean
//! exactly. They are rescaled to unit sum and mean-repaired at load time; the
//! size of the repair is logged.

use crate::optimize::repair;
use crate::protograph::{
    make_regular, BaseMatrix, EdgeIndex, LocalDegreeDistribution, PliProtograph, DEFAULT_MAX_DEGREE,
};

/// Degrees listed in the published table.
pub const TABLE_DEGREES: [u32; 6] = [1, 2, 3, 6, 9, 19];

/// Single optimized edge `(3,4)`.
pub const C1_L34: [f64; 6] = [0.94395, 0.00014, 0.00001, 0.00002, 0.00002, 0.05408];
/// Edge `(2,2)` of the multi-edge design.
pub const C2_L22: [f64; 6] = [0.74712, 0.00063, 0.00154, 0.00277, 0.24029, 0.00018];
/// Edge `(3,3)` of the multi-edge design.
pub const C2_L33: [f64; 6] = [0.79931, 0.00160, 0.00064, 0.19684, 0.00004, 0.00005];
/// Edge `(3,4)` of the multi-edge design.
pub const C2_L34: [f64; 6] = [0.07360, 0.85803, 0.06717, 0.00026, 0.00001, 0.00003];

/// AR4JA rate-1/2 base matrix, second column punctured.
pub fn ar4ja_base() -> BaseMatrix {
    BaseMatrix::new(
        vec![
            vec![1, 2, 0, 0, 0],
            vec![0, 3, 1, 1, 1],
            vec![0, 1, 2, 2, 1],
        ],
        [1],
    )
    .expect("AR4JA base is valid")
}

/// Conventional AR4JA as a regular PLI.
pub fn ar4ja() -> PliProtograph {
    make_regular(&ar4ja_base())
}

/// Raw table column as a (generally invalid) distribution.
pub fn table_column(target: u32, masses: &[f64; 6]) -> LocalDegreeDistribution {
    LocalDegreeDistribution::raw(
        target,
        DEFAULT_MAX_DEGREE,
        TABLE_DEGREES.iter().copied().zip(masses.iter().copied()),
    )
    .expect("table degrees lie in the alphabet")
}

/// Table column rescaled to unit mass and mean-repaired.
pub fn repaired_table_column(
    edge: EdgeIndex,
    target: u32,
    masses: &[f64; 6],
) -> LocalDegreeDistribution {
    let raw = table_column(target, masses);
    let fixed = repair(raw.masses(), target).expect("table columns are repairable");
    let moved: f64 = raw
        .normalize()
        .expect("positive masses")
        .masses()
        .iter()
        .zip(fixed.masses())
        .map(|(a, b)| (a - b).abs())
        .sum();
    log::info!(
        "table distribution ({},{}): listed mass {:.5}, listed mean {:.5}, repair moved {:.3e} mass",
        edge.0 + 1,
        edge.1 + 1,
        raw.total_mass(),
        raw.mean(),
        moved
    );
    fixed
}

/// AR4JA with the optimized distribution on edge `(3,4)`.
pub fn c1() -> PliProtograph {
    ar4ja()
        .with_dist((2, 3), repaired_table_column((2, 3), 2, &C1_L34))
        .expect("(3,4) is an AR4JA edge")
}

/// AR4JA with optimized distributions on edges `(2,2)`, `(3,3)` and `(3,4)`.
pub fn c2() -> PliProtograph {
    ar4ja()
        .with_dist((1, 1), repaired_table_column((1, 1), 3, &C2_L22))
        .and_then(|p| p.with_dist((2, 2), repaired_table_column((2, 2), 2, &C2_L33)))
        .and_then(|p| p.with_dist((2, 3), repaired_table_column((2, 3), 2, &C2_L34)))
        .expect("edges exist in AR4JA")
}
