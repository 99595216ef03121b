//! The J-function: mutual information between a bit and a consistent Gaussian
//! LLR of mean `mu` (variance `2 mu`), and its inverse.
//!
//! Values come from a 4096-point table over `x = sqrt(mu)` filled by composite
//! Gauss-Legendre quadrature at first use. Between nodes the table is read by
//! cubic Hermite interpolation on quadrature-computed slopes, limited with the
//! Fritsch-Carlson condition so the interpolant stays monotone. The inverse
//! bisects the interpolant inside the bracketing cell.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Number of table nodes.
pub const TABLE_SIZE: usize = 4096;

/// Upper end of the table in `x = sqrt(mu)`; beyond it `1 - J` is below 1e-20.
const X_MAX: f64 = 14.0;

/// Inputs at or above `1 - SATURATION_GAP` invert to [`MU_CAP`].
pub const SATURATION_GAP: f64 = 1e-12;

/// Mean returned for saturated mutual information.
pub const MU_CAP: f64 = 1e4;

/// Tabulated J-function.
#[derive(Debug)]
pub struct JFunction {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

static TABLE: OnceLock<JFunction> = OnceLock::new();

impl JFunction {
    /// Shared table, built on first call.
    pub fn global() -> &'static JFunction {
        TABLE.get_or_init(JFunction::build)
    }

    fn build() -> Self {
        let step = X_MAX / (TABLE_SIZE - 1) as f64;
        let rule = GaussLegendre::new(16);
        let mut values = Vec::with_capacity(TABLE_SIZE);
        let mut slopes = Vec::with_capacity(TABLE_SIZE);
        for i in 0..TABLE_SIZE {
            let (v, d) = quadrature(i as f64 * step, &rule);
            values.push(v);
            slopes.push(d);
        }
        // exact values at the ends
        values[0] = 0.0;
        slopes[0] = 0.0;
        limit_slopes(&values, &mut slopes, step);
        Self {
            step,
            values,
            slopes,
        }
    }

    /// `J(mu)`; negative means are treated as zero.
    pub fn j(&self, mu: f64) -> f64 {
        if !(mu > 0.0) {
            return 0.0;
        }
        let x = mu.sqrt();
        let last = TABLE_SIZE - 1;
        if x >= X_MAX {
            return self.values[last];
        }
        let cell = ((x / self.step) as usize).min(last - 1);
        self.hermite(cell, x)
    }

    fn hermite(&self, cell: usize, x: f64) -> f64 {
        let h = self.step;
        let t = (x - cell as f64 * h) / h;
        let (y0, y1) = (self.values[cell], self.values[cell + 1]);
        let (m0, m1) = (self.slopes[cell] * h, self.slopes[cell + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// `J^{-1}(info)` with saturation: inputs within [`SATURATION_GAP`] of one
    /// (or above) return [`MU_CAP`] and `true`; inputs at or below zero return 0.
    pub fn inv_saturating(&self, info: f64) -> (f64, bool) {
        if !(info > 0.0) {
            return (0.0, false);
        }
        if info >= 1.0 - SATURATION_GAP {
            return (MU_CAP, true);
        }
        let last = TABLE_SIZE - 1;
        if info >= self.values[last] {
            return (X_MAX * X_MAX, false);
        }
        // first node with value > info
        let hi = self.values.partition_point(|&v| v <= info);
        let cell = hi - 1;
        let mut a = cell as f64 * self.step;
        let mut b = a + self.step;
        for _ in 0..48 {
            let mid = 0.5 * (a + b);
            if self.hermite(cell, mid) < info {
                a = mid;
            } else {
                b = mid;
            }
        }
        let x = 0.5 * (a + b);
        (x * x, false)
    }
}

/// `J(mu)` for `mu >= 0`.
pub fn j_fun(mu: f64) -> Result<f64> {
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::Domain(format!("J-function needs mu >= 0, got {mu}")));
    }
    Ok(JFunction::global().j(mu))
}

/// `J^{-1}(info)` for `0 <= info < 1`; values within 1e-12 of one give [`MU_CAP`].
pub fn j_inv(info: f64) -> Result<f64> {
    if info.is_nan() || !(0.0..1.0).contains(&info) {
        return Err(Error::Domain(format!(
            "inverse J-function needs 0 <= I < 1, got {info}"
        )));
    }
    Ok(JFunction::global().inv_saturating(info).0)
}

/// Fritsch-Carlson: scale slopes so each cubic piece is monotone.
fn limit_slopes(values: &[f64], slopes: &mut [f64], step: f64) {
    for k in 0..values.len() - 1 {
        let delta = (values[k + 1] - values[k]) / step;
        if delta <= 0.0 {
            slopes[k] = 0.0;
            slopes[k + 1] = 0.0;
            continue;
        }
        let a = slopes[k] / delta;
        let b = slopes[k + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            slopes[k] = tau * a * delta;
            slopes[k + 1] = tau * b * delta;
        }
    }
}

/// `(J, dJ/dx)` at `mu = x^2`, with the LLR written as `x^2 + sqrt(2) x z`
/// for standard normal `z`.
fn quadrature(x: f64, rule: &GaussLegendre) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 0.0);
    }
    const Z_MAX: f64 = 14.0;
    const PANELS: usize = 112;
    let mu = x * x;
    let sigma = std::f64::consts::SQRT_2 * x;
    let width = 2.0 * Z_MAX / PANELS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut loss = 0.0;
    let mut dloss = 0.0;
    for p in 0..PANELS {
        let lo = -Z_MAX + p as f64 * width;
        for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
            let z = lo + 0.5 * width * (node + 1.0);
            let w = 0.5 * width * weight * norm * (-0.5 * z * z).exp();
            let tau = mu + sigma * z;
            // log(1 + e^{-tau}) and its derivative -1 / (1 + e^{tau})
            let softplus = (-tau).max(0.0) + (-tau.abs()).exp().ln_1p();
            let dsoftplus = -logistic(-tau);
            loss += w * softplus;
            dloss += w * dsoftplus * (2.0 * x + std::f64::consts::SQRT_2 * z);
        }
    }
    let ln2 = std::f64::consts::LN_2;
    ((1.0 - loss / ln2).clamp(0.0, 1.0), -dloss / ln2)
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, 0.0);
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}
