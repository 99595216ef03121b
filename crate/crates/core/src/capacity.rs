//! BI-AWGN capacity, computed directly from the channel output density.

use crate::error::{Error, Result};

/// Noise standard deviation for unit-energy BPSK at rate `rate` and `Eb/N0` in dB.
pub fn ebn0_to_sigma(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {rate}")));
    }
    Ok((1.0 / (2.0 * rate * db_to_linear(ebn0_db))).sqrt())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Mutual information `I(X;Y)` in bits for equiprobable `X = +-1` and
/// `Y = X + N`, `N ~ N(0, sigma^2)`.
///
/// Integrates `p(y | +1) log2(1 + exp(-2y / sigma^2))` over `y` with adaptive
/// Simpson quadrature and returns one minus the result.
pub fn biawgn_capacity(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    let s2 = sigma * sigma;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let integrand = |y: f64| {
        let density = norm * (-(y - 1.0) * (y - 1.0) / (2.0 * s2)).exp();
        let t = -2.0 * y / s2;
        let softplus = t.max(0.0) + (-t.abs()).exp().ln_1p();
        density * softplus / std::f64::consts::LN_2
    };
    let (lo, hi) = (1.0 - 40.0 * sigma, 1.0 + 40.0 * sigma);
    // split at the mean and at zero so every piece is smooth and unimodal-ish
    let mut cuts = vec![lo, hi, 1.0];
    if lo < 0.0 && 0.0 < hi {
        cuts.push(0.0);
    }
    for k in [-8.0, -4.0, -2.0, 2.0, 4.0, 8.0] {
        cuts.push(1.0 + k * sigma);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let loss: f64 = cuts
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], 1e-15, 40))
        .sum();
    (1.0 - loss).clamp(0.0, 1.0)
}

/// Smallest `Eb/N0` in dB at which the BI-AWGN capacity reaches `rate`.
pub fn capacity_ebn0_db(rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain(format!(
            "rate must lie in (0, 1), got {rate}"
        )));
    }
    let gap = |db: f64| -> Result<f64> { Ok(biawgn_capacity(ebn0_to_sigma(db, rate)?) - rate) };
    let (mut lo, mut hi) = (-10.0, 30.0);
    if gap(lo)? > 0.0 || gap(hi)? < 0.0 {
        return Err(Error::NoBracket(format!("capacity for rate {rate}")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
