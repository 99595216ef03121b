//! J-function, inverse, capacity and channel MI against high-precision
//! reference values stored in `tests/golden/jfun.json`.

use pli_core::capacity::capacity_ebn0_db;
use pli_core::codes;
use pli_core::exit::init_channel_mi;
use pli_core::jfun::{j_fun, j_inv, JFunction};
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    j_fun: Vec<(f64, f64)>,
    one_minus_j_fun: Vec<(f64, f64)>,
    j_inv: Vec<(f64, f64)>,
    capacity_ebn0_db: Vec<(f64, f64)>,
    channel_mi_rate_half_1db: f64,
}

fn golden() -> Golden {
    let text = include_str!("golden/jfun.json");
    serde_json::from_str(text).expect("golden file parses")
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
}

#[test]
fn j_fun_absolute_error_below_1e9() {
    for (mu, want) in golden().j_fun {
        let got = j_fun(mu).unwrap();
        assert!((got - want).abs() <= 1e-9, "J({mu}) = {got}, want {want}");
    }
}

#[test]
fn j_fun_tail() {
    for (mu, want) in golden().one_minus_j_fun {
        let got = 1.0 - j_fun(mu).unwrap();
        assert!(
            (got - want).abs() <= 1e-9,
            "1 - J({mu}) = {got:e}, want {want:e}"
        );
    }
    assert!((j_fun(1e6).unwrap() - 1.0).abs() <= 1e-9);
    assert_eq!(j_fun(0.0).unwrap(), 0.0);
}

#[test]
fn j_inv_matches_reference_roots() {
    for (info, want) in golden().j_inv {
        let got = j_inv(info).unwrap();
        assert!(
            (got - want).abs() <= 1e-8 * want,
            "Jinv({info}) = {got}, want {want}"
        );
    }
    assert_eq!(j_inv(0.0).unwrap(), 0.0);
}

#[test]
fn strictly_increasing_until_double_precision_saturates() {
    let mut prev = -1.0;
    for mu in log_grid(1e-6, 1e3, 400) {
        let j = j_fun(mu).unwrap();
        if prev >= 1.0 {
            assert_eq!(j, 1.0);
        } else {
            assert!(j > prev, "J not increasing at {mu}");
        }
        prev = j;
    }
}

#[test]
fn round_trip_in_information_space() {
    // J(Jinv(J(mu))) = J(mu) over the whole grid
    let table = JFunction::global();
    for mu in log_grid(1e-6, 1e3, 400) {
        let info = j_fun(mu).unwrap();
        let (back, _) = table.inv_saturating(info);
        let again = j_fun(back).unwrap();
        assert!(
            (again - info).abs() <= 1e-8,
            "mu {mu}: {info} -> {back} -> {again}"
        );
    }
    for k in 0..=1000 {
        let info = k as f64 / 1000.0 * (1.0 - 1e-10);
        let again = j_fun(j_inv(info).unwrap()).unwrap();
        assert!((again - info).abs() <= 1e-8, "I = {info}");
    }
}

#[test]
fn round_trip_in_mean_space_where_resolvable() {
    // Above mu ~ 60, 1 - J(mu) drops below 1e-8 relative resolution of f64 and
    // distinct means map to the same double; the identity is checked up to 50.
    for mu in log_grid(1e-6, 50.0, 300) {
        let back = j_inv(j_fun(mu).unwrap()).unwrap();
        assert!((back - mu).abs() <= 1e-8 * mu.max(1.0), "mu {mu} -> {back}");
    }
    let back = j_inv(j_fun(2.5).unwrap()).unwrap();
    assert!((back - 2.5).abs() <= 1e-8);
}

#[test]
fn capacity_matches_reference() {
    for (rate, want) in golden().capacity_ebn0_db {
        let got = capacity_ebn0_db(rate).unwrap();
        assert!(
            (got - want).abs() <= 1e-6,
            "R = {rate}: {got} dB, want {want} dB"
        );
    }
}

#[test]
fn channel_mi_is_a_composition_of_oracles() {
    let mi = init_channel_mi(&codes::ar4ja_base(), 1.0).unwrap();
    let want = golden().channel_mi_rate_half_1db;
    for (j, &v) in mi.iter().enumerate() {
        if j == 1 {
            assert_eq!(v, 0.0);
        } else {
            assert!((v - want).abs() <= 1e-9);
        }
    }
}
