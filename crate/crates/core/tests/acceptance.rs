//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! ```text
//! cargo test -p pli-core --test acceptance            # criteria 1-10
//! cargo test -p pli-core --test acceptance -- 4 5 7   # a subset
//! ```
//!
//! Artifacts of each run are written to `<target>/tmp/acceptance/run<k>/`.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pli_core::capacity::capacity_ebn0_db;
use pli_core::codes;
use pli_core::exit::{
    pexit_run, pli_exit_run, ExitSettings, MiTrajectory, ThresholdReport, ThresholdSearch,
};
use pli_core::lifting::{
    audit, degree_signature, lift_conventional, lift_pli, remove_4_cycles, write_alist, SparsePcm,
};
use pli_core::optimize::{
    derive_seed, optimize_single_edge_resumable, sample_feasible, OptimizationBudget,
};
use pli_core::protograph::{
    joint_realizations, make_regular, quantize_distribution, BaseMatrix, PliProtograph,
};
use pli_core::sim::{run_sweep, SimPoint, SweepConfig};

/// Criterion outcome plus the bytes that must reproduce across runs.
struct Outcome {
    pass: bool,
    detail: String,
    artifact: Vec<u8>,
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(value).expect("artifact serializes")
}

fn within(value: f64, want: f64, tol: f64) -> bool {
    (value - want).abs() <= tol
}

fn gap_criterion(name: &str, pli: &PliProtograph, want: f64, limit: Duration) -> Outcome {
    let start = Instant::now();
    let report =
        ThresholdReport::compute(name, pli, &ThresholdSearch::default()).expect("threshold search");
    let elapsed = start.elapsed();
    let gap = report.gap_to_capacity_db;
    Outcome {
        pass: within(gap, want, 0.05) && elapsed < limit,
        detail: format!(
            "{name}: threshold {:.4} dB, capacity {:.4} dB, gap {gap:.4} dB (want {want:.2} +- 0.05), {:.1} s (limit {} s)",
            report.threshold_db,
            report.capacity_db,
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
        artifact: json(&report),
    }
}

fn c1_ar4ja_gap() -> Outcome {
    gap_criterion("AR4JA", &codes::ar4ja(), 0.40, Duration::from_secs(30))
}

fn c2_c1_gap() -> Outcome {
    gap_criterion("C1", &codes::c1(), 0.16, Duration::from_secs(120))
}

fn c3_c2_gap() -> Outcome {
    gap_criterion("C2", &codes::c2(), 0.04, Duration::from_secs(300))
}

/// Random base matrix with `m <= 4`, `m < n <= 6` and entries in `0..=3`.
fn random_base(rng: &mut ChaCha8Rng) -> BaseMatrix {
    loop {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(m + 1..=6);
        let rows: Vec<Vec<u32>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(0..=3)).collect())
            .collect();
        let punctured: Vec<usize> = if rng.gen_bool(0.25) {
            vec![rng.gen_range(0..n)]
        } else {
            vec![]
        };
        if let Ok(base) = BaseMatrix::new(rows, punctured) {
            return base;
        }
    }
}

fn max_trajectory_diff(a: &MiTrajectory, b: &MiTrajectory) -> f64 {
    if a.iterations.len() != b.iterations.len() || a.converged != b.converged {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for (x, y) in a.iterations.iter().zip(&b.iterations) {
        for (u, v) in [(&x.ev, &y.ev), (&x.ec, &y.ec), (&x.app, &y.app)] {
            for (p, q) in u.iter().zip(v) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    worst
}

fn c4_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let settings = ExitSettings::default();
    let mut worst = 0.0f64;
    let mut runs = Vec::new();
    for _ in 0..20 {
        let base = random_base(&mut rng);
        let pli = make_regular(&base);
        for db in [-1.0, 0.5, 2.0, 5.0] {
            let conventional = pexit_run(&base, db, &settings).expect("pexit");
            let generalized = pli_exit_run(&pli, db, &settings).expect("pli-exit");
            worst = worst.max(max_trajectory_diff(&conventional, &generalized));
            runs.push((
                base.to_rows(),
                db,
                conventional.iterations.len(),
                conventional.converged,
            ));
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("20 random regular protographs x 4 Eb/N0: max per-entry difference {worst:.3e} (limit 1e-9)"),
        artifact: json(&(worst, runs)),
    }
}

fn c5_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut quantized = Vec::new();
    for case in 0..1000 {
        let target = rng.gen_range(1..=8);
        let d_max = rng.gen_range(target.max(2)..=20);
        let dist = sample_feasible(target, d_max, &mut rng).expect("feasible sample");
        let mass_err = (dist.total_mass() - 1.0).abs();
        let mean_err = (dist.mean() - target as f64).abs();
        let lambda = dist.to_edge_perspective().expect("edge perspective");
        let lambda_err = (1..=d_max)
            .map(|k| (lambda.mass(k) - k as f64 * dist.mass(k) / target as f64).abs())
            .fold((lambda.total_mass() - 1.0).abs(), f64::max);
        let other = sample_feasible(rng.gen_range(1..=4), 12, &mut rng).expect("feasible sample");
        let edge = [None, Some(0), Some(1)][rng.gen_range(0..3)];
        let joint: f64 = joint_realizations(&[&dist, &other], edge)
            .expect("joint realizations")
            .map(|r| r.weight)
            .sum();
        let joint_err = (joint - 1.0).abs();
        let lifting = rng.gen_range(1..=2000);
        let counts = quantize_distribution(&dist, lifting).expect("quantization");
        let exact = counts.nodes() == lifting && counts.edges() == lifting * target as usize;
        let err = mass_err.max(mean_err).max(lambda_err).max(joint_err);
        worst = worst.max(err);
        if err > 1e-9 || !exact {
            failures.push(case);
        }
        quantized.push((lifting, counts.as_slice().to_vec()));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "1000 distributions: max identity error {worst:.3e} (limit 1e-9), {} failing cases {:?}",
            failures.len(),
            &failures[..failures.len().min(5)]
        ),
        artifact: json(&quantized),
    }
}

fn c6_lifting() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut artifact = Vec::new();
    let cases: [(&str, PliProtograph, bool); 4] = [
        ("AR4JA conventional", codes::ar4ja(), true),
        ("AR4JA", codes::ar4ja(), false),
        ("C1", codes::c1(), false),
        ("C2", codes::c2(), false),
    ];
    for (name, pli, conventional) in &cases {
        for lifting in [100, 1000] {
            let pcm = if *conventional {
                lift_conventional(pli.base(), lifting, 1)
            } else {
                lift_pli(pli, lifting, 1)
            }
            .expect("lifting");
            let before = audit(&pcm, pli).expect("audit");
            let signature = degree_signature(&pcm);
            let removal = remove_4_cycles(&pcm, 10_000_000, derive_seed(1, &[u64::MAX]));
            let after = audit(&removal.pcm, pli).expect("audit");
            let same_degrees = degree_signature(&removal.pcm) == signature;
            let brute = common::brute_4_cycles(&removal.pcm);
            let ok = before.is_empty()
                && after.is_empty()
                && same_degrees
                && brute == 0
                && removal.residual == 0;
            pass &= ok;
            lines.push(format!(
                "{name} S={lifting}: audit {}/{} issues, 4-cycles {} -> {brute}{}",
                before.len(),
                after.len(),
                removal.initial,
                if same_degrees {
                    ""
                } else {
                    ", degrees changed"
                }
            ));
            artifact.extend(write_alist(&removal.pcm).into_bytes());
        }
    }
    Outcome {
        pass,
        detail: lines.join("; "),
        artifact,
    }
}

fn c7_decoder_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut compared, mut mismatches) = (0, Vec::new());
    let mut decisions = Vec::new();
    for code in 0..50 {
        let n = rng.gen_range(4..=12);
        let m = common::random_rows(n, &mut rng);
        let h = common::random_code(n, m, &mut rng);
        let words = common::codewords(&h);
        for frame in 0..10 {
            let sent = &words[rng.gen_range(0..words.len())];
            let llr = common::noisy_llr(sent, 0.8, &mut rng);
            let out = common::converged_spa(&h, &llr, 200);
            let app = common::bitwise_map(&words, &llr);
            if out.syndrome_ok && app.iter().all(|a| a.abs() > 0.5) {
                compared += 1;
                let map: Vec<u8> = app.iter().map(|&a| u8::from(a <= 0.0)).collect();
                if out.decisions != map {
                    mismatches.push((code, frame));
                }
            }
            decisions.push(out.decisions);
        }
    }
    Outcome {
        pass: mismatches.is_empty() && compared > 0,
        detail: format!(
            "50 codes (n <= 12) x 10 frames: {compared} frames compared, {} disagree with bitwise MAP {:?}",
            mismatches.len(),
            mismatches
        ),
        artifact: json(&decisions),
    }
}

fn girth6(pcm: SparsePcm) -> SparsePcm {
    let removal = remove_4_cycles(&pcm, 10_000_000, derive_seed(1, &[u64::MAX]));
    assert_eq!(removal.residual, 0, "4-cycles left after removal");
    removal.pcm
}

fn point(pcm: &SparsePcm, rate: f64, ebn0_db: f64, seed: u64) -> SimPoint {
    run_sweep(pcm, &SweepConfig::new(rate, vec![ebn0_db], seed))
        .expect("sweep")
        .remove(0)
}

/// BER level that marks the start of the waterfall.
const ONSET_BER: f64 = 5e-2;

/// Scans `0.25, 0.35, ...` dB until the BER drops below [`ONSET_BER`] and
/// interpolates the crossing in log-BER.
fn onset(pcm: &SparsePcm, rate: f64) -> (f64, Vec<SimPoint>) {
    let mut points: Vec<SimPoint> = Vec::new();
    for k in 0..40u64 {
        let db = 0.25 + 0.1 * k as f64;
        let p = point(pcm, rate, db, derive_seed(8, &[k]));
        let below = p.ber < ONSET_BER;
        points.push(p);
        if below {
            break;
        }
    }
    let crossing = match points.as_slice() {
        [.., a, b] if b.ber < ONSET_BER => {
            let (la, lb) = (a.ber.ln(), b.ber.max(f64::MIN_POSITIVE).ln());
            a.ebn0_db + (la - ONSET_BER.ln()) / (la - lb) * (b.ebn0_db - a.ebn0_db)
        }
        [only] if only.ber < ONSET_BER => only.ebn0_db,
        _ => f64::INFINITY,
    };
    (crossing, points)
}

fn c8_waterfall() -> Outcome {
    let start = Instant::now();
    let search = ThresholdSearch::default();
    let lifting = 1000;
    let c1 = codes::c1();
    let rate = c1.design_rate().expect("rate").value();
    let c1_report = ThresholdReport::compute("C1", &c1, &search).expect("threshold");
    let c1_pcm = girth6(lift_pli(&c1, lifting, 1).expect("lifting"));
    let low = point(&c1_pcm, rate, c1_report.threshold_db - 0.2, 1);
    let high = point(&c1_pcm, rate, c1_report.threshold_db + 0.6, 1);
    let enough = low.frame_errors >= 100 && high.frame_errors >= 100;
    let steep = high.fer * 10.0 <= low.fer;

    let conv = codes::ar4ja();
    let conv_pcm = girth6(lift_conventional(conv.base(), lifting, 1).expect("lifting"));
    let c2 = codes::c2();
    let c2_pcm = girth6(lift_pli(&c2, lifting, 1).expect("lifting"));
    let mut series = Vec::new();
    for (name, pli, pcm) in [
        ("Conv", &conv, &conv_pcm),
        ("C1", &c1, &c1_pcm),
        ("C2", &c2, &c2_pcm),
    ] {
        let threshold = if name == "C1" {
            c1_report.threshold_db
        } else {
            ThresholdReport::compute(name, pli, &search)
                .expect("threshold")
                .threshold_db
        };
        let (crossing, points) = onset(pcm, rate);
        series.push((name, threshold, crossing, points));
    }
    let mut by_threshold: Vec<usize> = (0..3).collect();
    by_threshold.sort_by(|&a, &b| series[a].1.total_cmp(&series[b].1));
    let mut by_onset: Vec<usize> = (0..3).collect();
    by_onset.sort_by(|&a, &b| series[a].2.total_cmp(&series[b].2));
    let ordered = by_threshold == by_onset;
    let elapsed = start.elapsed();

    let onsets: Vec<String> = series
        .iter()
        .map(|(name, thr, crossing, _)| format!("{name} threshold {thr:.3} onset {crossing:.3}"))
        .collect();
    let artifact = json(&(
        &low,
        &high,
        series
            .iter()
            .map(|(n, t, c, p)| (n, t, c, p))
            .collect::<Vec<_>>(),
    ));
    Outcome {
        pass: enough && steep && ordered && elapsed < Duration::from_secs(2 * 3600),
        detail: format!(
            "C1 S={lifting}: FER {:.3e} ({} errors) at {:.3} dB vs {:.3e} ({} errors) at {:.3} dB, ratio {:.1} (need >= 10); \
             BER-{ONSET_BER} onsets: {} ({}); {:.0} s",
            low.fer,
            low.frame_errors,
            low.ebn0_db,
            high.fer,
            high.frame_errors,
            high.ebn0_db,
            low.fer / high.fer,
            onsets.join(", "),
            if ordered { "ordered as thresholds" } else { "NOT ordered as thresholds" },
            elapsed.as_secs_f64()
        ),
        artifact,
    }
}

fn c9_optimizer(dir: &Path) -> Outcome {
    let start = Instant::now();
    let checkpoint = dir.join("ga_checkpoint.json");
    let _ = std::fs::remove_file(&checkpoint);
    let budget = OptimizationBudget::default();
    let record =
        optimize_single_edge_resumable(&codes::ar4ja(), (2, 3), &budget, Some(&checkpoint))
            .expect("optimization");
    let elapsed = start.elapsed();
    let gain = record.initial_threshold_db - record.best_threshold_db;
    Outcome {
        pass: gain >= 0.2 && elapsed < Duration::from_secs(8 * 3600),
        detail: format!(
            "AR4JA edge (3,4): {:.4} -> {:.4} dB, improvement {gain:.4} dB (need >= 0.2), {} evaluations, {:.0} s",
            record.initial_threshold_db,
            record.best_threshold_db,
            record.evaluations,
            elapsed.as_secs_f64()
        ),
        artifact: json(&record),
    }
}

fn run_criterion(k: usize, dir: &Path) -> Outcome {
    match k {
        1 => c1_ar4ja_gap(),
        2 => c2_c1_gap(),
        3 => c3_c2_gap(),
        4 => c4_degeneracy(),
        5 => c5_algebra(),
        6 => c6_lifting(),
        7 => c7_decoder_oracle(),
        8 => c8_waterfall(),
        9 => c9_optimizer(dir),
        _ => unreachable!(),
    }
}

fn run_dir(run: usize) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(format!("run{run}"));
    std::fs::create_dir_all(&dir).expect("artifact directory");
    dir
}

fn artifact_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("criterion{k}.out"))
}

fn report(k: usize, outcome: &Outcome, elapsed: Duration) {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {k:>2} {verdict} [{:.1} s] {}",
        elapsed.as_secs_f64(),
        outcome.detail
    );
}

fn main() {
    let mut selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .filter(|k| (1..=10).contains(k))
        .collect();
    if selected.is_empty() {
        selected = (1..=10).collect();
    }
    selected.sort_unstable();
    selected.dedup();
    println!(
        "acceptance: criteria {selected:?}, capacity at rate 1/2 {:.5} dB",
        capacity_ebn0_db(0.5).unwrap()
    );

    let first = run_dir(1);
    let mut failed = Vec::new();
    for &k in selected.iter().filter(|&&k| k <= 9) {
        let start = Instant::now();
        let outcome = run_criterion(k, &first);
        report(k, &outcome, start.elapsed());
        std::fs::write(artifact_path(&first, k), &outcome.artifact).expect("write artifact");
        if !outcome.pass {
            failed.push(k);
        }
    }

    if selected.contains(&10) {
        let start = Instant::now();
        let second = run_dir(2);
        let mut differing = Vec::new();
        for k in 1..=9 {
            if !selected.contains(&k) {
                let outcome = run_criterion(k, &first);
                std::fs::write(artifact_path(&first, k), &outcome.artifact)
                    .expect("write artifact");
            }
            let again = run_criterion(k, &second);
            std::fs::write(artifact_path(&second, k), &again.artifact).expect("write artifact");
            let before = std::fs::read(artifact_path(&first, k)).expect("read artifact");
            if before != again.artifact {
                differing.push(k);
            }
        }
        let outcome = Outcome {
            pass: differing.is_empty(),
            detail: format!(
                "criteria 1-9 rerun: artifacts byte-identical except {differing:?} ({} and {})",
                first.display(),
                second.display()
            ),
            artifact: Vec::new(),
        };
        report(10, &outcome, start.elapsed());
        if !outcome.pass {
            failed.push(10);
        }
    }

    if failed.is_empty() {
        println!("acceptance: all selected criteria PASS");
    } else {
        println!("acceptance: FAIL {failed:?}");
        std::process::exit(1);
    }
}
