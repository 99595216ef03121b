//! Lifts a reference code at S = 1000, removes 4-cycles and measures FER.
//!
//! `cargo run --release -p pli-core --example waterfall -- c1 0.15 0.95`

use std::time::Instant;

use pli_core::codes;
use pli_core::lifting::{lift_pli, remove_4_cycles};
use pli_core::sim::{run_sweep, StopRule, SweepConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pli = match args.first().map(String::as_str) {
        Some("conv") => codes::ar4ja(),
        Some("c2") => codes::c2(),
        _ => codes::c1(),
    };
    let points: Vec<f64> = args.iter().skip(1).filter_map(|a| a.parse().ok()).collect();
    let t = Instant::now();
    let h = lift_pli(&pli, 1000, 1).expect("lift");
    let cleaned = remove_4_cycles(&h, 5_000_000, 1);
    println!(
        "lift + cycle removal: {:?}, 4-cycles {} -> {}",
        t.elapsed(),
        cleaned.initial,
        cleaned.residual
    );
    let mut config = SweepConfig::new(0.5, points, 1);
    config.stop = StopRule {
        min_frame_errors: 100,
        max_frames: std::env::var("MAX_FRAMES")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(200_000),
    };
    let t = Instant::now();
    for p in run_sweep(&cleaned.pcm, &config).expect("sweep") {
        println!(
            "{:.3} dB: fer {:.3e} ({} / {}), ber {:.3e}, mean iters {:.1}",
            p.ebn0_db, p.fer, p.frame_errors, p.frames, p.ber, p.mean_iters
        );
    }
    println!("sweep: {:?}", t.elapsed());
}
